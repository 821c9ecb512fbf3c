#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mlo/geometry.hpp"
#include "mlo/tensor_io.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;

namespace {

const char* tool_path() { return MLOTOOL_PATH; }

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "stdout.txt";
    const std::string cmd = std::string(tool_path()) + " " + args + " > " +
                            out_file.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    result.output = buf.str();
    fs::remove(out_file);
    return result;
}

fs::path work_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "mlo_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_cube(const fs::path& path, double half) {
    std::ofstream out(path);
    mlo::save_mesh_obj(oracles::cube_mesh(half), out);
}

void write_scene(const fs::path& dir) {
    write_cube(dir / "cube.obj", 0.04);
    std::ofstream scene(dir / "scene.json");
    scene << R"({
      "frames": 2,
      "camera": {"fx": 48.0, "fy": 48.0, "width": 48, "height": 48,
                 "near": 0.05, "far": 5.0, "translation": [0.0, 0.0, 0.45]},
      "object": {"mesh": "cube.obj",
                 "poses": [{"q": [0, 0, 0, 1], "t": [0, 0, 0]},
                           {"q": [0, 0, 0.3826834323650898, 0.9238795325112867], "t": [0.01, 0, 0]}]},
      "right_hand": {"model": "TOY",
                     "poses": [{"translation": [0, -0.09, 0]}, {"translation": [0, -0.09, 0.01]}]}
    })";
}

void write_gray_ppm(const fs::path& path, int size) {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n" << size << ' ' << size << "\n255\n";
    for (int i = 0; i < size * size; ++i) out.write("\x60\x70\x80", 3);
}

}  // namespace

TEST_CASE("plan-windows prints the schedule and count") {
    const fs::path dir = work_dir("plan");
    const RunResult r = run("plan-windows --frames 24 --window 16 --stride 8", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output == "0 0 16\n1 8 24\ncount 2\n");

    const RunResult strict = run("plan-windows --frames 25 --window 16 --stride 8", dir);
    CHECK(strict.exit_code == 2);

    const RunResult tail = run("plan-windows --frames 25 --window 16 --stride 8 --mode tail", dir);
    CHECK(tail.exit_code == 0);
    CHECK(tail.output == "0 0 16\n1 8 24\n2 9 25\ncount 3\n");
}

TEST_CASE("exit code taxonomy") {
    const fs::path dir = work_dir("exits");
    // validation: pack kind without its required inputs
    CHECK(run("pack --kind human --frames 2 --out " + (dir / "p").string(), dir).exit_code == 2);
    // i/o: missing input file
    CHECK(run("solve-pose --markers " + (dir / "missing.json").string(), dir).exit_code == 1);
    // validation: bad flag usage
    CHECK(run("plan-windows --frames 24", dir).exit_code == 2);
    // help is fine
    CHECK(run("--help", dir).exit_code == 0);
}

TEST_CASE("render-mlo writes the documented layout, byte-identical across reruns") {
    const fs::path dir = work_dir("render");
    write_scene(dir);
    const std::string scene = (dir / "scene.json").string();

    const RunResult a = run("render-mlo --scene " + scene + " --out " + (dir / "a").string(), dir);
    REQUIRE(a.exit_code == 0);
    const RunResult b = run("render-mlo --scene " + scene + " --out " + (dir / "b").string(), dir);
    REQUIRE(b.exit_code == 0);
    CHECK(oracles::dir_hash(dir / "a") == oracles::dir_hash(dir / "b"));

    const mlo::MlotTensor t = mlo::read_mlot(dir / "a" / "mlo_0000.mlot");
    CHECK(t.dtype == mlo::kMlotF32);
    CHECK(t.shape == std::vector<std::uint64_t>{13, 48, 48, 4});
    CHECK(fs::exists(dir / "a" / "mlo_0001.mlot"));
    CHECK(fs::exists(dir / "a" / "manifest.json"));
    CHECK(fs::exists(dir / "a" / "layers" / "frame_0000" / "right_index.ppm"));
    CHECK(fs::exists(dir / "a" / "layers" / "frame_0001" / "object.pgm"));

    // scene without any entity fails validation
    std::ofstream bad(dir / "empty.json");
    bad << R"({"frames": 1, "camera": {"fx": 8, "fy": 8, "width": 8, "height": 8}})";
    bad.close();
    CHECK(run("render-mlo --scene " + (dir / "empty.json").string() + " --out " +
              (dir / "c").string(), dir).exit_code == 2);
}

TEST_CASE("build-objrep writes the object representation, byte-identical across reruns") {
    const fs::path dir = work_dir("objrep");
    write_cube(dir / "cube.obj", 0.05);
    const std::string base = "build-objrep --mesh " + (dir / "cube.obj").string() +
                             " --frames 4 --seed 9 --width 48 --out ";
    REQUIRE(run(base + (dir / "a").string(), dir).exit_code == 0);
    REQUIRE(run(base + (dir / "b").string(), dir).exit_code == 0);
    CHECK(oracles::dir_hash(dir / "a") == oracles::dir_hash(dir / "b"));

    const mlo::MlotTensor pts = mlo::read_mlot(dir / "a" / "points.mlot");
    CHECK(pts.dtype == mlo::kMlotF64);
    CHECK(pts.shape == std::vector<std::uint64_t>{2048, 3});
    for (const char* v : {"front", "back", "left", "right", "top", "bottom"}) {
        CHECK(fs::exists(dir / "a" / "views" / (std::string(v) + ".ppm")));
    }
    for (int f = 0; f < 4; ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d", f);
        CHECK(fs::exists(dir / "a" / "normals" / (std::string(name) + ".ppm")));
        CHECK(fs::exists(dir / "a" / "depth" / (std::string(name) + ".pgm")));
    }

    // a different seed changes the outputs
    REQUIRE(run("build-objrep --mesh " + (dir / "cube.obj").string() +
                " --frames 4 --seed 10 --width 48 --out " + (dir / "c").string(), dir)
                .exit_code == 0);
    CHECK(oracles::dir_hash(dir / "a") != oracles::dir_hash(dir / "c"));
}

TEST_CASE("simulate-motion is deterministic and seed-sensitive") {
    const fs::path dir = work_dir("motion");
    const RunResult a = run("simulate-motion --seed 4 --frames 24", dir);
    const RunResult b = run("simulate-motion --seed 4 --frames 24", dir);
    const RunResult c = run("simulate-motion --seed 5 --frames 24", dir);
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output != c.output);
}

TEST_CASE("pack directories are byte-identical across reruns") {
    const fs::path dir = work_dir("pack");
    write_scene(dir);
    write_gray_ppm(dir / "bg.ppm", 48);
    const std::string base = "pack --kind hoi --scene " + (dir / "scene.json").string() +
                             " --background " + (dir / "bg.ppm").string() + " --seed 2 --out ";
    REQUIRE(run(base + (dir / "a").string(), dir).exit_code == 0);
    REQUIRE(run(base + (dir / "b").string(), dir).exit_code == 0);
    CHECK(oracles::dir_hash(dir / "a") == oracles::dir_hash(dir / "b"));
    CHECK(fs::exists(dir / "a" / "pack.json"));
    CHECK(fs::exists(dir / "a" / "mlo.mlot"));
}

TEST_CASE("embed-check reports identically across reruns") {
    const fs::path dir = work_dir("check");
    const RunResult a = run("embed-check --seed 1 --size 64", dir);
    const RunResult b = run("embed-check --seed 1 --size 64", dir);
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output.find("all checks passed") != std::string::npos);
    CHECK(run("embed-check --seed 1 --size 33", dir).exit_code == 2);
}

TEST_CASE("solve-pose recovers noise-free poses") {
    const fs::path dir = work_dir("solve");
    // Markers of frame 0 define the object frame; frame 1 is a shifted copy.
    std::ofstream markers(dir / "markers.json");
    markers << R"({"markers": [
        [[0.15, 0.03, 0.01], [-0.15, -0.05, 0.02], [0.04, 0.11, -0.01], [-0.02, -0.11, 0.03]],
        [[0.25, 0.03, 0.01], [-0.05, -0.05, 0.02], [0.14, 0.11, -0.01], [0.08, -0.11, 0.03]]
    ]})";
    markers.close();
    const RunResult r = run("solve-pose --markers " + (dir / "markers.json").string() +
                            " --out " + (dir / "poses.json").string(), dir);
    REQUIRE(r.exit_code == 0);
    std::ifstream in(dir / "poses.json");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    CHECK(text.find("\"q\"") != std::string::npos);
    CHECK(text.find("0.1") != std::string::npos);  // the x translation
}
