// mlotool: conditioning-construction toolkit for hand-object scenes.
//
// Subcommands: render-mlo, build-objrep, simulate-motion, pack, plan-windows,
// solve-pose, embed-check. Every command is deterministic given its flags,
// inputs and seed. Exit codes: 0 ok, 1 I/O failure, 2 validation failure,
// 3 numerical check failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mlo/cond_embed.hpp"
#include "mlo/errors.hpp"
#include "mlo/image_io.hpp"
#include "mlo/object_rep.hpp"
#include "mlo/pack_io.hpp"
#include "mlo/pipeline.hpp"
#include "mlo/raster.hpp"
#include "mlo/rng.hpp"
#include "mlo/scene.hpp"
#include "mlo/tensor_io.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw mlo::IoError("cannot create directory: " + dir.string());
}

std::string frame_tag(const char* prefix, int frame, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%04d%s", prefix, frame, suffix);
    return buf;
}

mlo::ShadedImage read_image(const fs::path& path) {
    const mlo::PpmImage ppm = mlo::read_ppm(path);
    mlo::ShadedImage img;
    img.width = ppm.width;
    img.height = ppm.height;
    img.rgb = ppm.rgb01;
    return img;
}

std::vector<mlo::ImageTensor> read_skeleton(const fs::path& path) {
    const mlo::MlotTensor t = mlo::read_mlot(path);
    if (t.shape.size() != 4) {
        throw mlo::ValidationError("skeleton tensor must be (frames, height, width, channels)");
    }
    const int frames = static_cast<int>(t.shape[0]);
    const int h = static_cast<int>(t.shape[1]);
    const int w = static_cast<int>(t.shape[2]);
    const int c = static_cast<int>(t.shape[3]);
    std::vector<mlo::ImageTensor> maps;
    std::size_t pos = 0;
    for (int f = 0; f < frames; ++f) {
        mlo::ImageTensor map = mlo::ImageTensor::zeros(h, w, c);
        for (double& v : map.data) {
            v = t.dtype == mlo::kMlotF32 ? static_cast<double>(t.f32[pos++]) : t.f64[pos++];
        }
        maps.push_back(std::move(map));
    }
    return maps;
}

void write_layer_previews(const mlo::LayerStack& stack, const fs::path& dir, int frame) {
    const fs::path frame_dir = dir / "layers" / frame_tag("frame_", frame, "");
    ensure_dir(frame_dir);
    for (int l = 0; l < mlo::LayerStack::kLayerCount; ++l) {
        const auto name = mlo::to_string(static_cast<mlo::MloLayer>(l));
        const mlo::RenderTarget& rt = stack.layers[static_cast<std::size_t>(l)];
        mlo::write_ppm(frame_dir / (std::string(name) + ".ppm"), rt.width, rt.height,
                       rt.normal_map);
        mlo::write_pgm16(frame_dir / (std::string(name) + ".pgm"), rt.width, rt.height,
                         stack.confidence[static_cast<std::size_t>(l)]);
    }
}

// --- subcommand implementations ----------------------------------------------

int cmd_render_mlo(const std::string& scene_path, const std::string& out, int width, int height,
                   bool size_given) {
    mlo::SceneSpec scene = mlo::load_scene(scene_path);
    if (size_given) {
        scene.camera.width = width;
        scene.camera.height = height;
        scene.camera.cx = width * 0.5;
        scene.camera.cy = height * 0.5;
        scene.camera.validate();
    }
    const fs::path out_dir(out);
    ensure_dir(out_dir);

    Json manifest;
    manifest["frames"] = scene.frames;
    manifest["width"] = scene.camera.width;
    manifest["height"] = scene.camera.height;
    manifest["tensor_pattern"] = "mlo_%04d.mlot";
    manifest["tensor_layout"] = "(layer, y, x, [nx, ny, nz, confidence])";
    Json layer_names = Json::array();
    for (int l = 0; l < mlo::LayerStack::kLayerCount; ++l) {
        layer_names.push_back(mlo::to_string(static_cast<mlo::MloLayer>(l)));
    }
    manifest["layers"] = std::move(layer_names);

    for (int f = 0; f < scene.frames; ++f) {
        const mlo::SceneFrame entities = mlo::realize_frame(scene, f);
        const mlo::LayerStack stack =
            mlo::build_mlo(entities.left ? &*entities.left : nullptr,
                           entities.right ? &*entities.right : nullptr,
                           entities.object ? &*entities.object : nullptr, scene.camera);

        const std::vector<float> tensor = mlo::layer_stack_tensor(stack);
        const std::uint64_t shape[4] = {mlo::LayerStack::kLayerCount,
                                        static_cast<std::uint64_t>(stack.height),
                                        static_cast<std::uint64_t>(stack.width), 4};
        mlo::write_mlot(out_dir / frame_tag("mlo_", f, ".mlot"), shape,
                        std::span<const float>(tensor));

        write_layer_previews(stack, out_dir, f);
        const mlo::RenderTarget composite = mlo::composite_layers(stack);
        mlo::write_ppm(out_dir / frame_tag("composite_", f, ".ppm"), composite.width,
                       composite.height, composite.normal_map);
    }
    std::ofstream mf(out_dir / "manifest.json");
    if (!mf) throw mlo::IoError("cannot write manifest.json");
    mf << manifest.dump(1) << '\n';
    return 0;
}

int cmd_build_objrep(const std::string& mesh_path, int frames, std::uint64_t seed,
                     const std::string& out, int width, double rot_rate_max) {
    const mlo::TriMesh mesh = mlo::load_mesh(fs::path(mesh_path));
    const auto cams = mlo::canonical_cameras(mesh, width);
    const mlo::Camera scene_camera = cams[static_cast<int>(mlo::ViewDirection::Front)];

    mlo::ObjectRepOptions options;
    options.view_resolution = width;
    options.rot_rate_max = rot_rate_max;
    const mlo::ObjectRep rep = mlo::build_object_rep(mesh, frames, seed, scene_camera, options);
    mlo::save_object_rep(rep, fs::path(out), scene_camera);
    return 0;
}

int cmd_simulate_motion(std::uint64_t seed, int frames, double rot_rate_max,
                        const std::vector<double>& lo, const std::vector<double>& hi,
                        const std::string& out) {
    mlo::Aabb bounds;
    bounds.min = mlo::Vec3(lo[0], lo[1], lo[2]);
    bounds.max = mlo::Vec3(hi[0], hi[1], hi[2]);
    const mlo::ObjectMotion motion = mlo::simulate_motion(seed, frames, rot_rate_max, bounds);
    if (out.empty()) {
        mlo::save_motion_json(motion, std::cout);
    } else {
        std::ofstream f(out);
        if (!f) throw mlo::IoError("cannot open for writing: " + out);
        mlo::save_motion_json(motion, f);
    }
    return 0;
}

int cmd_plan_windows(int frames, int window, int stride, const std::string& mode) {
    mlo::PlanMode plan_mode;
    if (mode == "strict") {
        plan_mode = mlo::PlanMode::Strict;
    } else if (mode == "tail") {
        plan_mode = mlo::PlanMode::Tail;
    } else {
        throw mlo::ValidationError("mode must be strict or tail");
    }
    const mlo::WindowPlan plan = mlo::plan_windows(frames, window, stride, plan_mode);
    for (std::size_t p = 0; p < plan.windows.size(); ++p) {
        std::cout << p << ' ' << plan.windows[p].first << ' ' << plan.windows[p].second << '\n';
    }
    std::cout << "count " << plan.windows.size() << '\n';
    return 0;
}

int cmd_solve_pose(const std::string& markers_path, const std::string& mesh_path, int iters,
                   const std::string& out) {
    std::ifstream markers_file(markers_path);
    if (!markers_file) throw mlo::IoError("cannot open markers file: " + markers_path);
    const auto tracks = mlo::load_marker_tracks(markers_file);

    Json doc;
    if (mesh_path.empty()) {
        // No mesh: rigid poses of every frame relative to the first.
        doc["q"] = Json::array();
        doc["l"] = Json::array();
        double objective = 0.0;
        for (const auto& frame : tracks) {
            const mlo::RigidTransform pose = mlo::kabsch_solve(tracks.front(), frame);
            doc["q"].push_back(Json::array({pose.rotation.x(), pose.rotation.y(),
                                            pose.rotation.z(), pose.rotation.w()}));
            doc["l"].push_back(Json::array({pose.translation.x(), pose.translation.y(),
                                            pose.translation.z()}));
            for (std::size_t i = 0; i < frame.size(); ++i) {
                objective += (pose.apply(tracks.front()[i]) - frame[i]).squaredNorm();
            }
        }
        doc["objective"] = objective;
    } else {
        const mlo::TriMesh mesh = mlo::load_mesh(fs::path(mesh_path));
        // Object frame pinned to the first observation: its markers seed the
        // surface offsets.
        const mlo::MarkerRefinement result =
            mlo::refine_marker_correspondence(mesh, tracks, tracks.front(), iters);
        doc["offsets"] = Json::array();
        for (const mlo::Vec3& o : result.offsets) {
            doc["offsets"].push_back(Json::array({o.x(), o.y(), o.z()}));
        }
        doc["q"] = Json::array();
        doc["l"] = Json::array();
        for (const mlo::RigidTransform& pose : result.poses) {
            doc["q"].push_back(Json::array({pose.rotation.x(), pose.rotation.y(),
                                            pose.rotation.z(), pose.rotation.w()}));
            doc["l"].push_back(Json::array({pose.translation.x(), pose.translation.y(),
                                            pose.translation.z()}));
        }
        doc["objective"] = result.objective;
        doc["iterations"] = result.objective_history.size() - 1;
    }

    if (out.empty()) {
        std::cout << doc.dump(1) << '\n';
    } else {
        std::ofstream f(out);
        if (!f) throw mlo::IoError("cannot open for writing: " + out);
        f << doc.dump(1) << '\n';
    }
    return 0;
}

int cmd_pack(const std::string& kind_name, const std::string& scene_path,
             const std::string& mesh_path, const std::string& background_path,
             const std::string& first_frame_path, const std::string& skeleton_path,
             int frames, std::uint64_t seed, int width, int height, const std::string& out) {
    const mlo::PackKind kind = mlo::pack_kind_from_string(kind_name);

    mlo::PackInputs inputs;
    inputs.width = width;
    inputs.height = height;
    inputs.frames = frames;

    if (!background_path.empty()) inputs.background_ref = read_image(background_path);
    if (!first_frame_path.empty()) inputs.first_frame_object = read_image(first_frame_path);
    if (!skeleton_path.empty()) inputs.skeleton = read_skeleton(skeleton_path);

    if (kind == mlo::PackKind::Hoi) {
        if (scene_path.empty()) throw mlo::ValidationError("HOI pack requires --scene");
        mlo::SceneSpec scene = mlo::load_scene(scene_path);
        if (!scene.object_mesh) throw mlo::ValidationError("HOI pack scene needs an object");
        inputs.frames = scene.frames;
        inputs.width = scene.camera.width;
        inputs.height = scene.camera.height;

        std::vector<mlo::LayerStack> stacks;
        for (int f = 0; f < scene.frames; ++f) {
            const mlo::SceneFrame entities = mlo::realize_frame(scene, f);
            stacks.push_back(mlo::build_mlo(entities.left ? &*entities.left : nullptr,
                                            entities.right ? &*entities.right : nullptr,
                                            entities.object ? &*entities.object : nullptr,
                                            scene.camera));
        }
        inputs.mlo = std::move(stacks);

        mlo::ObjectMotion motion;
        for (const mlo::RigidTransform& pose : scene.object_poses) {
            motion.rotations.push_back(pose.rotation);
            motion.translations.push_back(pose.translation);
        }
        mlo::ObjectRepOptions options;
        options.view_resolution = inputs.width;
        inputs.object_rep = mlo::build_object_rep_with_motion(*scene.object_mesh, motion, seed,
                                                              scene.camera, options);
    } else if (kind == mlo::PackKind::Object) {
        if (mesh_path.empty()) throw mlo::ValidationError("OBJECT pack requires --mesh");
        const mlo::TriMesh mesh = mlo::load_mesh(fs::path(mesh_path));
        const auto cams = mlo::canonical_cameras(mesh, width);
        const mlo::Camera camera = cams[static_cast<int>(mlo::ViewDirection::Front)];

        mlo::ObjectRepOptions options;
        options.view_resolution = width;
        const mlo::ObjectRep rep = mlo::build_object_rep(mesh, frames, seed, camera, options);

        std::vector<mlo::LayerStack> stacks;
        for (int f = 0; f < frames; ++f) {
            const mlo::TriMesh posed = mlo::transformed(mesh, rep.motion.pose(f));
            stacks.push_back(mlo::build_mlo(nullptr, nullptr, &posed, camera));
        }
        inputs.mlo = std::move(stacks);
        inputs.object_rep = rep;
        inputs.height = width;  // canonical cameras are square
    }

    const mlo::ConditionPack pack = mlo::pack_conditions(kind, inputs);
    mlo::save_condition_pack(pack, fs::path(out));
    return 0;
}

struct CheckLine {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

int cmd_embed_check(std::uint64_t seed, int size) {
    if (size % 16 != 0 || size < 16) {
        throw mlo::ValidationError("--size must be a positive multiple of 16");
    }
    const mlo::ToyWeights weights = mlo::make_toy_weights(seed);
    const int d = weights.config.embed_dim;
    std::vector<CheckLine> lines;

    auto record = [&](const std::string& name, double measured, double tolerance) {
        lines.push_back({name, measured, tolerance, measured <= tolerance});
    };
    auto random_tokens = [&](int rows, std::uint64_t s) {
        mlo::TokenMatrix m(rows, d);
        mlo::SeededRng rng(s);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
        return m;
    };

    {  // weights are bit-reproducible
        const mlo::ToyWeights again = mlo::make_toy_weights(seed);
        const bool same = weights.guider_convs[0].weight == again.guider_convs[0].weight &&
                          weights.mlo_patch.weight == again.mlo_patch.weight &&
                          weights.attn_wq == again.attn_wq &&
                          weights.ref_reducer8.weight == again.ref_reducer8.weight;
        record("weights-bit-reproducible", same ? 0.0 : 1.0, 0.0);
    }
    {  // attention rows sum to one
        const mlo::TokenMatrix z = random_tokens(6, seed * 7 + 1);
        const mlo::TokenMatrix e = random_tokens(9, seed * 7 + 2);
        const mlo::TokenMatrix a = mlo::attention_weights(z, e, weights);
        double worst = 0.0;
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            worst = std::max(worst, std::abs(a.row(r).sum() - 1.0));
        }
        record("attention-row-sums", worst, 1e-12);
    }
    {  // softmax shift invariance via the key bias
        const mlo::TokenMatrix z = random_tokens(5, seed * 7 + 3);
        const mlo::TokenMatrix e = random_tokens(8, seed * 7 + 4);
        mlo::ToyWeights shifted = weights;
        mlo::SeededRng rng(seed * 7 + 5);
        for (Eigen::Index i = 0; i < shifted.attn_bk.size(); ++i) {
            shifted.attn_bk[i] = rng.uniform(-2.0, 2.0);
        }
        const double diff = (mlo::cross_attention(z, e, weights) -
                             mlo::cross_attention(z, e, shifted)).cwiseAbs().maxCoeff();
        record("attention-shift-invariance", diff, 1e-12);
    }
    {  // analytic gradient vs central differences over 20 seeds
        double worst = 0.0;
        for (std::uint64_t s = 1; s <= 20; ++s) {
            const mlo::ToyWeights w = mlo::make_toy_weights(s);
            mlo::TokenMatrix z = random_tokens(3, s * 11 + 1);
            const mlo::TokenMatrix e = random_tokens(5, s * 11 + 2);
            const mlo::TokenMatrix up = random_tokens(3, s * 11 + 3);
            const mlo::TokenMatrix analytic = mlo::cross_attention_grad(z, e, w, up);
            mlo::TokenMatrix fd(z.rows(), z.cols());
            const double h = 1e-5;
            for (Eigen::Index r = 0; r < z.rows(); ++r) {
                for (Eigen::Index c = 0; c < z.cols(); ++c) {
                    const double saved = z(r, c);
                    z(r, c) = saved + h;
                    const double hi = mlo::cross_attention(z, e, w).cwiseProduct(up).sum();
                    z(r, c) = saved - h;
                    const double lo = mlo::cross_attention(z, e, w).cwiseProduct(up).sum();
                    z(r, c) = saved;
                    fd(r, c) = (hi - lo) / (2.0 * h);
                }
            }
            worst = std::max(worst, (analytic - fd).norm() / std::max(analytic.norm(), 1e-300));
        }
        record("attention-grad-vs-fd-20-seeds", worst, 1e-6);
    }
    {  // point token permutation invariance (exact)
        mlo::PointCloud cloud;
        mlo::SeededRng rng(seed * 7 + 6);
        for (int i = 0; i < 2048; ++i) {
            cloud.points.push_back(mlo::Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                             rng.uniform(-1, 1)));
            cloud.source_face.push_back(0);
            cloud.barycentric.push_back(mlo::Vec3(1, 0, 0));
        }
        std::vector<mlo::RenderTarget> frames = {mlo::RenderTarget::empty(size, size)};
        const mlo::TokenMatrix base = mlo::geometry_embedding(frames, cloud, weights);
        mlo::PointCloud shuffled = cloud;
        for (int i = 2047; i > 0; --i) {
            std::swap(shuffled.points[static_cast<std::size_t>(i)],
                      shuffled.points[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
        }
        const mlo::TokenMatrix permuted = mlo::geometry_embedding(frames, shuffled, weights);
        record("point-token-permutation", (base.bottomRows(1) - permuted.bottomRows(1))
                                              .cwiseAbs().maxCoeff(), 0.0);
    }
    {  // zero-weight guiders are exact residual identities
        mlo::ToyWeights zeroed = weights;
        for (auto* convs : {&zeroed.guider_convs, &zeroed.skeleton_convs}) {
            for (mlo::Conv2d& conv : *convs) {
                std::fill(conv.weight.begin(), conv.weight.end(), 0.0);
                std::fill(conv.bias.begin(), conv.bias.end(), 0.0);
            }
        }
        mlo::SeededRng rng(seed * 7 + 7);
        mlo::ImageTensor mlo_map = mlo::ImageTensor::zeros(size, size, mlo::kMloChannelCount);
        for (double& v : mlo_map.data) v = rng.uniform(-1, 1);
        mlo::ImageTensor skel = mlo::ImageTensor::zeros(size, size,
                                                        weights.config.skeleton_channels);
        for (double& v : skel.data) v = rng.uniform(-1, 1);
        mlo::LatentTensor z = mlo::LatentTensor::zeros(1, 2, size / 8, size / 8,
                                                       weights.config.latent_channels);
        for (double& v : z.data) v = rng.uniform(-1, 1);

        const mlo::LatentTensor z1 = mlo::pose_guider(mlo_map, zeroed, z);
        const mlo::LatentTensor z2 = mlo::skeleton_guider(skel, zeroed, z);
        double diff = 0.0;
        for (std::size_t i = 0; i < z.data.size(); ++i) {
            diff = std::max({diff, std::abs(z1.data[i] - z.data[i]),
                             std::abs(z2.data[i] - z.data[i])});
        }
        record("zero-guider-residual-identity", diff, 0.0);
    }
    {  // guider stride plan downsamples by 8
        mlo::ImageTensor mlo_map = mlo::ImageTensor::zeros(size, size, mlo::kMloChannelCount);
        const mlo::LatentTensor z = mlo::LatentTensor::zeros(1, 1, size / 8, size / 8,
                                                             weights.config.latent_channels);
        bool ok = true;
        try {
            (void)mlo::pose_guider(mlo_map, weights, z);
        } catch (const std::exception&) {
            ok = false;
        }
        record("guider-8x-downsample", ok ? 0.0 : 1.0, 0.0);
    }

    std::printf("embed-check  seed=%llu  size=%d\n", static_cast<unsigned long long>(seed), size);
    std::printf("%-34s %-13s %-11s %s\n", "invariant", "measured", "tolerance", "status");
    bool all_pass = true;
    for (const CheckLine& line : lines) {
        std::printf("%-34s %-13.3e %-11.0e %s\n", line.name.c_str(), line.measured,
                    line.tolerance, line.pass ? "PASS" : "FAIL");
        all_pass = all_pass && line.pass;
    }
    std::printf("%s\n", all_pass ? "all checks passed" : "CHECK FAILURE");
    return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-layer occlusion conditioning toolkit"};
    app.require_subcommand(1);

    // render-mlo
    std::string scene_path, out_dir;
    int width = 512, height = 512;
    auto* render = app.add_subcommand("render-mlo", "Render per-frame MLO layer stacks");
    render->add_option("--scene", scene_path, "Scene JSON")->required();
    render->add_option("--out", out_dir, "Output directory")->required();
    auto* width_opt = render->add_option("--width", width, "Override render width");
    render->add_option("--height", height, "Override render height");

    // build-objrep
    std::string mesh_path, objrep_out;
    int frames = 24;
    std::uint64_t seed = 0;
    int objrep_width = 512;
    double rot_rate_max = 0.1;
    auto* objrep = app.add_subcommand("build-objrep", "Build an object representation directory");
    objrep->add_option("--mesh", mesh_path, "OBJ mesh")->required();
    objrep->add_option("--frames", frames, "Motion frame count");
    objrep->add_option("--seed", seed, "Random seed");
    objrep->add_option("--out", objrep_out, "Output directory")->required();
    objrep->add_option("--width", objrep_width, "View resolution");
    objrep->add_option("--rot-rate-max", rot_rate_max, "Max rotation per frame (radians)");

    // simulate-motion
    std::uint64_t motion_seed = 0;
    int motion_frames = 24;
    double motion_rate = 0.1;
    std::vector<double> bounds_min = {-0.1, -0.1, -0.1};
    std::vector<double> bounds_max = {0.1, 0.1, 0.1};
    std::string motion_out;
    auto* motion = app.add_subcommand("simulate-motion", "Sample a rigid object trajectory");
    motion->add_option("--seed", motion_seed, "Random seed");
    motion->add_option("--frames", motion_frames, "Frame count");
    motion->add_option("--rot-rate-max", motion_rate, "Max rotation per frame (radians)");
    motion->add_option("--min", bounds_min, "Translation bounds minimum (x y z)")->expected(3);
    motion->add_option("--max", bounds_max, "Translation bounds maximum (x y z)")->expected(3);
    motion->add_option("--out", motion_out, "Output file (stdout when omitted)");

    // plan-windows
    int plan_frames = 24, plan_window = 16, plan_stride = 8;
    std::string plan_mode = "strict";
    auto* plan = app.add_subcommand("plan-windows", "Print the sliding-window schedule");
    plan->add_option("--frames", plan_frames, "Total frames N")->required();
    plan->add_option("--window", plan_window, "Window size w")->required();
    plan->add_option("--stride", plan_stride, "Stride s")->required();
    plan->add_option("--mode", plan_mode, "strict or tail");

    // solve-pose
    std::string markers_path, solve_mesh, solve_out;
    int solve_iters = 50;
    auto* solve = app.add_subcommand("solve-pose", "Rigid poses from marker tracks");
    solve->add_option("--markers", markers_path, "Marker tracks JSON")->required();
    solve->add_option("--mesh", solve_mesh, "OBJ mesh for surface refinement");
    solve->add_option("--iters", solve_iters, "Refinement iterations");
    solve->add_option("--out", solve_out, "Output file (stdout when omitted)");

    // pack
    std::string pack_kind, pack_scene, pack_mesh, pack_background, pack_first, pack_skeleton;
    std::string pack_out;
    int pack_frames = 24;
    std::uint64_t pack_seed = 0;
    int pack_width = 512, pack_height = 512;
    auto* pack = app.add_subcommand("pack", "Build a dataset-conditioned condition pack");
    pack->add_option("--kind", pack_kind, "hoi, object or human")->required();
    pack->add_option("--scene", pack_scene, "Scene JSON (hoi)");
    pack->add_option("--mesh", pack_mesh, "OBJ mesh (object)");
    pack->add_option("--background", pack_background, "Background reference PPM");
    pack->add_option("--first-frame", pack_first, "First-frame object PPM");
    pack->add_option("--skeleton", pack_skeleton, "Skeleton MLOT (frames, h, w, c)");
    pack->add_option("--frames", pack_frames, "Frame count (object/human)");
    pack->add_option("--seed", pack_seed, "Random seed");
    pack->add_option("--width", pack_width, "Width");
    pack->add_option("--height", pack_height, "Height");
    pack->add_option("--out", pack_out, "Output directory")->required();

    // embed-check
    std::uint64_t check_seed = 0;
    int check_size = 512;
    auto* check = app.add_subcommand("embed-check", "Run the conditioning-embedding invariants");
    check->add_option("--seed", check_seed, "Random seed");
    check->add_option("--size", check_size, "Map resolution (multiple of 16)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (render->parsed()) {
            return cmd_render_mlo(scene_path, out_dir, width, height, width_opt->count() > 0);
        }
        if (objrep->parsed()) {
            return cmd_build_objrep(mesh_path, frames, seed, objrep_out, objrep_width,
                                    rot_rate_max);
        }
        if (motion->parsed()) {
            return cmd_simulate_motion(motion_seed, motion_frames, motion_rate, bounds_min,
                                       bounds_max, motion_out);
        }
        if (plan->parsed()) {
            return cmd_plan_windows(plan_frames, plan_window, plan_stride, plan_mode);
        }
        if (solve->parsed()) {
            return cmd_solve_pose(markers_path, solve_mesh, solve_iters, solve_out);
        }
        if (pack->parsed()) {
            return cmd_pack(pack_kind, pack_scene, pack_mesh, pack_background, pack_first,
                            pack_skeleton, pack_frames, pack_seed, pack_width, pack_height,
                            pack_out);
        }
        if (check->parsed()) {
            return cmd_embed_check(check_seed, check_size);
        }
    } catch (const mlo::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const mlo::CheckError& e) {
        std::cerr << "check failure: " << e.what() << '\n';
        return 3;
    } catch (const mlo::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
