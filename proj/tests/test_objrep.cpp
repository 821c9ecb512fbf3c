#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "mlo/object_rep.hpp"
#include "mlo/rng.hpp"
#include "support/oracles.hpp"

using namespace mlo;

namespace {

Aabb unit_bounds() {
    Aabb b;
    b.min = Vec3(-0.5, -0.5, -0.5);
    b.max = Vec3(0.5, 0.5, 0.5);
    return b;
}

// Rz(+90) as an exact coordinate permutation: (x, y, z) -> (-y, x, z).
Vec3 permute_z90(const Vec3& v) { return {-v.y(), v.x(), v.z()}; }

}  // namespace

TEST_CASE("canonical_cameras: six cameras in the fixed order, front/back opposed") {
    const TriMesh sphere = oracles::icosphere(2);
    const auto cams = canonical_cameras(sphere, 128);
    REQUIRE(cams.size() == 6);

    auto view_dir = [](const Camera& cam) {
        // Camera-space +z mapped back to world space.
        return Vec3(cam.world_to_camera.rotation.conjugate() * Vec3(0, 0, 1));
    };
    CHECK(view_dir(cams[0]).dot(view_dir(cams[1])) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(view_dir(cams[2]).dot(view_dir(cams[3])) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(view_dir(cams[4]).dot(view_dir(cams[5])) == doctest::Approx(-1.0).epsilon(1e-9));

    CHECK(view_dir(cams[static_cast<int>(ViewDirection::Front)])
              .isApprox(Vec3(-1, 0, 0), 1e-12));
    CHECK(view_dir(cams[static_cast<int>(ViewDirection::Left)]).isApprox(Vec3(0, 1, 0), 1e-12));
    CHECK(view_dir(cams[static_cast<int>(ViewDirection::Top)]).isApprox(Vec3(0, 0, -1), 1e-12));
    CHECK(std::string(to_string(ViewDirection::Front)) == "front");
    CHECK(std::string(to_string(ViewDirection::Bottom)) == "bottom");
}

TEST_CASE("canonical_cameras: the unit sphere projects inside the image") {
    const TriMesh sphere = oracles::icosphere(2);
    const auto cams = canonical_cameras(sphere, 96);
    for (const Camera& cam : cams) {
        const RenderTarget rt = render_layer(sphere, cam);
        bool any = false;
        for (int y = 0; y < cam.height; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                if (!rt.mask[rt.pixel(x, y)]) continue;
                any = true;
                CHECK(x > 0);
                CHECK(x < cam.width - 1);
                CHECK(y > 0);
                CHECK(y < cam.height - 1);
            }
        }
        CHECK(any);
    }
    CHECK_THROWS_AS(canonical_cameras(sphere, 96, 0.5), ValidationError);
}

TEST_CASE("render_reference_views: headlight shading peaks at the silhouette center") {
    const TriMesh sphere = oracles::icosphere(3);
    const auto cams = canonical_cameras(sphere, 96);
    const auto views = render_reference_views(sphere, cams);
    const ShadedImage& front = views[static_cast<int>(ViewDirection::Front)];

    auto luma = [&](int x, int y) {
        const std::size_t i = (static_cast<std::size_t>(y) * 96 + static_cast<std::size_t>(x)) * 3;
        return front.rgb[i] + front.rgb[i + 1] + front.rgb[i + 2];
    };
    const double center = luma(48, 48);
    CHECK(center > 0.0);
    // Lambert cosine law: brightness falls off toward the silhouette.
    CHECK(center > luma(48 + 18, 48));
    CHECK(luma(48 + 18, 48) > luma(48 + 34, 48));
    CHECK(center > luma(48, 48 - 18));
}

TEST_CASE("render_reference_views: red vertex colors stay in the red channel") {
    TriMesh sphere = oracles::icosphere(2);
    sphere.vertex_colors.assign(sphere.vertices.size(), Vec3(1.0, 0.0, 0.0));
    const auto cams = canonical_cameras(sphere, 64);
    const ShadedImage view = render_shaded(sphere, cams[0]);
    bool any_red = false;
    for (std::size_t i = 0; i < view.rgb.size(); i += 3) {
        any_red = any_red || view.rgb[i] > 0.0f;
        CHECK(view.rgb[i + 1] == 0.0f);
        CHECK(view.rgb[i + 2] == 0.0f);
    }
    CHECK(any_red);
}

TEST_CASE("render_shaded is deterministic") {
    const TriMesh sphere = oracles::icosphere(2);
    const auto cams = canonical_cameras(sphere, 64);
    const ShadedImage a = render_shaded(sphere, cams[2]);
    const ShadedImage b = render_shaded(sphere, cams[2]);
    CHECK(a.rgb == b.rgb);
}

TEST_CASE("slerp endpoints and unit norm") {
    SeededRng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Quaterniond a(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        Eigen::Quaterniond b(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        a.normalize();
        b.normalize();
        Eigen::Quaterniond at0 = slerp(a, b, 0.0);
        Eigen::Quaterniond at1 = slerp(a, b, 1.0);
        CHECK((at0.coeffs() - a.coeffs()).cwiseAbs().maxCoeff() <= 1e-9);
        // Endpoint may be sign-aligned against the double cover.
        const double d1 = std::min((at1.coeffs() - b.coeffs()).cwiseAbs().maxCoeff(),
                                   (at1.coeffs() + b.coeffs()).cwiseAbs().maxCoeff());
        CHECK(d1 <= 1e-9);
        for (double t : {0.1, 0.35, 0.72, 0.9}) {
            CHECK(std::abs(slerp(a, b, t).norm() - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("simulate_motion: frame count, determinism, rate bound") {
    const ObjectMotion m24 = simulate_motion(7, 24, 0.1, unit_bounds());
    CHECK(m24.frame_count() == 24);
    CHECK(m24.translations.size() == 24);

    const ObjectMotion again = simulate_motion(7, 24, 0.1, unit_bounds());
    for (int i = 0; i < 24; ++i) {
        CHECK(m24.rotations[static_cast<std::size_t>(i)].coeffs() ==
              again.rotations[static_cast<std::size_t>(i)].coeffs());
        CHECK(m24.translations[static_cast<std::size_t>(i)] ==
              again.translations[static_cast<std::size_t>(i)]);
    }

    for (int i = 0; i + 1 < 24; ++i) {
        const double dot = std::min(1.0, std::abs(m24.rotations[static_cast<std::size_t>(i)].dot(
                                             m24.rotations[static_cast<std::size_t>(i + 1)])));
        CHECK(2.0 * std::acos(dot) <= 0.1);
    }

    const ObjectMotion different = simulate_motion(8, 24, 0.1, unit_bounds());
    bool differs = false;
    for (int i = 0; i < 24; ++i) {
        if (m24.rotations[static_cast<std::size_t>(i)].coeffs() !=
            different.rotations[static_cast<std::size_t>(i)].coeffs()) {
            differs = true;
        }
    }
    CHECK(differs);
}

TEST_CASE("simulate_motion: edge cases") {
    CHECK(simulate_motion(1, 1, 0.2, unit_bounds()).frame_count() == 1);
    CHECK(simulate_motion(1, 9, 0.2, unit_bounds()).frame_count() == 9);
    CHECK(simulate_motion(1, 25, 0.2, unit_bounds()).frame_count() == 25);
    CHECK_THROWS_AS(simulate_motion(1, 24, 0.0, unit_bounds()), ValidationError);
    CHECK_THROWS_AS(simulate_motion(1, 0, 0.1, unit_bounds()), ValidationError);
    Aabb inverted;
    inverted.min = Vec3(1, 1, 1);
    inverted.max = Vec3(-1, -1, -1);
    CHECK_THROWS_AS(simulate_motion(1, 8, 0.1, inverted), ValidationError);
}

TEST_CASE("simulate_motion: long sequences respect the rate bound everywhere") {
    const ObjectMotion m = simulate_motion(99, 120, 0.25, unit_bounds());
    CHECK(m.frame_count() == 120);
    CHECK_NOTHROW(m.validate());
}

TEST_CASE("render_motion_normals: identity motion reproduces the base render") {
    TriMesh cube = oracles::cube_mesh(0.3);
    const Camera cam = make_look_at_camera(Vec3(2.0, 0.6, 0.5), Vec3::Zero(), Vec3(0, 0, 1),
                                           96.0, 96.0, 96, 96, 0.2, 8.0);
    ObjectMotion motion;
    motion.rotations.assign(3, Eigen::Quaterniond::Identity());
    motion.translations.assign(3, Vec3::Zero());

    const auto frames = render_motion_normals(cube, motion, cam);
    REQUIRE(frames.size() == 3);
    TriMesh with_normals = cube;
    with_normals.vertex_normals = vertex_normals(cube);
    const RenderTarget base = render_layer(with_normals, cam);
    for (const RenderTarget& rt : frames) {
        CHECK(rt.mask == base.mask);
        CHECK(rt.depth_map == base.depth_map);
        CHECK(rt.normal_map == base.normal_map);
    }
}

TEST_CASE("render_motion_normals: rotated flat face shows the rotated normal") {
    // Flat quad with an oblique normal; rotating the object by Rz(90) must
    // show encode(R_cam * Rz * n0) where n0 is the base-frame normal.
    const Vec3 n0 = Vec3(1.0, 0.25, 0.2).normalized();
    const Vec3 u = n0.cross(Vec3(0, 0, 1)).normalized();
    const Vec3 v = n0.cross(u);
    TriMesh quad;
    quad.vertices = {0.3 * u + 0.3 * v, -0.3 * u + 0.3 * v, -0.3 * u - 0.3 * v,
                     0.3 * u - 0.3 * v};
    quad.faces = {{0, 1, 2}, {0, 2, 3}};

    const Camera cam = make_look_at_camera(Vec3(2.0, 0.8, 0.4), Vec3::Zero(), Vec3(0, 0, 1),
                                           128.0, 128.0, 128, 128, 0.2, 8.0);
    ObjectMotion motion;
    motion.rotations = {Eigen::Quaterniond::Identity(),
                        Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2.0,
                                                             Vec3::UnitZ()))};
    motion.translations = {Vec3::Zero(), Vec3::Zero()};

    const auto frames = render_motion_normals(quad, motion, cam);
    REQUIRE(frames.size() == 2);

    const Eigen::Matrix3d r_cam = cam.world_to_camera.rotation_matrix();
    auto expected_encoded = [&](const Vec3& world_normal, int px, int py) {
        Vec3 n = r_cam * world_normal;
        const Vec3 ray((px + 0.5 - cam.cx) / cam.fx, (py + 0.5 - cam.cy) / cam.fy, 1.0);
        if (n.dot(ray) > 0.0) n = -n;
        return Vec3(n * 0.5 + Vec3::Constant(0.5));
    };
    auto check_center = [&](const RenderTarget& rt, const Vec3& world_normal) {
        const Vec3 cam_center = cam.to_camera(Vec3::Zero());
        const Eigen::Vector2d uv = cam.project(cam_center);
        const int px = static_cast<int>(uv.x());
        const int py = static_cast<int>(uv.y());
        REQUIRE(rt.mask[rt.pixel(px, py)] == 1);
        const Vec3 expected = expected_encoded(world_normal, px, py);
        for (int c = 0; c < 3; ++c) {
            CHECK(std::abs(rt.normal_map[rt.pixel(px, py) * 3 + static_cast<std::size_t>(c)] -
                           expected[c]) <= 2.0 / 255.0);
        }
    };
    check_center(frames[0], n0);
    check_center(frames[1], Vec3(motion.rotations[1] * n0));
}

TEST_CASE("build_object_rep: defaults and determinism") {
    const TriMesh sphere = oracles::icosphere(1, 0.1);
    const Camera cam = make_look_at_camera(Vec3(0.6, 0.2, 0.2), Vec3::Zero(), Vec3(0, 0, 1),
                                           64.0, 64.0, 64, 64, 0.05, 5.0);
    ObjectRepOptions options;
    options.view_resolution = 64;
    const ObjectRep rep = build_object_rep(sphere, 24, 3, cam, options);
    CHECK(rep.point_cloud.points.size() == 2048);
    CHECK(rep.reference_views.size() == 6);
    CHECK(rep.motion_normals.size() == 24);
    CHECK(rep.motion.frame_count() == 24);

    const ObjectRep again = build_object_rep(sphere, 24, 3, cam, options);
    CHECK(rep.point_cloud.points[100] == again.point_cloud.points[100]);
    CHECK(rep.motion.rotations[17].coeffs() == again.motion.rotations[17].coeffs());
    CHECK(rep.reference_views[4].rgb == again.reference_views[4].rgb);
    CHECK(rep.motion_normals[9].depth_map == again.motion_normals[9].depth_map);
}

TEST_CASE("reference views permute consistently under a 90-degree z rotation") {
    TriMesh mesh = oracles::icosphere(2, 0.3);
    // Break the sphere's symmetry so views are distinguishable.
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        Vec3& v = mesh.vertices[i];
        v = Vec3(v.x() * 1.0, v.y() * 0.7, v.z() * 0.5);
        v += 0.05 * Vec3(std::sin(7.0 * v.y()), std::sin(9.0 * v.z()), std::sin(5.0 * v.x()));
    }
    TriMesh rotated = mesh;
    for (Vec3& v : rotated.vertices) v = permute_z90(v);

    const auto views = render_reference_views(mesh, canonical_cameras(mesh, 64));
    const auto views_rot = render_reference_views(rotated, canonical_cameras(rotated, 64));

    auto close = [](const ShadedImage& a, const ShadedImage& b) {
        REQUIRE(a.rgb.size() == b.rgb.size());
        float max_diff = 0.0f;
        for (std::size_t i = 0; i < a.rgb.size(); ++i) {
            max_diff = std::max(max_diff, std::abs(a.rgb[i] - b.rgb[i]));
        }
        return max_diff <= 1e-5f;
    };
    using V = ViewDirection;
    CHECK(close(views_rot[static_cast<int>(V::Front)], views[static_cast<int>(V::Left)]));
    CHECK(close(views_rot[static_cast<int>(V::Left)], views[static_cast<int>(V::Back)]));
    CHECK(close(views_rot[static_cast<int>(V::Back)], views[static_cast<int>(V::Right)]));
    CHECK(close(views_rot[static_cast<int>(V::Right)], views[static_cast<int>(V::Front)]));
}
