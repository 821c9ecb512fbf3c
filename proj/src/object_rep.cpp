#include "mlo/object_rep.hpp"

#include <cmath>
#include <numbers>

#include "mlo/rng.hpp"

namespace mlo {

namespace {

Vec3 sphere_center(const TriMesh& mesh, double& radius) {
    const Aabb box = bounding_box(mesh);
    const Vec3 center = 0.5 * (box.min + box.max);
    double r = 0.0;
    for (const Vec3& v : mesh.vertices) r = std::max(r, (v - center).norm());
    radius = std::max(r, 1e-9);
    return center;
}

Eigen::Quaterniond random_unit_quaternion(SeededRng& rng) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    const double n = q.norm();
    if (n < 1e-12) return Eigen::Quaterniond::Identity();
    q.coeffs() /= n;
    return q;
}

Vec3 random_unit_vector(SeededRng& rng) {
    while (true) {
        const Vec3 v(rng.normal(), rng.normal(), rng.normal());
        const double n = v.norm();
        if (n > 1e-9) return v / n;
    }
}

// Uniform Catmull-Rom through p1..p2 with neighbours p0, p3.
Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                  (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

}  // namespace

void ObjectMotion::validate() const {
    if (rotations.empty() || rotations.size() != translations.size()) {
        throw ValidationError("object motion needs matching rotation/translation sequences");
    }
    for (const auto& q : rotations) {
        if (std::abs(q.norm() - 1.0) > 1e-6) {
            throw ValidationError("object motion quaternion is not unit length");
        }
    }
    if (rot_rate_max > 0.0) {
        for (std::size_t i = 0; i + 1 < rotations.size(); ++i) {
            const double d = std::min(1.0, std::abs(rotations[i].dot(rotations[i + 1])));
            if (2.0 * std::acos(d) > rot_rate_max) {
                throw ValidationError("object motion exceeds rot_rate_max between frames " +
                                      std::to_string(i) + " and " + std::to_string(i + 1));
            }
        }
    }
    for (const Vec3& t : translations) {
        if (!t.allFinite()) throw ValidationError("object motion translation is not finite");
    }
}

const char* to_string(ViewDirection view) {
    static const char* names[kReferenceViewCount] = {"front", "back", "left",
                                                     "right", "top", "bottom"};
    return names[static_cast<int>(view)];
}

Eigen::Quaterniond slerp(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, double t) {
    Eigen::Quaterniond bb = b;
    double cos_omega = a.dot(bb);
    if (cos_omega < 0.0) {  // take the short arc of the double cover
        bb.coeffs() = -bb.coeffs();
        cos_omega = -cos_omega;
    }
    if (cos_omega > 1.0 - 1e-12) {
        Eigen::Quaterniond out;
        out.coeffs() = (1.0 - t) * a.coeffs() + t * bb.coeffs();
        out.normalize();
        return out;
    }
    const double omega = std::acos(std::min(1.0, cos_omega));
    const double s = std::sin(omega);
    const double wa = std::sin((1.0 - t) * omega) / s;
    const double wb = std::sin(t * omega) / s;
    Eigen::Quaterniond out;
    out.coeffs() = wa * a.coeffs() + wb * bb.coeffs();
    out.normalize();
    return out;
}

std::array<Camera, kReferenceViewCount> canonical_cameras(const TriMesh& mesh, int resolution,
                                                          double margin) {
    if (mesh.vertices.empty()) throw ValidationError("canonical cameras of an empty mesh");
    if (margin < 1.0 || margin > 2.0) throw ValidationError("margin must lie in [1.0, 2.0]");
    if (resolution < 1) throw ValidationError("resolution must be >= 1");

    double radius = 0.0;
    const Vec3 center = sphere_center(mesh, radius);
    const double half_fov = 0.5 * kReferenceFovDegrees * std::numbers::pi / 180.0;
    const double tan_half = std::tan(half_fov);
    const double dist = margin * radius / tan_half;
    const double focal = 0.5 * static_cast<double>(resolution) / tan_half;
    const double z_near = std::max(1e-4 * dist, dist - 1.5 * radius);
    const double z_far = dist + 1.5 * radius;

    // View directions per slot; side views keep world +z up, the top/bottom
    // pair uses +x as the image up hint.
    const Vec3 dir[kReferenceViewCount] = {
        {-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0},  // front, back
        {0.0, 1.0, 0.0},  {0.0, -1.0, 0.0}, // left, right
        {0.0, 0.0, -1.0}, {0.0, 0.0, 1.0},  // top, bottom
    };
    const Vec3 up[kReferenceViewCount] = {
        {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0},
        {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0},
        {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0},
    };

    std::array<Camera, kReferenceViewCount> cams;
    for (int i = 0; i < kReferenceViewCount; ++i) {
        cams[static_cast<std::size_t>(i)] =
            make_look_at_camera(center - dist * dir[i], center, up[i], focal, focal,
                                resolution, resolution, z_near, z_far);
    }
    return cams;
}

std::array<ShadedImage, kReferenceViewCount> render_reference_views(
    const TriMesh& mesh, const std::array<Camera, kReferenceViewCount>& cameras) {
    std::array<ShadedImage, kReferenceViewCount> views;
    for (int i = 0; i < kReferenceViewCount; ++i) {
        views[static_cast<std::size_t>(i)] = render_shaded(mesh, cameras[static_cast<std::size_t>(i)]);
    }
    return views;
}

ObjectMotion simulate_motion(std::uint64_t seed, int frames, double rot_rate_max,
                             const Aabb& trans_bounds) {
    if (frames < 1) throw ValidationError("motion needs at least one frame");
    if (!(rot_rate_max > 0.0)) throw ValidationError("rot_rate_max must be > 0");
    if ((trans_bounds.max - trans_bounds.min).minCoeff() < 0.0) {
        throw ValidationError("translation bounds are inverted");
    }

    SeededRng rng(seed);
    const int spacing = kMotionKeyframeSpacing;
    const int keys = (frames == 1) ? 1 : (frames - 2 + spacing) / spacing + 1;

    // Keyframe rotations: successive random-axis increments whose angle stays
    // below spacing * rot_rate_max, so every interpolated step obeys the rate.
    std::vector<Eigen::Quaterniond> key_rot(static_cast<std::size_t>(keys));
    key_rot[0] = random_unit_quaternion(rng);
    const double max_key_angle =
        0.999 * std::min(std::numbers::pi, spacing * rot_rate_max);
    for (int k = 1; k < keys; ++k) {
        const Vec3 axis = random_unit_vector(rng);
        const double angle = rng.uniform(0.0, max_key_angle);
        const Eigen::Quaterniond step(Eigen::AngleAxisd(angle, axis));
        Eigen::Quaterniond q = key_rot[static_cast<std::size_t>(k - 1)] * step;
        if (q.dot(key_rot[static_cast<std::size_t>(k - 1)]) < 0.0) q.coeffs() = -q.coeffs();
        key_rot[static_cast<std::size_t>(k)] = q.normalized();
    }

    std::vector<Vec3> key_pos(static_cast<std::size_t>(keys));
    for (int k = 0; k < keys; ++k) {
        key_pos[static_cast<std::size_t>(k)] =
            Vec3(rng.uniform(trans_bounds.min.x(), trans_bounds.max.x()),
                 rng.uniform(trans_bounds.min.y(), trans_bounds.max.y()),
                 rng.uniform(trans_bounds.min.z(), trans_bounds.max.z()));
    }

    ObjectMotion motion;
    motion.rot_rate_max = rot_rate_max;
    motion.rotations.resize(static_cast<std::size_t>(frames));
    motion.translations.resize(static_cast<std::size_t>(frames));
    auto key_at = [&](int k) { return std::clamp(k, 0, keys - 1); };
    for (int i = 0; i < frames; ++i) {
        const int seg = std::min(i / spacing, keys - 1 > 0 ? keys - 2 : 0);
        const double t = keys == 1 ? 0.0 : static_cast<double>(i - seg * spacing) / spacing;
        if (keys == 1) {
            motion.rotations[static_cast<std::size_t>(i)] = key_rot[0];
            motion.translations[static_cast<std::size_t>(i)] = key_pos[0];
            continue;
        }
        motion.rotations[static_cast<std::size_t>(i)] =
            slerp(key_rot[static_cast<std::size_t>(seg)],
                  key_rot[static_cast<std::size_t>(seg + 1)], t);
        motion.translations[static_cast<std::size_t>(i)] =
            catmull_rom(key_pos[static_cast<std::size_t>(key_at(seg - 1))],
                        key_pos[static_cast<std::size_t>(seg)],
                        key_pos[static_cast<std::size_t>(seg + 1)],
                        key_pos[static_cast<std::size_t>(key_at(seg + 2))], t);
    }
    motion.validate();
    return motion;
}

std::vector<RenderTarget> render_motion_normals(const TriMesh& mesh, const ObjectMotion& motion,
                                                const Camera& camera) {
    motion.validate();
    TriMesh base = mesh;
    if (!base.has_normals()) base.vertex_normals = vertex_normals(base);

    std::vector<RenderTarget> out;
    out.reserve(static_cast<std::size_t>(motion.frame_count()));
    for (int i = 0; i < motion.frame_count(); ++i) {
        out.push_back(render_layer(transformed(base, motion.pose(i)), camera));
    }
    return out;
}

ObjectRep build_object_rep_with_motion(const TriMesh& mesh, const ObjectMotion& motion,
                                       std::uint64_t seed, const Camera& scene_camera,
                                       const ObjectRepOptions& options) {
    mesh.validate();
    motion.validate();
    ObjectRep rep;
    rep.reference_views =
        render_reference_views(mesh, canonical_cameras(mesh, options.view_resolution,
                                                       options.view_margin));
    rep.point_cloud = sample_surface(mesh, options.point_count, seed);
    rep.motion = motion;
    rep.motion_normals = render_motion_normals(mesh, motion, scene_camera);
    return rep;
}

ObjectRep build_object_rep(const TriMesh& mesh, int frames, std::uint64_t seed,
                           const Camera& scene_camera, const ObjectRepOptions& options) {
    mesh.validate();
    double radius = 0.0;
    const Vec3 center = sphere_center(mesh, radius);
    Aabb bounds;
    bounds.min = center - Vec3::Constant(0.25 * radius);
    bounds.max = center + Vec3::Constant(0.25 * radius);
    const ObjectMotion motion = simulate_motion(seed + 1, frames, options.rot_rate_max, bounds);
    return build_object_rep_with_motion(mesh, motion, seed, scene_camera, options);
}

}  // namespace mlo
