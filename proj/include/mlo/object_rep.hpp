#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mlo/camera.hpp"
#include "mlo/geometry.hpp"
#include "mlo/raster.hpp"

namespace mlo {

/// Per-frame rigid motion. Quaternions are unit length and consecutive frames
/// rotate by at most rot_rate_max radians.
struct ObjectMotion {
    std::vector<Eigen::Quaterniond> rotations;
    std::vector<Vec3> translations;
    double rot_rate_max = 0.0;

    int frame_count() const { return static_cast<int>(rotations.size()); }
    RigidTransform pose(int frame) const {
        return {rotations[static_cast<std::size_t>(frame)],
                translations[static_cast<std::size_t>(frame)]};
    }
    void validate() const;
};

enum class ViewDirection : int { Front = 0, Back, Left, Right, Top, Bottom };

inline constexpr int kReferenceViewCount = 6;

const char* to_string(ViewDirection view);

/// Appearance-and-geometry bundle for one object: six canonical reference
/// views, a surface point cloud, simulated motion, and the per-frame normal
/// renders of that motion.
struct ObjectRep {
    std::array<ShadedImage, kReferenceViewCount> reference_views;
    PointCloud point_cloud;
    ObjectMotion motion;
    std::vector<RenderTarget> motion_normals;
};

inline constexpr double kReferenceFovDegrees = 50.0;
inline constexpr int kMotionKeyframeSpacing = 8;

/// Six cameras looking at the mesh's bounding-sphere center from the fixed
/// directions front(-x), back(+x), left(+y), right(-y), top(-z), bottom(+z),
/// at distance margin * r / tan(fov / 2) with fov = 50 degrees.
std::array<Camera, kReferenceViewCount> canonical_cameras(const TriMesh& mesh, int resolution,
                                                          double margin = 1.2);

std::array<ShadedImage, kReferenceViewCount> render_reference_views(
    const TriMesh& mesh, const std::array<Camera, kReferenceViewCount>& cameras);

/// Random rigid trajectory: keyframe quaternions every 8 frames joined by
/// slerp (sign-aligned against the double cover), translations by Catmull-Rom
/// through keypoints drawn uniformly inside trans_bounds.
ObjectMotion simulate_motion(std::uint64_t seed, int frames, double rot_rate_max,
                             const Aabb& trans_bounds);

std::vector<RenderTarget> render_motion_normals(const TriMesh& mesh, const ObjectMotion& motion,
                                                const Camera& camera);

struct ObjectRepOptions {
    int point_count = kDefaultPointCount;
    int view_resolution = 512;
    double view_margin = 1.2;
    double rot_rate_max = 0.1;  // radians per frame
};

/// Assembles the full representation. The motion's translation bounds default
/// to a box of half-extent 0.25 * r around the bounding-sphere center.
ObjectRep build_object_rep(const TriMesh& mesh, int frames, std::uint64_t seed,
                           const Camera& scene_camera, const ObjectRepOptions& options = {});

/// Same assembly but with externally supplied motion (used when the object
/// trajectory comes from a scene instead of simulation).
ObjectRep build_object_rep_with_motion(const TriMesh& mesh, const ObjectMotion& motion,
                                       std::uint64_t seed, const Camera& scene_camera,
                                       const ObjectRepOptions& options = {});

/// Spherical interpolation between unit quaternions (shortest arc after sign
/// alignment); falls back to normalized lerp for nearly parallel inputs.
Eigen::Quaterniond slerp(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, double t);

}  // namespace mlo
