#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mlo/errors.hpp"

namespace mlo {

using Vec3 = Eigen::Vector3d;

// Default surface-sampling density.
inline constexpr int kDefaultPointCount = 2048;

// Faces below this area (m^2) are flagged degenerate: kept in storage but
// excluded from surface sampling, normal accumulation and rasterization.
inline constexpr double kDegenerateFaceArea = 1e-12;

/// Triangle mesh in meters. Vertex colors and normals are optional; an empty
/// vector means "not present".
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<Vec3> vertex_colors;
    std::vector<Vec3> vertex_normals;

    bool has_colors() const { return !vertex_colors.empty(); }
    bool has_normals() const { return !vertex_normals.empty(); }

    double face_area(int face) const;
    /// Unit face normal; (0,0,1) for degenerate faces.
    Vec3 face_normal(int face) const;
    bool face_degenerate(int face) const { return face_area(face) < kDegenerateFaceArea; }

    /// Throws ValidationError on out-of-range face indices or non-finite data.
    void validate() const;
};

/// Rigid body pose. Quaternion components serialize in (a, b, c, w) order,
/// i.e. vector part first, scalar last.
struct RigidTransform {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }
    RigidTransform inverse() const;
    /// Composition: (*this) after rhs, so apply(p) == this->apply(rhs.apply(p)).
    RigidTransform operator*(const RigidTransform& rhs) const;

    static RigidTransform from_quat_abcw(double a, double b, double c, double w,
                                         const Vec3& t = Vec3::Zero());

    /// Throws ValidationError unless |quaternion| is within 1e-6 of 1.
    void validate() const;
};

/// Surface samples with their provenance on the mesh.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<int> source_face;
    std::vector<Vec3> barycentric;

    void validate() const;
};

struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
};

// --- mesh I/O ---------------------------------------------------------------

/// Wavefront OBJ subset: `v x y z [r g b]` and `f i j k` (1-based triangles).
/// `vn`, `vt`, `usemtl` and comment lines are ignored; anything else is a
/// parse error. Throws ValidationError on malformed content.
TriMesh load_mesh(std::istream& in);
TriMesh load_mesh(const std::filesystem::path& path);

void save_mesh_obj(const TriMesh& mesh, std::ostream& out);

/// Marker tracks document: { "markers": [[[x,y,z], ... k], ... T] }.
std::vector<std::vector<Vec3>> load_marker_tracks(std::istream& in);

// --- operations -------------------------------------------------------------

/// Area-uniform surface sampling: face chosen with probability proportional
/// to area, position by uniform barycentric sampling. Deterministic per seed.
PointCloud sample_surface(const TriMesh& mesh, int count = kDefaultPointCount,
                          std::uint64_t seed = 0);

/// Area-weighted average of incident face normals. Vertices with no incident
/// non-degenerate face get the (0,0,1) fallback.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

/// Least-squares rigid alignment: argmin over (R, t) of sum |R*src + t - dst|^2.
/// Reflections are corrected to proper rotations. Requires k >= 3 points whose
/// centered configuration has rank >= 2.
RigidTransform kabsch_solve(std::span<const Vec3> src, std::span<const Vec3> dst);

struct MarkerRefinement {
    std::vector<Vec3> offsets;
    std::vector<RigidTransform> poses;
    double objective = 0.0;
    std::vector<double> objective_history;  // objective after each accepted iteration
};

/// Alternating refinement of marker offsets against tracked positions:
/// per-frame Kabsch given offsets, then offsets stepped toward the nearest
/// surface points of the averaged pulled-back markers. The objective is
/// non-increasing; stops at max_iter or relative improvement below 1e-9.
MarkerRefinement refine_marker_correspondence(const TriMesh& mesh,
                                              const std::vector<std::vector<Vec3>>& marker_tracks,
                                              std::vector<Vec3> init_offsets,
                                              int max_iter = 50);

Vec3 closest_surface_point(const TriMesh& mesh, const Vec3& query);

Aabb bounding_box(const TriMesh& mesh);

/// Mesh with vertices (and normals, if present) moved by `pose`.
TriMesh transformed(const TriMesh& mesh, const RigidTransform& pose);

}  // namespace mlo
