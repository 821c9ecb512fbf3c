#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlo/camera.hpp"
#include "mlo/geometry.hpp"

namespace mlo {

enum class HandPart : int { Palm = 0, Thumb, Index, Middle, Ring, Little };
enum class HandSide : int { Left = 0, Right };

inline constexpr int kHandPartCount = 6;

const char* to_string(HandPart part);
const char* to_string(HandSide side);

/// Skinned parametric hand. Bases are stored basis-major: shape_basis[b] is a
/// V x 3 displacement field, pose_basis[p] likewise. A non-empty pose basis
/// must have exactly 9 * (J - 1) entries (one per component of the flattened
/// per-joint rotation offsets R(theta_j) - I, root excluded).
struct HandModel {
    Eigen::MatrixX3d template_vertices;               // V x 3
    std::vector<Eigen::MatrixX3d> shape_basis;        // B_s entries
    std::vector<Eigen::MatrixX3d> pose_basis;         // 0 or 9*(J-1) entries
    Eigen::MatrixXd joint_regressor;                  // J x V, rows sum to 1
    std::vector<int> parents;                         // length J, root = -1
    Eigen::MatrixXd skinning_weights;                 // V x J, rows sum to 1
    std::vector<HandPart> part_of_joint;              // length J
    HandSide side = HandSide::Right;
    std::vector<std::array<int, 3>> faces;            // triangles for rendering

    int vertex_count() const { return static_cast<int>(template_vertices.rows()); }
    int joint_count() const { return static_cast<int>(parents.size()); }
    int shape_dim() const { return static_cast<int>(shape_basis.size()); }

    /// Throws ValidationError: weight rows off 1 by more than 1e-4 or negative,
    /// cyclic/multi-root parents, regressor rows off 1 by more than 1e-3,
    /// inconsistent dimensions.
    void validate() const;
};

/// Pose parameters: axis-angle per joint (root first), shape coefficients,
/// root translation in meters.
struct HandPose {
    Eigen::VectorXd theta;              // 3 * J
    Eigen::VectorXd beta;               // B_s
    Vec3 root_translation = Vec3::Zero();
};

struct PosedHand {
    Eigen::MatrixX3d vertices;  // V x 3
    Eigen::MatrixX3d joints;    // J x 3
};

struct Keypoint2D {
    double u = 0.0;
    double v = 0.0;
    bool valid = false;
};

/// JSON hand asset: keys `template`, `shape_basis`, `pose_basis`,
/// `joint_regressor`, `parents`, `weights`, `part_of_joint`, `side`, and
/// optionally `faces`. Throws ValidationError on malformed assets.
HandModel load_hand_model(std::istream& in);
HandModel load_hand_model(const std::filesystem::path& path);
void save_hand_model(const HandModel& model, std::ostream& out);

/// Procedural test hand: palm block plus five two-segment fingers, 16 joints,
/// one-hot skinning weights. Left hands are the x-mirror of the right build.
HandModel make_toy_hand(HandSide side = HandSide::Right);

/// Linear blend skinning over the kinematic chain. Shaped template gets the
/// shape offsets (and pose-corrective offsets when a pose basis is present),
/// joints come from the regressor, the root translation is added last.
PosedHand pose_hand(const HandModel& model, const HandPose& pose);

/// Per-vertex part: the part of the joint with the largest skinning weight,
/// ties to the lowest joint index.
std::vector<HandPart> part_labels(const HandModel& model);

/// One vertex per finger: the vertex labelled with that finger that lies
/// farthest from the root joint in the template.
std::array<int, 5> fingertip_vertices(const HandModel& model);

/// 21 keypoints: 16 skeletal joints followed by 5 fingertips, pinhole
/// projected. Points at or behind the near plane are flagged invalid.
std::array<Keypoint2D, 21> project_joints(const Eigen::MatrixX3d& joints,
                                          const Eigen::MatrixX3d& fingertips,
                                          const Camera& camera);

/// Renderable geometry of a posed hand: mesh (no normals attached; renderers
/// compute them) plus per-vertex part labels.
struct PosedHandGeometry {
    TriMesh mesh;
    std::vector<HandPart> labels;
};
PosedHandGeometry posed_hand_geometry(const HandModel& model, const HandPose& pose);

HandModel mirror_hand_model(const HandModel& model);

}  // namespace mlo
