#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mlo/camera.hpp"
#include "mlo/geometry.hpp"
#include "mlo/hand_model.hpp"

namespace mlo {

/// One hand track: the resolved model plus a pose per frame.
struct HandTrack {
    std::string model_ref;  // "TOY" or an asset path
    HandModel model;
    std::vector<HandPose> poses;
};

/// Scene document: camera, optional object with per-frame rigid poses, and
/// optional hand tracks. All per-frame lists have length `frames`.
struct SceneSpec {
    int frames = 0;
    Camera camera;
    std::optional<TriMesh> object_mesh;
    std::vector<RigidTransform> object_poses;
    std::optional<HandTrack> left_hand;
    std::optional<HandTrack> right_hand;
};

/// Loads and validates a scene JSON document. Relative asset paths resolve
/// against the scene file's directory. Throws ValidationError on structural
/// problems and IoError when referenced files cannot be read.
SceneSpec load_scene(const std::filesystem::path& path);
SceneSpec load_scene_json(const std::string& text, const std::filesystem::path& base_dir);

/// Entities of one frame, ready for build_mlo.
struct SceneFrame {
    std::optional<TriMesh> object;
    std::optional<PosedHandGeometry> left;
    std::optional<PosedHandGeometry> right;
};
SceneFrame realize_frame(const SceneSpec& scene, int frame);

}  // namespace mlo
