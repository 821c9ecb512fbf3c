#include "mlo/scene.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mlo {

namespace {

using Json = nlohmann::json;

Vec3 vec3_from(const Json& arr, const char* what) {
    if (!arr.is_array() || arr.size() != 3) {
        throw ValidationError(std::string(what) + " must be a 3-element array");
    }
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

RigidTransform pose_from(const Json& obj) {
    RigidTransform pose;
    if (obj.contains("q")) {
        const Json& q = obj["q"];
        if (!q.is_array() || q.size() != 4) {
            throw ValidationError("pose 'q' must be [a, b, c, w]");
        }
        pose = RigidTransform::from_quat_abcw(q[0].get<double>(), q[1].get<double>(),
                                              q[2].get<double>(), q[3].get<double>());
    }
    if (obj.contains("t")) pose.translation = vec3_from(obj["t"], "pose 't'");
    pose.validate();
    return pose;
}

Camera camera_from(const Json& obj) {
    Camera cam;
    cam.width = obj.value("width", 512);
    cam.height = obj.value("height", 512);
    if (!obj.contains("fx") || !obj.contains("fy")) {
        throw ValidationError("camera needs fx and fy");
    }
    cam.fx = obj["fx"].get<double>();
    cam.fy = obj["fy"].get<double>();
    cam.cx = obj.value("cx", cam.width * 0.5);
    cam.cy = obj.value("cy", cam.height * 0.5);
    cam.z_near = obj.value("near", 0.01);
    cam.z_far = obj.value("far", 100.0);
    if (obj.contains("rotation")) {
        const Json& q = obj["rotation"];
        if (!q.is_array() || q.size() != 4) {
            throw ValidationError("camera rotation must be [a, b, c, w]");
        }
        cam.world_to_camera.rotation = Eigen::Quaterniond(
            q[3].get<double>(), q[0].get<double>(), q[1].get<double>(), q[2].get<double>());
    }
    if (obj.contains("translation")) {
        cam.world_to_camera.translation = vec3_from(obj["translation"], "camera translation");
    }
    cam.validate();
    return cam;
}

HandTrack hand_track_from(const Json& obj, HandSide side, int frames,
                          const std::filesystem::path& base_dir) {
    HandTrack track;
    track.model_ref = obj.value("model", std::string("TOY"));
    if (track.model_ref == "TOY") {
        track.model = make_toy_hand(side);
    } else {
        std::filesystem::path asset(track.model_ref);
        if (asset.is_relative()) asset = base_dir / asset;
        track.model = load_hand_model(asset);
        if (track.model.side != side) {
            throw ValidationError("hand asset side does not match its scene slot");
        }
    }
    if (!obj.contains("poses") || !obj["poses"].is_array()) {
        throw ValidationError("hand track needs a 'poses' array");
    }
    for (const Json& p : obj["poses"]) {
        HandPose pose;
        pose.theta = Eigen::VectorXd::Zero(3 * track.model.joint_count());
        pose.beta = Eigen::VectorXd::Zero(track.model.shape_dim());
        if (p.contains("theta")) {
            const Json& th = p["theta"];
            if (static_cast<int>(th.size()) != pose.theta.size()) {
                throw ValidationError("hand pose theta length mismatch");
            }
            for (Eigen::Index i = 0; i < pose.theta.size(); ++i) {
                pose.theta[i] = th[static_cast<std::size_t>(i)].get<double>();
            }
        }
        if (p.contains("beta")) {
            const Json& be = p["beta"];
            if (static_cast<int>(be.size()) != pose.beta.size()) {
                throw ValidationError("hand pose beta length mismatch");
            }
            for (Eigen::Index i = 0; i < pose.beta.size(); ++i) {
                pose.beta[i] = be[static_cast<std::size_t>(i)].get<double>();
            }
        }
        if (p.contains("translation")) {
            pose.root_translation = vec3_from(p["translation"], "hand pose translation");
        }
        track.poses.push_back(std::move(pose));
    }
    if (static_cast<int>(track.poses.size()) != frames) {
        throw ValidationError("hand pose count must equal frames");
    }
    return track;
}

}  // namespace

SceneSpec load_scene_json(const std::string& text, const std::filesystem::path& base_dir) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("scene parse failure: ") + e.what());
    }

    SceneSpec scene;
    scene.frames = doc.value("frames", 0);
    if (scene.frames < 1) throw ValidationError("scene needs frames >= 1");
    if (!doc.contains("camera")) throw ValidationError("scene needs a camera");
    scene.camera = camera_from(doc["camera"]);

    if (doc.contains("object")) {
        const Json& obj = doc["object"];
        if (!obj.contains("mesh")) throw ValidationError("scene object needs a mesh path");
        std::filesystem::path mesh_path(obj["mesh"].get<std::string>());
        if (mesh_path.is_relative()) mesh_path = base_dir / mesh_path;
        scene.object_mesh = load_mesh(mesh_path);
        if (!obj.contains("poses") || !obj["poses"].is_array()) {
            throw ValidationError("scene object needs a 'poses' array");
        }
        for (const Json& p : obj["poses"]) scene.object_poses.push_back(pose_from(p));
        if (static_cast<int>(scene.object_poses.size()) != scene.frames) {
            throw ValidationError("object pose count must equal frames");
        }
    }
    if (doc.contains("left_hand")) {
        scene.left_hand = hand_track_from(doc["left_hand"], HandSide::Left, scene.frames, base_dir);
    }
    if (doc.contains("right_hand")) {
        scene.right_hand =
            hand_track_from(doc["right_hand"], HandSide::Right, scene.frames, base_dir);
    }
    if (!scene.object_mesh && !scene.left_hand && !scene.right_hand) {
        throw ValidationError("scene needs at least one of object, left_hand, right_hand");
    }
    return scene;
}

SceneSpec load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_scene_json(buffer.str(), path.parent_path());
}

SceneFrame realize_frame(const SceneSpec& scene, int frame) {
    if (frame < 0 || frame >= scene.frames) throw ValidationError("frame index out of range");
    SceneFrame out;
    if (scene.object_mesh) {
        out.object = transformed(*scene.object_mesh,
                                 scene.object_poses[static_cast<std::size_t>(frame)]);
    }
    if (scene.left_hand) {
        out.left = posed_hand_geometry(scene.left_hand->model,
                                       scene.left_hand->poses[static_cast<std::size_t>(frame)]);
    }
    if (scene.right_hand) {
        out.right = posed_hand_geometry(scene.right_hand->model,
                                        scene.right_hand->poses[static_cast<std::size_t>(frame)]);
    }
    return out;
}

}  // namespace mlo
