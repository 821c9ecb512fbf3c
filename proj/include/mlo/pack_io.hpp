#pragma once

#include <filesystem>

#include "mlo/camera.hpp"
#include "mlo/object_rep.hpp"
#include "mlo/pipeline.hpp"

namespace mlo {

/// Flattens a layer stack to a (13, H, W, 4) f32 tensor: encoded normal rgb
/// plus the confidence channel per layer.
std::vector<float> layer_stack_tensor(const LayerStack& stack);

/// Writes an object representation directory:
///   views/{front,...}.ppm, points.mlot (2048 x 3 f64),
///   motion.json {"q": [[a,b,c,w], ...], "l": [[x,y,k], ...]},
///   normals/frame_%04d.ppm, depth/frame_%04d.pgm.
/// Depth samples are (depth - near) / (far - near) scaled by 65535 with
/// off-mask pixels at 65535.
void save_object_rep(const ObjectRep& rep, const std::filesystem::path& dir,
                     const Camera& scene_camera);

/// Writes a condition pack directory: pack.json manifest plus one MLOT tensor
/// per slot (mlo.mlot, object_views.mlot, object_points.mlot,
/// object_motion.mlot, object_normals.mlot, background.mlot,
/// first_frame.mlot, skeleton.mlot). Zeroed slots are written as exact zeros.
void save_condition_pack(const ConditionPack& pack, const std::filesystem::path& dir);

void save_motion_json(const ObjectMotion& motion, std::ostream& out);
ObjectMotion load_motion_json(std::istream& in);

}  // namespace mlo
