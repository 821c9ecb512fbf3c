#include "mlo/pipeline.hpp"

#include <algorithm>

namespace mlo {

namespace {

ObjectRep zero_object_rep(int frames, int width, int height) {
    ObjectRep rep;
    for (auto& view : rep.reference_views) view = ShadedImage::empty(width, height);
    rep.point_cloud.points.assign(kDefaultPointCount, Vec3::Zero());
    rep.point_cloud.source_face.assign(kDefaultPointCount, -1);
    rep.point_cloud.barycentric.assign(kDefaultPointCount, Vec3::Zero());
    rep.motion.rotations.assign(static_cast<std::size_t>(frames),
                                Eigen::Quaterniond(0.0, 0.0, 0.0, 0.0));
    rep.motion.translations.assign(static_cast<std::size_t>(frames), Vec3::Zero());
    rep.motion.rot_rate_max = 0.0;
    rep.motion_normals.resize(static_cast<std::size_t>(frames));
    for (auto& rt : rep.motion_normals) {
        rt = RenderTarget::empty(width, height);
        std::fill(rt.depth_map.begin(), rt.depth_map.end(), 0.0f);
    }
    return rep;
}

void zero_hand_layers(std::vector<LayerStack>& stacks) {
    for (LayerStack& stack : stacks) {
        for (int l = 1; l < LayerStack::kLayerCount; ++l) {
            stack.layers[static_cast<std::size_t>(l)] =
                RenderTarget::empty(stack.width, stack.height);
            auto& depth = stack.layers[static_cast<std::size_t>(l)].depth_map;
            std::fill(depth.begin(), depth.end(), 0.0f);  // serialized slots are exact zeros
            std::fill(stack.confidence[static_cast<std::size_t>(l)].begin(),
                      stack.confidence[static_cast<std::size_t>(l)].end(), 0.0f);
        }
    }
}

std::vector<LayerStack> zero_mlo(int frames, int width, int height) {
    std::vector<LayerStack> stacks(static_cast<std::size_t>(frames));
    for (LayerStack& stack : stacks) {
        stack = LayerStack::zeros(width, height);
        for (auto& layer : stack.layers) {
            std::fill(layer.depth_map.begin(), layer.depth_map.end(), 0.0f);
        }
    }
    return stacks;
}

}  // namespace

WindowPlan plan_windows(int total_frames, int window, int stride, PlanMode mode) {
    if (window < 1 || window > total_frames) {
        throw ValidationError("window must satisfy 1 <= w <= N");
    }
    if (stride < 1 || stride > window) {
        throw ValidationError("stride must satisfy 1 <= s <= w");
    }
    const int span = total_frames - window;
    if (mode == PlanMode::Strict && span % stride != 0) {
        throw ValidationError("strict mode requires (N - w) divisible by s");
    }

    WindowPlan plan;
    plan.total_frames = total_frames;
    plan.window = window;
    plan.stride = stride;
    for (int start = 0; start <= span; start += stride) {
        plan.windows.emplace_back(start, start + window);
    }
    if (mode == PlanMode::Tail && span % stride != 0) {
        plan.windows.emplace_back(span, total_frames);
    }

    plan.coverage.assign(static_cast<std::size_t>(total_frames), 0);
    for (const auto& [start, end] : plan.windows) {
        for (int f = start; f < end; ++f) ++plan.coverage[static_cast<std::size_t>(f)];
    }
    return plan;
}

FrameSequence overlap_average(const std::vector<FrameSequence>& outputs, const WindowPlan& plan) {
    if (outputs.size() != plan.windows.size()) {
        throw ValidationError("window output count does not match the plan");
    }
    std::size_t payload = 0;
    for (std::size_t w = 0; w < outputs.size(); ++w) {
        const auto [start, end] = plan.windows[w];
        if (static_cast<int>(outputs[w].size()) != end - start) {
            throw ValidationError("window " + std::to_string(w) + " has the wrong frame count");
        }
        for (const auto& frame : outputs[w]) {
            if (payload == 0) payload = frame.size();
            if (frame.size() != payload) {
                throw ValidationError("frame payload sizes disagree");
            }
        }
    }

    FrameSequence merged(static_cast<std::size_t>(plan.total_frames),
                         std::vector<double>(payload, 0.0));
    for (std::size_t w = 0; w < outputs.size(); ++w) {
        const auto [start, end] = plan.windows[w];
        for (int f = start; f < end; ++f) {
            const auto& frame = outputs[w][static_cast<std::size_t>(f - start)];
            auto& acc = merged[static_cast<std::size_t>(f)];
            for (std::size_t i = 0; i < payload; ++i) acc[i] += frame[i];
        }
    }
    for (int f = 0; f < plan.total_frames; ++f) {
        const int cover = plan.coverage[static_cast<std::size_t>(f)];
        if (cover == 0) throw ValidationError("plan leaves frame " + std::to_string(f) + " uncovered");
        for (double& v : merged[static_cast<std::size_t>(f)]) v /= cover;
    }
    return merged;
}

const char* to_string(PackKind kind) {
    switch (kind) {
        case PackKind::Hoi: return "HOI";
        case PackKind::Object: return "OBJECT";
        case PackKind::Human: return "HUMAN";
    }
    return "?";
}

PackKind pack_kind_from_string(const std::string& name) {
    if (name == "HOI" || name == "hoi") return PackKind::Hoi;
    if (name == "OBJECT" || name == "object") return PackKind::Object;
    if (name == "HUMAN" || name == "human") return PackKind::Human;
    throw ValidationError("unknown pack kind '" + name + "'");
}

ConditionPack pack_conditions(PackKind kind, const PackInputs& inputs) {
    if (inputs.frames < 1 || inputs.width < 1 || inputs.height < 1) {
        throw ValidationError("pack needs frames, width and height >= 1");
    }
    const int frames = inputs.frames;
    const int width = inputs.width;
    const int height = inputs.height;

    auto check_mlo = [&]() {
        if (!inputs.mlo || inputs.mlo->empty()) {
            throw ValidationError(std::string(to_string(kind)) + " pack requires the MLO stacks");
        }
        if (static_cast<int>(inputs.mlo->size()) != frames) {
            throw ValidationError("MLO stack count must equal frames");
        }
        for (const LayerStack& s : *inputs.mlo) {
            if (s.width != width || s.height != height) {
                throw ValidationError("MLO stack resolution mismatch");
            }
        }
    };
    auto check_background = [&]() {
        if (!inputs.background_ref) {
            throw ValidationError(std::string(to_string(kind)) +
                                  " pack requires the background reference image");
        }
        if (inputs.background_ref->width != width || inputs.background_ref->height != height) {
            throw ValidationError("background reference resolution mismatch");
        }
    };
    if (inputs.first_frame_object &&
        (inputs.first_frame_object->width != width || inputs.first_frame_object->height != height)) {
        throw ValidationError("first-frame object resolution mismatch");
    }
    if (inputs.skeleton) {
        for (const ImageTensor& map : *inputs.skeleton) {
            if (map.width != width || map.height != height) {
                throw ValidationError("skeleton map resolution mismatch");
            }
        }
    }
    auto check_object_rep = [&]() {
        if (!inputs.object_rep) {
            throw ValidationError(std::string(to_string(kind)) +
                                  " pack requires the object representation");
        }
        if (static_cast<int>(inputs.object_rep->motion_normals.size()) != frames) {
            throw ValidationError("object motion frame count must equal frames");
        }
    };
    if (inputs.skeleton && static_cast<int>(inputs.skeleton->size()) != frames) {
        throw ValidationError("skeleton sequence length must equal frames");
    }

    ConditionPack pack;
    pack.kind = kind;
    pack.frames = frames;
    pack.width = width;
    pack.height = height;

    const int c_s = inputs.skeleton && !inputs.skeleton->empty()
                        ? inputs.skeleton->front().channels
                        : 3;
    auto zero_skeleton = [&]() {
        pack.skeleton.assign(static_cast<std::size_t>(frames),
                             ImageTensor::zeros(height, width, c_s));
        pack.zero_flags.skeleton = true;
    };

    switch (kind) {
        case PackKind::Hoi: {
            check_mlo();
            check_object_rep();
            check_background();
            pack.mlo = *inputs.mlo;
            pack.object_rep = *inputs.object_rep;
            pack.background_ref = *inputs.background_ref;
            if (inputs.first_frame_object) {
                pack.first_frame_object = *inputs.first_frame_object;
            } else {
                pack.first_frame_object = ShadedImage::empty(width, height);
                pack.zero_flags.first_frame_object = true;
            }
            if (inputs.skeleton) {
                pack.skeleton = *inputs.skeleton;
            } else {
                zero_skeleton();
            }
            break;
        }
        case PackKind::Object: {
            check_mlo();
            check_object_rep();
            check_background();
            pack.mlo = *inputs.mlo;
            zero_hand_layers(pack.mlo);
            pack.zero_flags.mlo_hand_layers = true;
            pack.object_rep = *inputs.object_rep;
            pack.background_ref = *inputs.background_ref;
            if (inputs.first_frame_object) {
                pack.first_frame_object = *inputs.first_frame_object;
            } else {
                pack.first_frame_object = ShadedImage::empty(width, height);
                pack.zero_flags.first_frame_object = true;
            }
            zero_skeleton();  // objects have no body to drive
            break;
        }
        case PackKind::Human: {
            check_background();
            pack.mlo = zero_mlo(frames, width, height);
            pack.zero_flags.mlo_object_layer = true;
            pack.zero_flags.mlo_hand_layers = true;
            pack.object_rep = zero_object_rep(frames, width, height);
            pack.zero_flags.object_rep = true;
            pack.background_ref = *inputs.background_ref;
            pack.first_frame_object = ShadedImage::empty(width, height);
            pack.zero_flags.first_frame_object = true;
            if (inputs.skeleton) {
                pack.skeleton = *inputs.skeleton;
            } else {
                zero_skeleton();
            }
            break;
        }
    }
    return pack;
}

}  // namespace mlo
