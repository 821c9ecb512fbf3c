#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlo/cond_embed.hpp"
#include "mlo/errors.hpp"
#include "mlo/object_rep.hpp"
#include "mlo/raster.hpp"

namespace mlo {

enum class PlanMode { Strict, Tail };

/// Sliding-window schedule over N frames: windows [p*s, p*s + w). Strict mode
/// requires (N - w) divisible by s and emits exactly (N - w)/s + 1 windows;
/// tail mode appends [N - w, N) when the stride does not divide evenly.
struct WindowPlan {
    int total_frames = 0;
    int window = 0;
    int stride = 0;
    std::vector<std::pair<int, int>> windows;  // half-open [start, end)
    std::vector<int> coverage;                 // per-frame covering-window count
};

WindowPlan plan_windows(int total_frames, int window, int stride, PlanMode mode);

/// Frames are opaque payload vectors; outputs[w][i] is frame (start_w + i).
using FrameSequence = std::vector<std::vector<double>>;

/// Per-frame arithmetic mean of every window output covering that frame.
FrameSequence overlap_average(const std::vector<FrameSequence>& outputs, const WindowPlan& plan);

enum class PackKind { Hoi, Object, Human };

const char* to_string(PackKind kind);
PackKind pack_kind_from_string(const std::string& name);

/// Condition slots prior to masking. frames/width/height fix the shapes of
/// zero-filled slots; they must agree with whatever slots are present.
struct PackInputs {
    int frames = 0;
    int width = 0;
    int height = 0;
    std::optional<std::vector<LayerStack>> mlo;           // per-frame stacks
    std::optional<ObjectRep> object_rep;
    std::optional<ShadedImage> background_ref;
    std::optional<ShadedImage> first_frame_object;
    std::optional<std::vector<ImageTensor>> skeleton;     // per-frame C_s maps
};

/// Which slots were zero-filled. The MLO stack is split into the object layer
/// and the twelve hand layers because the masking table treats them apart.
struct ZeroFlags {
    bool mlo_object_layer = false;
    bool mlo_hand_layers = false;
    bool object_rep = false;
    bool background_ref = false;
    bool first_frame_object = false;
    bool skeleton = false;
};

/// Dataset-conditioned bundle with unavailable slots holding exact zeros.
struct ConditionPack {
    PackKind kind = PackKind::Hoi;
    int frames = 0;
    int width = 0;
    int height = 0;
    std::vector<LayerStack> mlo;
    ObjectRep object_rep;
    ShadedImage background_ref;
    ShadedImage first_frame_object;
    std::vector<ImageTensor> skeleton;
    ZeroFlags zero_flags;
};

/// Masking table:
///   HOI    - every provided slot kept; requires mlo, object_rep, background.
///   OBJECT - hand layers and skeleton zeroed; object layer, object_rep and
///            background kept; requires mlo, object_rep, background.
///   HUMAN  - only background (and skeleton, when given) kept; requires
///            background.
/// Optional slots that are absent are zero-filled and flagged.
ConditionPack pack_conditions(PackKind kind, const PackInputs& inputs);

}  // namespace mlo
