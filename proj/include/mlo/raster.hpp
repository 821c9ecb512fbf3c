#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mlo/camera.hpp"
#include "mlo/geometry.hpp"
#include "mlo/hand_model.hpp"

namespace mlo {

/// One rendered layer. normal_map holds camera-space normals encoded as
/// n * 0.5 + 0.5 (zero where the mask is false); depth_map is metric with an
/// infinity sentinel off-surface; mask is true exactly where depth lies in
/// [near, far].
struct RenderTarget {
    int width = 0;
    int height = 0;
    std::vector<float> normal_map;  // H*W*3
    std::vector<float> depth_map;   // H*W
    std::vector<std::uint8_t> mask; // H*W

    static RenderTarget empty(int width, int height);
    std::size_t pixel(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
};

/// Lambertian headlight render used for object reference views.
struct ShadedImage {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;  // H*W*3 in [0,1]

    static ShadedImage empty(int width, int height);
};

/// Multi-layer occlusion stack: 13 independently rendered normal layers plus
/// one occlusion confidence map per layer.
struct LayerStack {
    static constexpr int kLayerCount = 13;

    int width = 0;
    int height = 0;
    std::array<RenderTarget, kLayerCount> layers;
    std::array<std::vector<float>, kLayerCount> confidence;

    static LayerStack zeros(int width, int height);
};

/// Layer order: the object first, then each hand's six parts, left before
/// right.
enum class MloLayer : int {
    Object = 0,
    LeftPalm, LeftThumb, LeftIndex, LeftMiddle, LeftRing, LeftLittle,
    RightPalm, RightThumb, RightIndex, RightMiddle, RightRing, RightLittle,
};

const char* to_string(MloLayer layer);
MloLayer hand_part_layer(HandSide side, HandPart part);

/// Z-buffered rasterization of `meshes` with perspective-correct depth and
/// per-pixel renormalized camera-space normals. Back faces are drawn with the
/// normal flipped toward the camera. Meshes without vertex normals get
/// area-weighted ones computed on the fly.
RenderTarget render_layer(const std::vector<const TriMesh*>& meshes, const Camera& camera);
RenderTarget render_layer(const TriMesh& mesh, const Camera& camera);

/// Headlight shading: albedo * max(0, -n . view), albedo from vertex colors or
/// 0.7 gray.
ShadedImage render_shaded(const TriMesh& mesh, const Camera& camera);

/// On-mask: 1 - (depth - near) / (far - near), clamped to [1e-6, 1] so the
/// mask stays recoverable at the far plane. Off-mask: 0.
std::vector<float> occlusion_confidence(const RenderTarget& target, const Camera& camera);

/// Renders the 13 occlusion-free layers: each layer sees only its own part's
/// triangles. A face belongs to a part when at least two of its vertices carry
/// that label; three-way ties go to the palm. Absent entities produce all-zero
/// layers. At least one entity must be present.
LayerStack build_mlo(const PosedHandGeometry* left_hand, const PosedHandGeometry* right_hand,
                     const TriMesh* object, const Camera& camera);

/// Per pixel, the masked layer with minimum depth wins; ties go to the lowest
/// layer index.
RenderTarget composite_layers(const LayerStack& stack);

/// Splits hand geometry into the six per-part meshes in part order.
std::array<TriMesh, kHandPartCount> split_hand_parts(const PosedHandGeometry& hand);

}  // namespace mlo
