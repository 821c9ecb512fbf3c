#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "mlo/errors.hpp"
#include "mlo/raster.hpp"

namespace mlo {

/// Dense H x W x C tensor, double precision, row-major (y, x, c).
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    static ImageTensor zeros(int height, int width, int channels);
    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }
};

/// Dense (batch, time, height, width, channels) tensor, double precision.
struct LatentTensor {
    int batch = 0;
    int time = 0;
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    static LatentTensor zeros(int batch, int time, int height, int width, int channels);
    std::size_t index(int b, int t, int y, int x, int c) const {
        return ((((static_cast<std::size_t>(b) * static_cast<std::size_t>(time) +
                   static_cast<std::size_t>(t)) * static_cast<std::size_t>(height) +
                  static_cast<std::size_t>(y)) * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels) +
                static_cast<std::size_t>(c));
    }
    double& at(int b, int t, int y, int x, int c) { return data[index(b, t, y, x, c)]; }
    double at(int b, int t, int y, int x, int c) const { return data[index(b, t, y, x, c)]; }
    bool same_shape(const LatentTensor& other) const {
        return batch == other.batch && time == other.time && height == other.height &&
               width == other.width && channels == other.channels;
    }
};

/// Token rows by embedding columns.
using TokenMatrix = Eigen::MatrixXd;

/// Reference feature maps for the width-concatenation path: K in {7, 8}
/// single-frame maps (six object views, one background, optionally the
/// first-frame object image).
struct RefFeatures {
    std::vector<LatentTensor> features;

    int count() const { return static_cast<int>(features.size()); }
    void validate() const;
};

enum class Activation { Identity, SiLU };

struct Conv2d {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride_h = 1;
    int stride_w = 1;
    int pad_h = 0;
    int pad_w = 0;
    std::vector<double> weight;  // [out][in][kh][kw]
    std::vector<double> bias;    // [out]

    ImageTensor apply(const ImageTensor& in) const;
    double& w(int oc, int ic, int ky, int kx) {
        return weight[((static_cast<std::size_t>(oc) * static_cast<std::size_t>(in_channels) +
                        static_cast<std::size_t>(ic)) * static_cast<std::size_t>(kernel_h) +
                       static_cast<std::size_t>(ky)) * static_cast<std::size_t>(kernel_w) +
                      static_cast<std::size_t>(kx)];
    }
};

struct Dense {
    Eigen::MatrixXd weight;  // in x out, applied as rows * weight
    Eigen::VectorXd bias;
};

struct ToyConfig {
    int latent_channels = 4;    // guider output channels
    int embed_dim = 32;         // d: token and attention dimension
    int skeleton_channels = 3;  // C_s
    int ref_channels = 8;       // feature channels in the width-concat path
    int token_patch = 16;       // patchify stride for token grids
    Activation activation = Activation::SiLU;
};

inline constexpr int kMloChannelCount = LayerStack::kLayerCount * 4;  // 39 normals + 13 confidences

/// All learnable tensors of the toy conditioning stack, fully determined by
/// the seed: normal init with scale 0.02, zero biases. The guider follows the
/// four-convolution plan, kernels 3x3, strides [2, 2, 2, 1], channels
/// [16, 32, 64, latent_channels].
struct ToyWeights {
    ToyConfig config;
    std::array<Conv2d, 4> guider_convs;    // input: 52 MLO channels
    std::array<Conv2d, 4> skeleton_convs;  // input: skeleton_channels
    Conv2d mlo_patch;                      // 52 -> d, kernel = stride = token_patch
    Dense mlo_mlp1, mlo_mlp2;
    Conv2d geo_patch;                      // 3 -> d
    Dense geo_mlp1, geo_mlp2;
    Dense point_mlp1, point_mlp2;          // shared per-point MLP, 3 -> d -> d
    Dense point_out1, point_out2;          // post-pool MLP
    Conv2d ref_reducer7, ref_reducer8;     // width reduction for K = 7 / K = 8
    Eigen::MatrixXd attn_wq, attn_wk, attn_wv;  // d x d
    Eigen::VectorXd attn_bk;               // key projection bias, zero by default
};

ToyWeights make_toy_weights(std::uint64_t seed, const ToyConfig& config = {});

/// Channel cascade of a layer stack in layer order: 39 encoded-normal channels
/// then 13 confidence channels.
ImageTensor mlo_channels(const LayerStack& stack);

/// Residual pose conditioning: z + G(mlo) with G downsampling 8x via the
/// stride plan, broadcast over (batch, time). Input spatial size must be
/// divisible by 8 and match 8 * z's spatial size.
LatentTensor pose_guider(const ImageTensor& mlo, const ToyWeights& weights,
                         const LatentTensor& z);

/// Same structure as pose_guider, driven by a skeleton map.
LatentTensor skeleton_guider(const ImageTensor& skeleton, const ToyWeights& weights,
                             const LatentTensor& z);

/// Token embedding of the concatenated normal/confidence channels: patchify
/// convolution with stride token_patch, spatial flatten, two-layer MLP to d.
TokenMatrix mlo_embedding(const LayerStack& stack, const ToyWeights& weights);
TokenMatrix mlo_embedding(const ImageTensor& channels, const ToyWeights& weights);

/// softmax(Q K^T / sqrt(d)) V with Q from z_tokens and K, V from e_tokens.
/// Softmax rows are computed with max subtraction.
TokenMatrix cross_attention(const TokenMatrix& z_tokens, const TokenMatrix& e_tokens,
                            const ToyWeights& weights);

/// The softmax attention matrix of cross_attention (row-stochastic).
TokenMatrix attention_weights(const TokenMatrix& z_tokens, const TokenMatrix& e_tokens,
                              const ToyWeights& weights);

/// Analytic gradient of sum(upstream .* cross_attention(z, e)) with respect to
/// z_tokens (the query path).
TokenMatrix cross_attention_grad(const TokenMatrix& z_tokens, const TokenMatrix& e_tokens,
                                 const ToyWeights& weights, const TokenMatrix& upstream);

/// Width concatenation of Eq-style reference features: every reference is
/// repeated across time and interleaved with f0 along the width (slot k of
/// each stride cell holds reference k, the last slot holds f0), then a
/// kernel-(1 x K+1), stride-(K+1) convolution reduces back to f0's width.
LatentTensor reference_concat(const LatentTensor& f0, const RefFeatures& refs,
                              const ToyWeights& weights);

/// Reducer whose kernel selects the f0 slot, so reference_concat returns f0
/// exactly. Useful as a wiring check.
Conv2d make_identity_ref_reducer(int ref_count, int channels);

/// Geometry tokens: every motion-normal frame patchified to token rows plus
/// one point-cloud token (shared per-point MLP, coordinate-wise max-pool,
/// two-layer MLP).
TokenMatrix geometry_embedding(const std::vector<RenderTarget>& motion_normals,
                               const PointCloud& points, const ToyWeights& weights);

double activate(double x, Activation activation);

}  // namespace mlo
