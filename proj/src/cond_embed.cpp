#include "mlo/cond_embed.hpp"

#include <cmath>
#include <limits>

#include "mlo/object_rep.hpp"
#include "mlo/rng.hpp"

namespace mlo {

namespace {

constexpr double kInitScale = 0.02;

Conv2d make_conv(SeededRng& rng, int in_ch, int out_ch, int k, int stride, int pad) {
    Conv2d conv;
    conv.in_channels = in_ch;
    conv.out_channels = out_ch;
    conv.kernel_h = k;
    conv.kernel_w = k;
    conv.stride_h = stride;
    conv.stride_w = stride;
    conv.pad_h = pad;
    conv.pad_w = pad;
    conv.weight.resize(static_cast<std::size_t>(out_ch) * static_cast<std::size_t>(in_ch) *
                       static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
    for (double& w : conv.weight) w = kInitScale * rng.normal();
    conv.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
    return conv;
}

Conv2d make_width_reducer(SeededRng& rng, int taps, int channels) {
    Conv2d conv;
    conv.in_channels = channels;
    conv.out_channels = channels;
    conv.kernel_h = 1;
    conv.kernel_w = taps;
    conv.stride_h = 1;
    conv.stride_w = taps;
    conv.pad_h = 0;
    conv.pad_w = 0;
    conv.weight.resize(static_cast<std::size_t>(channels) * static_cast<std::size_t>(channels) *
                       static_cast<std::size_t>(taps));
    for (double& w : conv.weight) w = kInitScale * rng.normal();
    conv.bias.assign(static_cast<std::size_t>(channels), 0.0);
    return conv;
}

Dense make_dense(SeededRng& rng, int in_dim, int out_dim) {
    Dense d;
    d.weight.resize(in_dim, out_dim);
    for (Eigen::Index c = 0; c < d.weight.cols(); ++c) {
        for (Eigen::Index r = 0; r < d.weight.rows(); ++r) {
            d.weight(r, c) = kInitScale * rng.normal();
        }
    }
    d.bias = Eigen::VectorXd::Zero(out_dim);
    return d;
}

Eigen::MatrixXd make_matrix(SeededRng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = kInitScale * rng.normal();
        }
    }
    return m;
}

ImageTensor apply_guider(const std::array<Conv2d, 4>& convs, const ImageTensor& input,
                         Activation act) {
    ImageTensor x = convs[0].apply(input);
    for (int layer = 1; layer < 4; ++layer) {
        for (double& v : x.data) v = activate(v, act);
        x = convs[static_cast<std::size_t>(layer)].apply(x);
    }
    return x;  // no nonlinearity after the final layer
}

LatentTensor add_guider_residual(const ImageTensor& map, const ToyWeights& weights,
                                 const LatentTensor& z, const std::array<Conv2d, 4>& convs,
                                 const char* what) {
    if (map.height % 8 != 0 || map.width % 8 != 0) {
        throw ValidationError(std::string(what) + ": spatial size must be divisible by 8");
    }
    if (map.channels != convs[0].in_channels) {
        throw ValidationError(std::string(what) + ": channel count mismatch");
    }
    if (z.height != map.height / 8 || z.width != map.width / 8 ||
        z.channels != weights.config.latent_channels) {
        throw ValidationError(std::string(what) + ": latent shape mismatch");
    }
    const ImageTensor g = apply_guider(convs, map, weights.config.activation);

    LatentTensor out = z;
    for (int b = 0; b < z.batch; ++b) {
        for (int t = 0; t < z.time; ++t) {
            for (int y = 0; y < z.height; ++y) {
                for (int x = 0; x < z.width; ++x) {
                    for (int c = 0; c < z.channels; ++c) {
                        out.at(b, t, y, x, c) += g.at(y, x, c);
                    }
                }
            }
        }
    }
    return out;
}

TokenMatrix tokens_from_patches(const ImageTensor& channels, const Conv2d& patch,
                                const Dense& mlp1, const Dense& mlp2, Activation act) {
    if (channels.channels != patch.in_channels) {
        throw ValidationError("token embedding: channel count mismatch");
    }
    if (channels.height % patch.stride_h != 0 || channels.width % patch.stride_w != 0) {
        throw ValidationError("token embedding: spatial size must be divisible by the patch size");
    }
    const ImageTensor grid = patch.apply(channels);
    TokenMatrix tokens(grid.height * grid.width, grid.channels);
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            for (int c = 0; c < grid.channels; ++c) {
                tokens(y * grid.width + x, c) = grid.at(y, x, c);
            }
        }
    }
    TokenMatrix hidden = (tokens * mlp1.weight).rowwise() + mlp1.bias.transpose();
    for (Eigen::Index i = 0; i < hidden.size(); ++i) {
        hidden.data()[i] = activate(hidden.data()[i], act);
    }
    return (hidden * mlp2.weight).rowwise() + mlp2.bias.transpose();
}

}  // namespace

double activate(double x, Activation activation) {
    if (activation == Activation::Identity) return x;
    return x / (1.0 + std::exp(-x));  // SiLU
}

ImageTensor ImageTensor::zeros(int height, int width, int channels) {
    ImageTensor t;
    t.height = height;
    t.width = width;
    t.channels = channels;
    t.data.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                  static_cast<std::size_t>(channels), 0.0);
    return t;
}

LatentTensor LatentTensor::zeros(int batch, int time, int height, int width, int channels) {
    LatentTensor t;
    t.batch = batch;
    t.time = time;
    t.height = height;
    t.width = width;
    t.channels = channels;
    t.data.assign(static_cast<std::size_t>(batch) * static_cast<std::size_t>(time) *
                  static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                  static_cast<std::size_t>(channels), 0.0);
    return t;
}

void RefFeatures::validate() const {
    if (count() != 7 && count() != 8) {
        throw ValidationError("reference features need K in {7, 8}, got " +
                              std::to_string(count()));
    }
    for (const LatentTensor& f : features) {
        if (f.time != 1) throw ValidationError("reference features must be single-frame");
        if (!f.same_shape(features.front())) {
            throw ValidationError("reference feature shapes disagree");
        }
    }
}

ImageTensor Conv2d::apply(const ImageTensor& in) const {
    if (in.channels != in_channels) {
        throw ValidationError("convolution input channel mismatch");
    }
    const int out_h = (in.height + 2 * pad_h - kernel_h) / stride_h + 1;
    const int out_w = (in.width + 2 * pad_w - kernel_w) / stride_w + 1;
    if (out_h < 1 || out_w < 1) throw ValidationError("convolution input too small");

    ImageTensor out = ImageTensor::zeros(out_h, out_w, out_channels);
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            for (int oc = 0; oc < out_channels; ++oc) {
                double acc = bias[static_cast<std::size_t>(oc)];
                for (int ky = 0; ky < kernel_h; ++ky) {
                    const int iy = oy * stride_h - pad_h + ky;
                    if (iy < 0 || iy >= in.height) continue;
                    for (int kx = 0; kx < kernel_w; ++kx) {
                        const int ix = ox * stride_w - pad_w + kx;
                        if (ix < 0 || ix >= in.width) continue;
                        const double* in_px = &in.data[(static_cast<std::size_t>(iy) *
                                                            static_cast<std::size_t>(in.width) +
                                                        static_cast<std::size_t>(ix)) *
                                                       static_cast<std::size_t>(in_channels)];
                        const double* w_ptr =
                            &weight[((static_cast<std::size_t>(oc) *
                                          static_cast<std::size_t>(in_channels)) *
                                         static_cast<std::size_t>(kernel_h) +
                                     static_cast<std::size_t>(ky)) *
                                        static_cast<std::size_t>(kernel_w) +
                                    static_cast<std::size_t>(kx)];
                        const std::size_t w_step = static_cast<std::size_t>(kernel_h) *
                                                   static_cast<std::size_t>(kernel_w);
                        for (int ic = 0; ic < in_channels; ++ic) {
                            acc += w_ptr[static_cast<std::size_t>(ic) * w_step] * in_px[ic];
                        }
                    }
                }
                out.at(oy, ox, oc) = acc;
            }
        }
    }
    return out;
}

ToyWeights make_toy_weights(std::uint64_t seed, const ToyConfig& config) {
    if (config.latent_channels < 1 || config.embed_dim < 1 || config.skeleton_channels < 1 ||
        config.ref_channels < 1 || config.token_patch < 1) {
        throw ValidationError("toy config dimensions must be >= 1");
    }
    SeededRng rng(seed);
    ToyWeights w;
    w.config = config;

    const int plan[4] = {16, 32, 64, config.latent_channels};
    const int strides[4] = {2, 2, 2, 1};
    int in_ch = kMloChannelCount;
    for (int i = 0; i < 4; ++i) {
        w.guider_convs[static_cast<std::size_t>(i)] = make_conv(rng, in_ch, plan[i], 3, strides[i], 1);
        in_ch = plan[i];
    }
    in_ch = config.skeleton_channels;
    for (int i = 0; i < 4; ++i) {
        w.skeleton_convs[static_cast<std::size_t>(i)] = make_conv(rng, in_ch, plan[i], 3, strides[i], 1);
        in_ch = plan[i];
    }

    const int d = config.embed_dim;
    w.mlo_patch = make_conv(rng, kMloChannelCount, d, config.token_patch, config.token_patch, 0);
    w.mlo_mlp1 = make_dense(rng, d, d);
    w.mlo_mlp2 = make_dense(rng, d, d);

    w.geo_patch = make_conv(rng, 3, d, config.token_patch, config.token_patch, 0);
    w.geo_mlp1 = make_dense(rng, d, d);
    w.geo_mlp2 = make_dense(rng, d, d);
    w.point_mlp1 = make_dense(rng, 3, d);
    w.point_mlp2 = make_dense(rng, d, d);
    w.point_out1 = make_dense(rng, d, d);
    w.point_out2 = make_dense(rng, d, d);

    w.ref_reducer7 = make_width_reducer(rng, 8, config.ref_channels);
    w.ref_reducer8 = make_width_reducer(rng, 9, config.ref_channels);

    w.attn_wq = make_matrix(rng, d, d);
    w.attn_wk = make_matrix(rng, d, d);
    w.attn_wv = make_matrix(rng, d, d);
    w.attn_bk = Eigen::VectorXd::Zero(d);
    return w;
}

ImageTensor mlo_channels(const LayerStack& stack) {
    ImageTensor out = ImageTensor::zeros(stack.height, stack.width, kMloChannelCount);
    const int normal_channels = 3 * LayerStack::kLayerCount;
    for (int y = 0; y < stack.height; ++y) {
        for (int x = 0; x < stack.width; ++x) {
            const std::size_t px = static_cast<std::size_t>(y) * static_cast<std::size_t>(stack.width) +
                                   static_cast<std::size_t>(x);
            for (int l = 0; l < LayerStack::kLayerCount; ++l) {
                const RenderTarget& rt = stack.layers[static_cast<std::size_t>(l)];
                for (int c = 0; c < 3; ++c) {
                    out.at(y, x, 3 * l + c) = rt.normal_map[px * 3 + static_cast<std::size_t>(c)];
                }
                out.at(y, x, normal_channels + l) =
                    stack.confidence[static_cast<std::size_t>(l)][px];
            }
        }
    }
    return out;
}

LatentTensor pose_guider(const ImageTensor& mlo, const ToyWeights& weights,
                         const LatentTensor& z) {
    return add_guider_residual(mlo, weights, z, weights.guider_convs, "pose_guider");
}

LatentTensor skeleton_guider(const ImageTensor& skeleton, const ToyWeights& weights,
                             const LatentTensor& z) {
    return add_guider_residual(skeleton, weights, z, weights.skeleton_convs, "skeleton_guider");
}

TokenMatrix mlo_embedding(const LayerStack& stack, const ToyWeights& weights) {
    return mlo_embedding(mlo_channels(stack), weights);
}

TokenMatrix mlo_embedding(const ImageTensor& channels, const ToyWeights& weights) {
    return tokens_from_patches(channels, weights.mlo_patch, weights.mlo_mlp1, weights.mlo_mlp2,
                               weights.config.activation);
}

TokenMatrix attention_weights(const TokenMatrix& z_tokens, const TokenMatrix& e_tokens,
                              const ToyWeights& weights) {
    const int d = weights.config.embed_dim;
    if (z_tokens.cols() != d || e_tokens.cols() != d) {
        throw ValidationError("attention tokens must have dimension d");
    }
    if (z_tokens.rows() < 1 || e_tokens.rows() < 1) {
        throw ValidationError("attention needs at least one query and one key row");
    }
    const TokenMatrix q = z_tokens * weights.attn_wq;
    const TokenMatrix k = (e_tokens * weights.attn_wk).rowwise() + weights.attn_bk.transpose();
    TokenMatrix logits = q * k.transpose() / std::sqrt(static_cast<double>(d));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double row_max = logits.row(r).maxCoeff();
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            logits(r, c) = std::exp(logits(r, c) - row_max);
        }
        logits.row(r) /= logits.row(r).sum();
    }
    return logits;
}

TokenMatrix cross_attention(const TokenMatrix& z_tokens, const TokenMatrix& e_tokens,
                            const ToyWeights& weights) {
    const TokenMatrix a = attention_weights(z_tokens, e_tokens, weights);
    return a * (e_tokens * weights.attn_wv);
}

TokenMatrix cross_attention_grad(const TokenMatrix& z_tokens, const TokenMatrix& e_tokens,
                                 const ToyWeights& weights, const TokenMatrix& upstream) {
    if (upstream.rows() != z_tokens.rows() || upstream.cols() != weights.config.embed_dim) {
        throw ValidationError("upstream gradient shape mismatch");
    }
    const int d = weights.config.embed_dim;
    const TokenMatrix k = (e_tokens * weights.attn_wk).rowwise() + weights.attn_bk.transpose();
    const TokenMatrix v = e_tokens * weights.attn_wv;
    const TokenMatrix a = attention_weights(z_tokens, e_tokens, weights);

    // Backprop through out = A V and A = softmax(S), S = Q K^T / sqrt(d).
    const TokenMatrix grad_a = upstream * v.transpose();
    TokenMatrix grad_s = a.cwiseProduct(grad_a);
    const Eigen::VectorXd row_dot = grad_s.rowwise().sum();
    grad_s = a.cwiseProduct(grad_a.colwise() - row_dot);
    const TokenMatrix grad_q = grad_s * k / std::sqrt(static_cast<double>(d));
    return grad_q * weights.attn_wq.transpose();
}

LatentTensor reference_concat(const LatentTensor& f0, const RefFeatures& refs,
                              const ToyWeights& weights) {
    refs.validate();
    const int k_refs = refs.count();
    for (const LatentTensor& f : refs.features) {
        if (f.batch != f0.batch || f.height != f0.height || f.width != f0.width ||
            f.channels != f0.channels) {
            throw ValidationError("reference features must match f0's (b, h, w, c)");
        }
    }
    if (f0.channels != weights.config.ref_channels) {
        throw ValidationError("f0 channels must match the configured reducer width");
    }
    const Conv2d& reducer = k_refs == 7 ? weights.ref_reducer7 : weights.ref_reducer8;

    const int slots = k_refs + 1;
    LatentTensor out = LatentTensor::zeros(f0.batch, f0.time, f0.height, f0.width, f0.channels);
    for (int b = 0; b < f0.batch; ++b) {
        for (int t = 0; t < f0.time; ++t) {
            // Interleaved width concatenation: stride cell x holds
            // [ref_1[x], ..., ref_K[x], f0[x]].
            ImageTensor wide = ImageTensor::zeros(f0.height, slots * f0.width, f0.channels);
            for (int y = 0; y < f0.height; ++y) {
                for (int x = 0; x < f0.width; ++x) {
                    for (int c = 0; c < f0.channels; ++c) {
                        for (int s = 0; s < k_refs; ++s) {
                            wide.at(y, x * slots + s, c) =
                                refs.features[static_cast<std::size_t>(s)].at(b, 0, y, x, c);
                        }
                        wide.at(y, x * slots + k_refs, c) = f0.at(b, t, y, x, c);
                    }
                }
            }
            const ImageTensor reduced = reducer.apply(wide);
            for (int y = 0; y < f0.height; ++y) {
                for (int x = 0; x < f0.width; ++x) {
                    for (int c = 0; c < f0.channels; ++c) {
                        out.at(b, t, y, x, c) = reduced.at(y, x, c);
                    }
                }
            }
        }
    }
    return out;
}

Conv2d make_identity_ref_reducer(int ref_count, int channels) {
    Conv2d conv;
    conv.in_channels = channels;
    conv.out_channels = channels;
    conv.kernel_h = 1;
    conv.kernel_w = ref_count + 1;
    conv.stride_h = 1;
    conv.stride_w = ref_count + 1;
    conv.pad_h = 0;
    conv.pad_w = 0;
    conv.weight.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(channels) *
                       static_cast<std::size_t>(ref_count + 1), 0.0);
    conv.bias.assign(static_cast<std::size_t>(channels), 0.0);
    for (int c = 0; c < channels; ++c) conv.w(c, c, 0, ref_count) = 1.0;
    return conv;
}

TokenMatrix geometry_embedding(const std::vector<RenderTarget>& motion_normals,
                               const PointCloud& points, const ToyWeights& weights) {
    if (points.points.size() != static_cast<std::size_t>(kDefaultPointCount)) {
        throw ValidationError("geometry embedding expects a 2048-point cloud");
    }
    const int d = weights.config.embed_dim;
    const Activation act = weights.config.activation;

    std::vector<TokenMatrix> frame_tokens;
    Eigen::Index rows = 0;
    for (const RenderTarget& rt : motion_normals) {
        ImageTensor img = ImageTensor::zeros(rt.height, rt.width, 3);
        for (std::size_t i = 0; i < rt.normal_map.size(); ++i) {
            img.data[i] = static_cast<double>(rt.normal_map[i]);
        }
        frame_tokens.push_back(tokens_from_patches(img, weights.geo_patch, weights.geo_mlp1,
                                                   weights.geo_mlp2, act));
        rows += frame_tokens.back().rows();
    }

    // Shared per-point MLP, coordinate-wise max over the cloud, then the
    // post-pool MLP. The max makes the token exactly permutation-invariant.
    Eigen::VectorXd pooled = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
    for (const Vec3& p : points.points) {
        Eigen::RowVectorXd h = p.transpose() * weights.point_mlp1.weight +
                               weights.point_mlp1.bias.transpose();
        for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = activate(h[i], act);
        h = h * weights.point_mlp2.weight + weights.point_mlp2.bias.transpose();
        for (Eigen::Index i = 0; i < d; ++i) pooled[i] = std::max(pooled[i], h[i]);
    }
    Eigen::RowVectorXd point_token = pooled.transpose() * weights.point_out1.weight +
                                     weights.point_out1.bias.transpose();
    for (Eigen::Index i = 0; i < point_token.size(); ++i) {
        point_token[i] = activate(point_token[i], act);
    }
    point_token = point_token * weights.point_out2.weight + weights.point_out2.bias.transpose();

    TokenMatrix tokens(rows + 1, d);
    Eigen::Index row = 0;
    for (const TokenMatrix& ft : frame_tokens) {
        tokens.middleRows(row, ft.rows()) = ft;
        row += ft.rows();
    }
    tokens.row(row) = point_token;
    return tokens;
}

}  // namespace mlo
