#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mlo/cond_embed.hpp"
#include "mlo/rng.hpp"
#include "support/oracles.hpp"

using namespace mlo;

namespace {

ToyConfig identity_config() {
    ToyConfig cfg;
    cfg.activation = Activation::Identity;
    return cfg;
}

ImageTensor random_image(int h, int w, int c, std::uint64_t seed) {
    ImageTensor img = ImageTensor::zeros(h, w, c);
    SeededRng rng(seed);
    for (double& v : img.data) v = rng.uniform(-1.0, 1.0);
    return img;
}

LatentTensor random_latent(int b, int t, int h, int w, int c, std::uint64_t seed) {
    LatentTensor z = LatentTensor::zeros(b, t, h, w, c);
    SeededRng rng(seed);
    for (double& v : z.data) v = rng.uniform(-1.0, 1.0);
    return z;
}

TokenMatrix random_tokens(int rows, int cols, std::uint64_t seed) {
    TokenMatrix m(rows, cols);
    SeededRng rng(seed);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

ToyWeights zero_guider_weights(std::uint64_t seed) {
    ToyWeights w = make_toy_weights(seed);
    for (Conv2d* conv : {&w.guider_convs[0], &w.guider_convs[1], &w.guider_convs[2],
                         &w.guider_convs[3], &w.skeleton_convs[0], &w.skeleton_convs[1],
                         &w.skeleton_convs[2], &w.skeleton_convs[3]}) {
        std::fill(conv->weight.begin(), conv->weight.end(), 0.0);
        std::fill(conv->bias.begin(), conv->bias.end(), 0.0);
    }
    return w;
}

}  // namespace

TEST_CASE("toy weights are bit-reproducible per seed") {
    const ToyWeights a = make_toy_weights(42);
    const ToyWeights b = make_toy_weights(42);
    CHECK(a.guider_convs[0].weight == b.guider_convs[0].weight);
    CHECK(a.guider_convs[3].weight == b.guider_convs[3].weight);
    CHECK(a.mlo_patch.weight == b.mlo_patch.weight);
    CHECK(a.attn_wq == b.attn_wq);
    CHECK(a.attn_wv == b.attn_wv);
    CHECK(a.ref_reducer8.weight == b.ref_reducer8.weight);

    const ToyWeights c = make_toy_weights(43);
    CHECK(a.guider_convs[0].weight != c.guider_convs[0].weight);
}

TEST_CASE("pose_guider: zero weights leave the latent untouched") {
    const ToyWeights w = zero_guider_weights(1);
    const ImageTensor mlo = random_image(64, 64, kMloChannelCount, 2);
    const LatentTensor z = random_latent(1, 2, 8, 8, w.config.latent_channels, 3);
    const LatentTensor out = pose_guider(mlo, w, z);
    CHECK(out.data == z.data);
}

TEST_CASE("pose_guider: stride plan downsamples by exactly 8") {
    const ToyWeights w = make_toy_weights(5);
    const ImageTensor mlo = random_image(128, 64, kMloChannelCount, 6);
    const LatentTensor z = LatentTensor::zeros(1, 1, 16, 8, w.config.latent_channels);
    CHECK_NOTHROW(pose_guider(mlo, w, z));

    const LatentTensor wrong = LatentTensor::zeros(1, 1, 15, 8, w.config.latent_channels);
    CHECK_THROWS_AS(pose_guider(mlo, w, wrong), ValidationError);
    const ImageTensor bad_channels = random_image(64, 64, 7, 7);
    CHECK_THROWS_AS(pose_guider(bad_channels, w, z), ValidationError);
}

TEST_CASE("pose_guider: linear in its input with identity activations") {
    const ToyWeights w = make_toy_weights(11, identity_config());
    const ImageTensor h = random_image(64, 64, kMloChannelCount, 12);
    ImageTensor h2 = h;
    const double a = 2.75;
    for (double& v : h2.data) v *= a;

    const LatentTensor zero = LatentTensor::zeros(1, 1, 8, 8, w.config.latent_channels);
    const LatentTensor g1 = pose_guider(h, w, zero);
    const LatentTensor g2 = pose_guider(h2, w, zero);
    for (std::size_t i = 0; i < g1.data.size(); ++i) {
        CHECK(g2.data[i] == doctest::Approx(a * g1.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("skeleton_guider: residual identity and additivity with the pose guider") {
    const ToyWeights wz = zero_guider_weights(7);
    const ImageTensor skel = random_image(64, 64, wz.config.skeleton_channels, 8);
    const LatentTensor z = random_latent(1, 1, 8, 8, wz.config.latent_channels, 9);
    CHECK(skeleton_guider(skel, wz, z).data == z.data);

    const ToyWeights w = make_toy_weights(10);
    const ImageTensor mlo = random_image(64, 64, kMloChannelCount, 11);
    const LatentTensor both = skeleton_guider(skel, w, pose_guider(mlo, w, z));

    const LatentTensor zeros = LatentTensor::zeros(1, 1, 8, 8, w.config.latent_channels);
    const LatentTensor g = pose_guider(mlo, w, zeros);
    const LatentTensor g1 = skeleton_guider(skel, w, zeros);
    for (std::size_t i = 0; i < both.data.size(); ++i) {
        CHECK(both.data[i] ==
              doctest::Approx(z.data[i] + g.data[i] + g1.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("mlo_embedding: token grid arithmetic and zero propagation") {
    const ToyWeights w = make_toy_weights(13);
    const ImageTensor img = random_image(64, 96, kMloChannelCount, 14);
    const TokenMatrix tokens = mlo_embedding(img, w);
    CHECK(tokens.rows() == (64 / 16) * (96 / 16));
    CHECK(tokens.cols() == w.config.embed_dim);

    const ImageTensor zeros = ImageTensor::zeros(64, 96, kMloChannelCount);
    const TokenMatrix zt = mlo_embedding(zeros, w);
    CHECK(zt.cwiseAbs().maxCoeff() == 0.0);

    const ImageTensor odd = random_image(60, 60, kMloChannelCount, 15);
    CHECK_THROWS_AS(mlo_embedding(odd, w), ValidationError);
}

TEST_CASE("mlo_embedding: pixel changes stay inside their stride cell") {
    const ToyWeights w = make_toy_weights(17);
    ImageTensor img = random_image(64, 64, kMloChannelCount, 18);
    const TokenMatrix base = mlo_embedding(img, w);

    // Swap two pixels within the stride cell at grid (1, 2).
    const int cy = 1, cx = 2;
    for (int c = 0; c < img.channels; ++c) {
        std::swap(img.at(16 * cy + 3, 16 * cx + 5, c), img.at(16 * cy + 9, 16 * cx + 12, c));
    }
    const TokenMatrix moved = mlo_embedding(img, w);
    REQUIRE(moved.rows() == base.rows());
    const int token_row = cy * 4 + cx;
    bool changed = false;
    for (Eigen::Index r = 0; r < base.rows(); ++r) {
        const double diff = (moved.row(r) - base.row(r)).cwiseAbs().maxCoeff();
        if (r == token_row) {
            changed = diff > 0.0;
        } else {
            CHECK(diff == 0.0);
        }
    }
    CHECK(changed);
}

TEST_CASE("mlo_embedding: 512x512 input yields 1024 tokens") {
    const ToyWeights w = make_toy_weights(19);
    const ImageTensor img = ImageTensor::zeros(512, 512, kMloChannelCount);
    const TokenMatrix tokens = mlo_embedding(img, w);
    CHECK(tokens.rows() == 1024);
    CHECK(tokens.cols() == w.config.embed_dim);
}

TEST_CASE("cross_attention: single key broadcasts its value row") {
    const ToyWeights w = make_toy_weights(21);
    const TokenMatrix z = random_tokens(5, w.config.embed_dim, 22);
    const TokenMatrix e = random_tokens(1, w.config.embed_dim, 23);
    const TokenMatrix out = cross_attention(z, e, w);
    const Eigen::RowVectorXd v = e * w.attn_wv;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        CHECK((out.row(r) - v).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("cross_attention: identical keys average the values") {
    const ToyWeights w = make_toy_weights(25);
    const TokenMatrix z = random_tokens(3, w.config.embed_dim, 26);
    TokenMatrix e = random_tokens(4, w.config.embed_dim, 27);

    // Same key projection for every row but distinct values: counterfeit by
    // making e rows equal, then perturbing W^V input through... instead build
    // keys directly: all e rows identical gives both identical keys and
    // identical values, so use distinct rows whose key projections coincide by
    // zeroing W^K.
    ToyWeights wk0 = w;
    wk0.attn_wk.setZero();
    const TokenMatrix out = cross_attention(z, e, wk0);
    const Eigen::RowVectorXd mean_v = (e * wk0.attn_wv).colwise().mean();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        CHECK((out.row(r) - mean_v).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("cross_attention: matches the independent dense oracle") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const ToyWeights w = make_toy_weights(seed);
        const TokenMatrix z = random_tokens(4, w.config.embed_dim, seed * 31 + 1);
        const TokenMatrix e = random_tokens(6, w.config.embed_dim, seed * 31 + 2);
        const TokenMatrix out = cross_attention(z, e, w);
        const TokenMatrix expected =
            oracles::dense_attention(z, e, w.attn_wq, w.attn_wk, w.attn_wv, w.attn_bk);
        CHECK((out - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("attention rows are stochastic and shift-invariant") {
    const ToyWeights w = make_toy_weights(33);
    const TokenMatrix z = random_tokens(7, w.config.embed_dim, 34);
    const TokenMatrix e = random_tokens(9, w.config.embed_dim, 35);
    const TokenMatrix a = attention_weights(z, e, w);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        CHECK(std::abs(a.row(r).sum() - 1.0) <= 1e-12);
        CHECK(a.row(r).minCoeff() >= 0.0);
    }

    // A key-projection bias adds a per-query constant to each logit row, which
    // softmax ignores.
    ToyWeights shifted = w;
    SeededRng rng(36);
    for (Eigen::Index i = 0; i < shifted.attn_bk.size(); ++i) {
        shifted.attn_bk[i] = rng.uniform(-3.0, 3.0);
    }
    const TokenMatrix out = cross_attention(z, e, w);
    const TokenMatrix out_shifted = cross_attention(z, e, shifted);
    CHECK((out - out_shifted).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("cross_attention_grad: zero upstream gives a zero gradient") {
    const ToyWeights w = make_toy_weights(37);
    const TokenMatrix z = random_tokens(3, w.config.embed_dim, 38);
    const TokenMatrix e = random_tokens(5, w.config.embed_dim, 39);
    const TokenMatrix up = TokenMatrix::Zero(3, w.config.embed_dim);
    CHECK(cross_attention_grad(z, e, w, up).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cross_attention_grad: the 1x1 case is exactly zero") {
    // With a single key the attention weight is the constant 1, so the output
    // equals V and does not depend on the query tokens at all.
    const ToyWeights w = make_toy_weights(41);
    const TokenMatrix z = random_tokens(1, w.config.embed_dim, 42);
    const TokenMatrix e = random_tokens(1, w.config.embed_dim, 43);
    const TokenMatrix up = random_tokens(1, w.config.embed_dim, 44);
    CHECK(cross_attention_grad(z, e, w, up).cwiseAbs().maxCoeff() == 0.0);

    const TokenMatrix out_a = cross_attention(z, e, w);
    TokenMatrix z2 = z;
    z2.array() += 0.5;
    const TokenMatrix out_b = cross_attention(z2, e, w);
    CHECK((out_a - out_b).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("cross_attention_grad matches central finite differences") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ToyWeights w = make_toy_weights(seed);
        TokenMatrix z = random_tokens(3, w.config.embed_dim, seed * 97 + 5);
        const TokenMatrix e = random_tokens(5, w.config.embed_dim, seed * 97 + 6);
        const TokenMatrix up = random_tokens(3, w.config.embed_dim, seed * 97 + 7);

        const TokenMatrix analytic = cross_attention_grad(z, e, w, up);
        TokenMatrix fd(z.rows(), z.cols());
        const double h = 1e-5;
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            for (Eigen::Index c = 0; c < z.cols(); ++c) {
                const double saved = z(r, c);
                z(r, c) = saved + h;
                const double hi = cross_attention(z, e, w).cwiseProduct(up).sum();
                z(r, c) = saved - h;
                const double lo = cross_attention(z, e, w).cwiseProduct(up).sum();
                z(r, c) = saved;
                fd(r, c) = (hi - lo) / (2.0 * h);
            }
        }
        const double rel = (analytic - fd).norm() / std::max(analytic.norm(), 1e-300);
        CHECK(rel < 1e-6);
    }
}

TEST_CASE("reference_concat: shape contract and K validation") {
    const ToyWeights w = make_toy_weights(51);
    const int c = w.config.ref_channels;
    const LatentTensor f0 = random_latent(2, 4, 8, 16, c, 52);

    RefFeatures refs;
    for (int k = 0; k < 7; ++k) refs.features.push_back(random_latent(2, 1, 8, 16, c, 60 + k));
    const LatentTensor out = reference_concat(f0, refs, w);
    CHECK(out.same_shape(f0));

    refs.features.push_back(random_latent(2, 1, 8, 16, c, 70));  // K = 8 accepted
    CHECK(reference_concat(f0, refs, w).same_shape(f0));

    RefFeatures six;
    for (int k = 0; k < 6; ++k) six.features.push_back(random_latent(2, 1, 8, 16, c, 80 + k));
    CHECK_THROWS_AS(reference_concat(f0, six, w), ValidationError);

    RefFeatures mismatched = refs;
    mismatched.features[0] = random_latent(2, 1, 8, 15, c, 90);
    CHECK_THROWS_AS(reference_concat(f0, mismatched, w), ValidationError);
}

TEST_CASE("reference_concat: the identity reducer returns f0 exactly") {
    for (int k_refs : {7, 8}) {
        ToyWeights w = make_toy_weights(53);
        const int c = w.config.ref_channels;
        Conv2d identity = make_identity_ref_reducer(k_refs, c);
        if (k_refs == 7) {
            w.ref_reducer7 = identity;
        } else {
            w.ref_reducer8 = identity;
        }
        const LatentTensor f0 = random_latent(1, 3, 4, 8, c, 54);
        RefFeatures refs;
        for (int k = 0; k < k_refs; ++k) {
            refs.features.push_back(random_latent(1, 1, 4, 8, c, 100 + static_cast<std::uint64_t>(k)));
        }
        const LatentTensor out = reference_concat(f0, refs, w);
        CHECK(out.data == f0.data);
    }
}

TEST_CASE("geometry_embedding: permutation-invariant point token, zero propagation") {
    const ToyWeights w = make_toy_weights(55);

    PointCloud cloud;
    SeededRng rng(56);
    for (int i = 0; i < 2048; ++i) {
        cloud.points.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
        cloud.source_face.push_back(0);
        cloud.barycentric.push_back(Vec3(1, 0, 0));
    }

    RenderTarget frame = RenderTarget::empty(64, 64);
    std::vector<RenderTarget> frames = {frame};
    const TokenMatrix base = geometry_embedding(frames, cloud, w);
    CHECK(base.rows() == 16 + 1);
    CHECK(base.cols() == w.config.embed_dim);

    PointCloud shuffled = cloud;
    SeededRng shuffle_rng(57);
    for (int i = 2047; i > 0; --i) {
        std::swap(shuffled.points[static_cast<std::size_t>(i)],
                  shuffled.points[static_cast<std::size_t>(shuffle_rng.uniform_int(i + 1))]);
    }
    const TokenMatrix permuted = geometry_embedding(frames, shuffled, w);
    CHECK((base.row(16) - permuted.row(16)).cwiseAbs().maxCoeff() == 0.0);

    PointCloud zeros;
    zeros.points.assign(2048, Vec3::Zero());
    zeros.source_face.assign(2048, 0);
    zeros.barycentric.assign(2048, Vec3(1, 0, 0));
    const TokenMatrix zt = geometry_embedding(frames, zeros, w);
    CHECK(zt.cwiseAbs().maxCoeff() == 0.0);  // zero frame + zero points, zero biases

    PointCloud small;
    small.points.assign(100, Vec3::Zero());
    CHECK_THROWS_AS(geometry_embedding(frames, small, w), ValidationError);
}

TEST_CASE("geometry_embedding: 512x512 frame yields 1024 + 1 tokens") {
    const ToyWeights w = make_toy_weights(59);
    PointCloud cloud;
    cloud.points.assign(2048, Vec3(0.1, 0.2, 0.3));
    cloud.source_face.assign(2048, 0);
    cloud.barycentric.assign(2048, Vec3(1, 0, 0));
    std::vector<RenderTarget> frames = {RenderTarget::empty(512, 512)};
    const TokenMatrix tokens = geometry_embedding(frames, cloud, w);
    CHECK(tokens.rows() == 1024 + 1);
}
