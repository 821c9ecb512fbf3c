#pragma once

// Test-side oracles, independent of the library implementations they check.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

#include "mlo/geometry.hpp"

namespace oracles {

// Regularized upper incomplete gamma Q(a, x) by series / continued fraction
// (Numerical Recipes style). Used for chi-square survival probabilities.
inline double gammq(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammq domain");
    auto gser = [&](double aa, double xx) {
        double ap = aa;
        double sum = 1.0 / aa;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= xx / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-xx + aa * std::log(xx) - std::lgamma(aa));
    };
    auto gcf = [&](double aa, double xx) {
        const double tiny = 1e-300;
        double b = xx + 1.0 - aa;
        double c = 1.0 / tiny;
        double d = 1.0 / b;
        double h = d;
        for (int i = 1; i <= 500; ++i) {
            const double an = -i * (i - aa);
            b += 2.0;
            d = an * d + b;
            if (std::abs(d) < tiny) d = tiny;
            c = b + an / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < 1e-15) break;
        }
        return std::exp(-xx + aa * std::log(xx) - std::lgamma(aa)) * h;
    };
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gser(a, x);
    return gcf(a, x);
}

// Survival function of the chi-square distribution with df degrees of freedom.
inline double chi_square_sf(double statistic, int df) {
    return gammq(0.5 * df, 0.5 * statistic);
}

// Dense softmax attention, written independently of the library path: plain
// exponentials, no max subtraction, explicit loops.
inline Eigen::MatrixXd dense_attention(const Eigen::MatrixXd& z, const Eigen::MatrixXd& e,
                                       const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk,
                                       const Eigen::MatrixXd& wv, const Eigen::VectorXd& bk) {
    const Eigen::MatrixXd q = z * wq;
    Eigen::MatrixXd k = e * wk;
    for (Eigen::Index r = 0; r < k.rows(); ++r) k.row(r) += bk.transpose();
    const Eigen::MatrixXd v = e * wv;
    const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(z.rows(), v.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        std::vector<double> weights(static_cast<std::size_t>(k.rows()));
        double total = 0.0;
        for (Eigen::Index j = 0; j < k.rows(); ++j) {
            double dot = 0.0;
            for (Eigen::Index c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
            weights[static_cast<std::size_t>(j)] = std::exp(dot * scale);
            total += weights[static_cast<std::size_t>(j)];
        }
        for (Eigen::Index j = 0; j < k.rows(); ++j) {
            for (Eigen::Index c = 0; c < v.cols(); ++c) {
                out(i, c) += weights[static_cast<std::size_t>(j)] / total * v(j, c);
            }
        }
    }
    return out;
}

// Icosphere with the given subdivision level, centered at the origin.
inline mlo::TriMesh icosphere(int subdivisions, double radius = 1.0) {
    using mlo::Vec3;
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };
    for (Vec3& v : verts) v.normalize();

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized();
            verts.push_back(m);
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    mlo::TriMesh mesh;
    for (const Vec3& v : verts) mesh.vertices.push_back(v * radius);
    mesh.faces = faces;
    return mesh;
}

inline mlo::TriMesh cube_mesh(double half = 0.5, const mlo::Vec3& center = mlo::Vec3::Zero()) {
    mlo::TriMesh mesh;
    for (int i = 0; i < 8; ++i) {
        mesh.vertices.push_back(center + half * mlo::Vec3((i & 1) ? 1 : -1, (i & 2) ? 1 : -1,
                                                          (i & 4) ? 1 : -1));
    }
    // Outward winding per face.
    mesh.faces = {
        {0, 2, 3}, {0, 3, 1},  // z = -1
        {4, 5, 7}, {4, 7, 6},  // z = +1
        {0, 1, 5}, {0, 5, 4},  // y = -1
        {2, 6, 7}, {2, 7, 3},  // y = +1
        {0, 4, 6}, {0, 6, 2},  // x = -1
        {1, 3, 7}, {1, 7, 5},  // x = +1
    };
    return mesh;
}

// FNV-1a over a file's bytes; good enough to compare reruns for equality.
inline std::uint64_t file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_hash: cannot open " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (in.eof()) break;
    }
    return h;
}

// Deterministic recursive directory hash (sorted relative paths).
inline std::uint64_t dir_hash(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& f : files) {
        const std::string rel = std::filesystem::relative(f, dir).string();
        for (char c : rel) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        h ^= file_hash(f);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace oracles
