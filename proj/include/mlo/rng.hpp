#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mlo {

// Deterministic random source. mt19937_64 has a standard-mandated stream, and
// every draw below is derived without std::*_distribution, whose output is
// implementation-defined. Same seed, same platform-independent sequence.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be small enough that the double
    // mantissa resolves it exactly (n < 2^53), which holds everywhere here.
    int uniform_int(int n) {
        int v = static_cast<int>(static_cast<double>(n) * uniform());
        return v < n ? v : n - 1;
    }

    // Standard normal via Box-Muller, spare value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mlo
