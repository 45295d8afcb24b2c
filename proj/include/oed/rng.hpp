#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace oed {

/// Seeded random stream with fully specified output.
///
/// std::mt19937_64 is pinned by the standard, but the standard library
/// distributions are not; this wrapper derives uniform/normal/index draws
/// by fixed algorithms so the same seed gives the same stream everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1), 53 bits of randomness.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in (lo, hi].
    double uniform(double lo, double hi) { return hi - (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t uniform_index(std::uint64_t bound) {
        // 2^64 mod bound, computed in unsigned arithmetic
        const std::uint64_t threshold = (0 - bound) % bound;
        std::uint64_t x = gen_();
        while (x < threshold) x = gen_();
        return x % bound;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace oed
