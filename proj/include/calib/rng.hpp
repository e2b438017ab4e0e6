#pragma once

#include <cmath>
#include <cstdint>

namespace calib {

// Counter-based deterministic generator (splitmix64 core). Streams derived
// from (seed, counter) produce the same values whether draws run serially
// or are dispatched in parallel.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix_(seed + kGamma)) {}

    static Rng derive(std::uint64_t seed, std::uint64_t counter) {
        return Rng(mix_(seed ^ mix_(counter + kGamma)));
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix_(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection sampling, bias-free and platform-independent.
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    /// Standard normal via Box-Muller (second value cached).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix_(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace calib
