#pragma once

#include <cstdint>
#include <random>

namespace hybrid_id {

/// Seeded random stream. Uniform draws are built from raw 64-bit output so
/// they do not depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // [lo, hi]; the result is clamped so rounding never leaves the interval.
    double uniform(double lo, double hi) {
        const double x = lo + (hi - lo) * uniform01();
        return x < lo ? lo : (x > hi ? hi : x);
    }

    double normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(engine_); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Seed for run `index` of a batch seeded with `master` (splitmix64 finalizer).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace hybrid_id
