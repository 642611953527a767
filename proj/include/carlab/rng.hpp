#pragma once

#include <cstdint>
#include <random>

namespace carlab {

/// Deterministic RNG wrapper. Draws are produced from raw mt19937_64 words
/// rather than std distributions, so a (seed, draw-sequence) pair maps to the
/// same doubles on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform in [-1, 1).
    double symmetric() { return 2.0 * uniform() - 1.0; }

    std::uint64_t next_word() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace carlab
