#pragma once

#include <cstdint>
#include <random>

#include "gibbsrate/linalg.hpp"

namespace gibbsrate {

/**
 * Seeded random stream. The engine is std::mt19937_64 seeded through
 * std::seed_seq{seed_lo, seed_hi, stream_lo, stream_hi}; both are fully
 * specified by the standard, and the variate transforms below are written
 * out explicitly, so a (seed, stream) pair yields the same draws everywhere.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    /// Standard normal (Marsaglia polar method, spare value cached).
    double normal();
    Vector normals(Index n);
    /// Gamma(shape, scale=1), Marsaglia-Tsang.
    double gamma(double shape);
    /// Inverse-gamma with density ∝ x^{-shape-1} exp(-scale/x).
    double inverse_gamma(double shape, double scale);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gibbsrate
