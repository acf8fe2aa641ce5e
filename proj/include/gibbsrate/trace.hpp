#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gibbsrate/gaussian.hpp"

namespace gibbsrate {

/// Post-burn-in sampler states, one row per retained sweep.
struct ChainTrace {
    Matrix states;  // T x dim
    std::vector<Block> layout;
    std::uint64_t seed = 0;
    int burn_in = 0;
    int thinning = 1;
    std::string model;

    [[nodiscard]] Index length() const noexcept { return states.rows(); }
    [[nodiscard]] Index dim() const noexcept { return states.cols(); }
};

}  // namespace gibbsrate
