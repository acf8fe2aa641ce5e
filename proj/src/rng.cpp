#include "gibbsrate/rng.hpp"

#include <cmath>

namespace gibbsrate {

namespace {

std::seed_seq make_seq(std::uint64_t seed, std::uint64_t stream) {
    return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    auto seq = make_seq(seed, stream);
    engine_.seed(seq);
}

double Rng::uniform() {
    for (;;) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double x = 0.0;
    double y = 0.0;
    double s = 0.0;
    do {
        x = 2.0 * uniform() - 1.0;
        y = 2.0 * uniform() - 1.0;
        s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * f;
    has_spare_ = true;
    return x * f;
}

Vector Rng::normals(Index n) {
    Vector z(n);
    for (Index k = 0; k < n; ++k) z(k) = normal();
    return z;
}

double Rng::gamma(double shape) {
    if (shape < 1.0) {
        // Boost: G(a) = G(a+1) * U^{1/a}
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::inverse_gamma(double shape, double scale) { return scale / gamma(shape); }

}  // namespace gibbsrate
