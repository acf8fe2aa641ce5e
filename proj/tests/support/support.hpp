#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "gibbsrate/gaussian.hpp"
#include "gibbsrate/linalg.hpp"
#include "gibbsrate/models.hpp"
#include "gibbsrate/rng.hpp"

namespace support {

using gibbsrate::Index;
using gibbsrate::Matrix;
using gibbsrate::Rng;
using gibbsrate::Vector;

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline int uniform_int(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(std::floor(rng.uniform() * (hi - lo + 1)));
}

inline double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

inline Matrix gaussian_matrix(Rng& rng, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
}

/// Well-conditioned SPD matrix: G Gᵀ / n + shift · I with a random scale.
inline Matrix random_spd(Rng& rng, Index n, double shift = 0.2) {
    const Matrix g = gaussian_matrix(rng, n, n);
    const double scale = log_uniform(rng, 0.2, 5.0);
    Matrix s = scale * (g * g.transpose() / static_cast<double>(n) + shift * Matrix::Identity(n, n));
    return 0.5 * (s + s.transpose());
}

inline Matrix random_orthogonal(Rng& rng, Index n) {
    const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, n, n));
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index k = 0; k < n; ++k)
        if (r(k, k) < 0) q.col(k) *= -1.0;
    return q;
}

/**
 * Posterior of θ built term by term from the model's defining equations:
 * each term says C θ ~ N(target, Σ), as an observation or a prior statement,
 * and contributes Cᵀ Σ⁻¹ C to the precision and Cᵀ Σ⁻¹ target to the
 * linear part.
 */
class LinearGaussianOracle {
public:
    explicit LinearGaussianOracle(Index dim) : q_(Matrix::Zero(dim, dim)), h_(Vector::Zero(dim)) {}

    void add(const Matrix& coef, const Vector& target, const Matrix& cov) {
        const Matrix w = cov.inverse();
        q_ += coef.transpose() * w * coef;
        h_ += coef.transpose() * w * target;
    }

    void add_scalar(const Vector& coef_row, double target, double variance) {
        add(coef_row.transpose(), Vector::Constant(1, target), Matrix::Constant(1, 1, variance));
    }

    [[nodiscard]] const Matrix& precision() const { return q_; }
    [[nodiscard]] Vector mean() const { return q_.ldlt().solve(h_); }

private:
    Matrix q_;
    Vector h_;
};

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Joint Gaussian with the given covariance and block sizes, in precision form.
inline gibbsrate::BlockedGaussian target_from_covariance(const Matrix& cov, const std::vector<Index>& sizes) {
    std::vector<gibbsrate::Block> blocks;
    Index at = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        blocks.push_back({"b" + std::to_string(k), at, sizes[k]});
        at += sizes[k];
    }
    Matrix q = cov.inverse();
    q = 0.5 * (q + q.transpose());
    return gibbsrate::BlockedGaussian(Vector::Zero(cov.rows()), gibbsrate::SymPD(q), blocks);
}

/// Sample mean with a batch-means standard error (50 batches).
struct MeanEstimate {
    double mean;
    double se;
};

inline MeanEstimate batch_mean(const Vector& x, int batches = 50) {
    const Index b = x.size() / batches;
    Vector means(batches);
    for (int k = 0; k < batches; ++k) means(k) = x.segment(k * b, b).mean();
    const double m = means.mean();
    const double var = (means.array() - m).square().sum() / (batches - 1);
    return {x.mean(), std::sqrt(var / batches)};
}

inline double sample_variance(const Vector& x) {
    return (x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1);
}

}  // namespace support
