#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gibbsrate/linalg.hpp"
#include "gibbsrate/rng.hpp"

namespace gibbsrate {

struct Block {
    std::string name;
    Index start = 0;
    Index size = 0;
};

/// Checks that blocks are contiguous, in order, and cover [0, dim).
void validate_layout(const std::vector<Block>& blocks, Index dim);

/**
 * Joint Gaussian target in (mean, precision) form with a named, contiguous
 * block layout. Posteriors arrive naturally in precision form; the covariance
 * is computed on demand.
 */
class BlockedGaussian {
public:
    BlockedGaussian(Vector mean, SymPD precision, std::vector<Block> blocks);

    /// Builds the target from Q and the linear term h of exp(-xᵀQx/2 + hᵀx).
    static BlockedGaussian from_canonical(const Vector& linear, SymPD precision, std::vector<Block> blocks);

    [[nodiscard]] const Vector& mean() const noexcept { return mean_; }
    [[nodiscard]] const SymPD& precision() const noexcept { return precision_; }
    [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] Index dim() const noexcept { return mean_.size(); }
    [[nodiscard]] Matrix covariance() const;
    [[nodiscard]] const Block& block(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> block_names() const;

    /// Law of T x for a full-row-rank map T (k x dim) with the given block layout.
    [[nodiscard]] BlockedGaussian linear_marginal(const Matrix& map, std::vector<Block> blocks) const;

private:
    Vector mean_;
    SymPD precision_;
    std::vector<Block> blocks_;
};

/**
 * Conditional law of one block given the rest:
 * x_b | x_rest ~ N(offset + gain * x_rest, noise_cov), where x_rest lists the
 * complement coordinates in increasing index order.
 */
struct AffineUpdate {
    Block target;
    Matrix gain;
    Vector offset;
    Matrix noise_cov;
    Matrix noise_chol;  // lower Cholesky factor of noise_cov

    /// Conditional mean evaluated at a full state vector.
    [[nodiscard]] Vector conditional_mean(const Vector& state) const;
    /// Draws the block in place using |block| standard normals from `rng`.
    void apply(Vector& state, Rng& rng) const;
};

AffineUpdate conditional_update(const BlockedGaussian& target, std::string_view block);

/// Deterministic part of one systematic scan over `order` (a dim x dim matrix acting on centered states).
Matrix scan_operator(const BlockedGaussian& target, const std::vector<std::string>& order);

/// L² convergence rate of the systematic-scan Gibbs sampler: spectral radius of scan_operator.
double l2_rate_oracle(const BlockedGaussian& target, const std::vector<std::string>& order);

/// Squared spectral norm of S11^{-1/2} S12 S22^{-1/2}; checks the assembled covariance is PD.
double two_block_rate(const SymPD& s11, const Matrix& s12, const SymPD& s22);

/// Two-block rate for a target with exactly two blocks.
double two_block_rate(const BlockedGaussian& target);

/// Exact draws via the Cholesky factor of the covariance.
class ExactSampler {
public:
    explicit ExactSampler(const BlockedGaussian& target);
    Vector draw(Rng& rng) const;

private:
    Vector mean_;
    Matrix chol_;
};

Vector exact_sample(const BlockedGaussian& target, Rng& rng);

/// Precision of z = F x for invertible F: F^{-T} Q F^{-1}.
Matrix transformed_precision(const SymPD& precision, const Matrix& frame);

}  // namespace gibbsrate
