#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gibbsrate/gaussian.hpp"
#include "gibbsrate/models.hpp"
#include "gibbsrate/rng.hpp"
#include "gibbsrate/trace.hpp"

namespace gibbsrate {

enum class InitPolicy { Zero, Prior, Given };

struct SamplerConfig {
    int iterations = 0;  // total sweeps, burn-in included
    int burn_in = 1000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    int thinning = 1;
    InitPolicy init = InitPolicy::Zero;
    Vector initial_state;  // used with InitPolicy::Given

    void validate() const;
    /// Number of rows a chain with this configuration records.
    [[nodiscard]] Index recorded_rows() const;
};

/**
 * One systematic scan over a fixed block order. Every kernel draws its
 * normals block by block in scan order, so two kernels with the same
 * conditionals consume the stream identically.
 */
class SweepKernel {
public:
    virtual ~SweepKernel() = default;

    [[nodiscard]] virtual Index dim() const = 0;
    [[nodiscard]] virtual const std::vector<Block>& layout() const = 0;
    [[nodiscard]] virtual std::string descriptor() const = 0;
    virtual void sweep(Vector& state, Rng& rng) const = 0;
    /// A draw from the prior for initialisation; empty when the kernel has none.
    virtual std::optional<Vector> prior_state(Rng& rng) const;
};

class GenericScanKernel final : public SweepKernel {
public:
    GenericScanKernel(const BlockedGaussian& target, std::vector<std::string> order);

    [[nodiscard]] Index dim() const override { return dim_; }
    [[nodiscard]] const std::vector<Block>& layout() const override { return layout_; }
    [[nodiscard]] std::string descriptor() const override;
    void sweep(Vector& state, Rng& rng) const override;

private:
    Index dim_;
    std::vector<Block> layout_;
    std::vector<std::string> order_;
    std::vector<AffineUpdate> updates_;
};

/// GS(0) / GS(1) for the vector two-level model: μ, then a_1..a_I (or α_i).
class TwoLevelKernel final : public SweepKernel {
public:
    TwoLevelKernel(const TwoLevelVectorSpec& spec, const Dataset& data);

    [[nodiscard]] Index dim() const override { return dim_; }
    [[nodiscard]] const std::vector<Block>& layout() const override { return layout_; }
    [[nodiscard]] std::string descriptor() const override;
    void sweep(Vector& state, Rng& rng) const override;
    std::optional<Vector> prior_state(Rng& rng) const override;

private:
    TwoLevelVectorSpec spec_;
    Index ell_;
    Index dim_;
    std::vector<Block> layout_;
    Vector grand_mean_;
    Matrix group_means_;  // I x ℓ
    Matrix mu_chol_;
    Matrix group_cov_;     // (Σa⁻¹ + JΣe⁻¹)⁻¹
    Matrix group_chol_;
    Matrix data_gain_;     // (Σa⁻¹ + JΣe⁻¹)⁻¹ JΣe⁻¹
    Matrix prior_gain_;    // (Σa⁻¹ + JΣe⁻¹)⁻¹ Σa⁻¹
    Matrix prior_chol_;
};

/// Regression sampler: β | a, then every a_i | β.
class RegressionKernel final : public SweepKernel {
public:
    RegressionKernel(const MixedEffectsSpec& spec, const Dataset& data);

    [[nodiscard]] Index dim() const override { return dim_; }
    [[nodiscard]] const std::vector<Block>& layout() const override { return layout_; }
    [[nodiscard]] std::string descriptor() const override { return "gs_regression"; }
    void sweep(Vector& state, Rng& rng) const override;
    std::optional<Vector> prior_state(Rng& rng) const override;

private:
    MixedEffectsSpec spec_;
    Index dim_;
    std::vector<Block> layout_;
    Vector y_;           // (i, j) row order
    Matrix xbar_;
    Matrix beta_cov_;
    Matrix beta_chol_;
    double a_precision_;
};

/// Scalar partially centered two-level sampler: μ | a, then a_i | μ.
class PartialTwoLevelKernel final : public SweepKernel {
public:
    PartialTwoLevelKernel(const PartialTwoLevelSpec& spec, const Dataset& data);

    [[nodiscard]] Index dim() const override { return dim_; }
    [[nodiscard]] const std::vector<Block>& layout() const override { return layout_; }
    [[nodiscard]] std::string descriptor() const override;
    void sweep(Vector& state, Rng& rng) const override;
    std::optional<Vector> prior_state(Rng& rng) const override;

private:
    PartialTwoLevelSpec spec_;
    Index dim_;
    std::vector<Block> layout_;
    double ybar_;
    Vector group_means_;
    double q_mu_;
    double q_cross_;
    double q_a_;
};

/// Three-level GS(A,B,C): μ, then a_i, then b_ij.
class ThreeLevelKernel final : public SweepKernel {
public:
    ThreeLevelKernel(const ThreeLevelSpec& spec, const Dataset& data);

    [[nodiscard]] Index dim() const override { return dim_; }
    [[nodiscard]] const std::vector<Block>& layout() const override { return layout_; }
    [[nodiscard]] std::string descriptor() const override;
    void sweep(Vector& state, Rng& rng) const override;
    std::optional<Vector> prior_state(Rng& rng) const override;

private:
    ThreeLevelSpec spec_;
    Index dim_;
    std::vector<Block> layout_;
    Vector cell_sums_;  // Σ_k y_ijk, row-major (i, j)
    double h_mu_;
    Vector h_a_;
    double q_mu_, q_a_, q_b_;
    double q_mu_a_, q_mu_b_, q_a_b_;
};

ChainTrace run_chain(const SweepKernel& kernel, const SamplerConfig& cfg, const std::string& model = {});

ChainTrace run_gs0(const TwoLevelVectorSpec& spec, const Dataset& data, const SamplerConfig& cfg);
ChainTrace run_gs1(const TwoLevelVectorSpec& spec, const Dataset& data, const SamplerConfig& cfg);
ChainTrace run_gs_regression(const MixedEffectsSpec& spec, const Dataset& data, const SamplerConfig& cfg);
ChainTrace run_gs_partial2(const PartialTwoLevelSpec& spec, const Dataset& data, const SamplerConfig& cfg);
ChainTrace run_gs_abc(const ThreeLevelSpec& spec, const Dataset& data, const SamplerConfig& cfg);
/// Prior initialisation is rejected: a bare target carries no prior.
ChainTrace run_generic(const BlockedGaussian& target, const std::vector<std::string>& order,
                       const SamplerConfig& cfg);

struct InverseGammaPrior {
    double shape = 0.01;
    double scale = 0.01;
};

struct VariancePriors {
    InverseGammaPrior group{};     // σa²
    InverseGammaPrior residual{};  // σe²
};

struct AdaptiveDecision {
    int iteration = 0;  // 1-based sweep index
    double sigma2_a = 0.0;
    double sigma2_e = 0.0;
    double rho_noncentered = 0.0;
    double rho_centered = 0.0;
    Parameterization choice = Parameterization::NonCentered;
};

struct AdaptiveRun {
    ChainTrace trace;  // blocks "mu", "a", "sigma2_a", "sigma2_e" (non-centered coordinates)
    std::vector<AdaptiveDecision> decisions;  // one per sweep, burn-in included
};

/**
 * Scalar two-level model with unknown variances. Each sweep draws σe² and
 * σa² from their inverse-gamma conditionals, evaluates both location rates
 * at the drawn values, and performs one (μ, a) sweep in the faster
 * parameterization. Requires data with arity 2 and one response column.
 */
AdaptiveRun run_adaptive_unknown_variance(const Dataset& data, const VariancePriors& priors,
                                          const SamplerConfig& cfg);

}  // namespace gibbsrate
