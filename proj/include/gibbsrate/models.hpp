#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gibbsrate/gaussian.hpp"
#include "gibbsrate/linalg.hpp"
#include "gibbsrate/rng.hpp"

namespace gibbsrate {

enum class Parameterization { NonCentered, Centered };

std::string_view to_string(Parameterization p) noexcept;

/// Vector two-level model y_ij = μ + a_i + ε_ij (or its centered form α_i = μ + a_i).
struct TwoLevelVectorSpec {
    int I = 0;
    int J = 0;
    SymPD sigma_a;
    SymPD sigma_e;
    Parameterization param = Parameterization::NonCentered;

    [[nodiscard]] Index ell() const noexcept { return sigma_a.dim(); }
    void validate() const;
};

/// y_ij = X_ijᵀβ + a_i + ε_ij with a_i ~ N(0, σa²), β ~ N(0, Σ0) (flat when sigma0 is empty).
struct MixedEffectsSpec {
    int I = 0;
    int J = 0;
    int p = 0;
    Matrix X;  // (I*J) x p; row i*J + j holds X_ijᵀ
    std::optional<SymPD> sigma0;
    double sigma2_a = 1.0;
    double sigma2_e = 1.0;

    [[nodiscard]] Matrix xbar() const;             // I x p group means of the covariates
    [[nodiscard]] Matrix prior_precision() const;  // Σ0⁻¹, or zero for the flat prior
    [[nodiscard]] Matrix beta_precision() const;   // Σ0⁻¹ + Σ X_ij X_ijᵀ / σe²
    void validate() const;                         // includes rank(X̄) = p
};

/// Three-level partially centered model with coefficients (A, B, C).
struct ThreeLevelSpec {
    int I = 0;
    int J = 0;
    int K = 0;
    double sigma2_a = 1.0;
    double sigma2_b = 1.0;
    double sigma2_e = 1.0;
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;

    void validate() const;
};

/// Scalar two-level partially centered model. Any real A is accepted; 0 ≤ A ≤ 1 is the usual range.
struct PartialTwoLevelSpec {
    int I = 0;
    int J = 0;
    double sigma2_a = 1.0;
    double sigma2_e = 1.0;
    double A = 0.0;

    void validate() const;
};

/// y = X1ᵀβ1 + X2ᵀβ2 + ε with N(0, 1/τ) priors. A zero prior precision means a flat prior.
struct GeneralLMSpec {
    Matrix X1;  // p1 x n
    Matrix X2;  // p2 x n
    double tau1 = 1.0;
    double tau2 = 1.0;
    double tau_e = 1.0;
    Parameterization param = Parameterization::NonCentered;
    std::optional<Matrix> M;  // p2 x p1 with X1ᵀ = X2ᵀ M (centered variant)

    [[nodiscard]] Index n() const noexcept { return X1.cols(); }
    [[nodiscard]] Index p1() const noexcept { return X1.rows(); }
    [[nodiscard]] Index p2() const noexcept { return X2.rows(); }
    void validate() const;
};

struct SuffStats {
    Vector grand_mean;  // ℓ
    Matrix group_means;  // one row per first index i
    Matrix cell_means;   // one row per (i, j), row i*J + j; empty for arity < 3
};

/**
 * Observations with an explicit index map. Indices are 0-based internally
 * (the CSV format is 1-based). Sufficient statistics are cached at
 * construction.
 */
class Dataset {
public:
    using Key = std::array<int, 3>;

    Dataset(int arity, std::vector<Key> index, Matrix y);

    [[nodiscard]] int arity() const noexcept { return arity_; }
    [[nodiscard]] const std::vector<Key>& index() const noexcept { return index_; }
    [[nodiscard]] const Matrix& y() const noexcept { return y_; }
    [[nodiscard]] Index size() const noexcept { return y_.rows(); }
    [[nodiscard]] Index ell() const noexcept { return y_.cols(); }
    [[nodiscard]] const SuffStats& stats() const noexcept { return stats_; }

    /// Parameter values used to generate the data (empty for loaded data).
    std::map<std::string, Vector> truth;

    /// Throws DimMismatch unless every index tuple in [0,extent) appears exactly once.
    void require_balanced(const std::vector<int>& extent, Index ell) const;

private:
    int arity_;
    std::vector<Key> index_;
    Matrix y_;
    SuffStats stats_;
};

/// Named parameter blocks to hold fixed during synthesis ("mu", "beta", "beta1", "a", ...).
using FixedParams = std::map<std::string, Vector>;

Dataset synthesize(const TwoLevelVectorSpec& spec, Rng& rng, const FixedParams& fixed = {});
Dataset synthesize(const MixedEffectsSpec& spec, Rng& rng, const FixedParams& fixed = {});
Dataset synthesize(const ThreeLevelSpec& spec, Rng& rng, const FixedParams& fixed = {});
Dataset synthesize(const PartialTwoLevelSpec& spec, Rng& rng, const FixedParams& fixed = {});
Dataset synthesize(const GeneralLMSpec& spec, Rng& rng, const FixedParams& fixed = {});

/// Full posterior over (μ, a_1..a_I); blocks "mu", "a1".."aI" ("alpha1".. when centered).
BlockedGaussian posterior_s2m(const TwoLevelVectorSpec& spec, const Dataset& data);
/// Posterior of (μ, ā) (or (μ, ᾱ)); blocks "mu", "abar".
BlockedGaussian posterior_bar_s2m(const TwoLevelVectorSpec& spec, const Dataset& data);
/// Posterior over (β, a); blocks "beta", "a".
BlockedGaussian posterior_sr(const MixedEffectsSpec& spec, const Dataset& data);
/// Posterior over (β1, β2); blocks "beta1", "beta2". Centered variant needs M (solved when absent).
BlockedGaussian posterior_lm(const GeneralLMSpec& spec, const Dataset& data);
/// Posterior over (μ, a); blocks "mu", "a".
BlockedGaussian posterior_partial2(const PartialTwoLevelSpec& spec, const Dataset& data);
/// Posterior of (μ, ā); blocks "mu", "abar".
BlockedGaussian posterior_bar_partial2(const PartialTwoLevelSpec& spec, const Dataset& data);
/// Posterior over (μ, a, b); blocks "mu", "a", "b" with b ordered (i, j) row-major.
BlockedGaussian posterior_s3(const ThreeLevelSpec& spec, const Dataset& data);
/// Marginal of (μ, ā, b̄) from posterior_s3; blocks "mu", "abar", "bbar".
BlockedGaussian posterior_bar_s3(const ThreeLevelSpec& spec, const Dataset& data);

struct RescaledPrecisions {
    double tau_a = 0.0;  // I / σa²
    double tau_b = 0.0;  // IJ / σb²
    double tau_e = 0.0;  // IJK / σe²
};

RescaledPrecisions rescaled_precisions(const ThreeLevelSpec& spec);

/// Kronecker encoding of the scalar two-level design: X1 = 1ᵀ (1 x IJ), X2 = (I_I ⊗ 1_J)ᵀ (I x IJ).
GeneralLMSpec two_level_linear_model(int I, int J, double sigma2_a, double sigma2_e,
                                     Parameterization param);

}  // namespace gibbsrate
