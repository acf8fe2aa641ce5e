#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gibbsrate/linalg.hpp"
#include "gibbsrate/models.hpp"

namespace gibbsrate {

struct EmpiricalRate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::string method;
};

struct RateReport {
    std::optional<double> analytic_rate;  // empty when only a numeric rate exists
    double oracle_rate = 0.0;
    std::optional<EmpiricalRate> empirical;
    std::optional<std::string> recommendation;
    std::vector<std::pair<std::string, double>> details;  // named auxiliary quantities, in insertion order
    std::vector<std::string> notes;

    [[nodiscard]] std::optional<double> abs_diff() const {
        if (!analytic_rate) return std::nullopt;
        return std::abs(*analytic_rate - oracle_rate);
    }
};

enum class ParamKind { NonCentered, Centered, Partial, Partial3, ComponentWise };

std::string_view to_string(ParamKind kind) noexcept;

struct ParamChoice {
    ParamKind kind = ParamKind::NonCentered;
    double rho_noncentered = 0.0;
    double rho_centered = 0.0;
    /// Per-component centering indicator (true = centered); only for diagonal Σa, Σe.
    std::optional<std::vector<bool>> component_wise;
    /// Largest per-component rate achieved by the component-wise choice.
    std::optional<double> component_wise_rate;
};

/// ‖(JΣe⁻¹)^{1/2}(Σa⁻¹+JΣe⁻¹)^{-1/2}‖₂².
double rate_noncentered(const SymPD& sigma_a, const SymPD& sigma_e, int J);
/// ‖(Σa⁻¹)^{1/2}(Σa⁻¹+JΣe⁻¹)^{-1/2}‖₂².
double rate_centered(const SymPD& sigma_a, const SymPD& sigma_e, int J);

/// J²σe⁻⁴/(σa⁻²+Jσe⁻²) · ‖(X̄ᵀX̄)^{1/2}(Σ0⁻¹+ΣX_ijX_ijᵀσe⁻²)^{-1/2}‖₂².
double rate_mixed_effects(const MixedEffectsSpec& spec);

/**
 * Rate of the partially centered two-level sampler:
 * (Aσa⁻² − (1−A)Jσe⁻²)² / ((σa⁻² + Jσe⁻²)(A²σa⁻² + (1−A)²Jσe⁻²)).
 * The factor J in the last term is what makes A=0 and A=1 reproduce the
 * non-centered and centered rates.
 */
double rate_partial_two_level(double sigma2_a, double sigma2_e, int J, double A);

/// A* = Jσe⁻²/(σa⁻² + Jσe⁻²): μ and ā are independent a posteriori and the sampler is exact.
double optimal_A(double sigma2_a, double sigma2_e, int J);

struct ThreeLevelCoefficients {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
};

/**
 * Coefficients that make the (μ, ā, b̄) posterior precision diagonal:
 * B* = τe/(τb+τe), A* = τbτe/S, C* = τaτe/S with S = τaτb + τaτe + τbτe.
 * Throws DegenerateCondition for non-positive precisions or when S is
 * negligible relative to max(τ)² (floating-point underflow).
 */
ThreeLevelCoefficients optimal_ABC(double tau_a, double tau_b, double tau_e);

struct PairwiseCorrelations {
    double r1 = 0.0;  // (μ, ā)
    double r2 = 0.0;  // (μ, b̄)
    double r3 = 0.0;  // (ā, b̄)
};

/// Partial correlations -Q_ij/√(Q_ii Q_jj) of the (μ, ā, b̄) posterior, in closed form.
PairwiseCorrelations pairwise_correlations_s3(double tau_a, double tau_b, double tau_e, double A, double B,
                                              double C);

/// Numeric rate: l2_rate_oracle on posterior_bar_s3 with scan μ → ā → b̄.
double rate_s3(const ThreeLevelSpec& spec);

ParamChoice choose_parametrization(const SymPD& sigma_a, const SymPD& sigma_e, int J);

struct InvarianceReport {
    double original = 0.0;
    double scaled = 0.0;
    double rotated = 0.0;
    double scale_diff = 0.0;
    double rotation_diff = 0.0;
    bool holds = false;
};

/// Compares the mixed-effects rate with (rΣ0, rσa², rσe²) and with (RΣ0Rᵀ, R X_ij).
InvarianceReport invariance_checks(const MixedEffectsSpec& spec, double r, const Matrix& R);

}  // namespace gibbsrate
