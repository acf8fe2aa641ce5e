#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gibbsrate/linalg.hpp"
#include "gibbsrate/models.hpp"
#include "gibbsrate/trace.hpp"

namespace gibbsrate {

/// P = (X̄ᵀX̄)^{-1/2} X̄ᵀ (p x I) and an orthonormal complement L ((I-p) x I).
struct OrthoPair {
    Matrix P;
    Matrix L;
};

OrthoPair build_PL(const Matrix& xbar);

/**
 * Factorisation cross = B1ᵀ diag(q) B2 of a p1 x p2 cross-product, with
 * orthogonal completions A1 (p1 x p1) and A2 (p2 x p2) whose leading r rows
 * are B1 and B2.
 */
struct CrossSVD {
    Matrix B1;  // r x p1
    Matrix B2;  // r x p2
    Vector q;   // r singular values
    Index r = 0;
    OrthoMatrix A1;
    OrthoMatrix A2;
};

CrossSVD factor_cross(const Matrix& cross, double rel_tol = 1e-10);

/// Factorises X1 X2ᵀ.
CrossSVD cross_svd(const Matrix& X1, const Matrix& X2, double rel_tol = 1e-10);

struct ConditionCheck {
    bool holds = true;
    double max_violation = 0.0;
};

/**
 * Largest normalised inner product between a leading column (k1 < r) and a
 * trailing column (k2 >= r) of Xᵀ Aᵀ. Zero-norm columns contribute nothing.
 */
ConditionCheck check_orthogonality_condition(const Matrix& X, const OrthoMatrix& A, Index r,
                                             double tol = 1e-8);

/// Same check on X2ᵀ A2ᵀ, with A2 from the factorisation of Mᵀ.
ConditionCheck check_centering_condition(const Matrix& X2, const OrthoMatrix& A2, Index r,
                                         double tol = 1e-8);

/// Least-squares M (p2 x p1) with X1ᵀ = X2ᵀ M; throws NoSuchM when the residual exceeds tol·‖X1‖_F.
Matrix solve_M(const Matrix& X1, const Matrix& X2, double tol = 1e-10);

/// Named linear functionals of a chain state. Stacked in order they form an invertible square map.
class FunctionalFrame {
public:
    FunctionalFrame() = default;
    explicit FunctionalFrame(std::vector<std::pair<std::string, Matrix>> maps);

    [[nodiscard]] const std::vector<std::pair<std::string, Matrix>>& maps() const noexcept { return maps_; }
    [[nodiscard]] const Matrix& map(std::string_view name) const;
    [[nodiscard]] Matrix stacked() const;
    [[nodiscard]] Index state_dim() const noexcept { return state_dim_; }
    /// Row offset of a family inside stacked().
    [[nodiscard]] Index offset(std::string_view name) const;

private:
    std::vector<std::pair<std::string, Matrix>> maps_;
    Index state_dim_ = 0;
};

FunctionalFrame identity_frame(Index dim);
FunctionalFrame frame_for(const TwoLevelVectorSpec& spec);
FunctionalFrame frame_for(const MixedEffectsSpec& spec);
FunctionalFrame frame_for(const GeneralLMSpec& spec, double rel_tol = 1e-10);
FunctionalFrame frame_for(const PartialTwoLevelSpec& spec);
FunctionalFrame frame_for(const ThreeLevelSpec& spec);

/// Per-family time series (T x k) of the functionals.
std::map<std::string, Matrix> frame_apply(const FunctionalFrame& frame, const Matrix& states);
std::map<std::string, Matrix> frame_apply(const FunctionalFrame& frame, const ChainTrace& trace);

/// Max |entry| of the cross-block between two families in the frame-transformed precision.
double frame_cross_block(const FunctionalFrame& frame, const SymPD& precision, std::string_view first,
                         std::string_view second);

/// Max over all pairs of distinct non-empty families.
double frame_max_cross_block(const FunctionalFrame& frame, const SymPD& precision);

}  // namespace gibbsrate
