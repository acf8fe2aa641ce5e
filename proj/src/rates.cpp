#include "gibbsrate/rates.hpp"

#include <algorithm>
#include <cmath>

#include "gibbsrate/error.hpp"
#include "gibbsrate/gaussian.hpp"

namespace gibbsrate {

std::string_view to_string(ParamKind kind) noexcept {
    switch (kind) {
        case ParamKind::NonCentered: return "noncentered";
        case ParamKind::Centered: return "centered";
        case ParamKind::Partial: return "partial";
        case ParamKind::Partial3: return "partial3";
        case ParamKind::ComponentWise: return "componentwise";
    }
    return "unknown";
}

namespace {

void check_pair(const SymPD& sigma_a, const SymPD& sigma_e, int J) {
    if (sigma_a.dim() != sigma_e.dim()) throw Error(ErrorKind::DimMismatch, "Σa and Σe dimensions differ");
    if (J < 1) throw Error(ErrorKind::InvalidSpec, "J must be >= 1");
}

double squared_norm(const Matrix& m) {
    const double s = spectral_norm(m);
    return s * s;
}

}  // namespace

double rate_noncentered(const SymPD& sigma_a, const SymPD& sigma_e, int J) {
    check_pair(sigma_a, sigma_e, J);
    const Matrix data_prec = J * sigma_e.inverse();
    const SymPD total(sigma_a.inverse() + data_prec);
    const Matrix m = sym_sqrt_pair(SymPD(data_prec)).root.matrix() * sym_sqrt_pair(total).inverse_root.matrix();
    return squared_norm(m);
}

double rate_centered(const SymPD& sigma_a, const SymPD& sigma_e, int J) {
    check_pair(sigma_a, sigma_e, J);
    const Matrix prior_prec = sigma_a.inverse();
    const SymPD total(prior_prec + J * sigma_e.inverse());
    const Matrix m = sym_sqrt_pair(SymPD(prior_prec)).root.matrix() * sym_sqrt_pair(total).inverse_root.matrix();
    return squared_norm(m);
}

double rate_mixed_effects(const MixedEffectsSpec& spec) {
    spec.validate();
    const double ie = 1.0 / spec.sigma2_e;
    const double J = spec.J;
    const Matrix xbar = spec.xbar();
    const SymPD gram(xbar.transpose() * xbar);
    const SymPD beta_prec(spec.beta_precision());
    const Matrix m = sym_sqrt_pair(gram).root.matrix() * sym_sqrt_pair(beta_prec).inverse_root.matrix();
    return J * J * ie * ie / (1.0 / spec.sigma2_a + J * ie) * squared_norm(m);
}

double rate_partial_two_level(double sigma2_a, double sigma2_e, int J, double A) {
    if (!(sigma2_a > 0.0 && sigma2_e > 0.0)) throw Error(ErrorKind::InvalidSpec, "variances must be positive");
    const double ia = 1.0 / sigma2_a;
    const double je = J / sigma2_e;
    const double denom = (ia + je) * (A * A * ia + (1.0 - A) * (1.0 - A) * je);
    if (!(denom > 0.0)) throw Error(ErrorKind::DegenerateDenominator, "partial-centering denominator vanishes");
    const double num = A * ia - (1.0 - A) * je;
    return num * num / denom;
}

double optimal_A(double sigma2_a, double sigma2_e, int J) {
    if (!(sigma2_a > 0.0 && sigma2_e > 0.0)) throw Error(ErrorKind::InvalidSpec, "variances must be positive");
    const double ia = 1.0 / sigma2_a;
    const double je = J / sigma2_e;
    return je / (ia + je);
}

ThreeLevelCoefficients optimal_ABC(double tau_a, double tau_b, double tau_e) {
    const bool valid = std::isfinite(tau_a) && std::isfinite(tau_b) && std::isfinite(tau_e) && tau_a > 0.0 &&
                       tau_b > 0.0 && tau_e > 0.0;
    if (!valid) throw Error(ErrorKind::DegenerateCondition, "rescaled precisions must be positive and finite");
    const double scale = std::max({tau_a, tau_b, tau_e});
    const double s = tau_a * tau_b + tau_a * tau_e + tau_b * tau_e;
    if (!(s > 1e-12 * scale * scale)) {
        throw Error(ErrorKind::DegenerateCondition, "τaτb + τaτe + τbτe is numerically zero");
    }
    return {tau_b * tau_e / s, tau_e / (tau_b + tau_e), tau_a * tau_e / s};
}

PairwiseCorrelations pairwise_correlations_s3(double tau_a, double tau_b, double tau_e, double A, double B,
                                              double C) {
    if (!(tau_a > 0.0 && tau_b > 0.0 && tau_e > 0.0)) {
        throw Error(ErrorKind::InvalidSpec, "rescaled precisions must be positive");
    }
    const double u = 1.0 - A - C;
    const double v = 1.0 - B;
    const double q_mu = C * C * tau_b + A * A * tau_a + u * u * tau_e;
    const double q_a = B * B * tau_b + tau_a + v * v * tau_e;
    const double q_b = tau_b + tau_e;
    if (!(q_mu > 0.0 && q_a > 0.0 && q_b > 0.0)) {
        throw Error(ErrorKind::DegenerateMarginal, "a diagonal precision entry vanishes");
    }
    PairwiseCorrelations r;
    r.r1 = (A * tau_a - B * C * tau_b - u * v * tau_e) / (std::sqrt(q_mu) * std::sqrt(q_a));
    r.r2 = (C * tau_b - u * tau_e) / (std::sqrt(q_mu) * std::sqrt(q_b));
    r.r3 = (B * tau_b - v * tau_e) / (std::sqrt(q_b) * std::sqrt(q_a));
    return r;
}

double rate_s3(const ThreeLevelSpec& spec) {
    spec.validate();
    // The (μ, ā, b̄) precision depends on the data only through its linear term.
    const Dataset zeros(3,
                        [&] {
                            std::vector<Dataset::Key> idx;
                            for (int i = 0; i < spec.I; ++i)
                                for (int j = 0; j < spec.J; ++j)
                                    for (int k = 0; k < spec.K; ++k) idx.push_back({i, j, k});
                            return idx;
                        }(),
                        Matrix::Zero(static_cast<Index>(spec.I) * spec.J * spec.K, 1));
    return l2_rate_oracle(posterior_bar_s3(spec, zeros), {"mu", "abar", "bbar"});
}

ParamChoice choose_parametrization(const SymPD& sigma_a, const SymPD& sigma_e, int J) {
    ParamChoice out;
    out.rho_noncentered = rate_noncentered(sigma_a, sigma_e, J);
    out.rho_centered = rate_centered(sigma_a, sigma_e, J);
    out.kind = out.rho_noncentered <= out.rho_centered ? ParamKind::NonCentered : ParamKind::Centered;
    if (sigma_a.is_diagonal() && sigma_e.is_diagonal()) {
        std::vector<bool> centered;
        double worst = 0.0;
        for (Index c = 0; c < sigma_a.dim(); ++c) {
            const double ta = 1.0 / sigma_a.matrix()(c, c);
            const double te = J / sigma_e.matrix()(c, c);
            const double r0 = te / (ta + te);
            const double r1 = ta / (ta + te);
            centered.push_back(r1 < r0);
            worst = std::max(worst, std::min(r0, r1));
        }
        out.component_wise = std::move(centered);
        out.component_wise_rate = worst;
    }
    return out;
}

InvarianceReport invariance_checks(const MixedEffectsSpec& spec, double r, const Matrix& R) {
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidSpec, "scale factor must be positive");
    if (R.rows() != spec.p || R.cols() != spec.p) throw Error(ErrorKind::DimMismatch, "R must be p x p");
    const OrthoMatrix rot(R);  // throws NotOrthogonal

    InvarianceReport out;
    out.original = rate_mixed_effects(spec);

    MixedEffectsSpec scaled = spec;
    scaled.sigma2_a *= r;
    scaled.sigma2_e *= r;
    if (spec.sigma0) scaled.sigma0 = SymPD(r * spec.sigma0->matrix());
    out.scaled = rate_mixed_effects(scaled);

    MixedEffectsSpec rotated = spec;
    rotated.X = spec.X * rot.matrix().transpose();
    if (spec.sigma0) rotated.sigma0 = SymPD(rot.matrix() * spec.sigma0->matrix() * rot.matrix().transpose());
    out.rotated = rate_mixed_effects(rotated);

    out.scale_diff = std::abs(out.original - out.scaled);
    out.rotation_diff = std::abs(out.original - out.rotated);
    out.holds = out.scale_diff <= 1e-10 && out.rotation_diff <= 1e-10;
    return out;
}

}  // namespace gibbsrate
