#include "gibbsrate/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>

#include "gibbsrate/error.hpp"

namespace gibbsrate {

namespace {

Matrix lower_chol(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "covariance is not positive definite");
    return llt.matrixL();
}

std::vector<Block> make_layout(std::initializer_list<std::pair<std::string, Index>> parts) {
    std::vector<Block> out;
    Index start = 0;
    for (const auto& [name, size] : parts) {
        out.push_back({name, start, size});
        start += size;
    }
    return out;
}

Vector response_in_cell_order(const Dataset& data, int J) {
    Vector y(data.size());
    for (Index r = 0; r < data.size(); ++r) y(data.index()[r][0] * J + data.index()[r][1]) = data.y()(r, 0);
    return y;
}

Vector initial_state(const SweepKernel& kernel, const SamplerConfig& cfg, Rng& rng) {
    switch (cfg.init) {
        case InitPolicy::Zero: return Vector::Zero(kernel.dim());
        case InitPolicy::Given:
            if (cfg.initial_state.size() != kernel.dim()) {
                throw Error(ErrorKind::DimMismatch, "initial state has the wrong dimension");
            }
            return cfg.initial_state;
        case InitPolicy::Prior:
            if (auto s = kernel.prior_state(rng)) return *s;
            throw Error(ErrorKind::InvalidConfig, "prior initialisation is unavailable for " + kernel.descriptor());
    }
    return Vector::Zero(kernel.dim());
}

template <typename Step>
Matrix record(Index dim, const SamplerConfig& cfg, Vector& state, Step&& step) {
    Matrix rows(cfg.recorded_rows(), dim);
    Index next = 0;
    for (int s = 1; s <= cfg.iterations; ++s) {
        step(s, state);
        if (s > cfg.burn_in && (s - cfg.burn_in - 1) % cfg.thinning == 0) rows.row(next++) = state.transpose();
    }
    return rows;
}

}  // namespace

void SamplerConfig::validate() const {
    if (iterations < 1) throw Error(ErrorKind::InvalidConfig, "iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations) throw Error(ErrorKind::InvalidConfig, "burn_in must lie in [0, iterations)");
    if (thinning < 1) throw Error(ErrorKind::InvalidConfig, "thinning must be >= 1");
}

Index SamplerConfig::recorded_rows() const { return (iterations - burn_in + thinning - 1) / thinning; }

std::optional<Vector> SweepKernel::prior_state(Rng&) const { return std::nullopt; }

// ---------------------------------------------------------------------------

GenericScanKernel::GenericScanKernel(const BlockedGaussian& target, std::vector<std::string> order)
    : dim_(target.dim()), layout_(target.blocks()), order_(std::move(order)) {
    const std::set<std::string> seen(order_.begin(), order_.end());
    if (seen.size() != order_.size() || order_.size() != layout_.size()) {
        throw Error(ErrorKind::UnknownBlock, "scan order must list every block exactly once");
    }
    for (const auto& name : order_) updates_.push_back(conditional_update(target, name));
}

std::string GenericScanKernel::descriptor() const {
    std::string out = "generic";
    for (const auto& name : order_) out += (out.size() == 7 ? ":" : ",") + name;
    return out;
}

void GenericScanKernel::sweep(Vector& state, Rng& rng) const {
    for (const auto& up : updates_) up.apply(state, rng);
}

// ---------------------------------------------------------------------------

TwoLevelKernel::TwoLevelKernel(const TwoLevelVectorSpec& spec, const Dataset& data)
    : spec_(spec), ell_(spec.ell()), dim_(spec.ell() * (spec.I + 1)) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, ell_);
    const bool centered = spec.param == Parameterization::Centered;
    layout_.push_back({"mu", 0, ell_});
    for (int i = 0; i < spec.I; ++i) {
        layout_.push_back({(centered ? "alpha" : "a") + std::to_string(i + 1), ell_ * (i + 1), ell_});
    }
    grand_mean_ = data.stats().grand_mean;
    group_means_ = data.stats().group_means;
    const Matrix prior_prec = spec.sigma_a.inverse();
    const Matrix data_prec = spec.J * spec.sigma_e.inverse();
    group_cov_ = SymPD(prior_prec + data_prec).inverse();
    group_chol_ = lower_chol(group_cov_);
    data_gain_ = group_cov_ * data_prec;
    prior_gain_ = group_cov_ * prior_prec;
    const Matrix mu_cov = centered ? Matrix(spec.sigma_a.matrix() / spec.I)
                                   : Matrix(spec.sigma_e.matrix() / (static_cast<double>(spec.I) * spec.J));
    mu_chol_ = lower_chol(mu_cov);
    prior_chol_ = lower_chol(spec.sigma_a.matrix());
}

std::string TwoLevelKernel::descriptor() const {
    return spec_.param == Parameterization::Centered ? "gs1" : "gs0";
}

void TwoLevelKernel::sweep(Vector& state, Rng& rng) const {
    const int I = spec_.I;
    Vector group_sum = Vector::Zero(ell_);
    for (int i = 0; i < I; ++i) group_sum += state.segment(ell_ * (i + 1), ell_);
    const Vector group_avg = group_sum / I;
    if (spec_.param == Parameterization::Centered) {
        // μ | α ~ N(ᾱ, Σa/I); α_i | μ ~ N(P⁻¹(Σa⁻¹μ + JΣe⁻¹ȳ_i), P⁻¹)
        state.head(ell_) = group_avg + mu_chol_ * rng.normals(ell_);
        const Vector pulled = prior_gain_ * state.head(ell_);
        for (int i = 0; i < I; ++i) {
            state.segment(ell_ * (i + 1), ell_) =
                pulled + data_gain_ * group_means_.row(i).transpose() + group_chol_ * rng.normals(ell_);
        }
    } else {
        // μ | a ~ N(ȳ - ā, Σe/IJ); a_i | μ ~ N(P⁻¹JΣe⁻¹(ȳ_i - μ), P⁻¹)
        state.head(ell_) = grand_mean_ - group_avg + mu_chol_ * rng.normals(ell_);
        const Vector mu = state.head(ell_);
        for (int i = 0; i < I; ++i) {
            state.segment(ell_ * (i + 1), ell_) =
                data_gain_ * (group_means_.row(i).transpose() - mu) + group_chol_ * rng.normals(ell_);
        }
    }
}

std::optional<Vector> TwoLevelKernel::prior_state(Rng& rng) const {
    // μ has a flat prior and starts at zero; α_i = μ + a_i shares the draw.
    Vector s = Vector::Zero(dim_);
    for (int i = 0; i < spec_.I; ++i) s.segment(ell_ * (i + 1), ell_) = prior_chol_ * rng.normals(ell_);
    return s;
}

// ---------------------------------------------------------------------------

RegressionKernel::RegressionKernel(const MixedEffectsSpec& spec, const Dataset& data)
    : spec_(spec), dim_(spec.p + spec.I) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, 1);
    layout_ = make_layout({{"beta", spec.p}, {"a", spec.I}});
    y_ = response_in_cell_order(data, spec.J);
    xbar_ = spec.xbar();
    beta_cov_ = SymPD(spec.beta_precision()).inverse();
    beta_chol_ = lower_chol(beta_cov_);
    a_precision_ = 1.0 / spec.sigma2_a + spec.J / spec.sigma2_e;
}

void RegressionKernel::sweep(Vector& state, Rng& rng) const {
    const Index p = spec_.p;
    const int I = spec_.I;
    const int J = spec_.J;
    const double ie = 1.0 / spec_.sigma2_e;
    // β | a ~ N(Q⁻¹ Xᵀ(y - a)/σe², Q⁻¹)
    Vector resid = y_;
    for (int i = 0; i < I; ++i) resid.segment(static_cast<Index>(i) * J, J).array() -= state(p + i);
    state.head(p) = beta_cov_ * (ie * spec_.X.transpose() * resid) + beta_chol_ * rng.normals(p);
    // a_i | β ~ N((J/σe²)(ȳ_i - X̄_iβ)/P, 1/P)
    const Vector fitted = xbar_ * state.head(p);
    const double sd = 1.0 / std::sqrt(a_precision_);
    const Vector z = rng.normals(I);
    for (int i = 0; i < I; ++i) {
        const double ybar_i = y_.segment(static_cast<Index>(i) * J, J).mean();
        state(p + i) = J * ie * (ybar_i - fitted(i)) / a_precision_ + sd * z(i);
    }
}

std::optional<Vector> RegressionKernel::prior_state(Rng& rng) const {
    Vector s = Vector::Zero(dim_);
    if (spec_.sigma0) s.head(spec_.p) = lower_chol(spec_.sigma0->matrix()) * rng.normals(spec_.p);
    s.tail(spec_.I) = std::sqrt(spec_.sigma2_a) * rng.normals(spec_.I);
    return s;
}

// ---------------------------------------------------------------------------

PartialTwoLevelKernel::PartialTwoLevelKernel(const PartialTwoLevelSpec& spec, const Dataset& data)
    : spec_(spec), dim_(1 + spec.I) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, 1);
    layout_ = make_layout({{"mu", 1}, {"a", spec.I}});
    ybar_ = data.stats().grand_mean(0);
    group_means_ = data.stats().group_means.col(0);
    const double ia = 1.0 / spec.sigma2_a;
    const double ie = 1.0 / spec.sigma2_e;
    const double u = 1.0 - spec.A;
    q_mu_ = spec.I * spec.J * ie * u * u + spec.I * ia * spec.A * spec.A;
    q_cross_ = spec.J * ie * u - ia * spec.A;
    q_a_ = spec.J * ie + ia;
    if (!(q_mu_ > 0.0)) throw Error(ErrorKind::DegenerateDenominator, "μ has no posterior precision at this A");
}

std::string PartialTwoLevelKernel::descriptor() const { return "gs_partial2(A=" + std::to_string(spec_.A) + ")"; }

void PartialTwoLevelKernel::sweep(Vector& state, Rng& rng) const {
    const int I = spec_.I;
    const double J = spec_.J;
    const double ie = 1.0 / spec_.sigma2_e;
    const double h_mu = I * J * ie * (1.0 - spec_.A) * ybar_;
    const double a_sum = state.tail(I).sum();
    state(0) = (h_mu - q_cross_ * a_sum) / q_mu_ + rng.normal() / std::sqrt(q_mu_);
    const double mu = state(0);
    const Vector z = rng.normals(I);
    for (int i = 0; i < I; ++i) {
        state(1 + i) = (J * ie * group_means_(i) - q_cross_ * mu) / q_a_ + z(i) / std::sqrt(q_a_);
    }
}

std::optional<Vector> PartialTwoLevelKernel::prior_state(Rng& rng) const {
    Vector s = Vector::Zero(dim_);
    s.tail(spec_.I) = std::sqrt(spec_.sigma2_a) * rng.normals(spec_.I);
    return s;
}

// ---------------------------------------------------------------------------

ThreeLevelKernel::ThreeLevelKernel(const ThreeLevelSpec& spec, const Dataset& data)
    : spec_(spec), dim_(1 + spec.I + static_cast<Index>(spec.I) * spec.J) {
    spec.validate();
    data.require_balanced({spec.I, spec.J, spec.K}, 1);
    const Index nb = static_cast<Index>(spec.I) * spec.J;
    layout_ = make_layout({{"mu", 1}, {"a", spec.I}, {"b", nb}});
    const double K = spec.K;
    const double J = spec.J;
    const double I = spec.I;
    const double ia = 1.0 / spec.sigma2_a;
    const double ib = 1.0 / spec.sigma2_b;
    const double ie = 1.0 / spec.sigma2_e;
    const double u = 1.0 - spec.A - spec.C;
    const double v = 1.0 - spec.B;
    cell_sums_ = K * data.stats().cell_means.col(0);
    q_mu_ = I * J * K * ie * u * u + I * J * ib * spec.C * spec.C + I * ia * spec.A * spec.A;
    q_a_ = J * K * ie * v * v + J * ib * spec.B * spec.B + ia;
    q_b_ = K * ie + ib;
    q_mu_a_ = J * K * ie * u * v + J * ib * spec.B * spec.C - ia * spec.A;
    q_mu_b_ = K * ie * u - ib * spec.C;
    q_a_b_ = K * ie * v - ib * spec.B;
    h_mu_ = ie * u * cell_sums_.sum();
    h_a_ = Vector::Zero(spec.I);
    for (int i = 0; i < spec.I; ++i) h_a_(i) = ie * v * cell_sums_.segment(static_cast<Index>(i) * spec.J, spec.J).sum();
    if (!(q_mu_ > 0.0)) throw Error(ErrorKind::DegenerateDenominator, "μ has no posterior precision at these coefficients");
}

std::string ThreeLevelKernel::descriptor() const {
    return "gs_abc(A=" + std::to_string(spec_.A) + ",B=" + std::to_string(spec_.B) + ",C=" + std::to_string(spec_.C) +
           ")";
}

void ThreeLevelKernel::sweep(Vector& state, Rng& rng) const {
    const int I = spec_.I;
    const int J = spec_.J;
    const Index nb = static_cast<Index>(I) * J;
    const double ie = 1.0 / spec_.sigma2_e;
    auto a = state.segment(1, I);
    auto b = state.tail(nb);

    state(0) = (h_mu_ - q_mu_a_ * a.sum() - q_mu_b_ * b.sum()) / q_mu_ + rng.normal() / std::sqrt(q_mu_);
    const double mu = state(0);

    const Vector za = rng.normals(I);
    for (int i = 0; i < I; ++i) {
        const double b_sum = b.segment(static_cast<Index>(i) * J, J).sum();
        a(i) = (h_a_(i) - q_mu_a_ * mu - q_a_b_ * b_sum) / q_a_ + za(i) / std::sqrt(q_a_);
    }

    const Vector zb = rng.normals(nb);
    for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) {
            const Index c = static_cast<Index>(i) * J + j;
            b(c) = (ie * cell_sums_(c) - q_mu_b_ * mu - q_a_b_ * a(i)) / q_b_ + zb(c) / std::sqrt(q_b_);
        }
    }
}

std::optional<Vector> ThreeLevelKernel::prior_state(Rng& rng) const {
    // μ flat at zero; a_i ~ N(Aμ, σa²); b_ij ~ N(B a_i + C μ, σb²)
    const int I = spec_.I;
    const int J = spec_.J;
    Vector s = Vector::Zero(dim_);
    s.segment(1, I) = std::sqrt(spec_.sigma2_a) * rng.normals(I);
    const Vector z = rng.normals(static_cast<Index>(I) * J);
    for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) {
            const Index c = static_cast<Index>(i) * J + j;
            s(1 + I + c) = spec_.B * s(1 + i) + std::sqrt(spec_.sigma2_b) * z(c);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------

ChainTrace run_chain(const SweepKernel& kernel, const SamplerConfig& cfg, const std::string& model) {
    cfg.validate();
    Rng rng(cfg.seed, cfg.stream);
    Vector state = initial_state(kernel, cfg, rng);
    ChainTrace trace;
    trace.states = record(kernel.dim(), cfg, state, [&](int, Vector& x) { kernel.sweep(x, rng); });
    trace.layout = kernel.layout();
    trace.seed = cfg.seed;
    trace.burn_in = cfg.burn_in;
    trace.thinning = cfg.thinning;
    trace.model = model.empty() ? kernel.descriptor() : model;
    return trace;
}

ChainTrace run_gs0(const TwoLevelVectorSpec& spec, const Dataset& data, const SamplerConfig& cfg) {
    if (spec.param != Parameterization::NonCentered) {
        throw Error(ErrorKind::InvalidSpec, "GS(0) needs the non-centered parameterization");
    }
    return run_chain(TwoLevelKernel(spec, data), cfg);
}

ChainTrace run_gs1(const TwoLevelVectorSpec& spec, const Dataset& data, const SamplerConfig& cfg) {
    if (spec.param != Parameterization::Centered) {
        throw Error(ErrorKind::InvalidSpec, "GS(1) needs the centered parameterization");
    }
    return run_chain(TwoLevelKernel(spec, data), cfg);
}

ChainTrace run_gs_regression(const MixedEffectsSpec& spec, const Dataset& data, const SamplerConfig& cfg) {
    return run_chain(RegressionKernel(spec, data), cfg);
}

ChainTrace run_gs_partial2(const PartialTwoLevelSpec& spec, const Dataset& data, const SamplerConfig& cfg) {
    return run_chain(PartialTwoLevelKernel(spec, data), cfg);
}

ChainTrace run_gs_abc(const ThreeLevelSpec& spec, const Dataset& data, const SamplerConfig& cfg) {
    return run_chain(ThreeLevelKernel(spec, data), cfg);
}

ChainTrace run_generic(const BlockedGaussian& target, const std::vector<std::string>& order,
                       const SamplerConfig& cfg) {
    return run_chain(GenericScanKernel(target, order), cfg);
}

// ---------------------------------------------------------------------------

AdaptiveRun run_adaptive_unknown_variance(const Dataset& data, const VariancePriors& priors,
                                          const SamplerConfig& cfg) {
    for (const auto* prior : {&priors.group, &priors.residual}) {
        if (!(prior->shape > 0.0 && prior->scale > 0.0 && std::isfinite(prior->shape) && std::isfinite(prior->scale))) {
            throw Error(ErrorKind::InvalidPrior, "inverse-gamma shape and scale must be positive");
        }
    }
    cfg.validate();
    if (data.arity() != 2 || data.ell() != 1) {
        throw Error(ErrorKind::DimMismatch, "adaptive sampler needs scalar two-level data");
    }
    int I = 0;
    int J = 0;
    for (const auto& key : data.index()) {
        I = std::max(I, key[0] + 1);
        J = std::max(J, key[1] + 1);
    }
    data.require_balanced({I, J}, 1);
    if (I < 2) throw Error(ErrorKind::InvalidSpec, "adaptive sampler needs I >= 2");

    const Vector group_means = data.stats().group_means.col(0);
    const double ybar = data.stats().grand_mean(0);
    double within_ss = 0.0;
    for (Index r = 0; r < data.size(); ++r) {
        const double d = data.y()(r, 0) - group_means(data.index()[r][0]);
        within_ss += d * d;
    }

    const Index dim = I + 3;
    Rng rng(cfg.seed, cfg.stream);
    Vector state = Vector::Zero(dim);
    if (cfg.init == InitPolicy::Given) {
        if (cfg.initial_state.size() != dim) throw Error(ErrorKind::DimMismatch, "initial state has the wrong dimension");
        state = cfg.initial_state;
    } else if (cfg.init == InitPolicy::Prior) {
        throw Error(ErrorKind::InvalidConfig, "prior initialisation is unavailable for the adaptive sampler");
    }

    AdaptiveRun run;
    run.decisions.reserve(static_cast<std::size_t>(cfg.iterations));
    const double n = static_cast<double>(I) * J;
    run.trace.states = record(dim, cfg, state, [&](int s, Vector& x) {
        double& mu = x(0);
        auto a = x.segment(1, I);
        // σe² | μ, a: within-group plus between-group residual sum of squares
        const double between = (group_means.array() - mu - a.array()).square().sum();
        const double ss = within_ss + J * between;
        x(I + 2) = rng.inverse_gamma(priors.residual.shape + n / 2.0, priors.residual.scale + ss / 2.0);
        x(I + 1) = rng.inverse_gamma(priors.group.shape + I / 2.0, priors.group.scale + a.squaredNorm() / 2.0);
        const double s2a = x(I + 1);
        const double s2e = x(I + 2);

        const double ia = 1.0 / s2a;
        const double je = J / s2e;
        AdaptiveDecision d;
        d.iteration = s;
        d.sigma2_a = s2a;
        d.sigma2_e = s2e;
        d.rho_noncentered = je / (ia + je);
        d.rho_centered = 1.0 - d.rho_noncentered;
        d.choice = d.rho_noncentered <= d.rho_centered ? Parameterization::NonCentered : Parameterization::Centered;
        run.decisions.push_back(d);

        const double prec = ia + je;
        const double sd = 1.0 / std::sqrt(prec);
        if (d.choice == Parameterization::NonCentered) {
            mu = ybar - a.mean() + std::sqrt(s2e / n) * rng.normal();
            const Vector z = rng.normals(I);
            for (int i = 0; i < I; ++i) a(i) = je * (group_means(i) - mu) / prec + sd * z(i);
        } else {
            const Vector alpha = a.array() + mu;
            mu = alpha.mean() + std::sqrt(s2a / I) * rng.normal();
            const Vector z = rng.normals(I);
            for (int i = 0; i < I; ++i) a(i) = (ia * mu + je * group_means(i)) / prec + sd * z(i) - mu;
        }
    });
    run.trace.layout = make_layout({{"mu", 1}, {"a", I}, {"sigma2_a", 1}, {"sigma2_e", 1}});
    run.trace.seed = cfg.seed;
    run.trace.burn_in = cfg.burn_in;
    run.trace.thinning = cfg.thinning;
    run.trace.model = "adaptive_s2";
    return run;
}

}  // namespace gibbsrate
