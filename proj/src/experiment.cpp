#include "gibbsrate/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "gibbsrate/error.hpp"

namespace gibbsrate {

namespace {

template <typename... Fs>
struct Overload : Fs... {
    using Fs::operator()...;
};
template <typename... Fs>
Overload(Fs...) -> Overload<Fs...>;

ConditionCheck lm_condition(const GeneralLMSpec& spec) {
    if (spec.param == Parameterization::Centered) {
        const Matrix m = spec.M ? *spec.M : solve_M(spec.X1, spec.X2);
        const CrossSVD cs = factor_cross(m.transpose());
        return check_centering_condition(spec.X2, cs.A2, cs.r);
    }
    const CrossSVD cs = cross_svd(spec.X1, spec.X2);
    const ConditionCheck c1 = check_orthogonality_condition(spec.X1, cs.A1, cs.r);
    const ConditionCheck c2 = check_orthogonality_condition(spec.X2, cs.A2, cs.r);
    return {c1.holds && c2.holds, std::max(c1.max_violation, c2.max_violation)};
}

Matrix stack_families(const FunctionalFrame& frame, const std::vector<std::string>& names) {
    Index rows = 0;
    for (const auto& n : names) rows += frame.map(n).rows();
    Matrix out(rows, frame.state_dim());
    Index at = 0;
    for (const auto& n : names) {
        const Matrix& m = frame.map(n);
        out.middleRows(at, m.rows()) = m;
        at += m.rows();
    }
    return out;
}

}  // namespace

std::string model_type(const ModelSpec& spec) {
    return std::visit(Overload{[](const TwoLevelVectorSpec&) { return std::string("s2m"); },
                               [](const MixedEffectsSpec&) { return std::string("sr"); },
                               [](const GeneralLMSpec&) { return std::string("lm"); },
                               [](const PartialTwoLevelSpec&) { return std::string("s2_partial"); },
                               [](const ThreeLevelSpec&) { return std::string("s3"); }},
                      spec);
}

void validate(const ModelSpec& spec) {
    std::visit([](const auto& s) { s.validate(); }, spec);
}

int data_arity(const ModelSpec& spec) {
    return std::visit(Overload{[](const GeneralLMSpec&) { return 1; }, [](const ThreeLevelSpec&) { return 3; },
                               [](const auto&) { return 2; }},
                      spec);
}

std::vector<int> data_extent(const ModelSpec& spec) {
    return std::visit(Overload{[](const TwoLevelVectorSpec& s) { return std::vector<int>{s.I, s.J}; },
                               [](const MixedEffectsSpec& s) { return std::vector<int>{s.I, s.J}; },
                               [](const GeneralLMSpec& s) { return std::vector<int>{static_cast<int>(s.n())}; },
                               [](const PartialTwoLevelSpec& s) { return std::vector<int>{s.I, s.J}; },
                               [](const ThreeLevelSpec& s) { return std::vector<int>{s.I, s.J, s.K}; }},
                      spec);
}

Index response_dim(const ModelSpec& spec) {
    if (const auto* s = std::get_if<TwoLevelVectorSpec>(&spec)) return s->ell();
    return 1;
}

Dataset synthesize_data(const ModelSpec& spec, Rng& rng) {
    return std::visit([&](const auto& s) { return synthesize(s, rng); }, spec);
}

void check_data(const ModelSpec& spec, const Dataset& data) {
    if (data.arity() != data_arity(spec)) throw Error(ErrorKind::DimMismatch, "data arity does not match the model");
    data.require_balanced(data_extent(spec), response_dim(spec));
}

BlockedGaussian full_posterior(const Model& model) {
    return std::visit(Overload{[&](const TwoLevelVectorSpec& s) { return posterior_s2m(s, model.data); },
                               [&](const MixedEffectsSpec& s) { return posterior_sr(s, model.data); },
                               [&](const GeneralLMSpec& s) { return posterior_lm(s, model.data); },
                               [&](const PartialTwoLevelSpec& s) { return posterior_partial2(s, model.data); },
                               [&](const ThreeLevelSpec& s) { return posterior_s3(s, model.data); }},
                      model.spec);
}

std::vector<std::string> scan_order(const BlockedGaussian& posterior) { return posterior.block_names(); }

std::unique_ptr<SweepKernel> make_kernel(const Model& model) {
    return std::visit(
        Overload{[&](const TwoLevelVectorSpec& s) -> std::unique_ptr<SweepKernel> {
                     return std::make_unique<TwoLevelKernel>(s, model.data);
                 },
                 [&](const MixedEffectsSpec& s) -> std::unique_ptr<SweepKernel> {
                     return std::make_unique<RegressionKernel>(s, model.data);
                 },
                 [&](const GeneralLMSpec& s) -> std::unique_ptr<SweepKernel> {
                     const BlockedGaussian post = posterior_lm(s, model.data);
                     return std::make_unique<GenericScanKernel>(post, scan_order(post));
                 },
                 [&](const PartialTwoLevelSpec& s) -> std::unique_ptr<SweepKernel> {
                     return std::make_unique<PartialTwoLevelKernel>(s, model.data);
                 },
                 [&](const ThreeLevelSpec& s) -> std::unique_ptr<SweepKernel> {
                     return std::make_unique<ThreeLevelKernel>(s, model.data);
                 }},
        model.spec);
}

FunctionalFrame model_frame(const ModelSpec& spec) {
    return std::visit([](const auto& s) { return frame_for(s); }, spec);
}

std::vector<std::string> slow_families(const ModelSpec& spec) {
    return std::visit(Overload{[](const TwoLevelVectorSpec&) { return std::vector<std::string>{"bar"}; },
                               [](const MixedEffectsSpec&) { return std::vector<std::string>{"upper"}; },
                               [](const GeneralLMSpec& s) {
                                   if (lm_condition(s).holds) return std::vector<std::string>{"theta_joint"};
                                   return std::vector<std::string>{"theta_joint", "theta_res1", "theta_res2"};
                               },
                               [](const PartialTwoLevelSpec&) { return std::vector<std::string>{"bar"}; },
                               [](const ThreeLevelSpec&) { return std::vector<std::string>{"delta0", "delta1"}; }},
                      spec);
}

std::vector<std::string> exact_families(const ModelSpec& spec) {
    return std::visit(Overload{[](const TwoLevelVectorSpec&) { return std::vector<std::string>{"delta"}; },
                               [](const MixedEffectsSpec&) { return std::vector<std::string>{"residual"}; },
                               [](const GeneralLMSpec& s) {
                                   if (lm_condition(s).holds) return std::vector<std::string>{"theta_res1", "theta_res2"};
                                   return std::vector<std::string>{};
                               },
                               [](const PartialTwoLevelSpec&) { return std::vector<std::string>{"delta"}; },
                               [](const ThreeLevelSpec&) { return std::vector<std::string>{"delta2"}; }},
                      spec);
}

std::optional<double> analytic_rate(const ModelSpec& spec) {
    return std::visit(
        Overload{[](const TwoLevelVectorSpec& s) -> std::optional<double> {
                     s.validate();
                     return s.param == Parameterization::Centered ? rate_centered(s.sigma_a, s.sigma_e, s.J)
                                                                  : rate_noncentered(s.sigma_a, s.sigma_e, s.J);
                 },
                 [](const MixedEffectsSpec& s) -> std::optional<double> { return rate_mixed_effects(s); },
                 [](const GeneralLMSpec& s) -> std::optional<double> {
                     // canonical-correlation formula on the data-independent precision
                     const Dataset zeros(1,
                                         [&] {
                                             std::vector<Dataset::Key> idx;
                                             for (Index k = 0; k < s.n(); ++k) idx.push_back({static_cast<int>(k), 0, 0});
                                             return idx;
                                         }(),
                                         Matrix::Zero(s.n(), 1));
                     return two_block_rate(posterior_lm(s, zeros));
                 },
                 [](const PartialTwoLevelSpec& s) -> std::optional<double> {
                     s.validate();
                     return rate_partial_two_level(s.sigma2_a, s.sigma2_e, s.J, s.A);
                 },
                 [](const ThreeLevelSpec&) -> std::optional<double> { return std::nullopt; }},
        spec);
}

double oracle_rate(const Model& model) {
    const BlockedGaussian post = full_posterior(model);
    return l2_rate_oracle(post, scan_order(post));
}

EmpiricalRate empirical_rate(const ModelSpec& spec, const Matrix& states) {
    const FunctionalFrame frame = model_frame(spec);
    const Matrix map = stack_families(frame, slow_families(spec));
    if (states.cols() != frame.state_dim()) throw Error(ErrorKind::DimMismatch, "trace does not match the model");
    const Ar1Fit fit = fit_ar1(states * map.transpose());
    return {fit.rate.estimate, fit.rate.standard_error, std::string(to_string(fit.rate.method))};
}

RateReport analyze(const Model& model, const std::optional<Matrix>& empirical_states) {
    RateReport rep;
    rep.analytic_rate = analytic_rate(model.spec);
    rep.oracle_rate = oracle_rate(model);

    std::visit(Overload{[&](const TwoLevelVectorSpec& s) {
                            const ParamChoice c = choose_parametrization(s.sigma_a, s.sigma_e, s.J);
                            rep.recommendation = std::string(to_string(c.kind));
                            rep.details.emplace_back("rho_noncentered", c.rho_noncentered);
                            rep.details.emplace_back("rho_centered", c.rho_centered);
                            if (c.component_wise_rate) {
                                rep.details.emplace_back("componentwise_rate", *c.component_wise_rate);
                            }
                        },
                        [&](const MixedEffectsSpec&) {},
                        [&](const GeneralLMSpec& s) {
                            const ConditionCheck c = lm_condition(s);
                            rep.details.emplace_back("condition_violation", c.max_violation);
                            rep.notes.emplace_back("analytic rate from the two-block canonical-correlation formula");
                        },
                        [&](const PartialTwoLevelSpec& s) {
                            rep.details.emplace_back("rho_noncentered",
                                                     rate_partial_two_level(s.sigma2_a, s.sigma2_e, s.J, 0.0));
                            rep.details.emplace_back("rho_centered",
                                                     rate_partial_two_level(s.sigma2_a, s.sigma2_e, s.J, 1.0));
                            rep.details.emplace_back("optimal_A", optimal_A(s.sigma2_a, s.sigma2_e, s.J));
                            rep.recommendation = "partial";
                            rep.notes.emplace_back(
                                "rate uses the J-weighted denominator (σa⁻²+Jσe⁻²)(A²σa⁻²+(1-A)²Jσe⁻²), "
                                "which reproduces the non-centered and centered rates at A=0 and A=1");
                        },
                        [&](const ThreeLevelSpec& s) {
                            const RescaledPrecisions t = rescaled_precisions(s);
                            const PairwiseCorrelations r = pairwise_correlations_s3(t.tau_a, t.tau_b, t.tau_e, s.A, s.B, s.C);
                            rep.details.emplace_back("tau_a", t.tau_a);
                            rep.details.emplace_back("tau_b", t.tau_b);
                            rep.details.emplace_back("tau_e", t.tau_e);
                            rep.details.emplace_back("r1", r.r1);
                            rep.details.emplace_back("r2", r.r2);
                            rep.details.emplace_back("r3", r.r3);
                            rep.details.emplace_back("slow_family_oracle", rate_s3(s));
                            const ThreeLevelCoefficients opt = optimal_ABC(t.tau_a, t.tau_b, t.tau_e);
                            rep.details.emplace_back("optimal_A", opt.A);
                            rep.details.emplace_back("optimal_B", opt.B);
                            rep.details.emplace_back("optimal_C", opt.C);
                            rep.recommendation = "partial3";
                        }},
               model.spec);

    if (empirical_states) {
        try {
            rep.empirical = empirical_rate(model.spec, *empirical_states);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TooShort) throw;
            rep.notes.emplace_back("empirical rate skipped: trace too short");
        }
    }
    return rep;
}

OptimizeResult optimize_three_level(const RescaledPrecisions& tau) {
    OptimizeResult out;
    out.precisions = tau;
    const ThreeLevelCoefficients opt = optimal_ABC(tau.tau_a, tau.tau_b, tau.tau_e);
    out.optimal_ABC = opt;
    out.correlations_at_optimum = pairwise_correlations_s3(tau.tau_a, tau.tau_b, tau.tau_e, opt.A, opt.B, opt.C);
    return out;
}

OptimizeResult optimize(const ModelSpec& spec) {
    validate(spec);
    return std::visit(
        Overload{[](const TwoLevelVectorSpec& s) {
                     OptimizeResult out;
                     out.choice = choose_parametrization(s.sigma_a, s.sigma_e, s.J);
                     return out;
                 },
                 [](const PartialTwoLevelSpec& s) {
                     OptimizeResult out;
                     out.choice = choose_parametrization(SymPD::scalar(s.sigma2_a), SymPD::scalar(s.sigma2_e), s.J);
                     out.optimal_A = optimal_A(s.sigma2_a, s.sigma2_e, s.J);
                     return out;
                 },
                 [](const ThreeLevelSpec& s) { return optimize_three_level(rescaled_precisions(s)); },
                 [](const auto&) -> OptimizeResult {
                     throw Error(ErrorKind::InvalidConfig, "optimize supports the s2m, s2_partial and s3 models");
                 }},
        spec);
}

VerifyReport decomposition_verify(const Model& model, const SamplerConfig& cfg, const VerifyOptions& opts) {
    const auto kernel = make_kernel(model);
    const ChainTrace trace = run_chain(*kernel, cfg, model_type(model.spec));
    return decomposition_verify(model, trace.states, opts);
}

VerifyReport decomposition_verify(const Model& model, const Matrix& states, const VerifyOptions& opts) {
    VerifyReport rep;
    rep.model = model_type(model.spec);
    const BlockedGaussian post = full_posterior(model);
    const FunctionalFrame frame = model_frame(model.spec);
    if (states.cols() != frame.state_dim()) throw Error(ErrorKind::DimMismatch, "trace does not match the model");

    if (const auto* lm = std::get_if<GeneralLMSpec>(&model.spec)) {
        const ConditionCheck c = lm_condition(*lm);
        rep.condition_violation = c.max_violation;
        rep.condition_holds = c.holds;
        if (!c.holds) {
            rep.structural_applicable = false;
            rep.notes.emplace_back("orthogonality condition violated; decomposition checks skipped");
        }
    }
    rep.structural_cross_block = frame_max_cross_block(frame, post.precision());
    rep.structural_scale = std::max(1.0, post.precision().matrix().cwiseAbs().maxCoeff());
    if (rep.structural_applicable) {
        rep.structural_pass = rep.structural_cross_block <= opts.structural_tol * rep.structural_scale;
    }

    rep.analytic_rate = analytic_rate(model.spec);
    rep.oracle_rate = l2_rate_oracle(post, scan_order(post));
    try {
        rep.empirical = empirical_rate(model.spec, states);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::TooShort) throw;
        rep.notes.emplace_back("empirical rate skipped: trace too short");
    }

    if (!rep.structural_applicable) return rep;

    const auto families = frame_apply(frame, states);
    const double n = static_cast<double>(states.rows());
    for (const auto& name : exact_families(model.spec)) {
        const Matrix& f = families.at(name);
        if (f.cols() == 0) continue;
        FamilyIid iid;
        iid.family = name;
        iid.threshold = opts.z / std::sqrt(n);
        for (Index c = 0; c < f.cols(); ++c) {
            iid.max_abs_lag1 = std::max(iid.max_abs_lag1, std::abs(autocorrelation(f.col(c), 1)));
        }
        iid.pass = iid.max_abs_lag1 <= iid.threshold;
        rep.statistical_pass = rep.statistical_pass && iid.pass;
        rep.residual_iid.push_back(iid);
    }
    const auto& maps = frame.maps();
    for (std::size_t a = 0; a < maps.size(); ++a) {
        for (std::size_t b = a + 1; b < maps.size(); ++b) {
            if (maps[a].second.rows() == 0 || maps[b].second.rows() == 0) continue;
            FamilyIndependence fi{maps[a].first, maps[b].first,
                                  independence_test(families.at(maps[a].first), families.at(maps[b].first),
                                                    opts.max_lag, opts.z)};
            rep.statistical_pass = rep.statistical_pass && fi.report.pass;
            rep.independence.push_back(std::move(fi));
        }
    }
    return rep;
}

}  // namespace gibbsrate
