// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gibbsrate/cli.hpp"
#include "gibbsrate/diagnostics.hpp"
#include "gibbsrate/error.hpp"
#include "gibbsrate/experiment.hpp"
#include "gibbsrate/multigrid.hpp"
#include "gibbsrate/rates.hpp"
#include "gibbsrate/samplers.hpp"
#include "support.hpp"

using namespace gibbsrate;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

// Accumulates sub-checks; the first failing ones are listed in the detail line.
class Checks {
public:
    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass_ = false;
        failures_.push_back(what);
    }
    void note(const std::string& text) { notes_.push_back(text); }

    [[nodiscard]] Verdict verdict() const {
        std::string d;
        for (const auto& n : notes_) d += (d.empty() ? "" : "; ") + n;
        for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + ("failed: " + f);
        return {pass_, d};
    }

private:
    bool pass_ = true;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

template <class Spec>
Dataset data_for(const Spec& spec, std::uint64_t seed) {
    Rng rng(seed, 1);
    return synthesize(spec, rng);
}

SamplerConfig chain(int sweeps, std::uint64_t seed, int burn_in = 1000) {
    SamplerConfig cfg;
    cfg.iterations = sweeps + burn_in;
    cfg.burn_in = burn_in;
    cfg.seed = seed;
    cfg.stream = 2;
    return cfg;
}

// Rows of the families whose convergence depends on the centering coefficients.
Matrix slow_monitor(const ModelSpec& spec) {
    const FunctionalFrame frame = model_frame(spec);
    std::vector<Matrix> parts;
    Index rows = 0;
    for (const auto& name : slow_families(spec)) {
        parts.push_back(frame.map(name));
        rows += parts.back().rows();
    }
    Matrix out(rows, frame.state_dim());
    Index at = 0;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p;
        at += p.rows();
    }
    return out;
}

Verdict two_block_rates() {
    Rng rng(1001);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Index d1 = support::uniform_int(rng, 1, 4);
        const Index d2 = support::uniform_int(rng, 1, 4);
        const BlockedGaussian target = support::target_from_covariance(support::random_spd(rng, d1 + d2, 0.05), {d1, d2});
        worst = std::max(worst, std::abs(two_block_rate(target) - l2_rate_oracle(target, {"b0", "b1"})));
    }
    Checks c;
    c.note("max |diff| " + sci(worst) + " over 100 targets");
    c.require(worst <= 1e-10, "tolerance 1e-10");
    return c.verdict();
}

Verdict two_level_formulas() {
    Rng rng(1002);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Index ell = support::uniform_int(rng, 1, 3);
        const int J = support::uniform_int(rng, 1, 6);
        const SymPD sa(support::random_spd(rng, ell));
        const SymPD se(support::random_spd(rng, ell));
        for (const auto param : {Parameterization::NonCentered, Parameterization::Centered}) {
            const TwoLevelVectorSpec spec{support::uniform_int(rng, 2, 6), J, sa, se, param};
            const BlockedGaussian bar = posterior_bar_s2m(spec, data_for(spec, 7));
            const double formula = param == Parameterization::Centered ? rate_centered(sa, se, J)
                                                                        : rate_noncentered(sa, se, J);
            worst = std::max(worst, std::abs(formula - l2_rate_oracle(bar, {"mu", "abar"})));
        }
    }
    double worst_sum = 0.0;
    for (int t = 0; t < 50; ++t) {
        const SymPD sa = SymPD::scalar(support::log_uniform(rng, 0.01, 100));
        const SymPD se = SymPD::scalar(support::log_uniform(rng, 0.01, 100));
        const int J = support::uniform_int(rng, 1, 20);
        worst_sum = std::max(worst_sum, std::abs(rate_noncentered(sa, se, J) + rate_centered(sa, se, J) - 1.0));
    }
    Checks c;
    c.note("formula vs oracle " + sci(worst) + ", |rho0+rho1-1| " + sci(worst_sum));
    c.require(worst <= 1e-10, "formula vs oracle 1e-10");
    c.require(worst_sum <= 1e-12, "scalar identity 1e-12");
    return c.verdict();
}

Verdict scalar_benchmark() {
    const TwoLevelVectorSpec nc{50, 4, SymPD::scalar(1), SymPD::scalar(1), Parameterization::NonCentered};
    TwoLevelVectorSpec cen = nc;
    cen.param = Parameterization::Centered;
    const Dataset data = data_for(nc, 3);
    const double r0 = rate_noncentered(nc.sigma_a, nc.sigma_e, 4);
    const double r1 = rate_centered(nc.sigma_a, nc.sigma_e, 4);
    const double e0 = empirical_rate(nc, run_gs0(nc, data, chain(200000, 31)).states).estimate;
    const double e1 = empirical_rate(cen, run_gs1(cen, data, chain(200000, 32)).states).estimate;
    Checks c;
    c.note("analytic " + sci(r0) + "/" + sci(r1) + ", empirical " + sci(e0) + "/" + sci(e1));
    c.require(std::abs(r0 - 0.8) <= 1e-12 && std::abs(r1 - 0.2) <= 1e-12, "analytic 0.8 / 0.2");
    c.require(std::abs(e0 - 0.8) <= 0.03, "empirical rho0 within 0.03");
    c.require(std::abs(e1 - 0.2) <= 0.03, "empirical rho1 within 0.03");
    return c.verdict();
}

Verdict multigrid_independence() {
    const TwoLevelVectorSpec spec{50, 4, SymPD::scalar(1), SymPD::scalar(1), Parameterization::NonCentered};
    const Dataset data = data_for(spec, 4);
    const int N = 100000;
    const ChainTrace trace = run_gs0(spec, data, chain(N, 41));
    const FunctionalFrame frame = frame_for(spec);
    const auto series = frame_apply(frame, trace.states);
    const Matrix& bar = series.at("bar");
    const Matrix& delta = series.at("delta");
    const double bound = 4.0 / std::sqrt(static_cast<double>(N));
    double worst_auto = 0.0;
    double worst_cross = 0.0;
    for (Index k = 0; k < delta.cols(); ++k) {
        const Vector d = delta.col(k);
        worst_auto = std::max(worst_auto, std::abs(autocorrelation(d, 1)));
        for (Index b = 0; b < bar.cols(); ++b)
            for (Index lag = 0; lag <= 5; ++lag)
                worst_cross = std::max(worst_cross, std::abs(cross_correlation(d, bar.col(b), lag)));
    }
    const BlockedGaussian post = posterior_s2m(spec, data);
    const double cross_block = frame_cross_block(frame, post.precision(), "bar", "delta");
    Checks c;
    c.note("lag-1 " + sci(worst_auto) + ", cross " + sci(worst_cross) + " vs " + sci(bound) + ", precision block " +
           sci(cross_block));
    c.require(worst_auto <= bound, "delta lag-1 within 4/sqrt(N)");
    c.require(worst_cross <= bound, "cross-correlations within 4/sqrt(N)");
    c.require(cross_block <= 1e-10, "precision cross-block 1e-10");
    return c.verdict();
}

Verdict mixed_effects() {
    Rng rng(1005);
    double worst = 0.0;
    double worst_reduction = 0.0;
    double worst_inv = 0.0;
    for (int t = 0; t < 20; ++t) {
        MixedEffectsSpec spec;
        spec.p = support::uniform_int(rng, 1, 3);
        spec.I = support::uniform_int(rng, spec.p + 1, 8);
        spec.J = support::uniform_int(rng, 1, 4);
        spec.X = support::gaussian_matrix(rng, static_cast<Index>(spec.I) * spec.J, spec.p);
        if (t % 2) spec.sigma0 = SymPD(support::random_spd(rng, spec.p));
        spec.sigma2_a = support::log_uniform(rng, 0.2, 5);
        spec.sigma2_e = support::log_uniform(rng, 0.2, 5);
        const BlockedGaussian post = posterior_sr(spec, data_for(spec, 5));
        worst = std::max(worst, std::abs(rate_mixed_effects(spec) - l2_rate_oracle(post, {"beta", "a"})));
        const InvarianceReport inv =
            invariance_checks(spec, support::log_uniform(rng, 0.1, 10), support::random_orthogonal(rng, spec.p));
        worst_inv = std::max({worst_inv, inv.scale_diff, inv.rotation_diff});

        MixedEffectsSpec intercept = spec;
        intercept.p = 1;
        intercept.X = Matrix::Ones(static_cast<Index>(spec.I) * spec.J, 1);
        intercept.sigma0.reset();
        const double expect = rate_noncentered(SymPD::scalar(spec.sigma2_a), SymPD::scalar(spec.sigma2_e), spec.J);
        worst_reduction = std::max(worst_reduction, std::abs(rate_mixed_effects(intercept) - expect));
    }
    MixedEffectsSpec hand;
    hand.I = 2;
    hand.J = 1;
    hand.p = 1;
    hand.X = Matrix(2, 1);
    hand.X << 1, -1;
    hand.sigma0 = SymPD::scalar(1);
    const double hand_rate = rate_mixed_effects(hand);
    Checks c;
    c.note("formula vs oracle " + sci(worst) + ", reduction " + sci(worst_reduction) + ", invariance " +
           sci(worst_inv) + ", hand instance " + sci(hand_rate));
    c.require(worst <= 1e-10, "formula vs oracle 1e-10");
    c.require(worst_reduction <= 1e-12, "intercept reduction 1e-12");
    c.require(worst_inv <= 1e-10, "scale and rotation invariance 1e-10");
    c.require(std::abs(hand_rate - 1.0 / 3.0) <= 1e-12, "hand instance 1/3");
    return c.verdict();
}

Verdict linear_model_condition() {
    const GeneralLMSpec kron = two_level_linear_model(6, 4, 1.0, 1.0, Parameterization::NonCentered);
    const CrossSVD cs = cross_svd(kron.X1, kron.X2);
    const double violation = std::max(check_orthogonality_condition(kron.X1, cs.A1, cs.r).max_violation,
                                      check_orthogonality_condition(kron.X2, cs.A2, cs.r).max_violation);
    const FunctionalFrame frame = frame_for(kron);
    const BlockedGaussian post = posterior_lm(kron, data_for(kron, 6));
    const double cross = frame_max_cross_block(frame, post.precision());

    Rng rng(1006);
    GeneralLMSpec random;
    random.X1 = support::gaussian_matrix(rng, 2, 20);
    random.X2 = support::gaussian_matrix(rng, 4, 20);
    const CrossSVD rs = cross_svd(random.X1, random.X2);
    const double random_violation = std::max(check_orthogonality_condition(random.X1, rs.A1, rs.r).max_violation,
                                             check_orthogonality_condition(random.X2, rs.A2, rs.r).max_violation);
    Checks c;
    c.note("Kronecker violation " + sci(violation) + ", cross-blocks " + sci(cross) + ", random violation " +
           sci(random_violation));
    c.require(violation <= 1e-12, "Kronecker violation 1e-12");
    c.require(cross <= 1e-10, "family cross-blocks 1e-10");
    c.require(random_violation > 0.1, "random design violation > 0.1");
    return c.verdict();
}

Verdict partial_centering() {
    Rng rng(1007);
    double worst = 0.0;
    double worst_limits = 0.0;
    for (int t = 0; t < 10; ++t) {
        const double s2a = support::log_uniform(rng, 0.2, 5);
        const double s2e = support::log_uniform(rng, 0.2, 5);
        const int J = support::uniform_int(rng, 1, 6);
        for (int k = 0; k <= 20; ++k) {
            const double A = k / 20.0;
            const PartialTwoLevelSpec spec{5, J, s2a, s2e, A};
            const BlockedGaussian post = posterior_partial2(spec, data_for(spec, 7));
            worst = std::max(worst, std::abs(rate_partial_two_level(s2a, s2e, J, A) - l2_rate_oracle(post, {"mu", "a"})));
        }
        worst_limits = std::max(
            {worst_limits,
             std::abs(rate_partial_two_level(s2a, s2e, J, 0.0) - rate_noncentered(SymPD::scalar(s2a), SymPD::scalar(s2e), J)),
             std::abs(rate_partial_two_level(s2a, s2e, J, 1.0) - rate_centered(SymPD::scalar(s2a), SymPD::scalar(s2e), J))});
    }
    int passed = 0;
    for (int seed = 0; seed < 20; ++seed) {
        const double s2a = support::log_uniform(rng, 0.2, 5);
        const double s2e = support::log_uniform(rng, 0.2, 5);
        const int J = support::uniform_int(rng, 1, 6);
        const PartialTwoLevelSpec spec{6, J, s2a, s2e, optimal_A(s2a, s2e, J)};
        const Dataset data = data_for(spec, 100 + seed);
        const BlockedGaussian target = posterior_partial2(spec, data);
        const Matrix monitor = slow_monitor(spec);
        if (one_step_exactness(PartialTwoLevelKernel(spec, data), target, monitor, 10000, 700 + seed).pass) ++passed;
    }
    Checks c;
    c.note("grid vs oracle " + sci(worst) + ", limits " + sci(worst_limits) + ", one-step " + std::to_string(passed) +
           "/20");
    c.require(worst <= 1e-10, "A-grid vs oracle 1e-10");
    c.require(worst_limits <= 1e-15, "A=0 and A=1 limits");
    c.require(passed >= 19, "one-step exactness at A* on >= 19/20 seeds");
    return c.verdict();
}

ThreeLevelSpec three_level_from_tau(double ta, double tb, double te) {
    ThreeLevelSpec spec{2, 2, 2, 0, 0, 0, 0, 0, 0};
    spec.sigma2_a = spec.I / ta;
    spec.sigma2_b = spec.I * spec.J / tb;
    spec.sigma2_e = spec.I * spec.J * spec.K / te;
    return spec;
}

Verdict three_level_optimum() {
    Rng rng(1008);
    double worst_r = 0.0;
    double worst_rate = 0.0;
    int passed = 0;
    for (int t = 0; t < 20; ++t) {
        const double ta = support::log_uniform(rng, 0.2, 5);
        const double tb = support::log_uniform(rng, 0.2, 5);
        const double te = support::log_uniform(rng, 0.2, 5);
        const ThreeLevelCoefficients opt = optimal_ABC(ta, tb, te);
        const PairwiseCorrelations r = pairwise_correlations_s3(ta, tb, te, opt.A, opt.B, opt.C);
        worst_r = std::max({worst_r, std::abs(r.r1), std::abs(r.r2), std::abs(r.r3)});
        ThreeLevelSpec spec = three_level_from_tau(ta, tb, te);
        spec.A = opt.A;
        spec.B = opt.B;
        spec.C = opt.C;
        worst_rate = std::max(worst_rate, rate_s3(spec));
        const Dataset data = data_for(spec, 200 + t);
        const BlockedGaussian target = posterior_s3(spec, data);
        const Matrix monitor = slow_monitor(spec);
        if (one_step_exactness(ThreeLevelKernel(spec, data), target, monitor, 10000, 800 + t).pass) ++passed;
    }
    const ThreeLevelCoefficients unit = optimal_ABC(1, 1, 1);
    const ThreeLevelCoefficients skew = optimal_ABC(1, 2, 1);
    auto near = [](const ThreeLevelCoefficients& x, double a, double b, double c) {
        return std::abs(x.A - a) <= 1e-12 && std::abs(x.B - b) <= 1e-12 && std::abs(x.C - c) <= 1e-12;
    };
    auto show = [](const ThreeLevelCoefficients& x) {
        return "(" + sci(x.A) + "," + sci(x.B) + "," + sci(x.C) + ")";
    };
    Checks c;
    c.note("max |r| " + sci(worst_r) + ", max rate " + sci(worst_rate) + ", one-step " + std::to_string(passed) +
           "/20, tau=(1,1,1) -> " + show(unit) + ", tau=(1,2,1) -> " + show(skew));
    c.require(worst_r <= 1e-12, "pairwise correlations 1e-12");
    c.require(worst_rate <= 1e-10, "oracle rate 1e-10");
    c.require(passed >= 19, "one-step exactness on >= 19/20 seeds");
    c.require(near(unit, 0.0, 0.5, 0.5), "tau=(1,1,1) expected (0,1/2,1/2)");
    c.require(near(skew, 2.0 / 11.0, 1.0 / 3.0, 3.0 / 11.0), "tau=(1,2,1) expected (2/11,1/3,3/11)");
    return c.verdict();
}

Verdict parameterization_strategy() {
    Matrix sa = Matrix::Zero(2, 2);
    sa.diagonal() << 1.0, 0.25;
    const ParamChoice choice = choose_parametrization(SymPD(sa), SymPD::identity(2), 2);
    const double cw = choice.component_wise_rate.value_or(1.0);

    const TwoLevelVectorSpec spec{20, 4, SymPD::scalar(1), SymPD::scalar(1), Parameterization::NonCentered};
    const Dataset data = data_for(spec, 9);
    const AdaptiveRun run = run_adaptive_unknown_variance(data, VariancePriors{}, chain(5000, 91));
    double worst_min = 0.0;
    for (const auto& d : run.decisions) worst_min = std::max(worst_min, std::min(d.rho_noncentered, d.rho_centered));

    Checks c;
    c.note("rho0 " + sci(choice.rho_noncentered) + ", rho1 " + sci(choice.rho_centered) + ", component-wise " +
           sci(cw) + ", adaptive max of min " + sci(worst_min) + " over " + std::to_string(run.decisions.size()) +
           " sweeps");
    c.require(std::abs(choice.rho_noncentered - 2.0 / 3.0) <= 1e-12, "rho0 = 2/3");
    c.require(std::abs(choice.rho_centered - 2.0 / 3.0) <= 1e-12, "rho1 = 2/3");
    c.require(std::abs(cw - 1.0 / 3.0) <= 1e-12 && cw <= 0.5, "component-wise rate 1/3");
    c.require(worst_min <= 0.5, "adaptive min rate <= 1/2 at every sweep");
    return c.verdict();
}

// Runs one CLI invocation and captures stdout plus every file it wrote.
std::map<std::string, std::string> cli_snapshot(const std::vector<std::string>& args, const fs::path& out_dir,
                                                int& code) {
    fs::remove_all(out_dir);
    fs::create_directories(out_dir);
    std::ostringstream out;
    std::ostringstream err;
    code = cli::run(args, out, err);
    std::map<std::string, std::string> files{{"<stdout>", out.str()}};
    for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        files[fs::relative(entry.path(), out_dir).generic_string()] = bytes.str();
    }
    return files;
}

Verdict cli_reproducibility() {
    const fs::path root = fs::current_path() / "acceptance_scratch";
    fs::create_directories(root);
    const std::map<std::string, std::string> configs = {
        {"s2m", R"({"seed": 11,
  "model": {"type": "s2m", "I": 10, "J": 4, "sigma_a": [1.0, 0.25], "sigma_e": [1.0, 1.0], "parameterization": "noncentered"},
  "sampler": {"iterations": 6000, "burn_in": 500},
  "analysis": {"empirical": true}})"},
        {"adaptive", R"({"seed": 12,
  "model": {"type": "s2m", "I": 10, "J": 4, "sigma_a": 1.0, "sigma_e": 1.0},
  "sampler": {"iterations": 3000, "burn_in": 200, "kind": "adaptive"}})"},
        {"s3", R"({"seed": 13,
  "model": {"type": "s3", "I": 3, "J": 2, "K": 2, "tau_a": 1, "tau_b": 2, "tau_e": 1},
  "sampler": {"iterations": 6000, "burn_in": 500}})"},
        {"sweep", R"({"seed": 14,
  "model": {"type": "s2_partial", "I": 10, "J": 4, "sigma2_a": 1, "sigma2_e": 1, "A": 0},
  "sampler": {"iterations": 3000, "burn_in": 200},
  "sweep": {"axes": [{"name": "A", "from": 0, "to": 1, "count": 5}], "empirical": true}})"},
    };
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"analyze", "s2m"}, {"sample", "s2m"},   {"sample", "adaptive"}, {"verify", "s2m"},
        {"verify", "s3"},   {"optimize", "s3"},  {"optimize", "s2m"},    {"sweep", "sweep"},
    };
    Checks c;
    int identical = 0;
    for (const auto& [command, name] : runs) {
        const fs::path cfg = root / (name + ".json");
        std::ofstream(cfg) << configs.at(name);
        const fs::path out_dir = root / (command + "_" + name);
        std::vector<std::string> args = {command, "--config", cfg.string(), "--out", out_dir.string()};
        if (command == "sweep") args.insert(args.end(), {"--threads", "4"});
        int first_code = -1;
        int second_code = -1;
        const auto first = cli_snapshot(args, out_dir, first_code);
        const auto second = cli_snapshot(args, out_dir, second_code);
        const bool same = first == second && first_code == second_code;
        c.require(first_code == 0, command + " " + name + " exit " + std::to_string(first_code));
        c.require(same, command + " " + name + " outputs differ");
        if (same && first_code == 0) ++identical;
    }
    c.note(std::to_string(identical) + "/" + std::to_string(runs.size()) + " invocations byte-identical");
    return c.verdict();
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"two-block rate equals the scan-operator oracle", two_block_rates},
        {"two-level closed forms equal the oracle", two_level_formulas},
        {"scalar benchmark rates", scalar_benchmark},
        {"multigrid independence of the two-level chain", multigrid_independence},
        {"mixed-effects rate, reduction, invariance", mixed_effects},
        {"linear-model orthogonality condition", linear_model_condition},
        {"partial centering rate and one-step exactness", partial_centering},
        {"three-level optimal coefficients", three_level_optimum},
        {"parameterization strategy", parameterization_strategy},
        {"CLI reproducibility", cli_reproducibility},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!v.pass) ++failed;
        std::printf("%s %2zu %s [%.1fs]: %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), secs,
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
