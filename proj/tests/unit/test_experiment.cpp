#include <doctest.h>

#include <cmath>

#include "gibbsrate/error.hpp"
#include "gibbsrate/experiment.hpp"
#include "support.hpp"

using namespace gibbsrate;

namespace {

Model make_model(ModelSpec spec, std::uint64_t seed = 1) {
    Rng rng(seed, 1);
    Dataset data = synthesize_data(spec, rng);
    return Model{std::move(spec), std::move(data)};
}

SamplerConfig chain(int iterations, std::uint64_t seed = 2) {
    SamplerConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = 1000;
    cfg.seed = seed;
    return cfg;
}

MixedEffectsSpec intercept_regression() {
    MixedEffectsSpec spec;
    spec.I = 20;
    spec.J = 4;
    spec.p = 1;
    spec.X = Matrix::Ones(80, 1);
    spec.sigma2_a = 1.0;
    spec.sigma2_e = 1.0;
    return spec;
}

const double* detail(const RateReport& r, const std::string& name) {
    for (const auto& [k, v] : r.details)
        if (k == name) return &v;
    return nullptr;
}

}  // namespace

TEST_CASE("model metadata") {
    const ModelSpec s2m = TwoLevelVectorSpec{5, 3, SymPD::identity(2), SymPD::identity(2), Parameterization::NonCentered};
    const ModelSpec s3 = ThreeLevelSpec{2, 3, 4, 1, 1, 1, 0, 0, 0};
    CHECK(model_type(s2m) == "s2m");
    CHECK(model_type(s3) == "s3");
    CHECK(model_type(ModelSpec{PartialTwoLevelSpec{3, 2, 1, 1, 0}}) == "s2_partial");
    CHECK(data_arity(s2m) == 2);
    CHECK(data_arity(s3) == 3);
    CHECK(data_extent(s3) == std::vector<int>{2, 3, 4});
    CHECK(response_dim(s2m) == 2);
    CHECK(slow_families(s2m) == std::vector<std::string>{"bar"});
    CHECK(exact_families(s2m) == std::vector<std::string>{"delta"});
    CHECK(slow_families(s3) == std::vector<std::string>{"delta0", "delta1"});
    CHECK(exact_families(s3) == std::vector<std::string>{"delta2"});

    const Model m = make_model(s2m);
    CHECK_NOTHROW(check_data(s2m, m.data));
    const Dataset short_data(2, {{0, 0, 0}}, Matrix::Zero(1, 2));
    CHECK_THROWS_AS(check_data(s2m, short_data), Error);
}

TEST_CASE("analytic and oracle rates agree for every closed form") {
    const std::vector<ModelSpec> specs = {
        TwoLevelVectorSpec{6, 3, SymPD::scalar(2.0), SymPD::scalar(1.0), Parameterization::NonCentered},
        TwoLevelVectorSpec{6, 3, SymPD::scalar(2.0), SymPD::scalar(1.0), Parameterization::Centered},
        intercept_regression(),
        two_level_linear_model(6, 3, 2.0, 1.0, Parameterization::NonCentered),
        two_level_linear_model(6, 3, 2.0, 1.0, Parameterization::Centered),
        PartialTwoLevelSpec{6, 3, 2.0, 1.0, 0.4},
    };
    for (const auto& spec : specs) {
        const Model model = make_model(spec);
        const RateReport r = analyze(model);
        REQUIRE(r.analytic_rate.has_value());
        CHECK(*r.abs_diff() < 1e-10);
        CHECK(r.oracle_rate == doctest::Approx(oracle_rate(model)));
    }
    // the Kronecker linear model and the scalar two-level model share their rate
    CHECK(*analytic_rate(two_level_linear_model(6, 3, 2.0, 1.0, Parameterization::NonCentered)) ==
          doctest::Approx(*analytic_rate(specs[0])));
}

TEST_CASE("three-level analysis reports the optimum") {
    const Model model = make_model(ThreeLevelSpec{3, 2, 2, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0});
    const RateReport r = analyze(model);
    CHECK_FALSE(r.analytic_rate.has_value());
    CHECK(r.oracle_rate > 0.5);
    REQUIRE(detail(r, "optimal_A") != nullptr);
    REQUIRE(detail(r, "slow_family_oracle") != nullptr);
    CHECK(*detail(r, "slow_family_oracle") <= r.oracle_rate + 1e-12);

    const OptimizeResult opt = optimize(model.spec);
    REQUIRE(opt.optimal_ABC.has_value());
    ThreeLevelSpec best = std::get<ThreeLevelSpec>(model.spec);
    best.A = opt.optimal_ABC->A;
    best.B = opt.optimal_ABC->B;
    best.C = opt.optimal_ABC->C;
    CHECK(oracle_rate(Model{best, model.data}) < 1e-10);
    CHECK(std::abs(opt.correlations_at_optimum->r1) < 1e-12);
}

TEST_CASE("optimize covers the two-level models only") {
    const OptimizeResult s2 =
        optimize(TwoLevelVectorSpec{5, 2, SymPD::scalar(3.0), SymPD::scalar(1.0), Parameterization::NonCentered});
    REQUIRE(s2.choice.has_value());
    CHECK(s2.choice->kind == ParamKind::Centered);
    const OptimizeResult p = optimize(PartialTwoLevelSpec{5, 2, 1.0, 1.0, 0.0});
    CHECK(*p.optimal_A == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(optimize(intercept_regression()), Error);
}

TEST_CASE("empirical rate tracks the analytic rate") {
    const Model model = make_model(PartialTwoLevelSpec{20, 4, 1.0, 1.0, 0.0});
    const ChainTrace trace = run_chain(*make_kernel(model), chain(100000), "s2_partial");
    const EmpiricalRate e = empirical_rate(model.spec, trace.states);
    CHECK(std::abs(e.estimate - 0.8) < 0.02);
    const RateReport r = analyze(model, trace.states);
    REQUIRE(r.empirical.has_value());
    CHECK(r.empirical->estimate == doctest::Approx(e.estimate));
}

TEST_CASE("decomposition verification passes on every model") {
    const std::vector<ModelSpec> specs = {
        TwoLevelVectorSpec{8, 3, SymPD::scalar(1.0), SymPD::scalar(1.0), Parameterization::NonCentered},
        intercept_regression(),
        two_level_linear_model(8, 3, 1.0, 1.0, Parameterization::Centered),
        PartialTwoLevelSpec{8, 3, 1.0, 1.0, 0.3},
        ThreeLevelSpec{3, 3, 2, 1.0, 1.0, 1.0, 0.2, 0.2, 0.2},
    };
    for (const auto& spec : specs) {
        CAPTURE(model_type(spec));
        const VerifyReport rep = decomposition_verify(make_model(spec), chain(30000));
        CHECK(rep.structural_applicable);
        CHECK(rep.structural_pass);
        CHECK(rep.structural_cross_block <= 1e-10 * rep.structural_scale);
        CHECK(rep.statistical_pass);
        CHECK_FALSE(rep.independence.empty());
        REQUIRE(rep.empirical.has_value());
        CHECK(std::abs(rep.empirical->estimate - rep.oracle_rate) < 0.05);
    }
}

TEST_CASE("verification of a random linear design is marked not applicable") {
    GeneralLMSpec spec;
    Rng rng(81);
    spec.X1 = support::gaussian_matrix(rng, 2, 30);
    spec.X2 = support::gaussian_matrix(rng, 4, 30);
    const VerifyReport rep = decomposition_verify(make_model(spec), chain(3000));
    CHECK_FALSE(rep.structural_applicable);
    REQUIRE(rep.condition_holds.has_value());
    CHECK_FALSE(*rep.condition_holds);
    CHECK(*rep.condition_violation > 0.1);
}

TEST_CASE("verification detects a chain that is not the model's sampler") {
    const Model model = make_model(PartialTwoLevelSpec{8, 3, 1.0, 1.0, 0.3});
    Rng rng(82);
    Matrix noise = support::gaussian_matrix(rng, 20000, 9);
    // μ and a single group effect share a component, which couples bar and delta
    const Vector common = support::gaussian_matrix(rng, 20000, 1).col(0);
    noise.col(0) += common;
    noise.col(1) += common;
    const VerifyReport rep = decomposition_verify(model, noise);
    CHECK_FALSE(rep.statistical_pass);
}
