#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gibbsrate/diagnostics.hpp"
#include "gibbsrate/models.hpp"
#include "gibbsrate/multigrid.hpp"
#include "gibbsrate/rates.hpp"
#include "gibbsrate/samplers.hpp"

namespace gibbsrate {

using ModelSpec = std::variant<TwoLevelVectorSpec, MixedEffectsSpec, GeneralLMSpec, PartialTwoLevelSpec, ThreeLevelSpec>;

/// "s2m", "sr", "lm", "s2_partial" or "s3".
std::string model_type(const ModelSpec& spec);
void validate(const ModelSpec& spec);
/// Number of index columns in the model's data file.
int data_arity(const ModelSpec& spec);
/// Index extents the data must cover exactly once.
std::vector<int> data_extent(const ModelSpec& spec);
Index response_dim(const ModelSpec& spec);

struct Model {
    ModelSpec spec;
    Dataset data;
};

Dataset synthesize_data(const ModelSpec& spec, Rng& rng);
/// Checks that `data` is balanced and shaped for `spec`; throws DimMismatch otherwise.
void check_data(const ModelSpec& spec, const Dataset& data);

BlockedGaussian full_posterior(const Model& model);
/// Block order of the model's own sampler.
std::vector<std::string> scan_order(const BlockedGaussian& posterior);
std::unique_ptr<SweepKernel> make_kernel(const Model& model);

FunctionalFrame model_frame(const ModelSpec& spec);
/// Families whose joint chain carries the whole convergence rate.
std::vector<std::string> slow_families(const ModelSpec& spec);
/// Families that the theory says are redrawn exactly at every sweep.
std::vector<std::string> exact_families(const ModelSpec& spec);

std::optional<double> analytic_rate(const ModelSpec& spec);
double oracle_rate(const Model& model);

/// Rate of the chain estimated on the stacked slow families of `states` (T x dim).
EmpiricalRate empirical_rate(const ModelSpec& spec, const Matrix& states);

RateReport analyze(const Model& model, const std::optional<Matrix>& empirical_states = std::nullopt);

struct OptimizeResult {
    std::optional<ParamChoice> choice;
    std::optional<double> optimal_A;
    std::optional<RescaledPrecisions> precisions;
    std::optional<ThreeLevelCoefficients> optimal_ABC;
    std::optional<PairwiseCorrelations> correlations_at_optimum;
};

OptimizeResult optimize(const ModelSpec& spec);
/// Three-level optimum straight from rescaled precisions.
OptimizeResult optimize_three_level(const RescaledPrecisions& tau);

struct VerifyOptions {
    int max_lag = 5;
    double z = 4.0;
    double structural_tol = 1e-10;  // relative to the largest precision entry
};

struct FamilyIid {
    std::string family;
    double max_abs_lag1 = 0.0;
    double threshold = 0.0;
    bool pass = true;
};

struct FamilyIndependence {
    std::string first;
    std::string second;
    IndependenceReport report;
};

struct VerifyReport {
    std::string model;
    double structural_cross_block = 0.0;
    double structural_scale = 1.0;
    bool structural_applicable = true;  // false for linear models violating the orthogonality condition
    bool structural_pass = true;
    std::optional<double> condition_violation;  // linear models only
    std::optional<bool> condition_holds;
    std::optional<double> analytic_rate;
    double oracle_rate = 0.0;
    std::optional<EmpiricalRate> empirical;
    std::vector<FamilyIid> residual_iid;
    std::vector<FamilyIndependence> independence;
    bool statistical_pass = true;
    std::vector<std::string> notes;
};

/// Runs the model's sampler and checks the multigrid decomposition on the resulting trace.
VerifyReport decomposition_verify(const Model& model, const SamplerConfig& cfg, const VerifyOptions& opts = {});
/// Same checks on an existing trace (T x dim, in the sampler's layout).
VerifyReport decomposition_verify(const Model& model, const Matrix& states, const VerifyOptions& opts = {});

}  // namespace gibbsrate
