#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbsrate/error.hpp"
#include "gibbsrate/experiment.hpp"
#include "gibbsrate/samplers.hpp"

namespace gibbsrate::cli {

using Json = nlohmann::ordered_json;

/// Stream numbers derived from the top-level seed.
namespace streams {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t chain = 2;
inline constexpr std::uint64_t design = 3;
inline constexpr std::uint64_t sweep_data = 1000;                  // + grid index
inline constexpr std::uint64_t sweep_chain = std::uint64_t{1} << 32;  // + grid index
}  // namespace streams

enum class SamplerKind { Model, Generic, Adaptive };

struct DataSource {
    std::optional<std::string> path;  // empty: synthesize from the model
};

struct AnalysisOptions {
    bool empirical = false;
    std::optional<std::string> trace;
    int max_lag = 5;
    double z = 4.0;
};

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

struct SweepPlan {
    std::vector<SweepAxis> axes;
    bool empirical = false;
    [[nodiscard]] std::size_t size() const;
};

struct RunConfig {
    std::uint64_t seed = 0;
    Json model_json;
    ModelSpec model{PartialTwoLevelSpec{}};  // replaced by parse_config
    DataSource data;
    std::optional<SamplerConfig> sampler;
    SamplerKind sampler_kind = SamplerKind::Model;
    VariancePriors priors{};
    AnalysisOptions analysis;
    std::optional<SweepPlan> sweep;
};

inline constexpr std::size_t kMaxGridPoints = 10000;

/// Axis values of grid point k (first axis varies slowest).
std::vector<double> grid_point(const SweepPlan& plan, std::size_t k);
/**
 * Model section with the axis values of one grid point substituted. An axis
 * named `log10_<key>` sets `<key>` to 10^value; setting a three-level
 * `tau_x` replaces `sigma2_x` and vice versa.
 */
Json apply_axes(const Json& model, const SweepPlan& plan, const std::vector<double>& values);

/// Builds a model spec from its config section; `seed` feeds random designs.
ModelSpec parse_model(const Json& section, std::uint64_t seed);
/// Parses a whole config document. Every schema violation throws InvalidConfig.
RunConfig parse_config(const Json& doc, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

struct Options {
    std::optional<std::filesystem::path> out_dir;
    unsigned threads = 1;
};

int cmd_analyze(const RunConfig& cfg, const Options& opts, std::ostream& out);
int cmd_sample(const RunConfig& cfg, const Options& opts, std::ostream& out);
int cmd_verify(const RunConfig& cfg, const Options& opts, std::ostream& out);
int cmd_optimize(const RunConfig& cfg, const Options& opts, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, const Options& opts, std::ostream& out);

/// Exit code for an error kind: 2 for configuration problems, 3 otherwise.
int exit_code_for(ErrorKind kind) noexcept;

/// Full command-line entry point: `<command> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gibbsrate::cli
