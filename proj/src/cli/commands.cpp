#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gibbsrate/cli.hpp"
#include "gibbsrate/dataset_io.hpp"
#include "gibbsrate/error.hpp"

namespace gibbsrate::cli {

namespace {

namespace fs = std::filesystem;

Json number_or_null(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json empirical_json(const std::optional<EmpiricalRate>& e) {
    if (!e) return nullptr;
    return Json{{"estimate", number_or_null(e->estimate)},
                {"standard_error", number_or_null(e->standard_error)},
                {"method", e->method}};
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

fs::path output_dir(const Options& opts) {
    const fs::path dir = opts.out_dir.value_or(fs::path("."));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string());
    return dir;
}

/// Prints to stdout and, when --out is given, stores the same bytes under `name`.
void emit(const std::string& text, const Options& opts, const std::string& name, std::ostream& out) {
    out << text;
    if (opts.out_dir) write_file(output_dir(opts) / name, text);
}

Dataset load_data(const RunConfig& cfg, const ModelSpec& spec, std::uint64_t stream) {
    if (cfg.data.path) {
        Dataset d = read_dataset_csv(fs::path(*cfg.data.path));
        check_data(spec, d);
        return d;
    }
    Rng rng(cfg.seed, stream);
    return synthesize_data(spec, rng);
}

SamplerConfig chain_config(const RunConfig& cfg, std::uint64_t stream) {
    SamplerConfig sc = *cfg.sampler;
    sc.seed = cfg.seed;
    sc.stream = stream;
    return sc;
}

ChainTrace run_configured_chain(const RunConfig& cfg, const Model& model, std::uint64_t stream,
                                std::vector<AdaptiveDecision>* decisions = nullptr) {
    const SamplerConfig sc = chain_config(cfg, stream);
    const std::string tag = model_type(model.spec);
    switch (cfg.sampler_kind) {
        case SamplerKind::Model: return run_chain(*make_kernel(model), sc, tag);
        case SamplerKind::Generic: {
            const BlockedGaussian post = full_posterior(model);
            return run_chain(GenericScanKernel(post, scan_order(post)), sc, tag + ":generic");
        }
        case SamplerKind::Adaptive: {
            AdaptiveRun run = run_adaptive_unknown_variance(model.data, cfg.priors, sc);
            if (decisions) *decisions = std::move(run.decisions);
            return std::move(run.trace);
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown sampler kind");
}

/// Location-only trace for rate work: the adaptive sampler also records the variances.
Matrix location_states(const ChainTrace& trace, const Model& model) {
    const Index dim = full_posterior(model).dim();
    if (trace.dim() < dim) throw Error(ErrorKind::DimMismatch, "trace does not match the model");
    return trace.states.leftCols(dim);
}

Matrix read_model_trace(const std::string& path, const Model& model) {
    const ChainTrace trace = read_trace_csv(fs::path(path));
    const BlockedGaussian post = full_posterior(model);
    if (trace.dim() != post.dim()) throw Error(ErrorKind::DimMismatch, "trace columns do not match the model");
    return trace.states;
}

std::string sampler_name(SamplerKind k) {
    switch (k) {
        case SamplerKind::Model: return "model";
        case SamplerKind::Generic: return "generic";
        case SamplerKind::Adaptive: return "adaptive";
    }
    return "model";
}

Json sampler_json(const SamplerConfig& sc, SamplerKind kind) {
    Json j{{"kind", sampler_name(kind)},
           {"iterations", sc.iterations},
           {"burn_in", sc.burn_in},
           {"thinning", sc.thinning},
           {"seed", sc.seed},
           {"stream", sc.stream}};
    switch (sc.init) {
        case InitPolicy::Zero: j["init"] = "zero"; break;
        case InitPolicy::Prior: j["init"] = "prior"; break;
        case InitPolicy::Given: j["init"] = std::vector<double>(sc.initial_state.begin(), sc.initial_state.end()); break;
    }
    return j;
}

Json independence_json(const IndependenceReport& r) {
    return Json{{"max_abs_correlation", r.max_abs_correlation},
                {"threshold", r.threshold},
                {"base_threshold", r.base_threshold},
                {"variance_inflation", r.variance_inflation},
                {"z", r.z},
                {"n_tests", r.n_tests},
                {"familywise_bound", r.familywise_bound},
                {"worst_lag", r.worst_lag},
                {"pass", r.pass}};
}

std::string csv_field(const std::optional<double>& v) {
    return v && std::isfinite(*v) ? format_double(*v) : std::string();
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidConfig:
        case ErrorKind::InvalidSpec:
        case ErrorKind::InvalidPrior: return 2;
        default: return 3;
    }
}

int cmd_analyze(const RunConfig& cfg, const Options& opts, std::ostream& out) {
    const Model model{cfg.model, load_data(cfg, cfg.model, streams::data)};
    std::optional<Matrix> states;
    if (cfg.analysis.trace) {
        states = read_model_trace(*cfg.analysis.trace, model);
    } else if (cfg.analysis.empirical) {
        states = location_states(run_configured_chain(cfg, model, streams::chain), model);
    }
    const RateReport rep = analyze(model, states);

    Json details = Json::object();
    for (const auto& [k, v] : rep.details) details[k] = number_or_null(v);
    const Json j{{"command", "analyze"},
                 {"model", model_type(cfg.model)},
                 {"analytic", number_or_null(rep.analytic_rate)},
                 {"oracle", number_or_null(rep.oracle_rate)},
                 {"abs_diff", number_or_null(rep.abs_diff())},
                 {"empirical", empirical_json(rep.empirical)},
                 {"recommendation", rep.recommendation ? Json(*rep.recommendation) : Json(nullptr)},
                 {"details", details},
                 {"notes", rep.notes}};
    emit(j.dump(2) + "\n", opts, "analyze.json", out);
    return 0;
}

int cmd_sample(const RunConfig& cfg, const Options& opts, std::ostream& out) {
    if (!cfg.sampler) throw Error(ErrorKind::InvalidConfig, "sample needs a 'sampler' section");
    const Model model{cfg.model, load_data(cfg, cfg.model, streams::data)};
    const fs::path dir = output_dir(opts);

    std::string data_path;
    if (cfg.data.path) {
        data_path = *cfg.data.path;
    } else {
        data_path = "data.csv";
        write_dataset_csv(dir / data_path, model.data);
    }

    std::vector<AdaptiveDecision> decisions;
    const ChainTrace trace = run_configured_chain(cfg, model, streams::chain, &decisions);
    write_trace_csv(dir / "trace.csv", trace);

    if (cfg.sampler_kind == SamplerKind::Adaptive) {
        std::ostringstream csv;
        csv << "sweep,sigma2_a,sigma2_e,rho_noncentered,rho_centered,choice\n";
        for (const auto& d : decisions) {
            csv << d.iteration << ',' << format_double(d.sigma2_a) << ',' << format_double(d.sigma2_e) << ','
                << format_double(d.rho_noncentered) << ',' << format_double(d.rho_centered) << ','
                << to_string(d.choice) << '\n';
        }
        write_file(dir / "decisions.csv", csv.str());
    }

    const Json meta{{"seed", cfg.seed},
                    {"model", trace.model},
                    {"model_digest", fnv1a_hex(cfg.model_json.dump())},
                    {"config", {{"model", cfg.model_json}, {"sampler", sampler_json(chain_config(cfg, streams::chain), cfg.sampler_kind)}}},
                    {"data_path", data_path},
                    {"data_synthesized", !cfg.data.path.has_value()},
                    {"rows", trace.length()},
                    {"columns", trace.dim()}};
    write_file(dir / "trace.json", meta.dump(2) + "\n");

    const Json summary{{"command", "sample"},
                       {"trace", (dir / "trace.csv").generic_string()},
                       {"metadata", (dir / "trace.json").generic_string()},
                       {"rows", trace.length()}};
    out << summary.dump(2) << '\n';
    return 0;
}

int cmd_verify(const RunConfig& cfg, const Options& opts, std::ostream& out) {
    const Model model{cfg.model, load_data(cfg, cfg.model, streams::data)};
    Matrix states;
    if (cfg.analysis.trace) {
        states = read_model_trace(*cfg.analysis.trace, model);
    } else {
        if (!cfg.sampler) throw Error(ErrorKind::InvalidConfig, "verify needs a 'sampler' section or analysis.trace");
        states = location_states(run_configured_chain(cfg, model, streams::chain), model);
    }
    VerifyOptions vo;
    vo.max_lag = cfg.analysis.max_lag;
    vo.z = cfg.analysis.z;
    const VerifyReport rep = decomposition_verify(model, states, vo);

    Json j{{"command", "verify"}, {"model", rep.model}};
    j["structural"] = Json{{"applicable", rep.structural_applicable},
                           {"max_cross_block", rep.structural_cross_block},
                           {"scale", rep.structural_scale},
                           {"pass", rep.structural_pass}};
    if (rep.condition_holds) {
        j["condition"] = Json{{"holds", *rep.condition_holds}, {"violation", number_or_null(rep.condition_violation)}};
    }
    j["rates"] = Json{{"analytic", number_or_null(rep.analytic_rate)},
                      {"oracle", number_or_null(rep.oracle_rate)},
                      {"empirical", empirical_json(rep.empirical)}};
    Json iid = Json::array();
    for (const auto& f : rep.residual_iid) {
        iid.push_back(Json{{"family", f.family},
                           {"max_abs_lag1", f.max_abs_lag1},
                           {"threshold", f.threshold},
                           {"pass", f.pass}});
    }
    j["residual_iid"] = iid;
    Json ind = Json::array();
    for (const auto& f : rep.independence) {
        Json e{{"first", f.first}, {"second", f.second}};
        e.update(independence_json(f.report));
        ind.push_back(e);
    }
    j["independence"] = ind;
    j["statistical_pass"] = rep.statistical_pass;
    j["notes"] = rep.notes;
    emit(j.dump(2) + "\n", opts, "verify.json", out);
    return rep.structural_pass ? 0 : 1;
}

int cmd_optimize(const RunConfig& cfg, const Options& opts, std::ostream& out) {
    const OptimizeResult res = optimize(cfg.model);
    Json j{{"command", "optimize"}, {"model", model_type(cfg.model)}};
    if (res.choice) {
        Json c{{"kind", std::string(to_string(res.choice->kind))},
               {"rho_noncentered", res.choice->rho_noncentered},
               {"rho_centered", res.choice->rho_centered}};
        if (res.choice->component_wise) {
            c["componentwise"] = Json{{"centered", *res.choice->component_wise},
                                      {"rate", number_or_null(res.choice->component_wise_rate)}};
        }
        j["choice"] = c;
    }
    if (res.optimal_A) j["optimal_A"] = *res.optimal_A;
    if (res.precisions) {
        j["tau"] = Json{{"a", res.precisions->tau_a}, {"b", res.precisions->tau_b}, {"e", res.precisions->tau_e}};
    }
    if (res.optimal_ABC) j["optimal"] = Json{{"A", res.optimal_ABC->A}, {"B", res.optimal_ABC->B}, {"C", res.optimal_ABC->C}};
    if (res.correlations_at_optimum) {
        const auto& r = *res.correlations_at_optimum;
        j["correlations_at_optimum"] = Json{{"r1", r.r1}, {"r2", r.r2}, {"r3", r.r3}};
    }
    emit(j.dump(2) + "\n", opts, "optimize.json", out);
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const Options& opts, std::ostream& out) {
    if (!cfg.sweep) throw Error(ErrorKind::InvalidConfig, "sweep needs a 'sweep' section");
    const SweepPlan& plan = *cfg.sweep;
    const std::size_t n = plan.size();

    struct Row {
        std::optional<double> analytic, oracle, empirical, empirical_se;
    };
    std::vector<Row> rows(n);
    std::vector<std::exception_ptr> failures(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                const ModelSpec spec = parse_model(apply_axes(cfg.model_json, plan, grid_point(plan, k)), cfg.seed);
                const Model model{spec, load_data(cfg, spec, streams::sweep_data + k)};
                Row& row = rows[k];
                row.analytic = analytic_rate(spec);
                row.oracle = oracle_rate(model);
                if (plan.empirical) {
                    const SamplerConfig sc = chain_config(cfg, streams::sweep_chain + k);
                    const ChainTrace trace = run_chain(*make_kernel(model), sc, model_type(spec));
                    try {
                        const EmpiricalRate e = empirical_rate(spec, trace.states);
                        row.empirical = e.estimate;
                        row.empirical_se = e.standard_error;
                    } catch (const Error& e) {
                        if (e.kind() != ErrorKind::TooShort) throw;
                    }
                }
            } catch (...) {
                failures[k] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    std::ostringstream csv;
    csv << "point";
    for (const auto& a : plan.axes) csv << ',' << a.name;
    csv << ",analytic,oracle,empirical,empirical_se\n";
    for (std::size_t k = 0; k < n; ++k) {
        csv << k;
        for (const double v : grid_point(plan, k)) csv << ',' << format_double(v);
        const Row& r = rows[k];
        csv << ',' << csv_field(r.analytic) << ',' << csv_field(r.oracle) << ',' << csv_field(r.empirical) << ','
            << csv_field(r.empirical_se) << '\n';
    }
    emit(csv.str(), opts, "sweep.csv", out);
    return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Convergence rates of Gibbs samplers for Gaussian hierarchical models", "gibbsrate"};
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    app.add_option("command", command, "analyze | sample | verify | optimize | sweep")
        ->required()
        ->check(CLI::IsMember({"analyze", "sample", "verify", "optimize", "sweep"}));
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", out_dir, "directory for output files");
    app.add_option("--seed", seed, "override the configured seed");
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::Range(1u, 256u));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    Options opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    opts.threads = threads;
    try {
        const RunConfig cfg = load_config(config_path, seed);
        if (command == "analyze") return cmd_analyze(cfg, opts, out);
        if (command == "sample") return cmd_sample(cfg, opts, out);
        if (command == "verify") return cmd_verify(cfg, opts, out);
        if (command == "optimize") return cmd_optimize(cfg, opts, out);
        return cmd_sweep(cfg, opts, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const Json::exception& e) {
        err << "error: InvalidConfig: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace gibbsrate::cli
