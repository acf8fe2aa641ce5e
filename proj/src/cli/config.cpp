#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gibbsrate/cli.hpp"
#include "gibbsrate/error.hpp"

namespace gibbsrate::cli {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, where + ": " + what);
}

/// Object view that remembers which keys were read, so leftovers can be rejected.
class Section {
public:
    Section(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) bad(where_, "expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
    [[nodiscard]] const std::string& where() const { return where_; }

    const Json* find(const std::string& key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const Json& get(const std::string& key) {
        const Json* v = find(key);
        if (!v) bad(where_, "missing key '" + key + "'");
        return *v;
    }

    [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!used_.count(item.key())) bad(where_, "unknown key '" + item.key() + "'");
        }
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> used_;
};

double as_double(const Json& v, const std::string& where) {
    if (!v.is_number()) bad(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(where, "expected a finite number");
    return x;
}

int as_int(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) bad(where, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < -1'000'000'000 || x > 1'000'000'000) bad(where, "integer out of range");
    return static_cast<int>(x);
}

std::uint64_t as_u64(const Json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        bad(where, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

bool as_bool(const Json& v, const std::string& where) {
    if (!v.is_boolean()) bad(where, "expected true or false");
    return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& where) {
    if (!v.is_string()) bad(where, "expected a string");
    return v.get<std::string>();
}

double number(Section& s, const std::string& key) { return as_double(s.get(key), s.path(key)); }
double number_or(Section& s, const std::string& key, double fallback) {
    const Json* v = s.find(key);
    return v ? as_double(*v, s.path(key)) : fallback;
}
int integer(Section& s, const std::string& key) { return as_int(s.get(key), s.path(key)); }

/// Number -> 1x1, flat array -> diagonal, nested array -> full matrix.
Matrix as_matrix(const Json& v, const std::string& where) {
    if (v.is_number()) return Matrix::Constant(1, 1, as_double(v, where));
    if (!v.is_array() || v.empty()) bad(where, "expected a number, a list or a list of rows");
    if (!v.front().is_array()) {
        Vector d(static_cast<Index>(v.size()));
        for (std::size_t k = 0; k < v.size(); ++k) d(static_cast<Index>(k)) = as_double(v[k], where);
        return d.asDiagonal();
    }
    const std::size_t cols = v.front().size();
    Matrix m(static_cast<Index>(v.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
        if (!v[r].is_array() || v[r].size() != cols) bad(where, "rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = as_double(v[r][c], where);
    }
    return m;
}

Matrix as_rows(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty() || !v.front().is_array()) bad(where, "expected a list of rows");
    return as_matrix(v, where);
}

SymPD as_sympd(const Json& v, const std::string& where) {
    try {
        return SymPD(as_matrix(v, where));
    } catch (const Error& e) {
        bad(where, e.what());
    }
}

Parameterization parameterization(Section& s) {
    const Json* v = s.find("parameterization");
    if (!v) return Parameterization::NonCentered;
    const std::string p = as_string(*v, s.path("parameterization"));
    if (p == "noncentered") return Parameterization::NonCentered;
    if (p == "centered") return Parameterization::Centered;
    bad(s.path("parameterization"), "expected 'noncentered' or 'centered'");
}

Matrix gaussian_matrix(Rng& rng, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
}

bool is_optimal(const Json* v) { return v && v->is_string() && v->get<std::string>() == "optimal"; }

ModelSpec parse_s2m(Section& s) {
    TwoLevelVectorSpec spec{integer(s, "I"), integer(s, "J"), as_sympd(s.get("sigma_a"), s.path("sigma_a")),
                            as_sympd(s.get("sigma_e"), s.path("sigma_e")), parameterization(s)};
    return spec;
}

ModelSpec parse_sr(Section& s, std::uint64_t seed) {
    MixedEffectsSpec spec;
    spec.I = integer(s, "I");
    spec.J = integer(s, "J");
    spec.sigma2_a = number(s, "sigma2_a");
    spec.sigma2_e = number(s, "sigma2_e");
    const Json* sigma0 = s.find("sigma0");
    const Index n = static_cast<Index>(std::max(spec.I, 0)) * std::max(spec.J, 0);
    const Json* x = s.find("X");
    const Json* design = s.find("design");
    if ((x != nullptr) == (design != nullptr)) bad(s.where(), "give exactly one of 'X' and 'design'");
    if (x) {
        spec.X = as_rows(*x, s.path("X"));
    } else {
        const std::string d = as_string(*design, s.path("design"));
        if (d == "intercept") {
            spec.X = Matrix::Ones(n, 1);
        } else if (d == "random") {
            const int p = integer(s, "p");
            if (p < 1) bad(s.path("p"), "must be >= 1");
            Rng rng(seed, streams::design);
            spec.X = gaussian_matrix(rng, n, p);
        } else {
            bad(s.path("design"), "expected 'intercept' or 'random'");
        }
    }
    spec.p = static_cast<int>(spec.X.cols());
    if (spec.X.rows() != n) bad(s.path("X"), "needs I*J rows");
    // A number is a multiple of the identity; "flat" (or no key) is the improper flat prior.
    if (sigma0 && sigma0->is_number()) {
        const double c = as_double(*sigma0, s.path("sigma0"));
        if (!(c > 0.0)) bad(s.path("sigma0"), "must be positive");
        spec.sigma0 = SymPD(c * Matrix::Identity(spec.p, spec.p));
    } else if (sigma0 && !(sigma0->is_string() && sigma0->get<std::string>() == "flat")) {
        spec.sigma0 = as_sympd(*sigma0, s.path("sigma0"));
    }
    return spec;
}

ModelSpec parse_lm(Section& s, std::uint64_t seed) {
    const std::string design = s.has("design") ? as_string(s.get("design"), s.path("design")) : "explicit";
    GeneralLMSpec spec;
    if (design == "two_level") {
        spec = two_level_linear_model(integer(s, "I"), integer(s, "J"), number(s, "sigma2_a"), number(s, "sigma2_e"),
                                      parameterization(s));
        return spec;
    }
    if (design == "random") {
        const int n = integer(s, "n");
        const int p1 = integer(s, "p1");
        const int p2 = integer(s, "p2");
        if (n < 1 || p1 < 1 || p2 < 1) bad(s.where(), "n, p1 and p2 must be positive");
        Rng rng(seed, streams::design);
        spec.X1 = gaussian_matrix(rng, p1, n);
        spec.X2 = gaussian_matrix(rng, p2, n);
    } else if (design == "explicit") {
        spec.X1 = as_rows(s.get("X1"), s.path("X1"));
        spec.X2 = as_rows(s.get("X2"), s.path("X2"));
    } else {
        bad(s.path("design"), "expected 'two_level', 'random' or an explicit X1/X2");
    }
    spec.tau1 = number_or(s, "tau1", 1.0);
    spec.tau2 = number_or(s, "tau2", 1.0);
    spec.tau_e = number_or(s, "tau_e", 1.0);
    spec.param = parameterization(s);
    if (const Json* m = s.find("M")) spec.M = as_rows(*m, s.path("M"));
    return spec;
}

ModelSpec parse_partial(Section& s) {
    PartialTwoLevelSpec spec{integer(s, "I"), integer(s, "J"), number(s, "sigma2_a"), number(s, "sigma2_e"), 0.0};
    const Json* a = s.find("A");
    if (is_optimal(a)) {
        spec.A = optimal_A(spec.sigma2_a, spec.sigma2_e, spec.J);
    } else if (a) {
        spec.A = as_double(*a, s.path("A"));
    }
    return spec;
}

ModelSpec parse_s3(Section& s) {
    ThreeLevelSpec spec;
    spec.I = integer(s, "I");
    spec.J = integer(s, "J");
    spec.K = integer(s, "K");
    const double I = spec.I;
    const double IJ = I * spec.J;
    const double IJK = IJ * spec.K;
    // Each level takes either a variance or a rescaled precision.
    const auto variance = [&](const char* var, const char* tau, double scale) {
        const bool has_var = s.has(var);
        const bool has_tau = s.has(tau);
        if (has_var == has_tau) bad(s.where(), std::string("give exactly one of '") + var + "' and '" + tau + "'");
        if (has_var) return number(s, var);
        const double t = number(s, tau);
        if (!(t > 0.0)) bad(s.path(tau), "must be positive");
        return scale / t;
    };
    spec.sigma2_a = variance("sigma2_a", "tau_a", I);
    spec.sigma2_b = variance("sigma2_b", "tau_b", IJ);
    spec.sigma2_e = variance("sigma2_e", "tau_e", IJK);
    const Json* a = s.find("A");
    const Json* b = s.find("B");
    const Json* c = s.find("C");
    if (is_optimal(a) || is_optimal(b) || is_optimal(c)) {
        if (!(is_optimal(a) && is_optimal(b) && is_optimal(c))) bad(s.where(), "'optimal' applies to A, B and C together");
        spec.validate();
        const RescaledPrecisions t = rescaled_precisions(spec);
        const ThreeLevelCoefficients opt = optimal_ABC(t.tau_a, t.tau_b, t.tau_e);
        spec.A = opt.A;
        spec.B = opt.B;
        spec.C = opt.C;
    } else {
        spec.A = a ? as_double(*a, s.path("A")) : 0.0;
        spec.B = b ? as_double(*b, s.path("B")) : 0.0;
        spec.C = c ? as_double(*c, s.path("C")) : 0.0;
    }
    return spec;
}

SamplerConfig parse_sampler(Section& s, SamplerKind& kind, VariancePriors& priors) {
    SamplerConfig cfg;
    cfg.iterations = integer(s, "iterations");
    if (s.has("burn_in")) cfg.burn_in = integer(s, "burn_in");
    if (s.has("thinning")) cfg.thinning = integer(s, "thinning");
    if (const Json* init = s.find("init")) {
        if (init->is_array()) {
            cfg.init = InitPolicy::Given;
            cfg.initial_state.resize(static_cast<Index>(init->size()));
            for (std::size_t k = 0; k < init->size(); ++k) {
                cfg.initial_state(static_cast<Index>(k)) = as_double((*init)[k], s.path("init"));
            }
        } else {
            const std::string p = as_string(*init, s.path("init"));
            if (p == "zero") {
                cfg.init = InitPolicy::Zero;
            } else if (p == "prior") {
                cfg.init = InitPolicy::Prior;
            } else {
                bad(s.path("init"), "expected 'zero', 'prior' or a state vector");
            }
        }
    }
    if (const Json* k = s.find("kind")) {
        const std::string name = as_string(*k, s.path("kind"));
        if (name == "model") {
            kind = SamplerKind::Model;
        } else if (name == "generic") {
            kind = SamplerKind::Generic;
        } else if (name == "adaptive") {
            kind = SamplerKind::Adaptive;
        } else {
            bad(s.path("kind"), "expected 'model', 'generic' or 'adaptive'");
        }
    }
    const auto prior = [&](const char* key, InverseGammaPrior& target) {
        const Json* v = s.find(key);
        if (!v) return;
        if (!v->is_array() || v->size() != 2) bad(s.path(key), "expected [shape, scale]");
        target.shape = as_double((*v)[0], s.path(key));
        target.scale = as_double((*v)[1], s.path(key));
        if (!(target.shape > 0.0 && target.scale > 0.0)) bad(s.path(key), "shape and scale must be positive");
    };
    prior("prior_sigma2_a", priors.group);
    prior("prior_sigma2_e", priors.residual);
    try {
        cfg.validate();
    } catch (const Error& e) {
        bad(s.where(), e.what());
    }
    return cfg;
}

SweepPlan parse_sweep(Section& s) {
    SweepPlan plan;
    if (s.has("empirical")) plan.empirical = as_bool(s.get("empirical"), s.path("empirical"));
    const Json& axes = s.get("axes");
    if (!axes.is_array()) bad(s.path("axes"), "expected a list of axes");
    std::set<std::string> names;
    double points = axes.empty() ? 0.0 : 1.0;
    for (std::size_t k = 0; k < axes.size(); ++k) {
        Section ax(axes[k], s.path("axes") + "[" + std::to_string(k) + "]");
        SweepAxis axis;
        axis.name = as_string(ax.get("name"), ax.path("name"));
        if (!names.insert(axis.name).second) bad(ax.where(), "duplicate axis '" + axis.name + "'");
        if (const Json* v = ax.find("values")) {
            if (!v->is_array()) bad(ax.path("values"), "expected a list");
            for (const auto& x : *v) axis.values.push_back(as_double(x, ax.path("values")));
            if (ax.has("from") || ax.has("to") || ax.has("count")) bad(ax.where(), "use either 'values' or from/to/count");
        } else {
            const double from = number(ax, "from");
            const double to = number(ax, "to");
            const int count = integer(ax, "count");
            if (count < 0 || static_cast<std::size_t>(count) > kMaxGridPoints) bad(ax.path("count"), "out of range");
            for (int i = 0; i < count; ++i) {
                axis.values.push_back(count == 1 ? from : from + (to - from) * i / (count - 1));
            }
        }
        ax.finish();
        points *= static_cast<double>(axis.values.size());
        plan.axes.push_back(std::move(axis));
    }
    if (points > static_cast<double>(kMaxGridPoints)) bad(s.where(), "grid exceeds 10000 points");
    return plan;
}

}  // namespace

std::size_t SweepPlan::size() const {
    if (axes.empty()) return 0;
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
}

std::vector<double> grid_point(const SweepPlan& plan, std::size_t k) {
    std::vector<double> out(plan.axes.size());
    for (std::size_t a = plan.axes.size(); a-- > 0;) {
        const auto& vals = plan.axes[a].values;
        out[a] = vals[k % vals.size()];
        k /= vals.size();
    }
    return out;
}

Json apply_axes(const Json& model, const SweepPlan& plan, const std::vector<double>& values) {
    static const std::set<std::string> kIntegerKeys{"I", "J", "K", "n", "p", "p1", "p2"};
    Json out = model;
    for (std::size_t a = 0; a < plan.axes.size(); ++a) {
        std::string key = plan.axes[a].name;
        double v = values[a];
        if (key.rfind("log10_", 0) == 0) {
            key = key.substr(6);
            v = std::pow(10.0, v);
        }
        if (kIntegerKeys.count(key)) {
            if (v != std::round(v)) bad("sweep", "axis '" + key + "' needs integer values");
            out[key] = static_cast<std::int64_t>(std::llround(v));
        } else {
            out[key] = v;
        }
        for (const char* level : {"_a", "_b", "_e"}) {
            const std::string tau = std::string("tau") + level;
            const std::string var = std::string("sigma2") + level;
            if (out.value("type", "") != "s3") continue;
            if (key == tau) out.erase(var);
            if (key == var) out.erase(tau);
        }
    }
    return out;
}

ModelSpec parse_model(const Json& section, std::uint64_t seed) {
    Section s(section, "model");
    const std::string type = as_string(s.get("type"), "model.type");
    ModelSpec spec = [&]() -> ModelSpec {
        try {
            if (type == "s2m") return parse_s2m(s);
            if (type == "sr") return parse_sr(s, seed);
            if (type == "lm") return parse_lm(s, seed);
            if (type == "s2_partial") return parse_partial(s);
            if (type == "s3") return parse_s3(s);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::DegenerateCondition || e.kind() == ErrorKind::InvalidConfig) throw;
            bad("model", e.what());
        }
        bad("model.type", "unknown model type '" + type + "'");
    }();
    s.finish();
    try {
        validate(spec);
    } catch (const Error& e) {
        bad("model", e.what());
    }
    return spec;
}

RunConfig parse_config(const Json& doc, std::optional<std::uint64_t> seed_override) {
    Section root(doc, "config");
    RunConfig cfg;
    if (const Json* seed = root.find("seed")) cfg.seed = as_u64(*seed, "config.seed");
    if (seed_override) cfg.seed = *seed_override;

    cfg.model_json = root.get("model");
    cfg.model = parse_model(cfg.model_json, cfg.seed);

    if (const Json* data = root.find("data")) {
        Section d(*data, "data");
        const Json* path = d.find("path");
        const Json* synth = d.find("synthesize");
        if (path && synth && as_bool(*synth, "data.synthesize")) bad("data", "give either 'path' or synthesize");
        if (path) cfg.data.path = as_string(*path, "data.path");
        if (!path && synth && !as_bool(*synth, "data.synthesize")) bad("data", "no data source given");
        d.finish();
    }

    if (const Json* sampler = root.find("sampler")) {
        Section s(*sampler, "sampler");
        cfg.sampler = parse_sampler(s, cfg.sampler_kind, cfg.priors);
        s.finish();
    }

    if (const Json* analysis = root.find("analysis")) {
        Section a(*analysis, "analysis");
        if (const Json* v = a.find("empirical")) cfg.analysis.empirical = as_bool(*v, "analysis.empirical");
        if (const Json* v = a.find("trace")) cfg.analysis.trace = as_string(*v, "analysis.trace");
        if (const Json* v = a.find("max_lag")) cfg.analysis.max_lag = as_int(*v, "analysis.max_lag");
        if (const Json* v = a.find("z")) cfg.analysis.z = as_double(*v, "analysis.z");
        if (cfg.analysis.max_lag < 0) bad("analysis.max_lag", "must be >= 0");
        if (!(cfg.analysis.z > 0.0)) bad("analysis.z", "must be positive");
        a.finish();
    }

    if (const Json* sweep = root.find("sweep")) {
        Section s(*sweep, "sweep");
        cfg.sweep = parse_sweep(s);
        s.finish();
        if (cfg.sweep->size() > 0) {
            // Rejects axis names the model does not know before any work starts.
            parse_model(apply_axes(cfg.model_json, *cfg.sweep, grid_point(*cfg.sweep, 0)), cfg.seed);
        }
    }
    root.finish();

    const bool needs_chain = cfg.analysis.empirical || (cfg.sweep && cfg.sweep->empirical);
    if (needs_chain && !cfg.sampler) bad("config", "empirical rates need a 'sampler' section");
    if (cfg.sampler_kind == SamplerKind::Adaptive) {
        const auto* s2m = std::get_if<TwoLevelVectorSpec>(&cfg.model);
        if (!s2m || s2m->ell() != 1) bad("sampler.kind", "the adaptive sampler needs a scalar s2m model");
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc, seed_override);
}

}  // namespace gibbsrate::cli
