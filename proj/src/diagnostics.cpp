#include "gibbsrate/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gibbsrate/error.hpp"

namespace gibbsrate {

std::string_view to_string(RateMethod m) noexcept {
    return m == RateMethod::AR1Fit ? "ar1_fit" : "autocov_slope";
}

namespace {

constexpr int kBatches = 20;
constexpr Index kInflationLags = 200;

Matrix ar1_coefficients(const Matrix& trace) {
    const Matrix centered = trace.rowwise() - trace.colwise().mean();
    const Index T = centered.rows();
    const Matrix past = centered.topRows(T - 1);
    const Matrix next = centered.bottomRows(T - 1);
    // next ≈ past · Bᵀ
    const Matrix bt = past.completeOrthogonalDecomposition().solve(next);
    return bt.transpose();
}

double normal_tail(double z) { return std::erfc(z / std::sqrt(2.0)); }

}  // namespace

Ar1Fit fit_ar1(const Matrix& trace) {
    const Index T = trace.rows();
    const Index d = trace.cols();
    if (d < 1 || T < 10 * d || T < 3) throw Error(ErrorKind::TooShort, "AR(1) fit needs at least 10·d rows");
    Ar1Fit out;
    out.B = ar1_coefficients(trace);
    out.rate.estimate = spectral_radius(out.B);
    out.rate.above_one = out.rate.estimate > 1.0;

    const Index batch = T / kBatches;
    if (batch >= 10 * d && batch >= 3) {
        Vector rates(kBatches);
        for (int k = 0; k < kBatches; ++k) rates(k) = spectral_radius(ar1_coefficients(trace.middleRows(k * batch, batch)));
        const double mean = rates.mean();
        const double var = (rates.array() - mean).square().sum() / (kBatches - 1);
        out.rate.standard_error = std::sqrt(var / kBatches);
    } else {
        out.rate.standard_error = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double autocorrelation(const Vector& series, Index lag) { return cross_correlation(series, series, lag); }

double cross_correlation(const Vector& a, const Vector& b, Index lag) {
    if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "series lengths differ");
    const Index n = a.size();
    const Index k = std::abs(lag);
    if (k >= n) return 0.0;
    const Vector ac = a.array() - a.mean();
    const Vector bc = b.array() - b.mean();
    const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    if (denom == 0.0) return 0.0;
    const double num = lag >= 0 ? ac.head(n - k).dot(bc.tail(n - k)) : ac.tail(n - k).dot(bc.head(n - k));
    return num / denom;
}

IndependenceReport independence_test(const Matrix& first, const Matrix& second, int max_lag, double z) {
    if (first.rows() != second.rows()) throw Error(ErrorKind::LengthMismatch, "traces have different lengths");
    if (max_lag < 0) throw Error(ErrorKind::InvalidSpec, "max_lag must be >= 0");
    IndependenceReport rep;
    rep.z = z;
    const Index N = first.rows();
    rep.base_threshold = N > 0 ? z / std::sqrt(static_cast<double>(N)) : 0.0;
    rep.threshold = rep.base_threshold;
    const Index window = std::min<Index>(kInflationLags, N / 10);
    const auto acf = [&](const Matrix& m) {
        Matrix out(window, m.cols());
        for (Index c = 0; c < m.cols(); ++c)
            for (Index k = 0; k < window; ++k) out(k, c) = autocorrelation(m.col(c), k + 1);
        return out;
    };
    const Matrix acf_first = acf(first);
    const Matrix acf_second = acf(second);
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < first.cols(); ++i) {
        for (Index j = 0; j < second.cols(); ++j) {
            const double v = std::max(1.0, 1.0 + 2.0 * acf_first.col(i).dot(acf_second.col(j)));
            const double limit = rep.base_threshold * std::sqrt(v);
            for (int lag = -max_lag; lag <= max_lag; ++lag) {
                const double c = std::abs(cross_correlation(first.col(i), second.col(j), lag));
                ++rep.n_tests;
                rep.max_abs_correlation = std::max(rep.max_abs_correlation, c);
                if (c / limit > worst_excess) {
                    worst_excess = c / limit;
                    rep.threshold = limit;
                    rep.variance_inflation = v;
                    rep.worst_first = i;
                    rep.worst_second = j;
                    rep.worst_lag = lag;
                }
            }
        }
    }
    rep.familywise_bound = std::min(1.0, static_cast<double>(rep.n_tests) * normal_tail(z));
    rep.pass = rep.n_tests == 0 || worst_excess <= 1.0;
    return rep;
}

double ks_normal_pvalue(std::vector<double> sample, double* statistic) {
    const std::size_t n = sample.size();
    if (n == 0) throw Error(ErrorKind::TooShort, "KS test needs a sample");
    std::sort(sample.begin(), sample.end());
    double d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double cdf = 0.5 * std::erfc(-sample[k] / std::sqrt(2.0));
        d = std::max({d, cdf - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - cdf});
    }
    if (statistic) *statistic = d;
    // Asymptotic Kolmogorov distribution with the Stephens small-sample correction.
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 0.2) return 1.0;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        p += term;
        if (std::abs(term) < 1e-16) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

OneStepReport one_step_exactness(const SweepKernel& kernel, const BlockedGaussian& target, const Matrix& monitor,
                                 int N, std::uint64_t seed) {
    if (kernel.dim() != target.dim() || monitor.cols() != target.dim()) {
        throw Error(ErrorKind::DimMismatch, "kernel, target and monitor dimensions differ");
    }
    if (N < 2) throw Error(ErrorKind::TooShort, "one-step test needs N >= 2");
    const Index m = monitor.rows();
    OneStepReport rep;
    const Matrix cov = target.covariance();
    const Vector f_mean = monitor * target.mean();
    const Vector f_sd = (monitor * cov * monitor.transpose()).diagonal().cwiseSqrt();

    // (a) stationary chain started from an exact draw
    Rng chain_rng(seed, 0);
    Vector state = ExactSampler(target).draw(chain_rng);
    Matrix functionals(N, m);
    for (int t = 0; t < N; ++t) {
        kernel.sweep(state, chain_rng);
        functionals.row(t) = (monitor * state).transpose();
    }
    rep.lag1_threshold = 3.0 / std::sqrt(static_cast<double>(N));
    for (Index c = 0; c < m; ++c) {
        const double r = autocorrelation(functionals.col(c), 1);
        rep.lag1.push_back(r);
        if (std::abs(r) > rep.lag1_threshold) rep.lag1_pass = false;
    }

    // (b) one sweep from a fixed far-off start, replicated N times
    Rng rep_rng(seed, 1);
    const Vector start = target.mean() + 3.0 * cov.diagonal().cwiseSqrt();
    std::vector<std::vector<double>> samples(static_cast<std::size_t>(m));
    for (auto& s : samples) s.reserve(static_cast<std::size_t>(N));
    for (int t = 0; t < N; ++t) {
        Vector x = start;
        kernel.sweep(x, rep_rng);
        const Vector f = monitor * x;
        for (Index c = 0; c < m; ++c) samples[c].push_back((f(c) - f_mean(c)) / f_sd(c));
    }
    rep.ks_level = m > 0 ? 0.01 / static_cast<double>(m) : 0.01;
    for (Index c = 0; c < m; ++c) {
        double stat = 0.0;
        const double p = ks_normal_pvalue(samples[c], &stat);
        rep.ks_statistic.push_back(stat);
        rep.ks_pvalue.push_back(p);
        if (p < rep.ks_level) rep.ks_pass = false;
    }
    rep.pass = rep.lag1_pass && rep.ks_pass;
    return rep;
}

}  // namespace gibbsrate
