#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gibbsrate/gaussian.hpp"
#include "gibbsrate/linalg.hpp"
#include "gibbsrate/samplers.hpp"

namespace gibbsrate {

enum class RateMethod { AR1Fit, AutocovSlope };

std::string_view to_string(RateMethod m) noexcept;

struct RateEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;  // NaN when the trace is too short for 20 batches
    int lag_window = 1;
    RateMethod method = RateMethod::AR1Fit;
    bool above_one = false;  // Monte Carlo noise pushed the estimate past 1
};

struct Ar1Fit {
    Matrix B;
    RateEstimate rate;
};

/// Least-squares AR(1) fit of a T x d functional trace; the rate is the spectral radius of B̂.
Ar1Fit fit_ar1(const Matrix& trace);

/// Sample autocorrelation of one series at lag k.
double autocorrelation(const Vector& series, Index lag);

/// corr(a_t, b_{t+lag}) over the overlapping window; negative lags shift a instead.
double cross_correlation(const Vector& a, const Vector& b, Index lag);

struct IndependenceReport {
    double max_abs_correlation = 0.0;
    double threshold = 0.0;  // z √v / √N at the worst pair
    double z = 4.0;
    double base_threshold = 0.0;  // z / √N
    double variance_inflation = 1.0;  // v at the worst pair
    Index n_tests = 0;
    double familywise_bound = 0.0;  // Bonferroni bound on a false failure: n_tests · P(|Z| > z)
    Index worst_first = -1;
    Index worst_second = -1;
    Index worst_lag = 0;
    bool pass = true;
};

/**
 * All cross-correlations between columns of `first` and `second` at lags
 * -max_lag..max_lag. Each pair is compared with z√v/√N, where
 * v = max(1, 1 + 2Σ_k ρ_first(k) ρ_second(k)) is Bartlett's variance factor
 * for two independent stationary series (k = 1..200). When either series
 * is white, v ≈ 1 and the threshold is the plain z/√N.
 */
IndependenceReport independence_test(const Matrix& first, const Matrix& second, int max_lag, double z = 4.0);

struct OneStepReport {
    std::vector<double> lag1;  // per monitored functional
    double lag1_threshold = 0.0;
    bool lag1_pass = true;
    std::vector<double> ks_statistic;
    std::vector<double> ks_pvalue;
    double ks_level = 0.0;  // per-coordinate level 0.01 / m
    bool ks_pass = true;
    bool pass = true;
};

/// Two-sided Kolmogorov–Smirnov p-value of a sample against the standard normal.
double ks_normal_pvalue(std::vector<double> sample, double* statistic = nullptr);

/**
 * Tests that one sweep of `kernel` is an exact draw from `target` for the
 * monitored functionals (rows of `monitor`): (a) lag-1 autocorrelations of
 * an N-sweep stationary chain lie within 3/√N of zero; (b) outputs of one
 * sweep started at mean + 3 sd pass a per-coordinate KS test at 0.01/m.
 */
OneStepReport one_step_exactness(const SweepKernel& kernel, const BlockedGaussian& target, const Matrix& monitor,
                                 int N, std::uint64_t seed);

}  // namespace gibbsrate
