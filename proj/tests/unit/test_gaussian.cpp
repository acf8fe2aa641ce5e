#include <doctest.h>

#include "gibbsrate/error.hpp"
#include "gibbsrate/gaussian.hpp"
#include "support.hpp"

using namespace gibbsrate;
using support::max_abs;

namespace {

/// Conditional law from the covariance: m_b + Σ_br Σ_rr⁻¹ (x_r − m_r), Σ_bb − Σ_br Σ_rr⁻¹ Σ_rb.
struct CovConditional {
    Matrix gain;
    Matrix cov;
};

CovConditional conditional_from_cov(const Matrix& s, Index start, Index size) {
    const Index n = s.rows();
    std::vector<Index> rest;
    for (Index k = 0; k < n; ++k)
        if (k < start || k >= start + size) rest.push_back(k);
    Matrix s_br(size, rest.size());
    Matrix s_rr(rest.size(), rest.size());
    for (Index a = 0; a < static_cast<Index>(rest.size()); ++a) {
        s_br.col(a) = s.block(start, rest[a], size, 1);
        for (Index b = 0; b < static_cast<Index>(rest.size()); ++b) s_rr(a, b) = s(rest[a], rest[b]);
    }
    CovConditional c;
    c.gain = s_br * s_rr.inverse();
    c.cov = s.block(start, start, size, size) - c.gain * s_br.transpose();
    return c;
}

}  // namespace

TEST_CASE("layout validation") {
    CHECK_NOTHROW(validate_layout({{"x", 0, 2}, {"y", 2, 1}}, 3));
    CHECK_THROWS_AS(validate_layout({{"x", 0, 2}, {"y", 3, 1}}, 4), Error);
    CHECK_THROWS_AS(validate_layout({{"x", 0, 2}, {"x", 2, 1}}, 3), Error);
    CHECK_THROWS_AS(validate_layout({{"x", 0, 2}}, 3), Error);
}

TEST_CASE("from_canonical solves for the mean") {
    Matrix q(2, 2);
    q << 2, 1, 1, 3;
    Vector h(2);
    h << 1, 2;
    const auto g = BlockedGaussian::from_canonical(h, SymPD(q), {{"x", 0, 1}, {"y", 1, 1}});
    CHECK(max_abs(q * g.mean() - h) < 1e-14);
    CHECK(max_abs(g.covariance() * q - Matrix::Identity(2, 2)) < 1e-14);
    CHECK_THROWS_AS(g.block("z"), Error);
    CHECK(g.block_names() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("conditional updates agree with the covariance-form conditional") {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const Index d1 = support::uniform_int(rng, 1, 3);
        const Index d2 = support::uniform_int(rng, 1, 3);
        const Index d3 = support::uniform_int(rng, 1, 2);
        const Matrix s = support::random_spd(rng, d1 + d2 + d3);
        const auto target = support::target_from_covariance(s, {d1, d2, d3});
        const AffineUpdate up = conditional_update(target, "b1");
        const CovConditional oracle = conditional_from_cov(s, d1, d2);
        CHECK(max_abs(up.gain - oracle.gain) < 1e-9 * (1 + max_abs(oracle.gain)));
        CHECK(max_abs(up.noise_cov - oracle.cov) < 1e-9 * (1 + max_abs(oracle.cov)));
        const Matrix ll = up.noise_chol * up.noise_chol.transpose();
        CHECK(max_abs(ll - up.noise_cov) < 1e-10 * (1 + max_abs(oracle.cov)));
    }
}

TEST_CASE("scan operator columns are the noiseless sweep of basis states") {
    Rng rng(8);
    const Matrix s = support::random_spd(rng, 5);
    const auto target = support::target_from_covariance(s, {2, 1, 2});
    const std::vector<std::string> order{"b2", "b0", "b1"};
    const Matrix op = scan_operator(target, order);
    for (Index k = 0; k < 5; ++k) {
        Vector x = Vector::Unit(5, k);
        for (const auto& name : order) {
            const AffineUpdate up = conditional_update(target, name);
            x.segment(up.target.start, up.target.size) = up.gain * [&] {
                Vector rest(5 - up.target.size);
                Index at = 0;
                for (Index j = 0; j < 5; ++j)
                    if (j < up.target.start || j >= up.target.start + up.target.size) rest(at++) = x(j);
                return rest;
            }();
        }
        CHECK(max_abs(op.col(k) - x) < 1e-12);
    }
    CHECK_THROWS_AS(scan_operator(target, {"b0", "b1"}), Error);
    CHECK_THROWS_AS(scan_operator(target, {"b0", "b1", "b1"}), Error);
    CHECK_THROWS_AS(scan_operator(target, {"b0", "b1", "zz"}), Error);
}

TEST_CASE("two-block rate equals the oracle on random targets") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const Index d1 = support::uniform_int(rng, 1, 4);
        const Index d2 = support::uniform_int(rng, 1, 4);
        const Matrix s = support::random_spd(rng, d1 + d2, 0.05);
        const auto target = support::target_from_covariance(s, {d1, d2});
        const double lemma = two_block_rate(SymPD(s.topLeftCorner(d1, d1)), s.topRightCorner(d1, d2),
                                            SymPD(s.bottomRightCorner(d2, d2)));
        CHECK(std::abs(lemma - l2_rate_oracle(target, {"b0", "b1"})) <= 1e-10);
        CHECK(std::abs(lemma - two_block_rate(target)) <= 1e-10);
        // the rate does not depend on which block goes first
        CHECK(std::abs(lemma - l2_rate_oracle(target, {"b1", "b0"})) <= 1e-10);
    }
}

TEST_CASE("independent blocks give rate zero; an inconsistent joint is rejected") {
    Matrix s = Matrix::Zero(3, 3);
    s.diagonal() << 1, 2, 3;
    const auto target = support::target_from_covariance(s, {1, 2});
    CHECK(l2_rate_oracle(target, {"b0", "b1"}) == doctest::Approx(0.0));
    Matrix s12(1, 1);
    s12 << 2.0;
    CHECK_THROWS_AS(two_block_rate(SymPD::scalar(1.0), s12, SymPD::scalar(1.0)), Error);
    CHECK_THROWS_AS(two_block_rate(support::target_from_covariance(s, {1, 1, 1})), Error);
}

TEST_CASE("perfectly correlated scalar pair has rate near one") {
    Matrix s(2, 2);
    s << 1, 0.999, 0.999, 1;
    const auto target = support::target_from_covariance(s, {1, 1});
    CHECK(l2_rate_oracle(target, {"b0", "b1"}) == doctest::Approx(0.999 * 0.999).epsilon(1e-9));
}

TEST_CASE("linear marginal matches T Σ Tᵀ") {
    Rng rng(4);
    const Matrix s = support::random_spd(rng, 4);
    Vector mean(4);
    mean << 1, -2, 0.5, 3;
    const BlockedGaussian g(mean, SymPD(Matrix(s.inverse())), {{"x", 0, 4}});
    const Matrix t = support::gaussian_matrix(rng, 2, 4);
    const BlockedGaussian m = g.linear_marginal(t, {{"u", 0, 1}, {"v", 1, 1}});
    CHECK(max_abs(m.covariance() - t * s * t.transpose()) < 1e-9);
    CHECK(max_abs(m.mean() - t * mean) < 1e-12);
}

TEST_CASE("transformed precision is the precision of F x") {
    Rng rng(6);
    const Matrix s = support::random_spd(rng, 3);
    const SymPD q(Matrix(s.inverse()));
    const Matrix f = support::gaussian_matrix(rng, 3, 3) + 3.0 * Matrix::Identity(3, 3);
    const Matrix expected = (f * s * f.transpose()).inverse();
    CHECK(max_abs(transformed_precision(q, f) - expected) < 1e-9 * max_abs(expected));
    CHECK_THROWS_AS(transformed_precision(q, Matrix::Ones(3, 3)), Error);
}

TEST_CASE("exact sampler reproduces mean and covariance") {
    Rng rng(12);
    const Matrix s = support::random_spd(rng, 3);
    Vector mean(3);
    mean << 1, 2, 3;
    const BlockedGaussian g(mean, SymPD(Matrix(s.inverse())), {{"x", 0, 3}});
    const ExactSampler sampler(g);
    const int n = 100000;
    Matrix draws(n, 3);
    for (int i = 0; i < n; ++i) draws.row(i) = sampler.draw(rng).transpose();
    const Vector m = draws.colwise().mean();
    const Matrix c = (draws.rowwise() - m.transpose()).transpose() * (draws.rowwise() - m.transpose()) / (n - 1);
    for (Index k = 0; k < 3; ++k) CHECK(std::abs(m(k) - mean(k)) < 5.0 * std::sqrt(s(k, k) / n));
    CHECK(max_abs(c - s) < 0.05 * max_abs(s));
}
