#include "gibbsrate/models.hpp"

#include <cmath>
#include <string>

#include "gibbsrate/error.hpp"
#include "gibbsrate/multigrid.hpp"

namespace gibbsrate {

std::string_view to_string(Parameterization p) noexcept {
    return p == Parameterization::Centered ? "centered" : "noncentered";
}

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw Error(ErrorKind::InvalidSpec, message);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

std::vector<Block> scalar_blocks(std::initializer_list<std::pair<const char*, Index>> spec) {
    std::vector<Block> out;
    Index start = 0;
    for (const auto& [name, size] : spec) {
        out.push_back({name, start, size});
        start += size;
    }
    return out;
}

Vector fixed_or(const FixedParams& fixed, const std::string& name, Index size, const auto& draw) {
    if (auto it = fixed.find(name); it != fixed.end()) {
        if (it->second.size() != size) {
            throw Error(ErrorKind::DimMismatch, "fixed parameter '" + name + "' has wrong size");
        }
        return it->second;
    }
    return draw();
}

Matrix lower_chol(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    return llt.matrixL();
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec validation

void TwoLevelVectorSpec::validate() const {
    require(I >= 2, "two-level model needs I >= 2");
    require(J >= 1, "two-level model needs J >= 1");
    if (sigma_a.dim() != sigma_e.dim()) {
        throw Error(ErrorKind::DimMismatch, "Σa and Σe dimensions differ");
    }
}

Matrix MixedEffectsSpec::xbar() const {
    Matrix out = Matrix::Zero(I, p);
    for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) out.row(i) += X.row(i * J + j);
    }
    return out / static_cast<double>(J);
}

Matrix MixedEffectsSpec::prior_precision() const {
    return sigma0 ? sigma0->inverse() : Matrix::Zero(p, p);
}

Matrix MixedEffectsSpec::beta_precision() const {
    return prior_precision() + X.transpose() * X / sigma2_e;
}

void MixedEffectsSpec::validate() const {
    require(I >= 1 && J >= 1 && p >= 1, "mixed-effects model needs positive I, J, p");
    require(p < I, "mixed-effects model needs p < I");
    require(positive_finite(sigma2_a) && positive_finite(sigma2_e), "variances must be positive");
    if (X.rows() != static_cast<Index>(I) * J || X.cols() != p) {
        throw Error(ErrorKind::DimMismatch, "covariate matrix must be (I*J) x p");
    }
    if (sigma0 && sigma0->dim() != p) {
        throw Error(ErrorKind::DimMismatch, "Σ0 must be p x p");
    }
    if (rank_svd(xbar()).rank < p) {
        throw Error(ErrorKind::RankDeficient, "group-mean covariate matrix has rank below p");
    }
}

void ThreeLevelSpec::validate() const {
    require(I >= 1 && J >= 1 && K >= 1, "three-level model needs positive I, J, K");
    require(positive_finite(sigma2_a) && positive_finite(sigma2_b) && positive_finite(sigma2_e),
            "variances must be positive");
    require(std::isfinite(A) && std::isfinite(B) && std::isfinite(C), "coefficients must be finite");
}

void PartialTwoLevelSpec::validate() const {
    require(I >= 1 && J >= 1, "two-level model needs positive I, J");
    require(positive_finite(sigma2_a) && positive_finite(sigma2_e), "variances must be positive");
    require(std::isfinite(A), "A must be finite");
}

void GeneralLMSpec::validate() const {
    require(X1.rows() >= 1 && X2.rows() >= 1 && X1.cols() >= 1, "design matrices must be non-empty");
    if (X1.cols() != X2.cols()) {
        throw Error(ErrorKind::DimMismatch, "X1 and X2 must have the same number of columns");
    }
    require(std::isfinite(tau1) && tau1 >= 0.0 && std::isfinite(tau2) && tau2 >= 0.0,
            "prior precisions must be non-negative");
    require(positive_finite(tau_e), "noise precision must be positive");
    if (M && (M->rows() != p2() || M->cols() != p1())) {
        throw Error(ErrorKind::DimMismatch, "M must be p2 x p1");
    }
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(int arity, std::vector<Key> index, Matrix y)
    : arity_(arity), index_(std::move(index)), y_(std::move(y)) {
    if (arity_ < 1 || arity_ > 3) {
        throw Error(ErrorKind::DimMismatch, "index arity must be 1, 2 or 3");
    }
    if (static_cast<Index>(index_.size()) != y_.rows() || y_.rows() == 0 || y_.cols() == 0) {
        throw Error(ErrorKind::DimMismatch, "index map and observations disagree or are empty");
    }
    int n_groups = 0;
    int n_second = 0;
    for (const auto& key : index_) {
        for (int d = 0; d < arity_; ++d) {
            if (key[d] < 0) throw Error(ErrorKind::DimMismatch, "negative index");
        }
        n_groups = std::max(n_groups, key[0] + 1);
        if (arity_ >= 2) n_second = std::max(n_second, key[1] + 1);
    }
    stats_.grand_mean = y_.colwise().mean().transpose();
    stats_.group_means = Matrix::Zero(n_groups, ell());
    Vector counts = Vector::Zero(n_groups);
    for (Index r = 0; r < y_.rows(); ++r) {
        stats_.group_means.row(index_[r][0]) += y_.row(r);
        counts(index_[r][0]) += 1.0;
    }
    for (int g = 0; g < n_groups; ++g) {
        if (counts(g) > 0) stats_.group_means.row(g) /= counts(g);
    }
    if (arity_ == 3) {
        stats_.cell_means = Matrix::Zero(static_cast<Index>(n_groups) * n_second, ell());
        Vector cell_counts = Vector::Zero(stats_.cell_means.rows());
        for (Index r = 0; r < y_.rows(); ++r) {
            const Index c = static_cast<Index>(index_[r][0]) * n_second + index_[r][1];
            stats_.cell_means.row(c) += y_.row(r);
            cell_counts(c) += 1.0;
        }
        for (Index c = 0; c < cell_counts.size(); ++c) {
            if (cell_counts(c) > 0) stats_.cell_means.row(c) /= cell_counts(c);
        }
    }
}

void Dataset::require_balanced(const std::vector<int>& extent, Index ell_expected) const {
    if (static_cast<int>(extent.size()) != arity_) {
        throw Error(ErrorKind::DimMismatch, "dataset index arity does not match the model");
    }
    if (ell_expected != ell()) {
        throw Error(ErrorKind::DimMismatch, "observation dimension does not match the model");
    }
    Index total = 1;
    for (int e : extent) total *= e;
    if (total != size()) {
        throw Error(ErrorKind::DimMismatch, "dataset has " + std::to_string(size()) +
                                                " rows, model expects " + std::to_string(total));
    }
    std::vector<char> seen(static_cast<std::size_t>(total), 0);
    for (const auto& key : index_) {
        Index flat = 0;
        for (int d = 0; d < arity_; ++d) {
            if (key[d] >= extent[d]) throw Error(ErrorKind::DimMismatch, "index out of range");
            flat = flat * extent[d] + key[d];
        }
        if (seen[flat]++) throw Error(ErrorKind::DimMismatch, "duplicate index tuple");
    }
}

// ---------------------------------------------------------------------------
// Synthesis. Draw order: parameter blocks in layout order, then observations
// in row-major index order.

Dataset synthesize(const TwoLevelVectorSpec& spec, Rng& rng, const FixedParams& fixed) {
    spec.validate();
    const Index ell = spec.ell();
    const Matrix la = lower_chol(spec.sigma_a.matrix());
    const Matrix le = lower_chol(spec.sigma_e.matrix());
    const Vector mu = fixed_or(fixed, "mu", ell, [&] { return Vector(Vector::Zero(ell)); });
    const Vector a = fixed_or(fixed, "a", ell * spec.I, [&] {
        Vector out(ell * spec.I);
        for (int i = 0; i < spec.I; ++i) out.segment(ell * i, ell) = la * rng.normals(ell);
        return out;
    });
    std::vector<Dataset::Key> index;
    Matrix y(static_cast<Index>(spec.I) * spec.J, ell);
    for (int i = 0; i < spec.I; ++i) {
        for (int j = 0; j < spec.J; ++j) {
            index.push_back({i, j, 0});
            y.row(i * spec.J + j) = (mu + a.segment(ell * i, ell) + le * rng.normals(ell)).transpose();
        }
    }
    Dataset data(2, std::move(index), std::move(y));
    data.truth["mu"] = mu;
    data.truth["a"] = a;
    return data;
}

Dataset synthesize(const MixedEffectsSpec& spec, Rng& rng, const FixedParams& fixed) {
    spec.validate();
    const Vector beta = fixed_or(fixed, "beta", spec.p, [&] {
        if (!spec.sigma0) return Vector(Vector::Zero(spec.p));
        return Vector(lower_chol(spec.sigma0->matrix()) * rng.normals(spec.p));
    });
    const double sa = std::sqrt(spec.sigma2_a);
    const double se = std::sqrt(spec.sigma2_e);
    const Vector a = fixed_or(fixed, "a", spec.I, [&] { return Vector(sa * rng.normals(spec.I)); });
    std::vector<Dataset::Key> index;
    Matrix y(static_cast<Index>(spec.I) * spec.J, 1);
    for (int i = 0; i < spec.I; ++i) {
        for (int j = 0; j < spec.J; ++j) {
            const Index r = static_cast<Index>(i) * spec.J + j;
            index.push_back({i, j, 0});
            y(r, 0) = spec.X.row(r).dot(beta) + a(i) + se * rng.normal();
        }
    }
    Dataset data(2, std::move(index), std::move(y));
    data.truth["beta"] = beta;
    data.truth["a"] = a;
    return data;
}

Dataset synthesize(const ThreeLevelSpec& spec, Rng& rng, const FixedParams& fixed) {
    spec.validate();
    const Vector mu = fixed_or(fixed, "mu", 1, [&] { return Vector(Vector::Zero(1)); });
    const double sa = std::sqrt(spec.sigma2_a);
    const double sb = std::sqrt(spec.sigma2_b);
    const double se = std::sqrt(spec.sigma2_e);
    const Vector a = fixed_or(fixed, "a", spec.I, [&] {
        Vector out(spec.I);
        for (int i = 0; i < spec.I; ++i) out(i) = spec.A * mu(0) + sa * rng.normal();
        return out;
    });
    const Index nb = static_cast<Index>(spec.I) * spec.J;
    const Vector b = fixed_or(fixed, "b", nb, [&] {
        Vector out(nb);
        for (int i = 0; i < spec.I; ++i) {
            for (int j = 0; j < spec.J; ++j) {
                out(i * spec.J + j) = spec.B * a(i) + spec.C * mu(0) + sb * rng.normal();
            }
        }
        return out;
    });
    std::vector<Dataset::Key> index;
    Matrix y(nb * spec.K, 1);
    const double u = 1.0 - spec.A - spec.C;
    const double v = 1.0 - spec.B;
    Index r = 0;
    for (int i = 0; i < spec.I; ++i) {
        for (int j = 0; j < spec.J; ++j) {
            for (int k = 0; k < spec.K; ++k) {
                index.push_back({i, j, k});
                y(r++, 0) = u * mu(0) + v * a(i) + b(i * spec.J + j) + se * rng.normal();
            }
        }
    }
    Dataset data(3, std::move(index), std::move(y));
    data.truth["mu"] = mu;
    data.truth["a"] = a;
    data.truth["b"] = b;
    return data;
}

Dataset synthesize(const PartialTwoLevelSpec& spec, Rng& rng, const FixedParams& fixed) {
    spec.validate();
    const Vector mu = fixed_or(fixed, "mu", 1, [&] { return Vector(Vector::Zero(1)); });
    const double sa = std::sqrt(spec.sigma2_a);
    const double se = std::sqrt(spec.sigma2_e);
    const Vector a = fixed_or(fixed, "a", spec.I, [&] {
        Vector out(spec.I);
        for (int i = 0; i < spec.I; ++i) out(i) = spec.A * mu(0) + sa * rng.normal();
        return out;
    });
    std::vector<Dataset::Key> index;
    Matrix y(static_cast<Index>(spec.I) * spec.J, 1);
    for (int i = 0; i < spec.I; ++i) {
        for (int j = 0; j < spec.J; ++j) {
            index.push_back({i, j, 0});
            y(i * spec.J + j, 0) = (1.0 - spec.A) * mu(0) + a(i) + se * rng.normal();
        }
    }
    Dataset data(2, std::move(index), std::move(y));
    data.truth["mu"] = mu;
    data.truth["a"] = a;
    return data;
}

Dataset synthesize(const GeneralLMSpec& spec, Rng& rng, const FixedParams& fixed) {
    spec.validate();
    const Index p1 = spec.p1();
    const Index p2 = spec.p2();
    const Vector beta1 = fixed_or(fixed, "beta1", p1, [&] {
        if (spec.tau1 == 0.0) return Vector(Vector::Zero(p1));
        return Vector(rng.normals(p1) / std::sqrt(spec.tau1));
    });
    const Vector beta2 = fixed_or(fixed, "beta2", p2, [&] {
        Vector centre = Vector::Zero(p2);
        if (spec.param == Parameterization::Centered) {
            const Matrix m = spec.M ? *spec.M : solve_M(spec.X1, spec.X2);
            centre = m * beta1;
        }
        if (spec.tau2 == 0.0) return centre;
        return Vector(centre + rng.normals(p2) / std::sqrt(spec.tau2));
    });
    Vector mean = spec.X2.transpose() * beta2;
    if (spec.param == Parameterization::NonCentered) mean += spec.X1.transpose() * beta1;
    const double se = 1.0 / std::sqrt(spec.tau_e);
    std::vector<Dataset::Key> index;
    Matrix y(spec.n(), 1);
    for (Index r = 0; r < spec.n(); ++r) {
        index.push_back({static_cast<int>(r), 0, 0});
        y(r, 0) = mean(r) + se * rng.normal();
    }
    Dataset data(1, std::move(index), std::move(y));
    data.truth["beta1"] = beta1;
    data.truth["beta2"] = beta2;
    return data;
}

// ---------------------------------------------------------------------------
// Posteriors

BlockedGaussian posterior_s2m(const TwoLevelVectorSpec& spec, const Dataset& data) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, spec.ell());
    const Index ell = spec.ell();
    const Index dim = ell * (spec.I + 1);
    const Matrix ae = spec.sigma_a.inverse();
    const Matrix ee = spec.sigma_e.inverse();
    const double I = spec.I;
    const double J = spec.J;
    const auto& st = data.stats();

    Matrix q = Matrix::Zero(dim, dim);
    Vector h = Vector::Zero(dim);
    std::vector<Block> blocks{{"mu", 0, ell}};
    const bool centered = spec.param == Parameterization::Centered;
    for (int i = 0; i < spec.I; ++i) {
        const Index s = ell * (i + 1);
        blocks.push_back({(centered ? "alpha" : "a") + std::to_string(i + 1), s, ell});
        q.block(s, s, ell, ell) = ae + J * ee;
        h.segment(s, ell) = J * ee * st.group_means.row(i).transpose();
        const Matrix cross = centered ? Matrix(-ae) : Matrix(J * ee);
        q.block(0, s, ell, ell) = cross;
        q.block(s, 0, ell, ell) = cross.transpose();
    }
    if (centered) {
        q.topLeftCorner(ell, ell) = I * ae;
    } else {
        q.topLeftCorner(ell, ell) = I * J * ee;
        h.head(ell) = I * J * ee * st.grand_mean;
    }
    return BlockedGaussian::from_canonical(h, SymPD(std::move(q)), std::move(blocks));
}

BlockedGaussian posterior_bar_s2m(const TwoLevelVectorSpec& spec, const Dataset& data) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, spec.ell());
    const Index ell = spec.ell();
    const Matrix ae = spec.sigma_a.inverse();
    const Matrix ee = spec.sigma_e.inverse();
    const double I = spec.I;
    const double J = spec.J;
    const Vector ybar = data.stats().grand_mean;

    Matrix q(2 * ell, 2 * ell);
    Vector h(2 * ell);
    if (spec.param == Parameterization::Centered) {
        q << I * ae, -I * ae, -I * ae, I * ae + I * J * ee;
        h << Vector::Zero(ell), I * J * ee * ybar;
    } else {
        q << I * J * ee, I * J * ee, I * J * ee, I * ae + I * J * ee;
        h << I * J * ee * ybar, I * J * ee * ybar;
    }
    return BlockedGaussian::from_canonical(h, SymPD(std::move(q)), {{"mu", 0, ell}, {"abar", ell, ell}});
}

BlockedGaussian posterior_sr(const MixedEffectsSpec& spec, const Dataset& data) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, 1);
    const Index p = spec.p;
    const Index dim = p + spec.I;
    const double inv_e = 1.0 / spec.sigma2_e;
    const double J = spec.J;
    const Matrix xbar = spec.xbar();

    // y in (i, j) row order, matching the covariate rows
    Vector y(static_cast<Index>(spec.I) * spec.J);
    for (Index r = 0; r < data.size(); ++r) {
        y(data.index()[r][0] * spec.J + data.index()[r][1]) = data.y()(r, 0);
    }

    Matrix q = Matrix::Zero(dim, dim);
    q.topLeftCorner(p, p) = spec.beta_precision();
    q.bottomRightCorner(spec.I, spec.I).diagonal().setConstant(1.0 / spec.sigma2_a + J * inv_e);
    q.bottomLeftCorner(spec.I, p) = J * inv_e * xbar;
    q.topRightCorner(p, spec.I) = J * inv_e * xbar.transpose();
    Vector h(dim);
    h.head(p) = inv_e * spec.X.transpose() * y;
    h.tail(spec.I) = J * inv_e * data.stats().group_means.col(0);
    return BlockedGaussian::from_canonical(h, SymPD(std::move(q)), scalar_blocks({{"beta", p}, {"a", spec.I}}));
}

BlockedGaussian posterior_lm(const GeneralLMSpec& spec, const Dataset& data) {
    spec.validate();
    data.require_balanced({static_cast<int>(spec.n())}, 1);
    const Index p1 = spec.p1();
    const Index p2 = spec.p2();
    Vector y(spec.n());
    for (Index r = 0; r < data.size(); ++r) y(data.index()[r][0]) = data.y()(r, 0);

    Matrix q(p1 + p2, p1 + p2);
    Vector h(p1 + p2);
    const Matrix q22 = spec.tau_e * spec.X2 * spec.X2.transpose() + spec.tau2 * Matrix::Identity(p2, p2);
    if (spec.param == Parameterization::NonCentered) {
        const Matrix q11 = spec.tau_e * spec.X1 * spec.X1.transpose() + spec.tau1 * Matrix::Identity(p1, p1);
        const Matrix q12 = spec.tau_e * spec.X1 * spec.X2.transpose();
        q << q11, q12, q12.transpose(), q22;
        h << spec.tau_e * spec.X1 * y, spec.tau_e * spec.X2 * y;
    } else {
        const Matrix m = spec.M ? *spec.M : solve_M(spec.X1, spec.X2);
        const Matrix q11 = spec.tau2 * m.transpose() * m + spec.tau1 * Matrix::Identity(p1, p1);
        const Matrix q12 = -spec.tau2 * m.transpose();
        q << q11, q12, q12.transpose(), q22;
        h << Vector::Zero(p1), spec.tau_e * spec.X2 * y;
    }
    return BlockedGaussian::from_canonical(h, SymPD(std::move(q)), scalar_blocks({{"beta1", p1}, {"beta2", p2}}));
}

BlockedGaussian posterior_partial2(const PartialTwoLevelSpec& spec, const Dataset& data) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, 1);
    const double ia = 1.0 / spec.sigma2_a;
    const double ie = 1.0 / spec.sigma2_e;
    const double I = spec.I;
    const double J = spec.J;
    const double u = 1.0 - spec.A;
    const Index dim = 1 + spec.I;

    Matrix q = Matrix::Zero(dim, dim);
    q(0, 0) = I * J * ie * u * u + I * ia * spec.A * spec.A;
    q.bottomRightCorner(spec.I, spec.I).diagonal().setConstant(J * ie + ia);
    q.block(0, 1, 1, spec.I).setConstant(J * ie * u - ia * spec.A);
    q.block(1, 0, spec.I, 1).setConstant(J * ie * u - ia * spec.A);
    Vector h(dim);
    h(0) = I * J * ie * u * data.stats().grand_mean(0);
    h.tail(spec.I) = J * ie * data.stats().group_means.col(0);
    return BlockedGaussian::from_canonical(h, SymPD(std::move(q)), scalar_blocks({{"mu", 1}, {"a", spec.I}}));
}

BlockedGaussian posterior_bar_partial2(const PartialTwoLevelSpec& spec, const Dataset& data) {
    spec.validate();
    data.require_balanced({spec.I, spec.J}, 1);
    const double ia = 1.0 / spec.sigma2_a;
    const double ie = 1.0 / spec.sigma2_e;
    const double I = spec.I;
    const double J = spec.J;
    const double u = 1.0 - spec.A;
    const double ybar = data.stats().grand_mean(0);
    Matrix q(2, 2);
    q << I * J * ie * u * u + I * ia * spec.A * spec.A, I * (J * ie * u - ia * spec.A),
        I * (J * ie * u - ia * spec.A), I * (J * ie + ia);
    Vector h(2);
    h << I * J * ie * u * ybar, I * J * ie * ybar;
    return BlockedGaussian::from_canonical(h, SymPD(std::move(q)), scalar_blocks({{"mu", 1}, {"abar", 1}}));
}

BlockedGaussian posterior_s3(const ThreeLevelSpec& spec, const Dataset& data) {
    spec.validate();
    data.require_balanced({spec.I, spec.J, spec.K}, 1);
    const int I = spec.I;
    const int J = spec.J;
    const double K = spec.K;
    const double ia = 1.0 / spec.sigma2_a;
    const double ib = 1.0 / spec.sigma2_b;
    const double ie = 1.0 / spec.sigma2_e;
    const double u = 1.0 - spec.A - spec.C;
    const double v = 1.0 - spec.B;
    const Index nb = static_cast<Index>(I) * J;
    const Index dim = 1 + I + nb;
    const auto a_at = [](int i) { return Index(1 + i); };
    const auto b_at = [&](int i, int j) { return Index(1 + I + static_cast<Index>(i) * J + j); };

    // Sum over k of y_ijk by cell.
    const Matrix& cells = data.stats().cell_means;
    Matrix q = Matrix::Zero(dim, dim);
    Vector h = Vector::Zero(dim);
    q(0, 0) = I * J * K * ie * u * u + I * J * ib * spec.C * spec.C + I * ia * spec.A * spec.A;
    for (int i = 0; i < I; ++i) {
        const Index ai = a_at(i);
        q(ai, ai) = J * K * ie * v * v + J * ib * spec.B * spec.B + ia;
        q(0, ai) = q(ai, 0) = J * K * ie * u * v + J * ib * spec.B * spec.C - ia * spec.A;
        for (int j = 0; j < J; ++j) {
            const Index bij = b_at(i, j);
            const double ysum = K * cells(static_cast<Index>(i) * J + j, 0);
            q(bij, bij) = K * ie + ib;
            q(0, bij) = q(bij, 0) = K * ie * u - ib * spec.C;
            q(ai, bij) = q(bij, ai) = K * ie * v - ib * spec.B;
            h(0) += ie * u * ysum;
            h(ai) += ie * v * ysum;
            h(bij) = ie * ysum;
        }
    }
    return BlockedGaussian::from_canonical(h, SymPD(std::move(q)),
                                           scalar_blocks({{"mu", 1}, {"a", I}, {"b", nb}}));
}

BlockedGaussian posterior_bar_s3(const ThreeLevelSpec& spec, const Dataset& data) {
    const BlockedGaussian full = posterior_s3(spec, data);
    const Index nb = static_cast<Index>(spec.I) * spec.J;
    Matrix map = Matrix::Zero(3, full.dim());
    map(0, 0) = 1.0;
    map.block(1, 1, 1, spec.I).setConstant(1.0 / spec.I);
    map.block(2, 1 + spec.I, 1, nb).setConstant(1.0 / static_cast<double>(nb));
    return full.linear_marginal(map, scalar_blocks({{"mu", 1}, {"abar", 1}, {"bbar", 1}}));
}

RescaledPrecisions rescaled_precisions(const ThreeLevelSpec& spec) {
    spec.validate();
    return {spec.I / spec.sigma2_a, static_cast<double>(spec.I) * spec.J / spec.sigma2_b,
            static_cast<double>(spec.I) * spec.J * spec.K / spec.sigma2_e};
}

GeneralLMSpec two_level_linear_model(int I, int J, double sigma2_a, double sigma2_e, Parameterization param) {
    if (I < 1 || J < 1) throw Error(ErrorKind::InvalidSpec, "I and J must be positive");
    const Index n = static_cast<Index>(I) * J;
    GeneralLMSpec spec;
    spec.X1 = Matrix::Ones(1, n);
    spec.X2 = Matrix::Zero(I, n);
    for (int i = 0; i < I; ++i) spec.X2.block(i, static_cast<Index>(i) * J, 1, J).setOnes();
    spec.tau1 = 0.0;
    spec.tau2 = 1.0 / sigma2_a;
    spec.tau_e = 1.0 / sigma2_e;
    spec.param = param;
    if (param == Parameterization::Centered) spec.M = Matrix::Ones(I, 1);
    return spec;
}

}  // namespace gibbsrate
