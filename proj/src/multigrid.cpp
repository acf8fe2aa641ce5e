#include "gibbsrate/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gibbsrate/error.hpp"

namespace gibbsrate {

OrthoPair build_PL(const Matrix& xbar) {
    const Index I = xbar.rows();
    const Index p = xbar.cols();
    if (p >= I || p == 0) {
        throw Error(ErrorKind::RankDeficient, "build_PL needs 0 < p < I");
    }
    if (rank_svd(xbar).rank < p) {
        throw Error(ErrorKind::RankDeficient, "X̄ does not have full column rank");
    }
    const SymPD gram(xbar.transpose() * xbar);
    OrthoPair out;
    out.P = sym_sqrt_pair(gram).inverse_root.matrix() * xbar.transpose();
    const OrthoMatrix full = orthogonal_complete(out.P);
    out.L = full.matrix().bottomRows(I - p);
    return out;
}

CrossSVD factor_cross(const Matrix& cross, double rel_tol) {
    const RankSvd svd = rank_svd(cross, rel_tol);
    const Index r = svd.rank;
    Matrix b1 = svd.u.leftCols(r).transpose();
    Matrix b2 = svd.v.leftCols(r).transpose();
    OrthoMatrix a1 = orthogonal_complete(b1);
    OrthoMatrix a2 = orthogonal_complete(b2);
    return CrossSVD{std::move(b1), std::move(b2), svd.singular_values.head(r), r, std::move(a1), std::move(a2)};
}

CrossSVD cross_svd(const Matrix& X1, const Matrix& X2, double rel_tol) {
    if (X1.size() == 0 || X2.size() == 0) {
        throw Error(ErrorKind::DimMismatch, "design matrices must be non-empty");
    }
    if (X1.cols() != X2.cols()) {
        throw Error(ErrorKind::DimMismatch, "X1 and X2 must share the observation dimension");
    }
    return factor_cross(X1 * X2.transpose(), rel_tol);
}

ConditionCheck check_orthogonality_condition(const Matrix& X, const OrthoMatrix& A, Index r, double tol) {
    if (A.dim() != X.rows()) {
        throw Error(ErrorKind::DimMismatch, "A must be p x p for a p x n design");
    }
    ConditionCheck out;
    const Index p = X.rows();
    if (r <= 0 || r >= p) return out;
    const Matrix w = X.transpose() * A.matrix().transpose();
    const Vector norms = w.colwise().norm();
    for (Index k1 = 0; k1 < r; ++k1) {
        for (Index k2 = r; k2 < p; ++k2) {
            const double denom = norms(k1) * norms(k2);
            if (denom <= 0.0) continue;
            out.max_violation = std::max(out.max_violation, std::abs(w.col(k1).dot(w.col(k2))) / denom);
        }
    }
    out.holds = out.max_violation <= tol;
    return out;
}

ConditionCheck check_centering_condition(const Matrix& X2, const OrthoMatrix& A2, Index r, double tol) {
    return check_orthogonality_condition(X2, A2, r, tol);
}

Matrix solve_M(const Matrix& X1, const Matrix& X2, double tol) {
    if (X1.cols() != X2.cols()) {
        throw Error(ErrorKind::DimMismatch, "X1 and X2 must share the observation dimension");
    }
    const Matrix lhs = X2.transpose();
    const Matrix rhs = X1.transpose();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(lhs);
    Matrix m = cod.solve(rhs);
    const double residual = (rhs - lhs * m).norm();
    if (residual > tol * X1.norm()) {
        throw Error(ErrorKind::NoSuchM, "X1ᵀ is not in the column space of X2ᵀ (residual " +
                                            std::to_string(residual) + ")");
    }
    return m;
}

// ---------------------------------------------------------------------------

FunctionalFrame::FunctionalFrame(std::vector<std::pair<std::string, Matrix>> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw Error(ErrorKind::DimMismatch, "frame needs at least one family");
    state_dim_ = maps_.front().second.cols();
    Index rows = 0;
    for (const auto& [name, m] : maps_) {
        if (m.cols() != state_dim_) {
            throw Error(ErrorKind::DimMismatch, "family '" + name + "' has the wrong state dimension");
        }
        rows += m.rows();
    }
    if (rows != state_dim_) {
        throw Error(ErrorKind::DimMismatch, "stacked frame is not square");
    }
}

const Matrix& FunctionalFrame::map(std::string_view name) const {
    for (const auto& [n, m] : maps_) {
        if (n == name) return m;
    }
    throw Error(ErrorKind::UnknownBlock, "no functional family named '" + std::string(name) + "'");
}

Index FunctionalFrame::offset(std::string_view name) const {
    Index off = 0;
    for (const auto& [n, m] : maps_) {
        if (n == name) return off;
        off += m.rows();
    }
    throw Error(ErrorKind::UnknownBlock, "no functional family named '" + std::string(name) + "'");
}

Matrix FunctionalFrame::stacked() const {
    Matrix out(state_dim_, state_dim_);
    Index row = 0;
    for (const auto& [name, m] : maps_) {
        out.middleRows(row, m.rows()) = m;
        row += m.rows();
    }
    return out;
}

FunctionalFrame identity_frame(Index dim) { return FunctionalFrame({{"state", Matrix::Identity(dim, dim)}}); }

namespace {

// (μ, ā) and δa_i (i < I-1) for an ℓ-dimensional two-level state (μ, a_1..a_I).
FunctionalFrame two_level_frame(Index I, Index ell) {
    const Index dim = ell * (I + 1);
    Matrix bar = Matrix::Zero(2 * ell, dim);
    Matrix delta = Matrix::Zero((I - 1) * ell, dim);
    for (Index c = 0; c < ell; ++c) {
        bar(c, c) = 1.0;
        for (Index i = 0; i < I; ++i) bar(ell + c, ell * (1 + i) + c) = 1.0 / static_cast<double>(I);
    }
    for (Index i = 0; i + 1 < I; ++i) {
        for (Index c = 0; c < ell; ++c) {
            const Index row = i * ell + c;
            delta.row(row) = -bar.row(ell + c);
            delta(row, ell * (1 + i) + c) += 1.0;
        }
    }
    return FunctionalFrame({{"bar", std::move(bar)}, {"delta", std::move(delta)}});
}

}  // namespace

FunctionalFrame frame_for(const TwoLevelVectorSpec& spec) {
    spec.validate();
    return two_level_frame(spec.I, spec.ell());
}

FunctionalFrame frame_for(const PartialTwoLevelSpec& spec) {
    spec.validate();
    if (spec.I < 2) throw Error(ErrorKind::InvalidSpec, "multigrid frame needs I >= 2");
    return two_level_frame(spec.I, 1);
}

FunctionalFrame frame_for(const MixedEffectsSpec& spec) {
    spec.validate();
    const Index p = spec.p;
    const Index I = spec.I;
    const Matrix xbar = spec.xbar();
    const OrthoPair pl = build_PL(xbar);
    Matrix upper = Matrix::Zero(2 * p, p + I);
    upper.topLeftCorner(p, p).setIdentity();
    upper.bottomRightCorner(p, I) = xbar.transpose();
    Matrix residual = Matrix::Zero(I - p, p + I);
    residual.rightCols(I) = pl.L;
    return FunctionalFrame({{"upper", std::move(upper)}, {"residual", std::move(residual)}});
}

FunctionalFrame frame_for(const GeneralLMSpec& spec, double rel_tol) {
    spec.validate();
    const Index p1 = spec.p1();
    const Index p2 = spec.p2();
    CrossSVD cs = [&] {
        if (spec.param == Parameterization::Centered) {
            const Matrix m = spec.M ? *spec.M : solve_M(spec.X1, spec.X2);
            return factor_cross(m.transpose(), rel_tol);
        }
        return cross_svd(spec.X1, spec.X2, rel_tol);
    }();
    const Index r = cs.r;
    Matrix joint = Matrix::Zero(2 * r, p1 + p2);
    joint.topLeftCorner(r, p1) = cs.A1.matrix().topRows(r);
    joint.bottomRightCorner(r, p2) = cs.A2.matrix().topRows(r);
    Matrix res1 = Matrix::Zero(p1 - r, p1 + p2);
    res1.leftCols(p1) = cs.A1.matrix().bottomRows(p1 - r);
    Matrix res2 = Matrix::Zero(p2 - r, p1 + p2);
    res2.rightCols(p2) = cs.A2.matrix().bottomRows(p2 - r);
    return FunctionalFrame(
        {{"theta_joint", std::move(joint)}, {"theta_res1", std::move(res1)}, {"theta_res2", std::move(res2)}});
}

FunctionalFrame frame_for(const ThreeLevelSpec& spec) {
    spec.validate();
    const Index I = spec.I;
    const Index J = spec.J;
    const Index dim = 1 + I + I * J;
    const auto b_at = [&](Index i, Index j) { return 1 + I + i * J + j; };

    Matrix d0 = Matrix::Zero(3, dim);
    d0(0, 0) = 1.0;
    for (Index i = 0; i < I; ++i) {
        d0(1, 1 + i) = 1.0 / static_cast<double>(I);
        for (Index j = 0; j < J; ++j) d0(2, b_at(i, j)) = 1.0 / static_cast<double>(I * J);
    }
    // δ¹: (a_i - ā, b̄_i - b̄) for i < I-1; δ²: b_ij - b̄_i for j < J-1.
    Matrix d1 = Matrix::Zero(2 * (I - 1), dim);
    for (Index i = 0; i + 1 < I; ++i) {
        d1.row(2 * i) = -d0.row(1);
        d1(2 * i, 1 + i) += 1.0;
        d1.row(2 * i + 1) = -d0.row(2);
        for (Index j = 0; j < J; ++j) d1(2 * i + 1, b_at(i, j)) += 1.0 / static_cast<double>(J);
    }
    Matrix d2 = Matrix::Zero(I * (J - 1), dim);
    for (Index i = 0; i < I; ++i) {
        for (Index j = 0; j + 1 < J; ++j) {
            const Index row = i * (J - 1) + j;
            for (Index jj = 0; jj < J; ++jj) d2(row, b_at(i, jj)) = -1.0 / static_cast<double>(J);
            d2(row, b_at(i, j)) += 1.0;
        }
    }
    return FunctionalFrame({{"delta0", std::move(d0)}, {"delta1", std::move(d1)}, {"delta2", std::move(d2)}});
}

std::map<std::string, Matrix> frame_apply(const FunctionalFrame& frame, const Matrix& states) {
    if (states.cols() != frame.state_dim()) {
        throw Error(ErrorKind::DimMismatch, "trace state dimension does not match the frame");
    }
    std::map<std::string, Matrix> out;
    for (const auto& [name, m] : frame.maps()) out.emplace(name, states * m.transpose());
    return out;
}

std::map<std::string, Matrix> frame_apply(const FunctionalFrame& frame, const ChainTrace& trace) {
    return frame_apply(frame, trace.states);
}

double frame_cross_block(const FunctionalFrame& frame, const SymPD& precision, std::string_view first,
                         std::string_view second) {
    const Matrix q = transformed_precision(precision, frame.stacked());
    const Index r1 = frame.map(first).rows();
    const Index r2 = frame.map(second).rows();
    if (r1 == 0 || r2 == 0) return 0.0;
    return q.block(frame.offset(first), frame.offset(second), r1, r2).cwiseAbs().maxCoeff();
}

double frame_max_cross_block(const FunctionalFrame& frame, const SymPD& precision) {
    const Matrix q = transformed_precision(precision, frame.stacked());
    double worst = 0.0;
    const auto& maps = frame.maps();
    for (std::size_t a = 0; a < maps.size(); ++a) {
        for (std::size_t b = a + 1; b < maps.size(); ++b) {
            const Index ra = maps[a].second.rows();
            const Index rb = maps[b].second.rows();
            if (ra == 0 || rb == 0) continue;
            worst = std::max(worst, q.block(frame.offset(maps[a].first), frame.offset(maps[b].first), ra, rb)
                                        .cwiseAbs()
                                        .maxCoeff());
        }
    }
    return worst;
}

}  // namespace gibbsrate
