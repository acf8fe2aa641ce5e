#include "gibbsrate/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gibbsrate/error.hpp"

namespace gibbsrate {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw Error(ErrorKind::NotPD, std::string(what) + " has non-finite entries");
    }
}

}  // namespace

SymPD::SymPD(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) {
        throw Error(ErrorKind::NotPD, "matrix must be square and non-empty");
    }
    require_finite(m_, "SymPD");
    const double scale = std::max(m_.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorKind::NotPD, "matrix is not symmetric");
    }
    m_ = 0.5 * (m_ + m_.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || lo <= static_cast<double>(m_.rows()) * kEps * hi) {
        throw Error(ErrorKind::NotPD, "smallest eigenvalue " + std::to_string(lo) +
                                          " not positive relative to largest " + std::to_string(hi));
    }
}

SymPD SymPD::identity(Index dim) { return SymPD(Matrix::Identity(dim, dim)); }

SymPD SymPD::diagonal(const Vector& diag) { return SymPD(Matrix(diag.asDiagonal())); }

Matrix SymPD::inverse() const {
    Eigen::LLT<Matrix> llt(m_);
    Matrix inv = llt.solve(Matrix::Identity(dim(), dim()));
    return 0.5 * (inv + inv.transpose());
}

bool SymPD::is_diagonal() const {
    Matrix off = m_;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() == 0.0;
}

OrthoMatrix::OrthoMatrix(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols()) {
        throw Error(ErrorKind::NotOrthogonal, "matrix must be square");
    }
    const Matrix gram = m_.transpose() * m_;
    if ((gram - Matrix::Identity(m_.rows(), m_.cols())).norm() > 1e-10) {
        throw Error(ErrorKind::NotOrthogonal, "AᵀA deviates from identity");
    }
}

OrthoMatrix OrthoMatrix::identity(Index dim) { return OrthoMatrix(Matrix::Identity(dim, dim)); }

SqrtPair sym_sqrt_pair(const SymPD& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s.matrix());
    const Vector root = eig.eigenvalues().cwiseSqrt();
    const Matrix& q = eig.eigenvectors();
    Matrix m = q * root.asDiagonal() * q.transpose();
    Matrix n = q * root.cwiseInverse().asDiagonal() * q.transpose();
    m = 0.5 * (m + m.transpose());
    n = 0.5 * (n + n.transpose());
    return {SymPD(std::move(m)), SymPD(std::move(n))};
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

void canonical_sign(Eigen::Ref<Vector> v, double tol) {
    for (Index k = 0; k < v.size(); ++k) {
        if (std::abs(v(k)) > tol) {
            if (v(k) < 0) v = -v;
            return;
        }
    }
}

RankSvd rank_svd(const Matrix& m, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw Error(ErrorKind::InvalidSpec, "rel_tol must lie in (0,1)");
    }
    RankSvd out;
    if (m.size() == 0) {
        out.u = Matrix(m.rows(), 0);
        out.v = Matrix(m.cols(), 0);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    out.singular_values = svd.singularValues();
    for (Index k = 0; k < out.u.cols(); ++k) {
        for (Index i = 0; i < out.u.rows(); ++i) {
            if (std::abs(out.u(i, k)) > 1e-12) {
                if (out.u(i, k) < 0) {
                    out.u.col(k) = -out.u.col(k);
                    out.v.col(k) = -out.v.col(k);
                }
                break;
            }
        }
    }
    const double top = out.singular_values.size() ? out.singular_values(0) : 0.0;
    for (Index k = 0; k < out.singular_values.size(); ++k) {
        if (out.singular_values(k) > rel_tol * top) ++out.rank;
    }
    return out;
}

OrthoMatrix orthogonal_complete(const Matrix& rows) {
    const Index r = rows.rows();
    const Index p = rows.cols();
    if (r > p) {
        throw Error(ErrorKind::NotOrthonormalRows, "more rows than columns");
    }
    if (r > 0 && (rows * rows.transpose() - Matrix::Identity(r, r)).norm() > 1e-10) {
        throw Error(ErrorKind::NotOrthonormalRows, "BBᵀ deviates from identity");
    }
    Matrix out(p, p);
    if (r == 0) {
        out.setIdentity();
        return OrthoMatrix(std::move(out));
    }
    out.topRows(r) = rows;
    if (r < p) {
        // Pad to a square matrix so the full V of a square SVD is available.
        Matrix padded = Matrix::Zero(p, p);
        padded.topRows(r) = rows;
        Eigen::JacobiSVD<Matrix> svd(padded, Eigen::ComputeFullV);
        const Matrix null_basis = svd.matrixV().rightCols(p - r);
        for (Index k = 0; k < p - r; ++k) {
            Vector row = null_basis.col(k);
            // Remove residual components along B for an exact complement.
            row -= rows.transpose() * (rows * row);
            row.normalize();
            canonical_sign(row);
            out.row(r + k) = row.transpose();
        }
    }
    return OrthoMatrix(std::move(out));
}

double spectral_radius(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> eig(m, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace gibbsrate
