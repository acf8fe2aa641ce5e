#pragma once

#include <Eigen/Dense>

namespace gibbsrate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/**
 * Symmetric positive-definite matrix. Construction checks symmetry (relative
 * 1e-12) and positivity (smallest eigenvalue > dim * eps * largest); the value
 * is immutable afterwards. Used for every covariance and precision in the
 * library.
 */
class SymPD {
public:
    explicit SymPD(Matrix entries);

    static SymPD identity(Index dim);
    static SymPD diagonal(const Vector& diag);
    static SymPD scalar(double value) { return diagonal(Vector::Constant(1, value)); }

    [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
    [[nodiscard]] Index dim() const noexcept { return m_.rows(); }
    [[nodiscard]] Matrix inverse() const;
    [[nodiscard]] bool is_diagonal() const;

    operator const Matrix&() const noexcept { return m_; }

private:
    Matrix m_;
};

/// Square matrix with orthonormal rows and columns (AᵀA = I to 1e-10 Frobenius).
class OrthoMatrix {
public:
    explicit OrthoMatrix(Matrix entries);

    static OrthoMatrix identity(Index dim);

    [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
    [[nodiscard]] Index dim() const noexcept { return m_.rows(); }

    operator const Matrix&() const noexcept { return m_; }

private:
    Matrix m_;
};

struct SqrtPair {
    SymPD root;          // S^{1/2}
    SymPD inverse_root;  // S^{-1/2}
};

SqrtPair sym_sqrt_pair(const SymPD& s);

/// Largest singular value; 0 for empty matrices.
double spectral_norm(const Matrix& m);

struct RankSvd {
    Matrix u;             // thin, orthonormal columns
    Vector singular_values;  // descending
    Matrix v;             // thin, orthonormal columns
    Index rank = 0;
};

/**
 * Thin SVD with a deterministic sign convention: the first entry of each left
 * singular vector whose magnitude exceeds 1e-12 is positive. `rank` counts
 * singular values strictly above rel_tol times the largest one.
 */
RankSvd rank_svd(const Matrix& m, double rel_tol = 1e-10);

/**
 * Complete r orthonormal rows (r x p) to a p x p orthogonal matrix whose
 * first r rows are exactly `rows`. Added rows span the nullspace obtained
 * from a full SVD; each added row has its first nonzero entry positive.
 */
OrthoMatrix orthogonal_complete(const Matrix& rows);

/// Flip `v` so its first entry with |x| > tol is positive.
void canonical_sign(Eigen::Ref<Vector> v, double tol = 1e-12);

/// Spectral radius of a general square matrix via a full eigen-decomposition.
double spectral_radius(const Matrix& m);

}  // namespace gibbsrate
