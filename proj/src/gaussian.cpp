#include "gibbsrate/gaussian.hpp"

#include <algorithm>
#include <set>

#include "gibbsrate/error.hpp"

namespace gibbsrate {

void validate_layout(const std::vector<Block>& blocks, Index dim) {
    Index next = 0;
    std::set<std::string> names;
    for (const auto& b : blocks) {
        if (b.start != next || b.size <= 0) {
            throw Error(ErrorKind::DimMismatch, "block '" + b.name + "' breaks the contiguous layout");
        }
        if (!names.insert(b.name).second) {
            throw Error(ErrorKind::DimMismatch, "duplicate block name '" + b.name + "'");
        }
        next += b.size;
    }
    if (next != dim) {
        throw Error(ErrorKind::DimMismatch, "blocks cover " + std::to_string(next) + " of " +
                                                std::to_string(dim) + " coordinates");
    }
}

BlockedGaussian::BlockedGaussian(Vector mean, SymPD precision, std::vector<Block> blocks)
    : mean_(std::move(mean)), precision_(std::move(precision)), blocks_(std::move(blocks)) {
    if (mean_.size() != precision_.dim()) {
        throw Error(ErrorKind::DimMismatch, "mean and precision dimensions differ");
    }
    validate_layout(blocks_, mean_.size());
}

BlockedGaussian BlockedGaussian::from_canonical(const Vector& linear, SymPD precision, std::vector<Block> blocks) {
    if (linear.size() != precision.dim()) {
        throw Error(ErrorKind::DimMismatch, "linear term and precision dimensions differ");
    }
    Eigen::LLT<Matrix> llt(precision.matrix());
    Vector mean = llt.solve(linear);
    return BlockedGaussian(std::move(mean), std::move(precision), std::move(blocks));
}

Matrix BlockedGaussian::covariance() const { return precision_.inverse(); }

const Block& BlockedGaussian::block(std::string_view name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return b;
    }
    throw Error(ErrorKind::UnknownBlock, "no block named '" + std::string(name) + "'");
}

std::vector<std::string> BlockedGaussian::block_names() const {
    std::vector<std::string> names;
    names.reserve(blocks_.size());
    for (const auto& b : blocks_) names.push_back(b.name);
    return names;
}

BlockedGaussian BlockedGaussian::linear_marginal(const Matrix& map, std::vector<Block> blocks) const {
    if (map.cols() != dim()) {
        throw Error(ErrorKind::DimMismatch, "linear map does not match target dimension");
    }
    Matrix cov = map * covariance() * map.transpose();
    cov = 0.5 * (cov + cov.transpose());
    const SymPD marginal_cov(cov);
    return BlockedGaussian(map * mean_, SymPD(marginal_cov.inverse()), std::move(blocks));
}

namespace {

// Columns of `m` outside [start, start+size), concatenated in order.
Matrix drop_columns(const Matrix& m, Index start, Index size) {
    const Index n = m.cols();
    Matrix out(m.rows(), n - size);
    out.leftCols(start) = m.leftCols(start);
    out.rightCols(n - start - size) = m.rightCols(n - start - size);
    return out;
}

Vector drop_entries(const Vector& v, Index start, Index size) {
    const Index n = v.size();
    Vector out(n - size);
    out.head(start) = v.head(start);
    out.tail(n - start - size) = v.tail(n - start - size);
    return out;
}

}  // namespace

Vector AffineUpdate::conditional_mean(const Vector& state) const {
    const Index n = state.size();
    const Index s = target.start;
    const Index k = target.size;
    Vector m = offset;
    if (s > 0) m.noalias() += gain.leftCols(s) * state.head(s);
    if (n - s - k > 0) m.noalias() += gain.rightCols(n - s - k) * state.tail(n - s - k);
    return m;
}

void AffineUpdate::apply(Vector& state, Rng& rng) const {
    const Vector z = rng.normals(target.size);
    Vector next = conditional_mean(state);
    next.noalias() += noise_chol.triangularView<Eigen::Lower>() * z;
    state.segment(target.start, target.size) = next;
}

AffineUpdate conditional_update(const BlockedGaussian& target, std::string_view block) {
    const Block& b = target.block(block);
    const Matrix& q = target.precision().matrix();
    const Matrix q_bb = q.block(b.start, b.start, b.size, b.size);
    const Matrix q_brest = drop_columns(q.middleRows(b.start, b.size), b.start, b.size);

    AffineUpdate up;
    up.target = b;
    const SymPD qbb(q_bb);
    up.noise_cov = qbb.inverse();
    up.gain = -up.noise_cov * q_brest;
    const Vector rest_mean = drop_entries(target.mean(), b.start, b.size);
    up.offset = target.mean().segment(b.start, b.size) - up.gain * rest_mean;
    Eigen::LLT<Matrix> llt(up.noise_cov);
    up.noise_chol = llt.matrixL();
    return up;
}

Matrix scan_operator(const BlockedGaussian& target, const std::vector<std::string>& order) {
    std::vector<std::string> sorted = order;
    std::vector<std::string> names = target.block_names();
    std::sort(sorted.begin(), sorted.end());
    std::sort(names.begin(), names.end());
    if (sorted != names) {
        throw Error(ErrorKind::UnknownBlock, "scan order must be a permutation of the target's blocks");
    }
    const Index n = target.dim();
    Matrix composed = Matrix::Identity(n, n);
    for (const auto& name : order) {
        const AffineUpdate up = conditional_update(target, name);
        const Block& b = up.target;
        Matrix step = Matrix::Identity(n, n);
        step.middleRows(b.start, b.size).setZero();
        if (b.start > 0) {
            step.block(b.start, 0, b.size, b.start) = up.gain.leftCols(b.start);
        }
        const Index tail = n - b.start - b.size;
        if (tail > 0) {
            step.block(b.start, b.start + b.size, b.size, tail) = up.gain.rightCols(tail);
        }
        composed = step * composed;
    }
    return composed;
}

double l2_rate_oracle(const BlockedGaussian& target, const std::vector<std::string>& order) {
    return spectral_radius(scan_operator(target, order));
}

double two_block_rate(const SymPD& s11, const Matrix& s12, const SymPD& s22) {
    if (s12.rows() != s11.dim() || s12.cols() != s22.dim()) {
        throw Error(ErrorKind::DimMismatch, "cross-covariance shape does not match diagonal blocks");
    }
    const Index p = s11.dim();
    const Index q = s22.dim();
    Matrix joint(p + q, p + q);
    joint << s11.matrix(), s12, s12.transpose(), s22.matrix();
    const SymPD checked(std::move(joint));  // throws NotPD
    const Matrix m = sym_sqrt_pair(s11).inverse_root.matrix() * s12 * sym_sqrt_pair(s22).inverse_root.matrix();
    const double norm = spectral_norm(m);
    return norm * norm;
}

double two_block_rate(const BlockedGaussian& target) {
    if (target.blocks().size() != 2) {
        throw Error(ErrorKind::DimMismatch, "two_block_rate needs exactly two blocks");
    }
    const Matrix cov = target.covariance();
    const Block& a = target.blocks()[0];
    const Block& b = target.blocks()[1];
    return two_block_rate(SymPD(cov.block(a.start, a.start, a.size, a.size)),
                          cov.block(a.start, b.start, a.size, b.size),
                          SymPD(cov.block(b.start, b.start, b.size, b.size)));
}

ExactSampler::ExactSampler(const BlockedGaussian& target) : mean_(target.mean()) {
    Eigen::LLT<Matrix> llt(target.covariance());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NotPD, "covariance Cholesky failed");
    }
    chol_ = llt.matrixL();
}

Vector ExactSampler::draw(Rng& rng) const {
    const Vector z = rng.normals(mean_.size());
    return mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

Vector exact_sample(const BlockedGaussian& target, Rng& rng) { return ExactSampler(target).draw(rng); }

Matrix transformed_precision(const SymPD& precision, const Matrix& frame) {
    if (frame.rows() != frame.cols() || frame.cols() != precision.dim()) {
        throw Error(ErrorKind::DimMismatch, "frame must be square and match the precision");
    }
    Eigen::FullPivLU<Matrix> lu(frame);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::RankDeficient, "frame is not invertible");
    }
    const Matrix inv = lu.inverse();
    Matrix out = inv.transpose() * precision.matrix() * inv;
    return 0.5 * (out + out.transpose());
}

}  // namespace gibbsrate
