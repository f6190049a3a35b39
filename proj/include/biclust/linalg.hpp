#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "biclust/errors.hpp"
#include "biclust/rng.hpp"
#include "biclust/types.hpp"

namespace biclust::linalg {

struct SvdOptions {
    /// Convergence: change of every leading singular-value estimate between
    /// sweeps falls below tol * sigma_1.
    double tol = 1e-10;
    /// Maximum subspace-iteration sweeps.
    int max_iter = 500;
    /// Extra block columns beyond k.
    int oversample = 4;
    /// At or below this min-dimension the dense solver is used directly.
    Index dense_cutoff = 300;
    /// Sub-seed for the random start block; fixed so repeated runs bit-match.
    std::uint64_t seed = 0x9D2C5680ULL;
};

namespace detail {

inline Matrix thin_q(const Matrix& y) {
    Eigen::HouseholderQR<Matrix> qr(y);
    return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

inline TruncatedSvd from_eigen_svd(const Matrix& u, const Vector& s,
                                   const Matrix& v, Index k) {
    TruncatedSvd out;
    out.u = u.leftCols(k);
    out.sigma = s.head(k);
    out.v = v.leftCols(k);
    return out;
}

}  // namespace detail

/// Dense SVD truncated to k triplets. Serves as the small-instance path and
/// as the oracle the iterative solver is tested against.
inline TruncatedSvd dense_svd(const Matrix& a, Index k) {
    if (k < 1 || k > std::min(a.rows(), a.cols()))
        throw ValidationError("dense_svd: k out of range");
    if (std::min(a.rows(), a.cols()) <= 32) {
        Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return detail::from_eigen_svd(svd.matrixU(), svd.singularValues(),
                                      svd.matrixV(), k);
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return detail::from_eigen_svd(svd.matrixU(), svd.singularValues(),
                                  svd.matrixV(), k);
}

/// Blocked subspace iteration with oversampling; always takes the iterative
/// path regardless of matrix size. Throws NoConvergenceError when max_iter
/// sweeps do not settle the leading k singular values.
inline TruncatedSvd truncated_svd_subspace(const Matrix& a, Index k,
                                           const SvdOptions& opt = {}) {
    const Index n1 = a.rows(), n2 = a.cols();
    const Index mindim = std::min(n1, n2);
    if (k < 1 || k > mindim) throw ValidationError("truncated_svd: k out of range");
    if (opt.tol <= 0) throw ValidationError("truncated_svd: tol must be positive");

    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        TruncatedSvd out;
        out.u = Matrix::Identity(n1, k);
        out.sigma = Vector::Zero(k);
        out.v = Matrix::Identity(n2, k);
        return out;
    }

    // Iterate on the smaller side.
    const bool transposed = n1 > n2;
    const Matrix& m = a;  // apply as m or m^T depending on `transposed`
    const Index rows = transposed ? n2 : n1;
    const Index cols = transposed ? n1 : n2;
    const Index block = std::min<Index>(k + opt.oversample, mindim);

    CounterRng rng = CounterRng(opt.seed).substream("svd-start");
    Matrix q(rows, block);
    for (Index j = 0; j < block; ++j)
        for (Index i = 0; i < rows; ++i) q(i, j) = rng.next_gaussian();
    q = detail::thin_q(q);

    Vector prev = Vector::Constant(k, -1.0);
    bool converged = false;
    Matrix y(rows, block), z(cols, block);
    for (int sweep = 0; sweep < opt.max_iter; ++sweep) {
        if (transposed) {
            z.noalias() = m * q;
            z = detail::thin_q(z);
            y.noalias() = m.transpose() * z;
        } else {
            z.noalias() = m.transpose() * q;
            z = detail::thin_q(z);
            y.noalias() = m * z;
        }
        Eigen::HouseholderQR<Matrix> qr(y);
        q = qr.householderQ() * Matrix::Identity(rows, block);
        // Ritz estimates from the R factor.
        const Matrix r = qr.matrixQR().topRows(block).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<Matrix> rsvd(r);
        const Vector est = rsvd.singularValues().head(k);
        const double ref = std::max(est[0], scale * 1e-300);
        if (((est - prev).cwiseAbs().array() <= opt.tol * ref).all()) {
            converged = true;
            break;
        }
        prev = est;
    }
    if (!converged)
        throw NoConvergenceError("truncated_svd: no convergence after " +
                                 std::to_string(opt.max_iter) + " sweeps");

    // Rayleigh-Ritz extraction on the converged subspace.
    Matrix b = transposed ? Matrix(q.transpose() * m.transpose())
                          : Matrix(q.transpose() * m);  // block x cols
    Eigen::JacobiSVD<Matrix> small(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    TruncatedSvd out;
    if (transposed) {
        out.u = small.matrixV().leftCols(k);
        out.v = (q * small.matrixU()).leftCols(k);
    } else {
        out.u = (q * small.matrixU()).leftCols(k);
        out.v = small.matrixV().leftCols(k);
    }
    out.sigma = small.singularValues().head(k);
    return out;
}

/// k-truncated SVD. Small instances go through the dense solver; larger ones
/// through subspace iteration.
inline TruncatedSvd truncated_svd(const Matrix& a, Index k,
                                  const SvdOptions& opt = {}) {
    if (std::min(a.rows(), a.cols()) <= opt.dense_cutoff) return dense_svd(a, k);
    return truncated_svd_subspace(a, k, opt);
}

/// Symmetric dilation [[0, P], [P^T, 0]]; kept as an operator, materialized
/// on demand.
struct DilatedMatrix {
    Matrix block;  // n1 x n2

    Index size() const { return block.rows() + block.cols(); }

    Vector apply(const Vector& x) const {
        const Index n1 = block.rows(), n2 = block.cols();
        if (x.size() != n1 + n2)
            throw DimensionMismatchError("DilatedMatrix::apply: bad vector length");
        Vector out(n1 + n2);
        out.head(n1).noalias() = block * x.tail(n2);
        out.tail(n2).noalias() = block.transpose() * x.head(n1);
        return out;
    }

    Matrix dense() const {
        const Index n1 = block.rows(), n2 = block.cols();
        Matrix d = Matrix::Zero(n1 + n2, n1 + n2);
        d.topRightCorner(n1, n2) = block;
        d.bottomLeftCorner(n2, n1) = block.transpose();
        return d;
    }
};

inline DilatedMatrix dilate(const Matrix& a) { return DilatedMatrix{a}; }

/// Largest singular value via single-vector power iteration on a^T a.
/// Stops once the estimate changes by less than tol * estimate over three
/// consecutive iterations.
inline double operator_norm(const Matrix& a, double tol = 1e-10,
                            int max_iter = 20000,
                            std::uint64_t seed = 0x2545F4914F6CDD1DULL) {
    if (tol <= 0) throw ValidationError("operator_norm: tol must be positive");
    if (a.size() == 0) return 0.0;
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;

    CounterRng rng = CounterRng(seed).substream("opnorm-start");
    Vector v(a.cols());
    for (Index i = 0; i < v.size(); ++i) v[i] = rng.next_gaussian();
    v.normalize();

    double prev = -1.0;
    int settled = 0;
    Vector y(a.rows());
    for (int it = 0; it < max_iter; ++it) {
        y.noalias() = a * v;
        const double est = y.norm();
        if (est == 0.0) {
            // Start vector in the null space; restart it.
            for (Index i = 0; i < v.size(); ++i) v[i] = rng.next_gaussian();
            v.normalize();
            continue;
        }
        v.noalias() = a.transpose() * y;
        v /= v.norm();
        if (prev >= 0 && std::abs(est - prev) <= tol * est) {
            if (++settled >= 3) return est;
        } else {
            settled = 0;
        }
        prev = est;
    }
    throw NoConvergenceError("operator_norm: no convergence after " +
                             std::to_string(max_iter) + " iterations");
}

struct Alignment {
    Matrix q;      // k x k orthogonal
    double error;  // attained min over Q of ||z_hat - z_ref Q||_F
};

/// Orthogonal Procrustes: Q minimizing ||z_hat - z_ref Q||_F.
inline Alignment align_orthogonal(const Matrix& z_hat, const Matrix& z_ref) {
    if (z_hat.rows() != z_ref.rows() || z_hat.cols() != z_ref.cols())
        throw DimensionMismatchError("align_orthogonal: shape mismatch");
    const Matrix m = z_ref.transpose() * z_hat;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Alignment out;
    out.q = svd.matrixU() * svd.matrixV().transpose();
    out.error = (z_hat - z_ref * out.q).norm();
    return out;
}

/// Principal angles (radians, nondecreasing) between the column spans of two
/// orthonormal-column matrices of equal width.
inline Vector principal_angles(const Matrix& u1, const Matrix& u2) {
    if (u1.rows() != u2.rows() || u1.cols() != u2.cols())
        throw DimensionMismatchError("principal_angles: shape mismatch");
    Eigen::JacobiSVD<Matrix> svd(Matrix(u1.transpose() * u2));
    Vector cosines = svd.singularValues();
    Vector angles(cosines.size());
    for (Index i = 0; i < cosines.size(); ++i)
        angles[i] = std::acos(std::clamp(cosines[i], -1.0, 1.0));
    std::sort(angles.begin(), angles.end());
    return angles;
}

}  // namespace biclust::linalg
