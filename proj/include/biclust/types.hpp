#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "biclust/errors.hpp"

namespace biclust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Observed bipartite network. Entries of a raw sample are {0,1}; after
/// regularization they live in [0,1]. `symmetric` is only set when the matrix
/// is square and equal to its transpose.
struct BiAdjacency {
    Matrix entries;
    bool symmetric = false;

    BiAdjacency() = default;
    explicit BiAdjacency(Matrix m, bool sym = false)
        : entries(std::move(m)), symmetric(sym) {}

    Index n_rows() const { return entries.rows(); }
    Index n_cols() const { return entries.cols(); }

    bool is_binary() const {
        return ((entries.array() == 0.0) || (entries.array() == 1.0)).all();
    }

    void validate() const {
        if (entries.rows() < 1 || entries.cols() < 1)
            throw ValidationError("BiAdjacency: empty matrix");
        if ((entries.array() < 0.0).any() || (entries.array() > 1.0).any())
            throw ValidationError("BiAdjacency: entries outside [0,1]");
        if (symmetric) {
            if (entries.rows() != entries.cols())
                throw ValidationError("BiAdjacency: symmetric flag on non-square matrix");
            if ((entries - entries.transpose()).cwiseAbs().maxCoeff() != 0.0)
                throw ValidationError("BiAdjacency: symmetric flag on asymmetric entries");
        }
    }
};

/// Hard cluster labels for one side of the network. Labels are 1-based dense
/// integers in [1, k]; empty clusters are representable.
struct Membership {
    std::vector<int> labels;
    int k = 0;

    Membership() = default;
    Membership(std::vector<int> l, int num_clusters)
        : labels(std::move(l)), k(num_clusters) {}

    int n() const { return static_cast<int>(labels.size()); }

    void validate() const {
        if (k < 1) throw ValidationError("Membership: k must be positive");
        for (const int l : labels)
            if (l < 1 || l > k)
                throw ValidationError("Membership: label " + std::to_string(l) +
                                      " outside [1," + std::to_string(k) + "]");
    }

    /// Cluster sizes n_t, t = 1..k.
    std::vector<int> cluster_sizes() const {
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (const int l : labels) ++sizes[static_cast<std::size_t>(l - 1)];
        return sizes;
    }
};

/// A matrix with at most k distinct rows, stored losslessly as labels plus a
/// k x d center matrix. Unused labels carry all-zero center rows.
struct KMeansMatrix {
    Membership labels;
    Matrix centers;  // k x d

    int n() const { return labels.n(); }
    int k() const { return labels.k; }
    Index dim() const { return centers.cols(); }

    void validate() const {
        labels.validate();
        if (centers.rows() != labels.k)
            throw ValidationError("KMeansMatrix: centers must have k rows");
    }
};

/// Generative description of a bipartite stochastic block model. The edge
/// probability matrix is B = psi / sqrt(n1 n2).
struct SbmSpec {
    int n1 = 0, n2 = 0;
    int k1 = 0, k2 = 0;
    Vector proportions_rows;  // length k1, sums to 1
    Vector proportions_cols;  // length k2, sums to 1
    Matrix psi;               // k1 x k2, nonnegative
    std::uint64_t seed = 0;

    Matrix connectivity() const {
        return psi / std::sqrt(static_cast<double>(n1) * static_cast<double>(n2));
    }

    /// d = sqrt(n2/n1) * max psi, the concentration-rate driver.
    double degree_scale() const {
        if (psi.size() == 0) return 0.0;
        return std::sqrt(static_cast<double>(n2) / static_cast<double>(n1)) *
               psi.maxCoeff();
    }

    /// Expected average degree sum_{ij} pi_1i pi_2j psi_ij.
    double average_degree() const {
        return proportions_rows.transpose() * psi * proportions_cols;
    }

    void validate() const {
        if (n1 < 1 || n2 < 1) throw ValidationError("SbmSpec: sizes must be positive");
        if (k1 < 1 || k2 < 1) throw ValidationError("SbmSpec: cluster counts must be positive");
        if (k1 > n1 || k2 > n2) throw ValidationError("SbmSpec: more clusters than nodes");
        if (proportions_rows.size() != k1 || proportions_cols.size() != k2)
            throw ValidationError("SbmSpec: proportion vector length mismatch");
        const double tol = 1e-9;
        if (std::abs(proportions_rows.sum() - 1.0) > tol ||
            std::abs(proportions_cols.sum() - 1.0) > tol)
            throw ValidationError("SbmSpec: proportions must sum to 1");
        if ((proportions_rows.array() < 0).any() || (proportions_cols.array() < 0).any())
            throw ValidationError("SbmSpec: negative proportion");
        if (psi.rows() != k1 || psi.cols() != k2)
            throw ValidationError("SbmSpec: psi must be k1 x k2");
        if ((psi.array() < 0).any())
            throw ValidationError("SbmSpec: psi must be nonnegative");
        const Matrix b = connectivity();
        if ((b.array() > 1.0).any())
            throw InvalidProbabilityError("SbmSpec: an entry of psi/sqrt(n1 n2) exceeds 1");
    }
};

/// Top-k singular triplets: u (n1 x k), nonincreasing sigma, v (n2 x k).
struct TruncatedSvd {
    Matrix u;
    Vector sigma;
    Matrix v;

    Index k() const { return sigma.size(); }

    Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }

    void validate(double orth_tol = 1e-8) const {
        const Index kk = sigma.size();
        if (u.cols() != kk || v.cols() != kk)
            throw ValidationError("TruncatedSvd: factor width mismatch");
        for (Index i = 0; i + 1 < kk; ++i)
            if (sigma[i] + 1e-15 < sigma[i + 1])
                throw ValidationError("TruncatedSvd: singular values not sorted");
        if (kk > 0 && sigma[kk - 1] < -1e-15)
            throw ValidationError("TruncatedSvd: negative singular value");
        const Matrix iu = u.transpose() * u - Matrix::Identity(kk, kk);
        const Matrix iv = v.transpose() * v - Matrix::Identity(kk, kk);
        if (iu.norm() > orth_tol || iv.norm() > orth_tol)
            throw ValidationError("TruncatedSvd: factors not orthonormal");
    }
};

/// Z in {0,1}^{n x k}: row i has a single 1 at column labels[i].
inline Matrix membership_to_matrix(const Membership& m) {
    m.validate();
    Matrix z = Matrix::Zero(m.n(), m.k);
    for (int i = 0; i < m.n(); ++i) z(i, m.labels[static_cast<std::size_t>(i)] - 1) = 1.0;
    return z;
}

/// Zbar = Z N^{-1/2}; columns are orthonormal. Requires every cluster nonempty.
inline Matrix normalized_membership(const Membership& m) {
    m.validate();
    const std::vector<int> sizes = m.cluster_sizes();
    for (int t = 0; t < m.k; ++t)
        if (sizes[static_cast<std::size_t>(t)] == 0)
            throw EmptyClusterError("normalized_membership: cluster " +
                                    std::to_string(t + 1) + " is empty");
    Matrix z = Matrix::Zero(m.n(), m.k);
    for (int i = 0; i < m.n(); ++i) {
        const int t = m.labels[static_cast<std::size_t>(i)] - 1;
        z(i, t) = 1.0 / std::sqrt(static_cast<double>(sizes[static_cast<std::size_t>(t)]));
    }
    return z;
}

/// Expanded n x d matrix: row i equals the center of the cluster of i.
inline Matrix kmeans_expand(const KMeansMatrix& x) {
    x.validate();
    Matrix out(x.n(), x.dim());
    for (int i = 0; i < x.n(); ++i)
        out.row(i) = x.centers.row(x.labels.labels[static_cast<std::size_t>(i)] - 1);
    return out;
}

struct CenterSeparation {
    /// Per-cluster minimum distance to another nonempty center; NaN for
    /// empty clusters.
    Vector delta;
    double delta_min = 0.0;
};

/// delta_r = min_{l != r} ||q_l - q_r||, over nonempty clusters only.
inline CenterSeparation center_separation(const KMeansMatrix& x) {
    x.validate();
    const std::vector<int> sizes = x.labels.cluster_sizes();
    std::vector<int> live;
    for (int t = 0; t < x.k(); ++t)
        if (sizes[static_cast<std::size_t>(t)] > 0) live.push_back(t);
    if (live.size() < 2)
        throw ValidationError("center_separation: need at least two nonempty clusters");

    CenterSeparation out;
    out.delta = Vector::Constant(x.k(), std::numeric_limits<double>::quiet_NaN());
    out.delta_min = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < live.size(); ++a) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < live.size(); ++b) {
            if (a == b) continue;
            const double dist =
                (x.centers.row(live[a]) - x.centers.row(live[b])).norm();
            if (dist == 0.0)
                throw DegenerateCentersError(
                    "center_separation: nonempty clusters share a center");
            best = std::min(best, dist);
        }
        out.delta[live[a]] = best;
        out.delta_min = std::min(out.delta_min, best);
    }
    return out;
}

}  // namespace biclust
