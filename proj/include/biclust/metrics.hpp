#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "biclust/errors.hpp"
#include "biclust/types.hpp"

namespace biclust::metrics {

/// Cross-tabulation of two labelings, zero-padded to square for matching.
struct ConfusionMatrix {
    Eigen::MatrixXi counts;  // k x k'
    long n = 0;

    static ConfusionMatrix from(const Membership& z, const Membership& z_prime) {
        z.validate();
        z_prime.validate();
        if (z.n() != z_prime.n())
            throw DimensionMismatchError("ConfusionMatrix: length mismatch");
        ConfusionMatrix c;
        c.counts = Eigen::MatrixXi::Zero(z.k, z_prime.k);
        for (int i = 0; i < z.n(); ++i)
            ++c.counts(z.labels[static_cast<std::size_t>(i)] - 1,
                       z_prime.labels[static_cast<std::size_t>(i)] - 1);
        c.n = z.n();
        return c;
    }

    Eigen::MatrixXi padded_square() const {
        const Index m = std::max(counts.rows(), counts.cols());
        Eigen::MatrixXi sq = Eigen::MatrixXi::Zero(m, m);
        sq.topLeftCorner(counts.rows(), counts.cols()) = counts;
        return sq;
    }
};

namespace detail {

/// Exhaustive search over permutations; sq is square.
inline std::pair<std::vector<int>, long> match_brute_force(
    const Eigen::MatrixXi& sq) {
    const int m = static_cast<int>(sq.rows());
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    long best_val = std::numeric_limits<long>::min();
    do {
        long val = 0;
        for (int j = 0; j < m; ++j) val += sq(perm[static_cast<std::size_t>(j)], j);
        if (val > best_val) {
            best_val = val;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best, best_val};
}

/// Optimal assignment by shortest augmenting paths with potentials (O(m^3)).
/// Maximizes the trace; returns perm[j] = row matched to column j.
inline std::pair<std::vector<int>, long> match_assignment(
    const Eigen::MatrixXi& sq) {
    const int m = static_cast<int>(sq.rows());
    const long big = sq.cast<long>().maxCoeff();
    // Minimize cost = big - counts.
    std::vector<std::vector<long>> cost(static_cast<std::size_t>(m + 1),
                                        std::vector<long>(static_cast<std::size_t>(m + 1), 0));
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j)
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                big - sq(i - 1, j - 1);

    const long inf = std::numeric_limits<long>::max() / 4;
    std::vector<long> u(static_cast<std::size_t>(m + 1), 0),
        v(static_cast<std::size_t>(m + 1), 0);
    std::vector<int> p(static_cast<std::size_t>(m + 1), 0),
        way(static_cast<std::size_t>(m + 1), 0);
    for (int i = 1; i <= m; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<long> minv(static_cast<std::size_t>(m + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(m + 1), false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = p[static_cast<std::size_t>(j0)];
            long delta = inf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const long cur = cost[static_cast<std::size_t>(i0)][static_cast<std::size_t>(j)] -
                                 u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> perm(static_cast<std::size_t>(m), 0);
    long val = 0;
    for (int j = 1; j <= m; ++j) {
        perm[static_cast<std::size_t>(j - 1)] = p[static_cast<std::size_t>(j)] - 1;
        val += sq(p[static_cast<std::size_t>(j)] - 1, j - 1);
    }
    return {perm, val};
}

}  // namespace detail

/// Permutation (as perm[j] = matched row of column j, 0-based) maximizing the
/// trace of the zero-padded confusion matrix. Exact either way: brute force
/// for small k, augmenting paths otherwise.
inline std::pair<std::vector<int>, long> permutation_match(
    const ConfusionMatrix& c, bool force_brute = false, bool force_solver = false) {
    const Eigen::MatrixXi sq = c.padded_square();
    if (force_brute || (sq.rows() <= 8 && !force_solver))
        return detail::match_brute_force(sq);
    return detail::match_assignment(sq);
}

struct MisReport {
    double mis_bar = 0.0;
    Vector per_cluster;       // over clusters of the first argument
    double mis_inf = 0.0;
    std::vector<int> mapping; // z'-label j+1 maps to z-label mapping[j]+1
};

/// Permutation-minimized misclassification rates between two labelings.
inline MisReport misclassification(const Membership& z, const Membership& z_prime) {
    const ConfusionMatrix c = ConfusionMatrix::from(z, z_prime);
    auto [perm, matched] = permutation_match(c);
    MisReport out;
    out.mapping = perm;
    out.mis_bar = 1.0 - static_cast<double>(matched) / static_cast<double>(c.n);

    const std::vector<int> sizes = z.cluster_sizes();
    out.per_cluster = Vector::Zero(z.k);
    std::vector<long> wrong(static_cast<std::size_t>(z.k), 0);
    for (int i = 0; i < z.n(); ++i) {
        const int zi = z.labels[static_cast<std::size_t>(i)] - 1;
        const int mapped = perm[static_cast<std::size_t>(
            z_prime.labels[static_cast<std::size_t>(i)] - 1)];
        if (mapped != zi) ++wrong[static_cast<std::size_t>(zi)];
    }
    out.mis_inf = 0.0;
    for (int r = 0; r < z.k; ++r) {
        if (sizes[static_cast<std::size_t>(r)] > 0)
            out.per_cluster[r] = static_cast<double>(wrong[static_cast<std::size_t>(r)]) /
                                 sizes[static_cast<std::size_t>(r)];
        out.mis_inf = std::max(out.mis_inf, out.per_cluster[r]);
    }
    return out;
}

inline MisReport misclassification_kmeans(const KMeansMatrix& x,
                                          const KMeansMatrix& x_prime) {
    return misclassification(x.labels, x_prime.labels);
}

struct NmiResult {
    double value = 0.0;
    bool degenerate = false;  // a side has zero entropy
};

/// Normalized mutual information with geometric-mean normalization and
/// natural logs. A constant side yields 0 with the degenerate flag set.
inline NmiResult nmi(const Membership& z, const Membership& z_prime) {
    const ConfusionMatrix c = ConfusionMatrix::from(z, z_prime);
    const double n = static_cast<double>(c.n);
    const Eigen::VectorXi row_sums = c.counts.rowwise().sum();
    const Eigen::VectorXi col_sums = c.counts.colwise().sum();

    auto entropy = [n](const Eigen::VectorXi& sums) {
        double h = 0.0;
        for (Index t = 0; t < sums.size(); ++t) {
            if (sums[t] == 0) continue;
            const double p = sums[t] / n;
            h -= p * std::log(p);
        }
        return h;
    };
    const double h1 = entropy(row_sums);
    const double h2 = entropy(col_sums);
    NmiResult out;
    if (h1 <= 0.0 || h2 <= 0.0) {
        out.degenerate = true;
        return out;
    }
    double info = 0.0;
    for (Index r = 0; r < c.counts.rows(); ++r) {
        for (Index s = 0; s < c.counts.cols(); ++s) {
            if (c.counts(r, s) == 0) continue;
            const double pij = c.counts(r, s) / n;
            info += pij * std::log(n * c.counts(r, s) /
                                   (static_cast<double>(row_sums[r]) * col_sums[s]));
        }
    }
    out.value = std::clamp(info / std::sqrt(h1 * h2), 0.0, 1.0);
    return out;
}

}  // namespace biclust::metrics
