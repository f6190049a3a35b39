#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "biclust/errors.hpp"
#include "biclust/metrics.hpp"
#include "biclust/rng.hpp"
#include "biclust/types.hpp"

namespace biclust::kmeans {

enum class Algorithm { lloyd_pp, radius_cover };

struct KMeansConfig {
    int k = 0;
    int restarts = 10;
    int max_lloyd_iters = 100;
    Algorithm algorithm = Algorithm::lloyd_pp;
    std::optional<double> rho;  // radius_cover only
    std::uint64_t seed = 0;     // used when no rng stream is supplied

    void validate() const {
        if (k < 1) throw ValidationError("KMeansConfig: k must be positive");
        if (restarts < 1) throw ValidationError("KMeansConfig: restarts must be >= 1");
        if (algorithm == Algorithm::radius_cover) {
            if (!rho || *rho <= 0)
                throw ValidationError("KMeansConfig: radius_cover requires rho > 0");
        } else if (rho) {
            throw ValidationError("KMeansConfig: rho only applies to radius_cover");
        }
    }
};

/// Frobenius distance between a data matrix and an expanded k-means matrix.
inline double kmeans_objective(const Matrix& x_hat, const KMeansMatrix& x) {
    if (x_hat.rows() != x.n() || x_hat.cols() != x.dim())
        throw DimensionMismatchError("kmeans_objective: shape mismatch");
    return (x_hat - kmeans_expand(x)).norm();
}

namespace detail {

/// Point order keyed on distance to the centroid: invariant under isometries
/// of the rows and equivariant under row permutation, so every seeding and
/// summation decision downstream depends on the geometry only.
inline std::vector<Index> canonical_order(const Matrix& x) {
    const Eigen::RowVectorXd centroid = x.colwise().mean();
    Vector key(x.rows());
    for (Index i = 0; i < x.rows(); ++i) key[i] = (x.row(i) - centroid).norm();
    std::vector<Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return key[a] < key[b]; });
    return order;
}

/// Squared distances from every row of x to every row of centers via the
/// Gram expansion; clamped at zero.
inline Matrix sq_dist_to_centers(const Matrix& x, const Vector& x_sq,
                                 const Matrix& centers) {
    const Vector c_sq = centers.rowwise().squaredNorm();
    Matrix d2 = (-2.0 * x * centers.transpose());
    d2.colwise() += x_sq;
    d2.rowwise() += c_sq.transpose();
    return d2.cwiseMax(0.0);
}

struct SingleRun {
    std::vector<int> assign;  // 0-based
    Matrix centers;
    double sq_objective = 0.0;
    int iterations = 0;
};

inline SingleRun lloyd_single(const Matrix& x, int k,
                              const std::vector<Index>& order, int max_iters,
                              CounterRng rng) {
    const Index n = x.rows(), d = x.cols();
    const Vector x_sq = x.rowwise().squaredNorm();

    // kmeans++ seeding, walking points in canonical order.
    Matrix centers = Matrix::Zero(k, d);
    centers.row(0) = x.row(order[static_cast<std::size_t>(rng.next_below(n))]);
    Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm().cwiseMax(0.0);
    for (int t = 1; t < k; ++t) {
        double total = 0.0;
        for (const Index i : order) total += d2[i];
        Index pick = order[static_cast<std::size_t>(rng.next_below(n))];
        if (total > 0.0) {
            const double target = rng.next_double() * total;
            double cum = 0.0;
            for (const Index i : order) {
                cum += d2[i];
                if (cum > target) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(t) = x.row(pick);
        d2 = d2.cwiseMin(
            (x.rowwise() - centers.row(t)).rowwise().squaredNorm().cwiseMax(0.0));
    }

    SingleRun run;
    run.assign.assign(static_cast<std::size_t>(n), -1);
    run.centers = centers;
    double prev_obj = std::numeric_limits<double>::infinity();
    const double scale = std::max(x_sq.maxCoeff(), 1.0);

    for (int iter = 0; iter < max_iters; ++iter) {
        Matrix dist = sq_dist_to_centers(x, x_sq, run.centers);
        std::vector<int> assign(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            double bestval = dist(i, 0);
            for (int t = 1; t < k; ++t)
                if (dist(i, t) < bestval) {  // strict: ties go to the lowest index
                    bestval = dist(i, t);
                    best = t;
                }
            assign[static_cast<std::size_t>(i)] = best;
        }

        // Re-seed empty clusters at the point farthest from its own center.
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (const int a : assign) ++counts[static_cast<std::size_t>(a)];
        for (int t = 0; t < k; ++t) {
            if (counts[static_cast<std::size_t>(t)] > 0) continue;
            Index far = -1;
            double far_d = 0.0;
            for (const Index i : order) {
                const double di = dist(i, assign[static_cast<std::size_t>(i)]);
                if (di > far_d) {
                    far_d = di;
                    far = i;
                }
            }
            if (far < 0) break;  // all points sit on their centers; stay empty
            run.centers.row(t) = x.row(far);
            --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(far)])];
            assign[static_cast<std::size_t>(far)] = t;
            counts[static_cast<std::size_t>(t)] = 1;
            dist.col(t) =
                (x.rowwise() - run.centers.row(t)).rowwise().squaredNorm().cwiseMax(0.0);
        }

        const bool unchanged = (assign == run.assign);
        run.assign = assign;

        // Means accumulated in canonical order; empty clusters get zero rows.
        run.centers.setZero();
        for (const Index i : order)
            run.centers.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
        for (int t = 0; t < k; ++t)
            if (counts[static_cast<std::size_t>(t)] > 0)
                run.centers.row(t) /= static_cast<double>(counts[static_cast<std::size_t>(t)]);

        double obj = 0.0;
        for (Index i = 0; i < n; ++i)
            obj += (x.row(i) - run.centers.row(assign[static_cast<std::size_t>(i)]))
                       .squaredNorm();
        if (obj > prev_obj + 1e-9 * scale)
            throw Error("lloyd_pp: objective increased between iterations");
        prev_obj = obj;
        run.sq_objective = obj;
        run.iterations = iter + 1;
        if (unchanged) break;
    }
    return run;
}

}  // namespace detail

struct LloydResult {
    KMeansMatrix solution;
    double objective = 0.0;         // Frobenius distance achieved
    double kappa_seed_bound = 0.0;  // seeding guarantee 8(ln k + 2)
    int iterations = 0;
};

/// Best of `restarts` runs of kmeans++ seeding followed by Lloyd iterations.
/// Deterministic given the stream; each restart draws from an independent
/// sub-stream, so the reduction is order-independent.
inline LloydResult lloyd_pp(const Matrix& x, const KMeansConfig& cfg,
                            CounterRng rng) {
    cfg.validate();
    if (x.rows() < cfg.k)
        throw ValidationError("lloyd_pp: fewer points than clusters");
    const std::vector<Index> order = detail::canonical_order(x);

    detail::SingleRun best;
    best.sq_objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        detail::SingleRun run = detail::lloyd_single(
            x, cfg.k, order, cfg.max_lloyd_iters, rng.substream("restart", r));
        if (run.sq_objective < best.sq_objective) best = std::move(run);
    }

    LloydResult out;
    out.solution.labels.k = cfg.k;
    out.solution.labels.labels.reserve(static_cast<std::size_t>(x.rows()));
    for (const int a : best.assign) out.solution.labels.labels.push_back(a + 1);
    out.solution.centers = best.centers;
    out.objective = std::sqrt(best.sq_objective);
    out.kappa_seed_bound = 8.0 * (std::log(static_cast<double>(cfg.k)) + 2.0);
    out.iterations = best.iterations;
    return out;
}

inline LloydResult lloyd_pp(const Matrix& x, const KMeansConfig& cfg) {
    return lloyd_pp(x, cfg, CounterRng(cfg.seed));
}

struct RadiusCoverResult {
    std::vector<std::vector<int>> clusters;  // disjoint, in creation order
    std::vector<int> unlabeled;
    std::vector<int> labels;  // per point: 1..k, or 0 when unlabeled
};

/// Greedy max-ball covering: k passes, each claiming the largest rho-ball
/// among surviving points; leftovers stay unlabeled. Ties pick the lowest
/// node index.
inline RadiusCoverResult radius_cover(const Matrix& x, int k, double rho) {
    if (k < 1) throw ValidationError("radius_cover: k must be >= 1");
    if (!(rho > 0)) throw ValidationError("radius_cover: rho must be > 0");
    const Index n = x.rows();
    const Vector x_sq = x.rowwise().squaredNorm();
    Matrix d2 = detail::sq_dist_to_centers(x, x_sq, x);
    const double rho_sq = rho * rho;

    RadiusCoverResult out;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    std::vector<char> alive(static_cast<std::size_t>(n), true);
    for (int r = 0; r < k; ++r) {
        Index best = -1;
        long best_size = -1;
        for (Index i = 0; i < n; ++i) {
            if (!alive[static_cast<std::size_t>(i)]) continue;
            long size = 0;
            for (Index j = 0; j < n; ++j)
                if (alive[static_cast<std::size_t>(j)] && d2(i, j) <= rho_sq) ++size;
            if (size > best_size) {
                best_size = size;
                best = i;
            }
        }
        std::vector<int> cluster;
        if (best >= 0) {
            for (Index j = 0; j < n; ++j) {
                if (alive[static_cast<std::size_t>(j)] && d2(best, j) <= rho_sq) {
                    cluster.push_back(static_cast<int>(j));
                    alive[static_cast<std::size_t>(j)] = false;
                    out.labels[static_cast<std::size_t>(j)] = r + 1;
                }
            }
        }
        out.clusters.push_back(std::move(cluster));
    }
    for (Index i = 0; i < n; ++i)
        if (alive[static_cast<std::size_t>(i)]) out.unlabeled.push_back(static_cast<int>(i));
    return out;
}

/// Misclassified-plus-unlabeled rate of a covering against reference labels:
/// the permutation matching runs over the labeled points, unlabeled points
/// always count as errors.
inline double cover_misclassification(const Membership& truth,
                                      const RadiusCoverResult& cover) {
    truth.validate();
    if (truth.n() != static_cast<int>(cover.labels.size()))
        throw DimensionMismatchError("cover_misclassification: length mismatch");
    Membership truth_sub, est_sub;
    truth_sub.k = truth.k;
    est_sub.k = static_cast<int>(cover.clusters.size());
    long unlabeled = 0;
    for (int i = 0; i < truth.n(); ++i) {
        const int l = cover.labels[static_cast<std::size_t>(i)];
        if (l == 0) {
            ++unlabeled;
        } else {
            truth_sub.labels.push_back(truth.labels[static_cast<std::size_t>(i)]);
            est_sub.labels.push_back(l);
        }
    }
    double wrong = static_cast<double>(unlabeled);
    if (!truth_sub.labels.empty())
        wrong += metrics::misclassification(truth_sub, est_sub).mis_bar *
                 static_cast<double>(truth_sub.n());
    return wrong / static_cast<double>(truth.n());
}

/// Radius sweep wrapper (experimental): tries rho_i = i * rho1 for
/// i = 1..ceil(log n) and keeps the covering with the smallest k-means
/// objective, assigning unlabeled points to their nearest center for scoring.
inline std::pair<RadiusCoverResult, double> radius_cover_sweep(const Matrix& x,
                                                               int k, double rho1) {
    if (!(rho1 > 0)) throw ValidationError("radius_cover_sweep: rho1 must be > 0");
    const int steps =
        std::max(1, static_cast<int>(std::ceil(std::log(std::max<double>(2, x.rows())))));
    RadiusCoverResult best;
    double best_rho = rho1, best_obj = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= steps; ++i) {
        const double rho = i * rho1;
        RadiusCoverResult cand = radius_cover(x, k, rho);
        Matrix centers = Matrix::Zero(k, x.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Index p = 0; p < x.rows(); ++p) {
            const int l = cand.labels[static_cast<std::size_t>(p)];
            if (l > 0) {
                centers.row(l - 1) += x.row(p);
                ++counts[static_cast<std::size_t>(l - 1)];
            }
        }
        for (int t = 0; t < k; ++t)
            if (counts[static_cast<std::size_t>(t)] > 0)
                centers.row(t) /= static_cast<double>(counts[static_cast<std::size_t>(t)]);
        double obj = 0.0;
        for (Index p = 0; p < x.rows(); ++p) {
            const int l = cand.labels[static_cast<std::size_t>(p)];
            if (l > 0) {
                obj += (x.row(p) - centers.row(l - 1)).squaredNorm();
            } else {
                double nearest = std::numeric_limits<double>::infinity();
                for (int t = 0; t < k; ++t)
                    nearest = std::min(nearest, (x.row(p) - centers.row(t)).squaredNorm());
                obj += nearest;
            }
        }
        if (obj < best_obj) {
            best_obj = obj;
            best = std::move(cand);
            best_rho = rho;
        }
    }
    return {best, best_rho};
}

/// True iff the algorithm labels two distance-identical inputs identically
/// (same stream). Inputs whose pairwise distances disagree beyond 1e-9 are a
/// caller bug.
inline bool isometry_check(const Matrix& x1, const Matrix& x2,
                           const KMeansConfig& cfg, CounterRng rng) {
    if (x1.rows() != x2.rows())
        throw DimensionMismatchError("isometry_check: row count mismatch");
    const Vector sq1 = x1.rowwise().squaredNorm();
    const Vector sq2 = x2.rowwise().squaredNorm();
    const Matrix d1 = detail::sq_dist_to_centers(x1, sq1, x1).cwiseSqrt();
    const Matrix d2 = detail::sq_dist_to_centers(x2, sq2, x2).cwiseSqrt();
    if ((d1 - d2).cwiseAbs().maxCoeff() > 1e-9)
        throw DistanceMismatchError("isometry_check: pairwise distances differ");

    Membership m1, m2;
    if (cfg.algorithm == Algorithm::radius_cover) {
        const RadiusCoverResult r1 = radius_cover(x1, cfg.k, *cfg.rho);
        const RadiusCoverResult r2 = radius_cover(x2, cfg.k, *cfg.rho);
        m1 = Membership(std::vector<int>(), cfg.k + 1);
        m2 = Membership(std::vector<int>(), cfg.k + 1);
        for (const int l : r1.labels) m1.labels.push_back(l + 1);
        for (const int l : r2.labels) m2.labels.push_back(l + 1);
    } else {
        m1 = lloyd_pp(x1, cfg, rng).solution.labels;
        m2 = lloyd_pp(x2, cfg, rng).solution.labels;
    }
    return metrics::misclassification(m1, m2).mis_bar == 0.0;
}

/// Local-quadratic-continuity certificate for a single run: checks the
/// separation condition with c_r = 1/2 and, when it holds, compares the
/// realized per-cluster misclassification against 4 (1+kappa)^2 eps^2 /
/// (n_r delta_r^2). Never throws on an unmet condition; that is reported.
struct LqcReport {
    bool condition_met = false;
    double epsilon = 0.0;
    double kappa = 0.0;
    Vector bound_per_cluster;  // NaN where the cluster is empty
    Vector mis_per_cluster;
    double bound_bar = 0.0;
    double mis_bar = 0.0;
    bool holds = false;  // measured <= bound everywhere (given condition_met)
};

inline LqcReport lqc_certificate(const KMeansMatrix& x_star, const Matrix& x_hat,
                                 const KMeansMatrix& x_tilde, double kappa) {
    x_star.validate();
    x_tilde.validate();
    LqcReport out;
    out.kappa = kappa;
    out.epsilon = kmeans_objective(x_hat, x_star);

    const std::vector<int> sizes = x_star.labels.cluster_sizes();
    const bool all_nonempty =
        std::all_of(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
    if (!all_nonempty || x_star.k() < 2) return out;  // condition (a) fails

    const CenterSeparation sep = center_separation(x_star);
    const double factor = 4.0 * (1.0 + kappa) * (1.0 + kappa) * out.epsilon * out.epsilon;
    out.bound_per_cluster = Vector::Zero(x_star.k());
    bool cond_b = true;
    for (int r = 0; r < x_star.k(); ++r) {
        const double denom = sizes[static_cast<std::size_t>(r)] * sep.delta[r] * sep.delta[r];
        out.bound_per_cluster[r] = factor / denom;
        if (!(out.bound_per_cluster[r] < 1.0)) cond_b = false;
    }
    out.bound_bar = factor / (x_star.n() * sep.delta_min * sep.delta_min);
    if (!cond_b) return out;

    out.condition_met = true;
    const metrics::MisReport mis =
        metrics::misclassification(x_star.labels, x_tilde.labels);
    out.mis_per_cluster = mis.per_cluster;
    out.mis_bar = mis.mis_bar;
    out.holds = out.mis_bar <= out.bound_bar;
    for (int r = 0; r < x_star.k(); ++r)
        if (out.mis_per_cluster[r] > out.bound_per_cluster[r]) out.holds = false;
    return out;
}

}  // namespace biclust::kmeans
