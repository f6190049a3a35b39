#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "biclust/errors.hpp"
#include "biclust/linalg.hpp"
#include "biclust/rng.hpp"
#include "biclust/types.hpp"

namespace biclust::models {

/// Largest-remainder rounding of proportions to integer sizes summing to n.
inline std::vector<int> cluster_sizes_from_proportions(const Vector& proportions,
                                                       int n) {
    const int k = static_cast<int>(proportions.size());
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    std::vector<double> remainder(static_cast<std::size_t>(k), 0.0);
    int assigned = 0;
    for (int t = 0; t < k; ++t) {
        const double quota = proportions[t] * n;
        sizes[static_cast<std::size_t>(t)] = static_cast<int>(std::floor(quota));
        remainder[static_cast<std::size_t>(t)] =
            quota - std::floor(quota);
        assigned += sizes[static_cast<std::size_t>(t)];
    }
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return remainder[static_cast<std::size_t>(a)] >
               remainder[static_cast<std::size_t>(b)];
    });
    for (int i = 0; assigned < n; ++i, ++assigned)
        ++sizes[static_cast<std::size_t>(order[static_cast<std::size_t>(i % k)])];
    return sizes;
}

struct SampleOptions {
    /// Shuffle node order so index does not reveal the label (default on).
    bool shuffle = true;
};

/// Membership with cluster blocks 1..k, optionally shuffled.
inline Membership membership_from_sizes(const std::vector<int>& sizes,
                                        CounterRng rng,
                                        const SampleOptions& opt = {}) {
    std::vector<int> labels;
    for (std::size_t t = 0; t < sizes.size(); ++t)
        labels.insert(labels.end(), static_cast<std::size_t>(sizes[t]),
                      static_cast<int>(t) + 1);
    if (opt.shuffle) rng.shuffle(labels);
    return Membership(std::move(labels), static_cast<int>(sizes.size()));
}

namespace detail {

inline std::vector<int> checked_sizes(const Vector& proportions, int n,
                                      const char* side) {
    std::vector<int> sizes = cluster_sizes_from_proportions(proportions, n);
    for (std::size_t t = 0; t < sizes.size(); ++t)
        if (sizes[t] < 1)
            throw EmptyClusterError(std::string("sample: ") + side + " cluster " +
                                    std::to_string(t + 1) + " rounds to size 0");
    return sizes;
}

}  // namespace detail

struct SbmSample {
    BiAdjacency adjacency;
    Membership rows;
    Membership cols;
};

/// Bernoulli bipartite SBM draw; E[A] = Z1 B Z2^T, entries independent,
/// bit-reproducible given the rng stream.
inline SbmSample sample_sbm(const SbmSpec& spec, CounterRng rng,
                            const SampleOptions& opt = {}) {
    spec.validate();
    const Matrix b = spec.connectivity();
    const std::vector<int> sizes1 =
        detail::checked_sizes(spec.proportions_rows, spec.n1, "row");
    const std::vector<int> sizes2 =
        detail::checked_sizes(spec.proportions_cols, spec.n2, "col");

    SbmSample out;
    out.rows = membership_from_sizes(sizes1, rng.substream("rows-shuffle"), opt);
    out.cols = membership_from_sizes(sizes2, rng.substream("cols-shuffle"), opt);

    CounterRng entry_rng = rng.substream("entries");
    Matrix a(spec.n1, spec.n2);
    for (int i = 0; i < spec.n1; ++i) {
        const int zi = out.rows.labels[static_cast<std::size_t>(i)] - 1;
        for (int j = 0; j < spec.n2; ++j) {
            const int zj = out.cols.labels[static_cast<std::size_t>(j)] - 1;
            a(i, j) = entry_rng.next_bernoulli(b(zi, zj)) ? 1.0 : 0.0;
        }
    }
    out.adjacency = BiAdjacency(std::move(a), false);
    return out;
}

inline SbmSample sample_sbm(const SbmSpec& spec, const SampleOptions& opt = {}) {
    return sample_sbm(spec, CounterRng(spec.seed), opt);
}

struct SymmetricSbmSample {
    BiAdjacency adjacency;  // symmetric
    Membership membership;
};

/// Symmetric SBM: upper triangle drawn independently, diagonal included
/// (self-loops allowed), lower triangle mirrored.
inline SymmetricSbmSample sample_symmetric_sbm(const SbmSpec& spec, CounterRng rng,
                                               const SampleOptions& opt = {}) {
    spec.validate();
    if (spec.n1 != spec.n2 || spec.k1 != spec.k2)
        throw ValidationError("sample_symmetric_sbm: requires n1 = n2 and k1 = k2");
    if ((spec.psi - spec.psi.transpose()).cwiseAbs().maxCoeff() > 0)
        throw ValidationError("sample_symmetric_sbm: psi must be symmetric");
    const Matrix b = spec.connectivity();
    const std::vector<int> sizes =
        detail::checked_sizes(spec.proportions_rows, spec.n1, "row");

    SymmetricSbmSample out;
    out.membership = membership_from_sizes(sizes, rng.substream("rows-shuffle"), opt);

    CounterRng entry_rng = rng.substream("entries");
    Matrix a = Matrix::Zero(spec.n1, spec.n1);
    for (int i = 0; i < spec.n1; ++i) {
        const int zi = out.membership.labels[static_cast<std::size_t>(i)] - 1;
        for (int j = i; j < spec.n1; ++j) {
            const int zj = out.membership.labels[static_cast<std::size_t>(j)] - 1;
            const double val = entry_rng.next_bernoulli(b(zi, zj)) ? 1.0 : 0.0;
            a(i, j) = val;
            a(j, i) = val;
        }
    }
    out.adjacency = BiAdjacency(std::move(a), true);
    return out;
}

inline SymmetricSbmSample sample_symmetric_sbm(const SbmSpec& spec,
                                               const SampleOptions& opt = {}) {
    return sample_symmetric_sbm(spec, CounterRng(spec.seed), opt);
}

/// Mean matrix P = Z1 B Z2^T for given memberships.
inline Matrix population_mean(const SbmSpec& spec, const Membership& rows,
                              const Membership& cols) {
    const Matrix b = spec.connectivity();
    Matrix p(rows.n(), cols.n());
    for (int i = 0; i < rows.n(); ++i)
        for (int j = 0; j < cols.n(); ++j)
            p(i, j) = b(rows.labels[static_cast<std::size_t>(i)] - 1,
                        cols.labels[static_cast<std::size_t>(j)] - 1);
    return p;
}

/// Reduced SVD of P built structurally: P = (Zbar1 U_psi) Sigma (Zbar2 V_psi)^T
/// with k = min(k1, k2) triplets. Uses the realized cluster sizes.
inline TruncatedSvd population_svd(const SbmSpec& spec, const Membership& rows,
                                   const Membership& cols) {
    rows.validate();
    cols.validate();
    const std::vector<int> n1t = rows.cluster_sizes();
    const std::vector<int> n2t = cols.cluster_sizes();
    for (int t = 0; t < rows.k; ++t)
        if (n1t[static_cast<std::size_t>(t)] == 0)
            throw EmptyClusterError("population_svd: empty row cluster");
    for (int t = 0; t < cols.k; ++t)
        if (n2t[static_cast<std::size_t>(t)] == 0)
            throw EmptyClusterError("population_svd: empty col cluster");

    Vector s1(rows.k), s2(cols.k);
    for (int t = 0; t < rows.k; ++t)
        s1[t] = std::sqrt(static_cast<double>(n1t[static_cast<std::size_t>(t)]));
    for (int t = 0; t < cols.k; ++t)
        s2[t] = std::sqrt(static_cast<double>(n2t[static_cast<std::size_t>(t)]));

    // Bbar = N1^{1/2} B N2^{1/2}, a small k1 x k2 matrix.
    const Matrix bbar =
        s1.asDiagonal() * spec.connectivity() * s2.asDiagonal();
    Eigen::JacobiSVD<Matrix> svd(bbar, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Index k = std::min(rows.k, cols.k);

    TruncatedSvd out;
    out.sigma = svd.singularValues().head(k);
    out.u = normalized_membership(rows) * svd.matrixU().leftCols(k);
    out.v = normalized_membership(cols) * svd.matrixV().leftCols(k);
    return out;
}

/// Convenience: canonical (unshuffled) memberships derived from proportions.
inline TruncatedSvd population_svd(const SbmSpec& spec) {
    const Membership rows = membership_from_sizes(
        detail::checked_sizes(spec.proportions_rows, spec.n1, "row"),
        CounterRng(0), SampleOptions{.shuffle = false});
    const Membership cols = membership_from_sizes(
        detail::checked_sizes(spec.proportions_cols, spec.n2, "col"),
        CounterRng(0), SampleOptions{.shuffle = false});
    return population_svd(spec, rows, cols);
}

/// Theory-side separation constants of a spec.
struct SeparationConstants {
    double psi_min_sq = 0.0;        // Psi_wedge^2
    double psi_tilde_min_sq = 0.0;  // Psi-tilde_wedge^2 (with the pi_{1t} factor)
    double sigma_k = 0.0;           // smallest singular value of Bbar (population)
    double d = 0.0;                 // sqrt(n2/n1) * max psi
    double d_av = 0.0;              // expected average degree
    Matrix lambda;                  // mean parameters Lambda_{sl} = B_{sl} n_{2l}
    double lambda_min_sq = 0.0;     // min squared row separation of Lambda
};

inline SeparationConstants separation_constants(const SbmSpec& spec) {
    spec.validate();
    SeparationConstants out;
    out.d = spec.degree_scale();
    out.d_av = spec.average_degree();

    const Matrix& psi = spec.psi;
    double best = std::numeric_limits<double>::infinity();
    double best_tilde = std::numeric_limits<double>::infinity();
    for (int s = 0; s < spec.k1; ++s) {
        for (int t = 0; t < spec.k1; ++t) {
            if (s == t) continue;
            double acc = 0.0;
            for (int l = 0; l < spec.k2; ++l) {
                const double diff = psi(s, l) - psi(t, l);
                acc += spec.proportions_cols[l] * diff * diff;
            }
            best = std::min(best, acc);
            best_tilde = std::min(best_tilde, spec.proportions_rows[t] * acc);
        }
    }
    out.psi_min_sq = spec.k1 > 1 ? best : 0.0;
    out.psi_tilde_min_sq = spec.k1 > 1 ? best_tilde : 0.0;

    const Matrix bbar = spec.proportions_rows.cwiseSqrt().asDiagonal() * psi *
                        spec.proportions_cols.cwiseSqrt().asDiagonal();
    Eigen::JacobiSVD<Matrix> svd(bbar);
    out.sigma_k = svd.singularValues()[std::min(spec.k1, spec.k2) - 1];

    const std::vector<int> n2t = cluster_sizes_from_proportions(
        spec.proportions_cols, spec.n2);
    const Matrix b = spec.connectivity();
    out.lambda.resize(spec.k1, spec.k2);
    for (int s = 0; s < spec.k1; ++s)
        for (int l = 0; l < spec.k2; ++l)
            out.lambda(s, l) = b(s, l) * n2t[static_cast<std::size_t>(l)];
    double lam = std::numeric_limits<double>::infinity();
    for (int s = 0; s < spec.k1; ++s)
        for (int t = s + 1; t < spec.k1; ++t)
            lam = std::min(lam,
                           (out.lambda.row(s) - out.lambda.row(t)).squaredNorm());
    out.lambda_min_sq = spec.k1 > 1 ? lam : 0.0;
    return out;
}

/// Block-constant means plus independent Gaussian noise.
struct SubGaussianSpec {
    int n1 = 0, n2 = 0;
    int k1 = 0, k2 = 0;
    Vector proportions_rows;
    Vector proportions_cols;
    Matrix b;  // k1 x k2 mean matrix
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n1 < 1 || n2 < 1 || k1 < 1 || k2 < 1)
            throw ValidationError("SubGaussianSpec: sizes and cluster counts must be positive");
        if (proportions_rows.size() != k1 || proportions_cols.size() != k2)
            throw ValidationError("SubGaussianSpec: proportion length mismatch");
        if (b.rows() != k1 || b.cols() != k2)
            throw ValidationError("SubGaussianSpec: mean matrix must be k1 x k2");
        if (noise_sigma < 0)
            throw ValidationError("SubGaussianSpec: noise_sigma must be >= 0");
        if (!b.allFinite())
            throw ValidationError("SubGaussianSpec: mean matrix must be finite");
    }
};

struct SubGaussianSample {
    Matrix entries;
    Membership rows;
    Membership cols;
};

inline SubGaussianSample sample_subgaussian(const SubGaussianSpec& spec,
                                            CounterRng rng,
                                            const SampleOptions& opt = {}) {
    spec.validate();
    const std::vector<int> sizes1 =
        detail::checked_sizes(spec.proportions_rows, spec.n1, "row");
    const std::vector<int> sizes2 =
        detail::checked_sizes(spec.proportions_cols, spec.n2, "col");

    SubGaussianSample out;
    out.rows = membership_from_sizes(sizes1, rng.substream("rows-shuffle"), opt);
    out.cols = membership_from_sizes(sizes2, rng.substream("cols-shuffle"), opt);

    CounterRng entry_rng = rng.substream("entries");
    out.entries.resize(spec.n1, spec.n2);
    for (int i = 0; i < spec.n1; ++i) {
        const int zi = out.rows.labels[static_cast<std::size_t>(i)] - 1;
        for (int j = 0; j < spec.n2; ++j) {
            const int zj = out.cols.labels[static_cast<std::size_t>(j)] - 1;
            out.entries(i, j) =
                spec.b(zi, zj) + spec.noise_sigma * entry_rng.next_gaussian();
        }
    }
    return out;
}

inline SubGaussianSample sample_subgaussian(const SubGaussianSpec& spec,
                                            const SampleOptions& opt = {}) {
    return sample_subgaussian(spec, CounterRng(spec.seed), opt);
}

/// Declarative perturbation added to the block-constant graphon, keeping the
/// config format fully serializable.
struct GraphonPerturbation {
    enum class Kind { none, constant, separable, sine };
    Kind kind = Kind::none;
    double constant = 0.0;     // rho0 = rho_tilde + constant
    double amplitude = 0.0;    // scale of separable / sine terms
    int freq_x = 1, freq_y = 1;

    double operator()(double x, double y) const {
        switch (kind) {
            case Kind::none: return 0.0;
            case Kind::constant: return constant;
            case Kind::separable: return amplitude * x * y;
            case Kind::sine:
                return amplitude * std::sin(std::numbers::pi * freq_x * x) *
                       std::sin(std::numbers::pi * freq_y * y);
        }
        return 0.0;
    }
};

/// Graphon clustering model: latent uniforms, block-constant approximant
/// rho_tilde defined by interval partitions, density rho0 = rho_tilde + pert.
struct GraphonSpec {
    int n = 0;
    std::vector<double> row_breaks;  // interior breakpoints of [0,1], sorted
    std::vector<double> col_breaks;
    Matrix psi_block;  // k1 x k2 block values of rho_tilde
    GraphonPerturbation perturbation;
    std::uint64_t seed = 0;

    int k_rows() const { return static_cast<int>(row_breaks.size()) + 1; }
    int k_cols() const { return static_cast<int>(col_breaks.size()) + 1; }

    static int interval_of(const std::vector<double>& breaks, double x) {
        int idx = 0;
        while (idx < static_cast<int>(breaks.size()) &&
               x >= breaks[static_cast<std::size_t>(idx)])
            ++idx;
        return idx;
    }

    double rho_tilde(double x, double y) const {
        return psi_block(interval_of(row_breaks, x), interval_of(col_breaks, y));
    }

    double rho0(double x, double y) const {
        return rho_tilde(x, y) + perturbation(x, y);
    }

    double max_rho_tilde() const { return psi_block.maxCoeff(); }

    void validate() const {
        if (n < 1) throw ValidationError("GraphonSpec: n must be positive");
        if (psi_block.rows() != k_rows() || psi_block.cols() != k_cols())
            throw ValidationError("GraphonSpec: psi_block shape mismatch");
        if ((psi_block.array() < 0).any())
            throw ValidationError("GraphonSpec: psi_block must be nonnegative");
        for (const auto* breaks : {&row_breaks, &col_breaks})
            if (!std::is_sorted(breaks->begin(), breaks->end()) ||
                (!breaks->empty() &&
                 (breaks->front() <= 0.0 || breaks->back() >= 1.0)))
                throw ValidationError("GraphonSpec: breakpoints must be sorted inside (0,1)");
    }
};

struct GraphonSample {
    BiAdjacency adjacency;
    Membership rows;  // implicit labels: interval index of the latent X_i
    Membership cols;
    long clip_count = 0;  // entries where rho0/n left [0,1]
};

inline GraphonSample sample_graphon(const GraphonSpec& spec, CounterRng rng) {
    spec.validate();
    CounterRng latent_rng = rng.substream("latents");
    std::vector<double> xs(static_cast<std::size_t>(spec.n));
    std::vector<double> ys(static_cast<std::size_t>(spec.n));
    for (auto& x : xs) x = latent_rng.next_double();
    for (auto& y : ys) y = latent_rng.next_double();

    GraphonSample out;
    out.rows.k = spec.k_rows();
    out.cols.k = spec.k_cols();
    for (const double x : xs)
        out.rows.labels.push_back(GraphonSpec::interval_of(spec.row_breaks, x) + 1);
    for (const double y : ys)
        out.cols.labels.push_back(GraphonSpec::interval_of(spec.col_breaks, y) + 1);

    CounterRng entry_rng = rng.substream("entries");
    Matrix a(spec.n, spec.n);
    const double n = static_cast<double>(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        for (int j = 0; j < spec.n; ++j) {
            double p = spec.rho0(xs[static_cast<std::size_t>(i)],
                                 ys[static_cast<std::size_t>(j)]) / n;
            if (p < 0.0 || p > 1.0) {
                ++out.clip_count;
                p = std::clamp(p, 0.0, 1.0);
            }
            a(i, j) = entry_rng.next_bernoulli(p) ? 1.0 : 0.0;
        }
    }
    out.adjacency = BiAdjacency(std::move(a), false);
    return out;
}

inline GraphonSample sample_graphon(const GraphonSpec& spec) {
    return sample_graphon(spec, CounterRng(spec.seed));
}

/// Monte-Carlo estimate of ||rho_tilde - rho0||_{L^4}; reported as a
/// diagnostic next to sqrt(d).
inline double graphon_l4_deviation(const GraphonSpec& spec, int n_samples,
                                   CounterRng rng) {
    double acc = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double x = rng.next_double();
        const double y = rng.next_double();
        const double diff = spec.rho_tilde(x, y) - spec.rho0(x, y);
        acc += diff * diff * diff * diff;
    }
    return std::pow(acc / n_samples, 0.25);
}

struct SbmApproximation {
    Matrix b_tilde;  // k1 x k2 block means
    Matrix p_tilde;  // Z1 B_tilde Z2^T
};

/// Block-averaging map P -> Pi_1 P Pi_2; idempotent.
inline SbmApproximation sbm_approximation(const Matrix& p, const Membership& rows,
                                          const Membership& cols) {
    rows.validate();
    cols.validate();
    if (p.rows() != rows.n() || p.cols() != cols.n())
        throw DimensionMismatchError("sbm_approximation: shape mismatch");
    const std::vector<int> n1t = rows.cluster_sizes();
    const std::vector<int> n2t = cols.cluster_sizes();
    for (const int s : n1t)
        if (s == 0) throw EmptyClusterError("sbm_approximation: empty row cluster");
    for (const int s : n2t)
        if (s == 0) throw EmptyClusterError("sbm_approximation: empty col cluster");

    SbmApproximation out;
    out.b_tilde = Matrix::Zero(rows.k, cols.k);
    for (int i = 0; i < rows.n(); ++i)
        for (int j = 0; j < cols.n(); ++j)
            out.b_tilde(rows.labels[static_cast<std::size_t>(i)] - 1,
                        cols.labels[static_cast<std::size_t>(j)] - 1) += p(i, j);
    for (int s = 0; s < rows.k; ++s)
        for (int t = 0; t < cols.k; ++t)
            out.b_tilde(s, t) /= static_cast<double>(n1t[static_cast<std::size_t>(s)]) *
                                 static_cast<double>(n2t[static_cast<std::size_t>(t)]);
    out.p_tilde.resize(rows.n(), cols.n());
    for (int i = 0; i < rows.n(); ++i)
        for (int j = 0; j < cols.n(); ++j)
            out.p_tilde(i, j) = out.b_tilde(rows.labels[static_cast<std::size_t>(i)] - 1,
                                            cols.labels[static_cast<std::size_t>(j)] - 1);
    return out;
}

}  // namespace biclust::models
