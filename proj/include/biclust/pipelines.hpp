#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "biclust/errors.hpp"
#include "biclust/kmeans.hpp"
#include "biclust/linalg.hpp"
#include "biclust/metrics.hpp"
#include "biclust/models.hpp"
#include "biclust/regularization.hpp"
#include "biclust/rng.hpp"
#include "biclust/types.hpp"

namespace biclust::pipeline {

enum class Algorithm { sc1, scrr, scrre, subg };
enum class Side { rows, cols, both };

struct PipelineConfig {
    Algorithm algorithm = Algorithm::scrre;
    int k_rows = 0, k_cols = 0;
    /// 0 means min(k_rows, k_cols); override for rank-deficient studies.
    int truncation_k = 0;
    /// +inf disables regularization. Ignored by the sub-Gaussian variant.
    double tau = 3.0;
    Side side = Side::rows;
    kmeans::KMeansConfig km;  // k is set per side by the pipeline
    linalg::SvdOptions svd;
    std::uint64_t seed = 0;
    /// Keep A_re and the truncated SVD on the result for diagnostics.
    bool keep_intermediates = false;
};

struct Diagnostics {
    Vector spectrum;  // sigma-hat, truncation_k values
    reg::RegularizationReport reg_report;
    double svd_seconds = 0.0, kmeans_seconds = 0.0, total_seconds = 0.0;
    double row_objective = std::numeric_limits<double>::quiet_NaN();
    double col_objective = std::numeric_limits<double>::quiet_NaN();
    double kappa_seed_bound = 0.0;
};

struct PipelineResult {
    std::optional<Membership> rows, cols;
    std::optional<KMeansMatrix> row_kmeans, col_kmeans;
    Diagnostics diag;
    std::vector<std::string> anomalies;  // e.g. empty clusters, reported not thrown
    std::optional<Matrix> a_re;          // populated when keep_intermediates
    std::optional<TruncatedSvd> svd;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

inline void check_sides(const PipelineConfig& cfg, Index n1, Index n2) {
    if (cfg.km.algorithm != kmeans::Algorithm::lloyd_pp)
        throw ValidationError("pipeline: the k-means step must be lloyd_pp");
    const bool want_rows = cfg.side != Side::cols;
    const bool want_cols = cfg.side != Side::rows;
    if (want_rows && (cfg.k_rows < 1 || cfg.k_rows > n1))
        throw ValidationError("pipeline: k_rows out of range");
    if (want_cols && (cfg.k_cols < 1 || cfg.k_cols > n2))
        throw ValidationError("pipeline: k_cols out of range");
}

inline Index pick_truncation(const PipelineConfig& cfg, Index n1, Index n2) {
    Index kt = cfg.truncation_k;
    if (kt <= 0) {
        // min over the sides actually clustered; a one-sided run with
        // k_rows = n1 must not inflate the rank.
        const bool want_rows = cfg.side != Side::cols;
        const bool want_cols = cfg.side != Side::rows;
        if (want_rows && want_cols)
            kt = std::min(cfg.k_rows, cfg.k_cols);
        else if (want_rows)
            kt = cfg.k_rows;
        else
            kt = cfg.k_cols;
    }
    kt = std::min<Index>(kt, std::min(n1, n2));
    if (kt < 1) throw ValidationError("pipeline: truncation rank must be >= 1");
    return kt;
}

/// Shared spectral + k-means stages, applied to an already-regularized matrix.
inline PipelineResult spectral_core(Matrix are, reg::RegularizationReport report,
                                    const PipelineConfig& cfg, CounterRng rng) {
    const auto t0 = std::chrono::steady_clock::now();
    check_sides(cfg, are.rows(), are.cols());
    const Index kt = pick_truncation(cfg, are.rows(), are.cols());

    PipelineResult out;
    out.diag.reg_report = std::move(report);

    const auto t_svd = std::chrono::steady_clock::now();
    const TruncatedSvd svd = linalg::truncated_svd(are, kt, cfg.svd);
    out.diag.svd_seconds = seconds_since(t_svd);
    out.diag.spectrum = svd.sigma;

    const auto t_km = std::chrono::steady_clock::now();
    auto run_side = [&](bool rows_side) {
        Matrix points;
        switch (cfg.algorithm) {
            case Algorithm::sc1:
                points = rows_side ? svd.u : svd.v;
                break;
            case Algorithm::scrr:
                points = rows_side
                             ? Matrix(svd.u * svd.sigma.asDiagonal() * svd.v.transpose())
                             : Matrix(svd.v * svd.sigma.asDiagonal() * svd.u.transpose());
                break;
            case Algorithm::scrre:
            case Algorithm::subg:
                points = rows_side ? Matrix(svd.u * svd.sigma.asDiagonal())
                                   : Matrix(svd.v * svd.sigma.asDiagonal());
                break;
        }
        kmeans::KMeansConfig km = cfg.km;
        km.k = rows_side ? cfg.k_rows : cfg.k_cols;
        const kmeans::LloydResult res = kmeans::lloyd_pp(
            points, km, rng.substream(rows_side ? "kmeans-rows" : "kmeans-cols"));
        const std::vector<int> sizes = res.solution.labels.cluster_sizes();
        const long nonempty =
            std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
        if (nonempty < km.k)
            out.anomalies.push_back(std::string(rows_side ? "rows" : "cols") +
                                    ": only " + std::to_string(nonempty) + " of " +
                                    std::to_string(km.k) + " clusters nonempty");
        if (rows_side) {
            out.rows = res.solution.labels;
            out.row_kmeans = res.solution;
            out.diag.row_objective = res.objective;
            out.diag.kappa_seed_bound = res.kappa_seed_bound;
        } else {
            out.cols = res.solution.labels;
            out.col_kmeans = res.solution;
            out.diag.col_objective = res.objective;
            out.diag.kappa_seed_bound = res.kappa_seed_bound;
        }
    };
    if (cfg.side != Side::cols) run_side(true);
    if (cfg.side != Side::rows) run_side(false);
    out.diag.kmeans_seconds = seconds_since(t_km);

    if (cfg.keep_intermediates) {
        out.a_re = std::move(are);
        out.svd = svd;
    }
    out.diag.total_seconds = seconds_since(t0);
    return out;
}

}  // namespace detail

/// Dispatch on cfg.algorithm; adjacency pipelines regularize first, the
/// sub-Gaussian variant must go through sc_subgaussian.
inline PipelineResult run(const BiAdjacency& a, const PipelineConfig& cfg,
                          CounterRng rng) {
    if (cfg.algorithm == Algorithm::subg)
        throw ValidationError("run: use sc_subgaussian for the sub-Gaussian variant");
    a.validate();
    auto [are, report] = reg::regularize_data_driven(a, cfg.tau);
    return detail::spectral_core(std::move(are.entries), std::move(report), cfg, rng);
}

inline PipelineResult run(const BiAdjacency& a, const PipelineConfig& cfg) {
    return run(a, cfg, CounterRng(cfg.seed));
}

inline PipelineResult sc1(const BiAdjacency& a, PipelineConfig cfg, CounterRng rng) {
    cfg.algorithm = Algorithm::sc1;
    return run(a, cfg, rng);
}

inline PipelineResult sc_rr(const BiAdjacency& a, PipelineConfig cfg, CounterRng rng) {
    cfg.algorithm = Algorithm::scrr;
    return run(a, cfg, rng);
}

inline PipelineResult sc_rre(const BiAdjacency& a, PipelineConfig cfg, CounterRng rng) {
    cfg.algorithm = Algorithm::scrre;
    return run(a, cfg, rng);
}

/// Spectral clustering for sub-Gaussian data: no regularization step, raw
/// truncated SVD, then k-means on the scaled singular vectors.
inline PipelineResult sc_subgaussian(const Matrix& a, PipelineConfig cfg,
                                     CounterRng rng) {
    cfg.algorithm = Algorithm::subg;
    reg::RegularizationReport report;
    report.mode = reg::Mode::none;
    report.weights_row = Vector::Ones(a.rows());
    report.weights_col = Vector::Ones(a.cols());
    return detail::spectral_core(a, std::move(report), cfg, rng);
}

inline PipelineResult sc_subgaussian(const Matrix& a, const PipelineConfig& cfg) {
    return sc_subgaussian(a, cfg, CounterRng(cfg.seed));
}

/// Incoherence rho_1 of the model's left singular factor: how far pairs of
/// rows of U_psi are from collinearity; a diagnostic for the k1 > rank case.
inline double incoherence_rho1(const SbmSpec& spec) {
    spec.validate();
    const Matrix bbar = spec.proportions_rows.cwiseSqrt().asDiagonal() * spec.psi *
                        spec.proportions_cols.cwiseSqrt().asDiagonal();
    Eigen::JacobiSVD<Matrix> svd(bbar, Eigen::ComputeFullU);
    const Index k = std::min(spec.k1, spec.k2);
    const Matrix u = svd.matrixU().leftCols(k);
    const Matrix g = u * u.transpose() - Matrix::Identity(spec.k1, spec.k1);
    double worst = 0.0;
    for (int s = 0; s < spec.k1; ++s) {
        for (int t = s + 1; t < spec.k1; ++t) {
            // Operator norm of the symmetric 2x2 principal submatrix.
            const double a = g(s, s), b = g(s, t), c = g(t, t);
            const double mid = 0.5 * (a + c);
            const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
            worst = std::max({worst, std::abs(mid + rad), std::abs(mid - rad)});
        }
    }
    return std::clamp(1.0 - worst, 0.0, 1.0);
}

/// Ground-truth diagnostics for a pipeline run; the estimator itself never
/// sees these quantities. Spectral fields need keep_intermediates.
struct TruthDiagnostics {
    double mis_rows = std::numeric_limits<double>::quiet_NaN();
    double nmi_rows = std::numeric_limits<double>::quiet_NaN();
    double mis_cols = std::numeric_limits<double>::quiet_NaN();
    double nmi_cols = std::numeric_limits<double>::quiet_NaN();
    double concentration_abs = std::numeric_limits<double>::quiet_NaN();
    double concentration_rel = std::numeric_limits<double>::quiet_NaN();
    double sigma_k = std::numeric_limits<double>::quiet_NaN();
    double alignment_error = std::numeric_limits<double>::quiet_NaN();
    double alignment_bound = std::numeric_limits<double>::quiet_NaN();
    double lemma6_lhs = std::numeric_limits<double>::quiet_NaN();
    double lemma6_rhs = std::numeric_limits<double>::quiet_NaN();
    double epsilon = std::numeric_limits<double>::quiet_NaN();  // d_F(Xhat, X*)
    double kappa_run = std::numeric_limits<double>::quiet_NaN();
    std::optional<kmeans::LqcReport> lqc_rows;
};

inline TruthDiagnostics diagnose(const PipelineResult& res,
                                 const PipelineConfig& cfg, const SbmSpec& spec,
                                 const Membership& truth_rows,
                                 const Membership& truth_cols,
                                 double norm_tol = 1e-6) {
    TruthDiagnostics out;
    if (res.rows) {
        out.mis_rows = metrics::misclassification(truth_rows, *res.rows).mis_bar;
        out.nmi_rows = metrics::nmi(truth_rows, *res.rows).value;
    }
    if (res.cols) {
        out.mis_cols = metrics::misclassification(truth_cols, *res.cols).mis_bar;
        out.nmi_cols = metrics::nmi(truth_cols, *res.cols).value;
    }
    if (!res.a_re || !res.svd) return out;

    const Matrix p = models::population_mean(spec, truth_rows, truth_cols);
    const Matrix diff = *res.a_re - p;
    out.concentration_abs = linalg::operator_norm(diff, norm_tol);
    const double p_norm = linalg::operator_norm(p, norm_tol);
    out.concentration_rel = p_norm > 0 ? out.concentration_abs / p_norm : 0.0;

    const TruncatedSvd pop = models::population_svd(spec, truth_rows, truth_cols);
    const Index k = res.svd->k();
    if (k <= pop.k()) {
        out.sigma_k = pop.sigma[k - 1];
        const linalg::Alignment al =
            linalg::align_orthogonal(res.svd->u, pop.u.leftCols(k));
        out.alignment_error = al.error;
        out.alignment_bound = out.sigma_k > 0
                                  ? 2.0 * std::sqrt(2.0 * k) * out.concentration_abs /
                                        out.sigma_k
                                  : std::numeric_limits<double>::infinity();
    }
    out.lemma6_lhs = (res.svd->reconstruct() - p).norm();
    out.lemma6_rhs = 2.0 * std::sqrt(2.0 * k) * out.concentration_abs;

    // Per-run LQC certificate on the row side. The reference k-means matrix
    // is the population image of the row representation.
    if (res.row_kmeans && res.rows) {
        Matrix x_hat, x_star_m;
        switch (cfg.algorithm) {
            case Algorithm::sc1:
                x_hat = res.svd->u;
                x_star_m = pop.u.leftCols(k) *
                           linalg::align_orthogonal(res.svd->u, pop.u.leftCols(k)).q;
                break;
            case Algorithm::scrr:
                x_hat = res.svd->reconstruct();
                x_star_m = p;
                break;
            case Algorithm::scrre:
            case Algorithm::subg:
                x_hat = res.svd->u * res.svd->sigma.asDiagonal();
                x_star_m = p * res.svd->v;
                break;
        }
        KMeansMatrix x_star;
        x_star.labels = truth_rows;
        x_star.centers = Matrix::Zero(truth_rows.k, x_star_m.cols());
        const std::vector<int> sizes = truth_rows.cluster_sizes();
        for (int i = 0; i < truth_rows.n(); ++i)
            x_star.centers.row(truth_rows.labels[static_cast<std::size_t>(i)] - 1) =
                x_star_m.row(i);
        out.epsilon = (x_hat - x_star_m).norm();
        out.kappa_run = out.epsilon > 0 ? res.diag.row_objective / out.epsilon : 0.0;
        out.lqc_rows = kmeans::lqc_certificate(x_star, x_hat, *res.row_kmeans,
                                               out.kappa_run);
    }
    return out;
}

}  // namespace biclust::pipeline
