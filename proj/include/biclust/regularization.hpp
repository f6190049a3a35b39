#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "biclust/errors.hpp"
#include "biclust/linalg.hpp"
#include "biclust/models.hpp"
#include "biclust/types.hpp"

namespace biclust::reg {

enum class Side { rows, cols };
enum class Mode { none, weights, oracle };

/// Everything the degree-based regularizer decided and did.
struct RegularizationReport {
    Mode mode = Mode::none;
    double tau = 3.0;
    int alpha_row = 0, alpha_col = 0;
    double dhat_row = 0.0, dhat_col = 0.0;
    std::vector<int> trimmed_rows, trimmed_cols;  // I-hat_1, I-hat_2 (0-based)
    Vector weights_row, weights_col;              // multipliers in (0,1]
    bool zero_graph = false;  // all degrees zero; matrix returned unchanged
};

struct DegreeStats {
    Vector degrees;
    double mean = 0.0;
    int alpha = 0;          // floor(n / mean), clamped to [1, n]
    double order_stat = 0;  // alpha-th largest degree
};

/// Degrees, their mean, and the order statistic D_(alpha) on one side.
inline DegreeStats degree_order_statistic(const BiAdjacency& a, Side side) {
    if ((a.entries.array() < 0).any())
        throw ValidationError("degree_order_statistic: negative entries");
    DegreeStats out;
    out.degrees = side == Side::rows ? Vector(a.entries.rowwise().sum())
                                     : Vector(a.entries.colwise().sum());
    const Index n = out.degrees.size();
    out.mean = out.degrees.sum() / static_cast<double>(n);
    if (out.mean == 0.0)
        throw ZeroGraphError("degree_order_statistic: all degrees are zero");
    out.alpha = static_cast<int>(std::floor(static_cast<double>(n) / out.mean));
    out.alpha = std::clamp(out.alpha, 1, static_cast<int>(n));
    std::vector<double> sorted(out.degrees.data(), out.degrees.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    out.order_stat = sorted[static_cast<std::size_t>(out.alpha - 1)];
    return out;
}

namespace detail {

/// Weight step shared by every scheme: entries become A_ij * w_i * w'_j where
/// w_i caps the l1 norm of row i at `cap` whenever `trim(D_i)` fires.
template <typename TrimPred>
std::pair<BiAdjacency, RegularizationReport> apply_weights(
    const BiAdjacency& a, const Vector& row_deg, const Vector& col_deg,
    double cap_row, double cap_col, TrimPred row_trim, TrimPred col_trim) {
    RegularizationReport report;
    report.dhat_row = cap_row;
    report.dhat_col = cap_col;
    const Index n1 = a.n_rows(), n2 = a.n_cols();
    report.weights_row = Vector::Ones(n1);
    report.weights_col = Vector::Ones(n2);
    for (Index i = 0; i < n1; ++i) {
        if (row_trim(row_deg[i], cap_row)) {
            report.trimmed_rows.push_back(static_cast<int>(i));
            if (row_deg[i] > 0)
                report.weights_row[i] = std::min(cap_row / row_deg[i], 1.0);
        }
    }
    for (Index j = 0; j < n2; ++j) {
        if (col_trim(col_deg[j], cap_col)) {
            report.trimmed_cols.push_back(static_cast<int>(j));
            if (col_deg[j] > 0)
                report.weights_col[j] = std::min(cap_col / col_deg[j], 1.0);
        }
    }
    BiAdjacency out(Matrix(report.weights_row.asDiagonal() * a.entries *
                           report.weights_col.asDiagonal()),
                    a.symmetric);

    // Step-5 constraint must hold by construction; verify anyway.
    for (const int i : report.trimmed_rows)
        if (out.entries.row(i).lpNorm<1>() > cap_row + 1e-9)
            throw Error("regularization: row l1 constraint violated");
    for (const int j : report.trimmed_cols)
        if (out.entries.col(j).lpNorm<1>() > cap_col + 1e-9)
            throw Error("regularization: column l1 constraint violated");
    return {std::move(out), std::move(report)};
}

}  // namespace detail

/// Algorithm-1 weight step with explicit thresholds: trim set {D >= dhat},
/// l1 cap dhat on each side.
inline std::pair<BiAdjacency, RegularizationReport> regularize_with_thresholds(
    const BiAdjacency& a, double dhat_row, double dhat_col) {
    const Vector row_deg = a.entries.rowwise().sum();
    const Vector col_deg = a.entries.colwise().sum();
    auto trim = [](double deg, double cap) { return cap > 0.0 && deg >= cap; };
    auto [out, report] = detail::apply_weights(a, row_deg, col_deg, dhat_row,
                                               dhat_col, trim, trim);
    report.mode = Mode::weights;
    return {std::move(out), std::move(report)};
}

/// Data-driven regularization: thresholds tau * D_(alpha) computed from the
/// degree order statistics of each side. tau = +inf is the "no
/// regularization" sentinel. A graph with no edges is returned unchanged with
/// the zero_graph flag set.
inline std::pair<BiAdjacency, RegularizationReport> regularize_data_driven(
    const BiAdjacency& a, double tau = 3.0) {
    if (!(tau > 0.0)) throw ValidationError("regularize_data_driven: tau must be > 0");
    if (std::isinf(tau)) {
        RegularizationReport report;
        report.mode = Mode::none;
        report.tau = tau;
        report.weights_row = Vector::Ones(a.n_rows());
        report.weights_col = Vector::Ones(a.n_cols());
        return {a, std::move(report)};
    }
    if (a.entries.sum() == 0.0) {
        RegularizationReport report;
        report.mode = Mode::none;
        report.tau = tau;
        report.zero_graph = true;
        report.weights_row = Vector::Ones(a.n_rows());
        report.weights_col = Vector::Ones(a.n_cols());
        return {a, std::move(report)};
    }
    const DegreeStats rows = degree_order_statistic(a, Side::rows);
    const DegreeStats cols = degree_order_statistic(a, Side::cols);
    auto [out, report] = regularize_with_thresholds(a, tau * rows.order_stat,
                                                    tau * cols.order_stat);
    report.tau = tau;
    report.alpha_row = rows.alpha;
    report.alpha_col = cols.alpha;
    return {std::move(out), std::move(report)};
}

/// Oracle scheme: rows/columns with degree above 2d are scaled so their l1
/// norm is at most d_prime; everything else is untouched.
inline std::pair<BiAdjacency, RegularizationReport> regularize_oracle(
    const BiAdjacency& a, double d, double d_prime) {
    if (!(d > 0.0) || !(d_prime > 0.0))
        throw ValidationError("regularize_oracle: d and d_prime must be > 0");
    const Vector row_deg = a.entries.rowwise().sum();
    const Vector col_deg = a.entries.colwise().sum();
    auto trim = [d](double deg, double /*cap*/) { return deg > 2.0 * d; };
    auto [out, report] =
        detail::apply_weights(a, row_deg, col_deg, d_prime, d_prime, trim, trim);
    report.mode = Mode::oracle;
    return {std::move(out), std::move(report)};
}

struct ConcentrationError {
    double abs_err = 0.0;  // ||a_re - p||_op
    double rel_err = 0.0;  // abs / ||p||_op
};

inline ConcentrationError concentration_error(const BiAdjacency& a_re,
                                              const Matrix& p,
                                              double tol = 1e-6) {
    if (a_re.n_rows() != p.rows() || a_re.n_cols() != p.cols())
        throw DimensionMismatchError("concentration_error: shape mismatch");
    ConcentrationError out;
    out.abs_err = linalg::operator_norm(a_re.entries - p, tol);
    const double denom = linalg::operator_norm(p, tol);
    out.rel_err = denom > 0 ? out.abs_err / denom : 0.0;
    return out;
}

/// Degree-regularity assumption behind the data-driven scheme: reports the
/// realized balance factor beta and whether
/// (n2/n1)^2 max{8 beta k1, 8 beta k2, 90} <= dbar <= n1/2.
struct A2Report {
    bool holds = false;
    double beta = 1.0;
    double dbar = 0.0;   // expected average degree on side 1
    double lower = 0.0;
    double upper = 0.0;
};

inline A2Report check_assumption_a2(const SbmSpec& spec) {
    spec.validate();
    A2Report out;
    const std::vector<int> n1t =
        models::cluster_sizes_from_proportions(spec.proportions_rows, spec.n1);
    const std::vector<int> n2t =
        models::cluster_sizes_from_proportions(spec.proportions_cols, spec.n2);
    double beta = 1.0;
    for (const int s : n1t)
        if (s > 0)
            beta = std::max(beta, static_cast<double>(spec.n1) /
                                      (static_cast<double>(spec.k1) * s));
    for (const int s : n2t)
        if (s > 0)
            beta = std::max(beta, static_cast<double>(spec.n2) /
                                      (static_cast<double>(spec.k2) * s));
    out.beta = beta;

    const Matrix b = spec.connectivity();
    double total = 0.0;
    for (int s = 0; s < spec.k1; ++s)
        for (int t = 0; t < spec.k2; ++t)
            total += n1t[static_cast<std::size_t>(s)] *
                     n2t[static_cast<std::size_t>(t)] * b(s, t);
    out.dbar = total / spec.n1;

    const double ratio = static_cast<double>(spec.n2) / spec.n1;
    out.lower = ratio * ratio *
                std::max({8.0 * beta * spec.k1, 8.0 * beta * spec.k2, 90.0});
    out.upper = 0.5 * spec.n1;
    out.holds = spec.n1 <= spec.n2 && out.lower <= out.dbar && out.dbar <= out.upper;
    return out;
}

}  // namespace biclust::reg
