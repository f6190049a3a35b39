#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "biclust/errors.hpp"
#include "biclust/models.hpp"
#include "biclust/pipelines.hpp"
#include "biclust/regularization.hpp"
#include "biclust/types.hpp"

namespace biclust::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Matrix Market coordinate format (1-based).
// ---------------------------------------------------------------------------

inline void write_matrix_market(const std::string& path, const BiAdjacency& a) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    const bool integral = a.is_binary();
    long nnz = 0;
    for (Index i = 0; i < a.n_rows(); ++i)
        for (Index j = 0; j < a.n_cols(); ++j)
            if (a.entries(i, j) != 0.0) ++nnz;
    out << "%%MatrixMarket matrix coordinate "
        << (integral ? "integer" : "real") << " general\n";
    out << a.n_rows() << ' ' << a.n_cols() << ' ' << nnz << '\n';
    char buf[64];
    for (Index i = 0; i < a.n_rows(); ++i) {
        for (Index j = 0; j < a.n_cols(); ++j) {
            const double v = a.entries(i, j);
            if (v == 0.0) continue;
            if (integral) {
                out << (i + 1) << ' ' << (j + 1) << ' '
                    << static_cast<long>(v) << '\n';
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out << (i + 1) << ' ' << (j + 1) << ' ' << buf << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

inline BiAdjacency read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header))
        throw ParseError(path + ": empty file");
    std::istringstream hs(header);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate")
        throw ParseError(path + ": expected a MatrixMarket coordinate header");
    if (field != "integer" && field != "real" && field != "pattern")
        throw ParseError(path + ": unsupported field type '" + field + "'");
    if (symmetry != "general")
        throw ParseError(path + ": only 'general' symmetry is supported");

    std::string line;
    long lineno = 1;
    // Skip comment lines.
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream ds(line);
    long n1 = 0, n2 = 0, nnz = 0;
    if (!(ds >> n1 >> n2 >> nnz) || n1 < 1 || n2 < 1 || nnz < 0)
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad size line");

    Matrix m = Matrix::Zero(n1, n2);
    for (long e = 0; e < nnz; ++e) {
        if (!std::getline(in, line))
            throw ParseError(path + ": unexpected end of file after " +
                             std::to_string(e) + " entries");
        ++lineno;
        if (!line.empty() && line[0] == '%') {
            --e;
            continue;
        }
        std::istringstream es(line);
        long i = 0, j = 0;
        double v = 1.0;
        if (!(es >> i >> j))
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad entry");
        if (field != "pattern" && !(es >> v))
            throw ParseError(path + ":" + std::to_string(lineno) + ": missing value");
        if (i < 1 || i > n1 || j < 1 || j > n2)
            throw ParseError(path + ":" + std::to_string(lineno) + ": index out of range");
        m(i - 1, j - 1) = v;
    }
    const bool sym = n1 == n2 && m == m.transpose();
    return BiAdjacency(std::move(m), sym);
}

// ---------------------------------------------------------------------------
// Label files: one label per line.
// ---------------------------------------------------------------------------

inline void write_labels(const std::string& path, const Membership& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const int l : m.labels) out << l << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline Membership read_labels(const std::string& path, int k = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    Membership m;
    std::string line;
    long lineno = 0;
    int max_label = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            std::size_t pos = 0;
            const int l = std::stoi(line, &pos);
            while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos])))
                ++pos;
            if (pos != line.size()) throw std::invalid_argument("trailing");
            m.labels.push_back(l);
            max_label = std::max(max_label, l);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad label '" +
                             line + "'");
        }
    }
    m.k = k > 0 ? k : max_label;
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Edge-list ingestion.
// ---------------------------------------------------------------------------

struct IngestOptions {
    bool one_based = true;
    long n_rows = 0;  // 0 = infer from data
    long n_cols = 0;
};

/// Whitespace- or comma-separated "row col [weight]" lines; duplicates
/// collapse to a single 1; '#'/'%' lines are comments. Nonzero weights are
/// treated as edges.
inline BiAdjacency ingest_edge_list(std::istream& in, const IngestOptions& opt,
                                    const std::string& origin = "<input>") {
    std::vector<std::pair<long, long>> edges;
    std::string line;
    long lineno = 0;
    long max_r = -1, max_c = -1;
    while (std::getline(in, line)) {
        ++lineno;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;  // blank
        if (first[0] == '#' || first[0] == '%') continue;
        long r = 0, c = 0;
        double w = 1.0;
        try {
            std::size_t pos = 0;
            r = std::stol(first, &pos);
            if (pos != first.size()) throw std::invalid_argument("junk");
        } catch (const std::exception&) {
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": bad row index '" + first + "'");
        }
        if (!(ls >> c))
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": missing column index");
        if (!(ls >> w)) w = 1.0;
        std::string extra;
        if (ls >> extra)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": trailing field '" + extra + "'");
        if (opt.one_based) {
            --r;
            --c;
        }
        if (r < 0 || c < 0)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": index out of range");
        if ((opt.n_rows > 0 && r >= opt.n_rows) || (opt.n_cols > 0 && c >= opt.n_cols))
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": index exceeds declared dimensions");
        if (w != 0.0) {
            edges.emplace_back(r, c);
            max_r = std::max(max_r, r);
            max_c = std::max(max_c, c);
        }
    }
    const long n1 = opt.n_rows > 0 ? opt.n_rows : max_r + 1;
    const long n2 = opt.n_cols > 0 ? opt.n_cols : max_c + 1;
    if (n1 < 1 || n2 < 1)
        throw ValidationError("ingest_edge_list: no edges and no explicit dimensions");
    Matrix m = Matrix::Zero(n1, n2);
    for (const auto& [r, c] : edges) m(r, c) = 1.0;
    const bool sym = n1 == n2 && m == m.transpose();
    return BiAdjacency(std::move(m), sym);
}

inline BiAdjacency ingest_edge_list_file(const std::string& path,
                                         const IngestOptions& opt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    return ingest_edge_list(in, opt, path);
}

// ---------------------------------------------------------------------------
// JSON conversions.
// ---------------------------------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw ParseError("expected a non-empty array of arrays for a matrix");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Index>(row.size()) != cols)
            throw ParseError("ragged matrix rows in JSON");
        for (Index jj = 0; jj < cols; ++jj)
            m(i, jj) = row.at(static_cast<std::size_t>(jj)).get<double>();
    }
    return m;
}

inline json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline Vector vector_from_json(const json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i)
        v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

inline json to_json(const SbmSpec& s) {
    return json{{"type", "sbm"},
                {"n1", s.n1},
                {"n2", s.n2},
                {"k1", s.k1},
                {"k2", s.k2},
                {"proportions_rows", vector_to_json(s.proportions_rows)},
                {"proportions_cols", vector_to_json(s.proportions_cols)},
                {"psi", matrix_to_json(s.psi)},
                {"seed", s.seed}};
}

inline SbmSpec sbm_spec_from_json(const json& j) {
    SbmSpec s;
    s.n1 = j.at("n1").get<int>();
    s.n2 = j.at("n2").get<int>();
    s.k1 = j.at("k1").get<int>();
    s.k2 = j.at("k2").get<int>();
    if (j.contains("proportions_rows")) {
        s.proportions_rows = vector_from_json(j.at("proportions_rows"));
        s.proportions_cols = vector_from_json(j.at("proportions_cols"));
    } else {  // balanced by default
        s.proportions_rows = Vector::Constant(s.k1, 1.0 / s.k1);
        s.proportions_cols = Vector::Constant(s.k2, 1.0 / s.k2);
    }
    s.psi = matrix_from_json(j.at("psi"));
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
}

inline json to_json(const models::SubGaussianSpec& s) {
    return json{{"type", "subgaussian"},
                {"n1", s.n1},
                {"n2", s.n2},
                {"k1", s.k1},
                {"k2", s.k2},
                {"proportions_rows", vector_to_json(s.proportions_rows)},
                {"proportions_cols", vector_to_json(s.proportions_cols)},
                {"b", matrix_to_json(s.b)},
                {"noise_sigma", s.noise_sigma},
                {"seed", s.seed}};
}

inline models::SubGaussianSpec subgaussian_spec_from_json(const json& j) {
    models::SubGaussianSpec s;
    s.n1 = j.at("n1").get<int>();
    s.n2 = j.at("n2").get<int>();
    s.k1 = j.at("k1").get<int>();
    s.k2 = j.at("k2").get<int>();
    if (j.contains("proportions_rows")) {
        s.proportions_rows = vector_from_json(j.at("proportions_rows"));
        s.proportions_cols = vector_from_json(j.at("proportions_cols"));
    } else {
        s.proportions_rows = Vector::Constant(s.k1, 1.0 / s.k1);
        s.proportions_cols = Vector::Constant(s.k2, 1.0 / s.k2);
    }
    s.b = matrix_from_json(j.at("b"));
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
}

inline json to_json(const models::GraphonPerturbation& p) {
    using Kind = models::GraphonPerturbation::Kind;
    std::string kind = "none";
    if (p.kind == Kind::constant) kind = "constant";
    if (p.kind == Kind::separable) kind = "separable";
    if (p.kind == Kind::sine) kind = "sine";
    return json{{"kind", kind},           {"constant", p.constant},
                {"amplitude", p.amplitude}, {"freq_x", p.freq_x},
                {"freq_y", p.freq_y}};
}

inline models::GraphonPerturbation graphon_perturbation_from_json(const json& j) {
    using Kind = models::GraphonPerturbation::Kind;
    models::GraphonPerturbation p;
    const std::string kind = j.value("kind", "none");
    if (kind == "none")
        p.kind = Kind::none;
    else if (kind == "constant")
        p.kind = Kind::constant;
    else if (kind == "separable")
        p.kind = Kind::separable;
    else if (kind == "sine")
        p.kind = Kind::sine;
    else
        throw ParseError("unknown graphon perturbation kind '" + kind + "'");
    p.constant = j.value("constant", 0.0);
    p.amplitude = j.value("amplitude", 0.0);
    p.freq_x = j.value("freq_x", 1);
    p.freq_y = j.value("freq_y", 1);
    return p;
}

inline json to_json(const models::GraphonSpec& s) {
    return json{{"type", "graphon"},
                {"n", s.n},
                {"row_breaks", s.row_breaks},
                {"col_breaks", s.col_breaks},
                {"psi_block", matrix_to_json(s.psi_block)},
                {"perturbation", to_json(s.perturbation)},
                {"seed", s.seed}};
}

inline models::GraphonSpec graphon_spec_from_json(const json& j) {
    models::GraphonSpec s;
    s.n = j.at("n").get<int>();
    s.row_breaks = j.value("row_breaks", std::vector<double>{});
    s.col_breaks = j.value("col_breaks", std::vector<double>{});
    s.psi_block = matrix_from_json(j.at("psi_block"));
    if (j.contains("perturbation"))
        s.perturbation = graphon_perturbation_from_json(j.at("perturbation"));
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
}

inline json to_json(const KMeansMatrix& x) {
    return json{{"labels", x.labels.labels},
                {"k", x.labels.k},
                {"centers", matrix_to_json(x.centers)}};
}

inline KMeansMatrix kmeans_matrix_from_json(const json& j) {
    KMeansMatrix x;
    x.labels.labels = j.at("labels").get<std::vector<int>>();
    x.labels.k = j.contains("k") ? j.at("k").get<int>()
                                 : static_cast<int>(j.at("centers").size());
    x.centers = matrix_from_json(j.at("centers"));
    x.validate();
    return x;
}

inline std::string algorithm_name(pipeline::Algorithm a) {
    switch (a) {
        case pipeline::Algorithm::sc1: return "sc1";
        case pipeline::Algorithm::scrr: return "scrr";
        case pipeline::Algorithm::scrre: return "scrre";
        case pipeline::Algorithm::subg: return "subg";
    }
    return "scrre";
}

inline pipeline::Algorithm algorithm_from_name(const std::string& name) {
    if (name == "sc1") return pipeline::Algorithm::sc1;
    if (name == "scrr") return pipeline::Algorithm::scrr;
    if (name == "scrre") return pipeline::Algorithm::scrre;
    if (name == "subg") return pipeline::Algorithm::subg;
    throw ValidationError("unknown pipeline '" + name +
                          "' (expected sc1, scrr, scrre or subg)");
}

inline json to_json(const pipeline::PipelineConfig& c) {
    json j{{"algorithm", algorithm_name(c.algorithm)},
           {"k_rows", c.k_rows},
           {"k_cols", c.k_cols},
           {"truncation_k", c.truncation_k},
           {"side", c.side == pipeline::Side::rows
                        ? "rows"
                        : c.side == pipeline::Side::cols ? "cols" : "both"},
           {"restarts", c.km.restarts},
           {"max_lloyd_iters", c.km.max_lloyd_iters},
           {"svd_tol", c.svd.tol},
           {"svd_max_iter", c.svd.max_iter},
           {"seed", c.seed}};
    if (std::isinf(c.tau))
        j["tau"] = "inf";
    else
        j["tau"] = c.tau;
    return j;
}

inline double tau_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "Inf" || s == "INF")
            return std::numeric_limits<double>::infinity();
        throw ParseError("tau must be a number or \"inf\"");
    }
    return j.get<double>();
}

inline pipeline::PipelineConfig pipeline_config_from_json(const json& j) {
    pipeline::PipelineConfig c;
    c.algorithm = algorithm_from_name(j.value("algorithm", "scrre"));
    c.k_rows = j.value("k_rows", 0);
    c.k_cols = j.value("k_cols", 0);
    c.truncation_k = j.value("truncation_k", 0);
    if (j.contains("tau")) c.tau = tau_from_json(j.at("tau"));
    const std::string side = j.value("side", "rows");
    if (side == "rows")
        c.side = pipeline::Side::rows;
    else if (side == "cols")
        c.side = pipeline::Side::cols;
    else if (side == "both")
        c.side = pipeline::Side::both;
    else
        throw ParseError("side must be rows, cols or both");
    c.km.restarts = j.value("restarts", 10);
    c.km.max_lloyd_iters = j.value("max_lloyd_iters", 100);
    c.svd.tol = j.value("svd_tol", c.svd.tol);
    c.svd.max_iter = j.value("svd_max_iter", c.svd.max_iter);
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
}

inline json to_json(const reg::RegularizationReport& r) {
    std::string mode = "none";
    if (r.mode == reg::Mode::weights) mode = "weights";
    if (r.mode == reg::Mode::oracle) mode = "oracle";
    json j{{"mode", mode},
           {"alpha_row", r.alpha_row},
           {"alpha_col", r.alpha_col},
           {"dhat_row", r.dhat_row},
           {"dhat_col", r.dhat_col},
           {"trimmed_rows", r.trimmed_rows},
           {"trimmed_cols", r.trimmed_cols},
           {"n_trimmed_rows", r.trimmed_rows.size()},
           {"n_trimmed_cols", r.trimmed_cols.size()},
           {"zero_graph", r.zero_graph}};
    if (std::isinf(r.tau))
        j["tau"] = "inf";
    else
        j["tau"] = r.tau;
    return j;
}

/// Pipeline result as persisted by the CLI: labels, spectrum, timings,
/// config echo and seed.
inline json to_json(const pipeline::PipelineResult& r,
                    const pipeline::PipelineConfig& cfg, std::uint64_t seed) {
    json j{{"config", to_json(cfg)},
           {"seed", seed},
           {"spectrum", vector_to_json(r.diag.spectrum)},
           {"regularization", to_json(r.diag.reg_report)},
           {"anomalies", r.anomalies},
           {"timings",
            {{"svd_seconds", r.diag.svd_seconds},
             {"kmeans_seconds", r.diag.kmeans_seconds},
             {"total_seconds", r.diag.total_seconds}}}};
    if (r.rows) j["labels_rows"] = r.rows->labels;
    if (r.cols) j["labels_cols"] = r.cols->labels;
    if (r.row_kmeans) j["row_objective"] = r.diag.row_objective;
    if (r.col_kmeans) j["col_objective"] = r.diag.col_objective;
    return j;
}

/// Per-side degree histogram rows: degree,count.
inline void write_degree_histogram_csv(const std::string& path,
                                       const BiAdjacency& a, reg::Side side) {
    const Vector deg = side == reg::Side::rows ? Vector(a.entries.rowwise().sum())
                                               : Vector(a.entries.colwise().sum());
    std::map<long, long> hist;
    for (Index i = 0; i < deg.size(); ++i)
        ++hist[static_cast<long>(std::llround(deg[i]))];
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "degree,count\n";
    for (const auto& [d, c] : hist) out << d << ',' << c << '\n';
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace biclust::io
