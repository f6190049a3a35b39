#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "biclust/errors.hpp"
#include "biclust/io.hpp"
#include "biclust/metrics.hpp"
#include "biclust/models.hpp"
#include "biclust/pipelines.hpp"
#include "biclust/regularization.hpp"
#include "biclust/rng.hpp"

namespace biclust::harness {

enum class ExperimentKind {
    fig1_nmi_vs_b,
    fig2_nmi_vs_n0,
    fig2_concentration_vs_tau,
    custom_sweep,
};

inline std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::fig1_nmi_vs_b: return "fig1_nmi_vs_b";
        case ExperimentKind::fig2_nmi_vs_n0: return "fig2_nmi_vs_n0";
        case ExperimentKind::fig2_concentration_vs_tau:
            return "fig2_concentration_vs_tau";
        case ExperimentKind::custom_sweep: return "custom_sweep";
    }
    return "custom_sweep";
}

inline ExperimentKind kind_from_name(const std::string& s) {
    if (s == "fig1_nmi_vs_b") return ExperimentKind::fig1_nmi_vs_b;
    if (s == "fig2_nmi_vs_n0") return ExperimentKind::fig2_nmi_vs_n0;
    if (s == "fig2_concentration_vs_tau")
        return ExperimentKind::fig2_concentration_vs_tau;
    if (s == "custom_sweep") return ExperimentKind::custom_sweep;
    throw ValidationError("unknown experiment kind '" + s + "'");
}

struct NamedPipeline {
    std::string name;
    pipeline::PipelineConfig cfg;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::custom_sweep;
    std::vector<double> grid;  // b values, n0 values, tau values, or custom
    int replicates = 15;
    std::uint64_t master_seed = 0;
    std::string output_dir = ".";
    int workers = 1;
    std::vector<NamedPipeline> pipelines;  // empty -> kind-specific defaults

    // fig1 design size (n2 = 2 n1).
    int fig1_n1 = 500;
    // fig2 concentration design size.
    int fig2_n0 = 500;

    // custom_sweep inputs.
    nlohmann::json custom_model;      // model template (type-dispatched)
    std::string sweep_field = "psi_scale";  // psi_scale | noise_sigma | tau

    void validate() const {
        if (grid.empty()) throw ValidationError("ExperimentConfig: empty grid");
        if (replicates < 1)
            throw ValidationError("ExperimentConfig: replicates must be >= 1");
        if (workers < 1) throw ValidationError("ExperimentConfig: workers must be >= 1");
    }
};

/// One row per (sweep point, replicate, pipeline).
struct ResultRecord {
    std::string kind;
    int point_index = 0;
    double point = 0.0;
    int replicate = 0;
    std::string pipeline;
    double nmi = std::numeric_limits<double>::quiet_NaN();
    double mis_bar = std::numeric_limits<double>::quiet_NaN();
    double mis_inf = std::numeric_limits<double>::quiet_NaN();
    double concentration_rel = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;  // excluded from the determinism hash
    std::string error;     // partial-failure policy: record and continue
};

// ---------------------------------------------------------------------------
// Built-in simulation designs.
// ---------------------------------------------------------------------------

/// Balanced 4x4 design: psi = 2b * ones + diag(16,16,16,2), n2 = 2 n1.
inline SbmSpec fig1_spec(double b, int n1) {
    SbmSpec spec;
    spec.n1 = n1;
    spec.n2 = 2 * n1;
    spec.k1 = spec.k2 = 4;
    spec.proportions_rows = Vector::Constant(4, 0.25);
    spec.proportions_cols = Vector::Constant(4, 0.25);
    Vector diag(4);
    diag << 16, 16, 16, 2;
    spec.psi = 2.0 * b * Matrix::Ones(4, 4) + Matrix(diag.asDiagonal());
    return spec;
}

/// Sparse 3x4 design: B = sqrt(log(n1 n2)/(n1 n2)) * B0, n1 = 3 n0, n2 = 4 n0.
inline SbmSpec fig2_spec(int n0) {
    SbmSpec spec;
    spec.k1 = 3;
    spec.k2 = 4;
    spec.n1 = 3 * n0;
    spec.n2 = 4 * n0;
    spec.proportions_rows = Vector::Constant(3, 1.0 / 3.0);
    spec.proportions_cols = Vector::Constant(4, 0.25);
    Matrix b0(3, 4);
    b0 << 6, 1, 1, 1,
          1, 6, 1, 1,
          1, 1, 6, 1;
    b0 *= 0.5;
    const double scale =
        std::sqrt(std::log(static_cast<double>(spec.n1) * spec.n2));
    spec.psi = scale * b0;
    return spec;
}

/// Expected maximum row/column degrees of a spec given realized memberships.
inline std::pair<double, double> expected_max_degrees(const SbmSpec& spec,
                                                      const Membership& rows,
                                                      const Membership& cols) {
    const Matrix b = spec.connectivity();
    const std::vector<int> n1t = rows.cluster_sizes();
    const std::vector<int> n2t = cols.cluster_sizes();
    double dmax_row = 0.0, dmax_col = 0.0;
    for (int s = 0; s < spec.k1; ++s) {
        double deg = 0.0;
        for (int t = 0; t < spec.k2; ++t)
            deg += b(s, t) * n2t[static_cast<std::size_t>(t)];
        dmax_row = std::max(dmax_row, deg);
    }
    for (int t = 0; t < spec.k2; ++t) {
        double deg = 0.0;
        for (int s = 0; s < spec.k1; ++s)
            deg += b(s, t) * n1t[static_cast<std::size_t>(s)];
        dmax_col = std::max(dmax_col, deg);
    }
    return {dmax_row, dmax_col};
}

namespace detail {

inline std::vector<NamedPipeline> default_pipelines(const ExperimentConfig& cfg) {
    std::vector<NamedPipeline> out;
    auto base = [] {
        pipeline::PipelineConfig c;
        c.side = pipeline::Side::rows;
        return c;
    };
    switch (cfg.kind) {
        case ExperimentKind::fig1_nmi_vs_b: {
            NamedPipeline sc1{"sc1", base()};
            sc1.cfg.algorithm = pipeline::Algorithm::sc1;
            NamedPipeline scrre{"scrre", base()};
            scrre.cfg.algorithm = pipeline::Algorithm::scrre;
            out = {sc1, scrre};
            break;
        }
        case ExperimentKind::fig2_nmi_vs_n0: {
            for (const double tau :
                 {1.0, 1.2, 1.4, std::numeric_limits<double>::infinity()}) {
                NamedPipeline p{std::isinf(tau) ? "scrre-tau-inf"
                                                : "scrre-tau-" + std::to_string(tau).substr(0, 3),
                                base()};
                p.cfg.algorithm = pipeline::Algorithm::scrre;
                p.cfg.tau = tau;
                out.push_back(std::move(p));
            }
            break;
        }
        default:
            throw ValidationError("experiment: this kind needs an explicit pipeline list");
    }
    return out;
}

struct Task {
    int point_index;
    int replicate;
};

}  // namespace detail

struct ExperimentOutput {
    std::vector<ResultRecord> records;  // canonical order
    std::uint64_t determinism_hash = 0;
};

inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Hash over the canonical CSV content, timing column excluded.
inline std::uint64_t determinism_hash(const std::vector<ResultRecord>& records) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto feed = [&h](const std::string& s) {
        for (const char c : s) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001B3ULL;
        }
        h ^= 0x1F;
        h *= 0x100000001B3ULL;
    };
    for (const ResultRecord& r : records) {
        feed(r.kind);
        feed(std::to_string(r.point_index));
        feed(format_double(r.point));
        feed(std::to_string(r.replicate));
        feed(r.pipeline);
        feed(format_double(r.nmi));
        feed(format_double(r.mis_bar));
        feed(format_double(r.mis_inf));
        feed(format_double(r.concentration_rel));
        feed(r.error);
    }
    return h;
}

namespace detail {

/// Records for one (point, replicate) cell of an NMI-style experiment.
inline std::vector<ResultRecord> run_nmi_cell(const ExperimentConfig& cfg,
                                              const std::vector<NamedPipeline>& pipes,
                                              int point_index, int replicate) {
    const double point = cfg.grid[static_cast<std::size_t>(point_index)];
    CounterRng cell_rng = CounterRng(cfg.master_seed)
                              .substream("point", static_cast<std::uint64_t>(point_index))
                              .substream("replicate", static_cast<std::uint64_t>(replicate));

    std::vector<ResultRecord> out;
    SbmSpec spec;
    std::optional<models::SubGaussianSample> subg_sample;
    std::optional<models::SbmSample> sample;
    std::optional<models::GraphonSample> graphon_sample;
    const Membership* truth_rows = nullptr;
    const Membership* truth_cols = nullptr;
    const BiAdjacency* adjacency = nullptr;
    const Matrix* raw_entries = nullptr;
    int k_rows = 0, k_cols = 0;

    try {
        switch (cfg.kind) {
            case ExperimentKind::fig1_nmi_vs_b:
                spec = fig1_spec(point, cfg.fig1_n1);
                break;
            case ExperimentKind::fig2_nmi_vs_n0:
                spec = fig2_spec(static_cast<int>(point));
                break;
            case ExperimentKind::custom_sweep: {
                nlohmann::json model = cfg.custom_model;
                const std::string type = model.value("type", "sbm");
                if (cfg.sweep_field == "psi_scale") {
                    const char* key = type == "subgaussian"
                                          ? "b"
                                          : (type == "graphon" ? "psi_block" : "psi");
                    Matrix m = io::matrix_from_json(model.at(key));
                    model[key] = io::matrix_to_json(Matrix(point * m));
                } else if (cfg.sweep_field == "noise_sigma") {
                    model["noise_sigma"] = point;
                } else if (cfg.sweep_field != "tau") {
                    throw ValidationError("unknown sweep_field '" + cfg.sweep_field + "'");
                }
                if (type == "subgaussian") {
                    const models::SubGaussianSpec sg =
                        io::subgaussian_spec_from_json(model);
                    subg_sample = models::sample_subgaussian(sg, cell_rng.substream("sample"));
                    truth_rows = &subg_sample->rows;
                    truth_cols = &subg_sample->cols;
                    raw_entries = &subg_sample->entries;
                    k_rows = sg.k1;
                    k_cols = sg.k2;
                } else if (type == "graphon") {
                    const models::GraphonSpec gs = io::graphon_spec_from_json(model);
                    graphon_sample = models::sample_graphon(gs, cell_rng.substream("sample"));
                    truth_rows = &graphon_sample->rows;
                    truth_cols = &graphon_sample->cols;
                    adjacency = &graphon_sample->adjacency;
                    k_rows = gs.k_rows();
                    k_cols = gs.k_cols();
                } else {
                    spec = io::sbm_spec_from_json(model);
                }
                break;
            }
            case ExperimentKind::fig2_concentration_vs_tau:
                throw ValidationError("run_nmi_cell: wrong kind");
        }
        if (!adjacency && !raw_entries) {
            sample = models::sample_sbm(spec, cell_rng.substream("sample"));
            truth_rows = &sample->rows;
            truth_cols = &sample->cols;
            adjacency = &sample->adjacency;
            k_rows = spec.k1;
            k_cols = spec.k2;
        }
    } catch (const std::exception& e) {
        for (std::size_t p = 0; p < pipes.size(); ++p) {
            ResultRecord r;
            r.kind = kind_name(cfg.kind);
            r.point_index = point_index;
            r.point = point;
            r.replicate = replicate;
            r.pipeline = pipes[p].name;
            r.error = e.what();
            out.push_back(std::move(r));
        }
        return out;
    }

    for (std::size_t p = 0; p < pipes.size(); ++p) {
        ResultRecord r;
        r.kind = kind_name(cfg.kind);
        r.point_index = point_index;
        r.point = point;
        r.replicate = replicate;
        r.pipeline = pipes[p].name;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            pipeline::PipelineConfig pc = pipes[p].cfg;
            if (pc.k_rows == 0) pc.k_rows = k_rows;
            if (pc.k_cols == 0) pc.k_cols = k_cols;
            if (cfg.kind == ExperimentKind::custom_sweep && cfg.sweep_field == "tau")
                pc.tau = point;
            CounterRng prng = cell_rng.substream("pipeline", static_cast<std::uint64_t>(p));
            pipeline::PipelineResult res =
                pc.algorithm == pipeline::Algorithm::subg
                    ? pipeline::sc_subgaussian(*raw_entries, pc, prng)
                    : pipeline::run(*adjacency, pc, prng);
            if (res.rows && truth_rows) {
                const metrics::MisReport mis =
                    metrics::misclassification(*truth_rows, *res.rows);
                r.mis_bar = mis.mis_bar;
                r.mis_inf = mis.mis_inf;
                r.nmi = metrics::nmi(*truth_rows, *res.rows).value;
            }
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
        out.push_back(std::move(r));
    }
    return out;
}

/// Records for one replicate of the concentration-vs-tau experiment: curves
/// for the data-driven scheme, the expected-degree oracle, and no
/// regularization, each measured as relative operator-norm error.
inline std::vector<ResultRecord> run_concentration_cell(const ExperimentConfig& cfg,
                                                        int replicate) {
    CounterRng cell_rng = CounterRng(cfg.master_seed)
                              .substream("point", 0)
                              .substream("replicate", static_cast<std::uint64_t>(replicate));
    const SbmSpec spec = fig2_spec(cfg.fig2_n0);
    std::vector<ResultRecord> out;
    auto make_record = [&](int point_index, const std::string& name) {
        ResultRecord r;
        r.kind = kind_name(cfg.kind);
        r.point_index = point_index;
        r.point = cfg.grid[static_cast<std::size_t>(point_index)];
        r.replicate = replicate;
        r.pipeline = name;
        return r;
    };
    try {
        const models::SbmSample sample =
            models::sample_sbm(spec, cell_rng.substream("sample"));
        const Matrix p = models::population_mean(spec, sample.rows, sample.cols);
        const double p_norm = linalg::operator_norm(p, 1e-6);
        const auto [dmax_row, dmax_col] =
            expected_max_degrees(spec, sample.rows, sample.cols);

        const double none_rel =
            linalg::operator_norm(sample.adjacency.entries - p, 1e-6) / p_norm;

        for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
            const double tau = cfg.grid[g];
            const auto t0 = std::chrono::steady_clock::now();

            auto [a_dd, rep_dd] = reg::regularize_data_driven(sample.adjacency, tau);
            ResultRecord rd = make_record(static_cast<int>(g), "data_driven");
            rd.concentration_rel =
                linalg::operator_norm(a_dd.entries - p, 1e-6) / p_norm;

            auto [a_or, rep_or] = reg::regularize_with_thresholds(
                sample.adjacency, tau * dmax_row, tau * dmax_col);
            ResultRecord ro = make_record(static_cast<int>(g), "oracle");
            ro.concentration_rel =
                linalg::operator_norm(a_or.entries - p, 1e-6) / p_norm;

            ResultRecord rn = make_record(static_cast<int>(g), "none");
            rn.concentration_rel = none_rel;

            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            rd.seconds = ro.seconds = rn.seconds = secs / 3.0;
            out.push_back(std::move(rd));
            out.push_back(std::move(ro));
            out.push_back(std::move(rn));
        }
    } catch (const std::exception& e) {
        for (std::size_t g = 0; g < cfg.grid.size(); ++g)
            for (const char* name : {"data_driven", "oracle", "none"}) {
                ResultRecord r = make_record(static_cast<int>(g), name);
                r.error = e.what();
                out.push_back(std::move(r));
            }
    }
    return out;
}

}  // namespace detail

/// Runs all (point, replicate) cells on a worker pool. Results are identical
/// for any worker count: each cell draws from its own sub-stream and lands in
/// a preallocated slot.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<NamedPipeline> pipes =
        !cfg.pipelines.empty() || cfg.kind == ExperimentKind::fig2_concentration_vs_tau
            ? cfg.pipelines
            : detail::default_pipelines(cfg);

    std::vector<detail::Task> tasks;
    if (cfg.kind == ExperimentKind::fig2_concentration_vs_tau) {
        for (int rep = 0; rep < cfg.replicates; ++rep)
            tasks.push_back({0, rep});
    } else {
        for (int g = 0; g < static_cast<int>(cfg.grid.size()); ++g)
            for (int rep = 0; rep < cfg.replicates; ++rep)
                tasks.push_back({g, rep});
    }

    std::vector<std::vector<ResultRecord>> slots(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) break;
            const detail::Task& task = tasks[t];
            slots[t] = cfg.kind == ExperimentKind::fig2_concentration_vs_tau
                           ? detail::run_concentration_cell(cfg, task.replicate)
                           : detail::run_nmi_cell(cfg, pipes, task.point_index,
                                                  task.replicate);
        }
    };
    if (cfg.workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    ExperimentOutput out;
    for (const auto& slot : slots)
        out.records.insert(out.records.end(), slot.begin(), slot.end());
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const ResultRecord& a, const ResultRecord& b) {
                         if (a.point_index != b.point_index)
                             return a.point_index < b.point_index;
                         if (a.replicate != b.replicate) return a.replicate < b.replicate;
                         return a.pipeline < b.pipeline;
                     });
    out.determinism_hash = determinism_hash(out.records);
    return out;
}

inline void write_records_csv(const std::string& path,
                              const std::vector<ResultRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "kind,point_index,point,replicate,pipeline,nmi,mis_bar,mis_inf,"
           "concentration_rel,seconds,error\n";
    for (const ResultRecord& r : records) {
        out << r.kind << ',' << r.point_index << ',' << format_double(r.point) << ','
            << r.replicate << ',' << r.pipeline << ',' << format_double(r.nmi) << ','
            << format_double(r.mis_bar) << ',' << format_double(r.mis_inf) << ','
            << format_double(r.concentration_rel) << ',' << format_double(r.seconds)
            << ',' << r.error << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

struct SummaryRow {
    double point = 0.0;
    std::string pipeline;
    int count = 0;
    double nmi_mean = 0.0, nmi_se = 0.0;
    double mis_mean = 0.0, mis_se = 0.0;
    double concentration_mean = 0.0, concentration_se = 0.0;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
    std::map<std::pair<int, std::string>, std::vector<const ResultRecord*>> groups;
    std::map<std::pair<int, std::string>, double> points;
    for (const ResultRecord& r : records) {
        if (!r.error.empty()) continue;
        groups[{r.point_index, r.pipeline}].push_back(&r);
        points[{r.point_index, r.pipeline}] = r.point;
    }
    auto mean_se = [](const std::vector<double>& xs) -> std::pair<double, double> {
        if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
        double mean = 0.0;
        for (const double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        if (xs.size() < 2) return {mean, 0.0};
        double var = 0.0;
        for (const double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size() - 1);
        return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
    };
    std::vector<SummaryRow> out;
    for (const auto& [key, rows] : groups) {
        SummaryRow s;
        s.point = points[key];
        s.pipeline = key.second;
        s.count = static_cast<int>(rows.size());
        std::vector<double> nmis, miss, concs;
        for (const ResultRecord* r : rows) {
            if (!std::isnan(r->nmi)) nmis.push_back(r->nmi);
            if (!std::isnan(r->mis_bar)) miss.push_back(r->mis_bar);
            if (!std::isnan(r->concentration_rel))
                concs.push_back(r->concentration_rel);
        }
        std::tie(s.nmi_mean, s.nmi_se) = mean_se(nmis);
        std::tie(s.mis_mean, s.mis_se) = mean_se(miss);
        std::tie(s.concentration_mean, s.concentration_se) = mean_se(concs);
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_summary_csv(const std::string& path,
                              const std::vector<ResultRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "point,pipeline,count,nmi_mean,nmi_se,mis_mean,mis_se,"
           "concentration_mean,concentration_se\n";
    for (const SummaryRow& s : summarize(records)) {
        out << format_double(s.point) << ',' << s.pipeline << ',' << s.count << ','
            << format_double(s.nmi_mean) << ',' << format_double(s.nmi_se) << ','
            << format_double(s.mis_mean) << ',' << format_double(s.mis_se) << ','
            << format_double(s.concentration_mean) << ','
            << format_double(s.concentration_se) << '\n';
    }
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.kind = kind_from_name(j.at("kind").get<std::string>());
    cfg.grid = j.at("grid").get<std::vector<double>>();
    cfg.replicates = j.value("replicates", 15);
    cfg.master_seed = j.value("master_seed", std::uint64_t{0});
    cfg.output_dir = j.value("output_dir", ".");
    cfg.workers = j.value("workers", 1);
    cfg.fig1_n1 = j.value("fig1_n1", 500);
    cfg.fig2_n0 = j.value("fig2_n0", 500);
    if (j.contains("pipelines")) {
        for (const auto& pj : j.at("pipelines")) {
            NamedPipeline p;
            p.cfg = io::pipeline_config_from_json(pj);
            p.name = pj.value("name", io::algorithm_name(p.cfg.algorithm));
            cfg.pipelines.push_back(std::move(p));
        }
    }
    if (j.contains("model")) cfg.custom_model = j.at("model");
    cfg.sweep_field = j.value("sweep_field", "psi_scale");
    cfg.validate();
    return cfg;
}

}  // namespace biclust::harness
