// Batch CLI for bipartite spectral clustering: data generation, clustering,
// evaluation, experiment sweeps and edge-list ingestion.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "biclust/experiment.hpp"
#include "biclust/io.hpp"
#include "biclust/metrics.hpp"
#include "biclust/models.hpp"
#include "biclust/pipelines.hpp"

namespace {

using nlohmann::json;
using namespace biclust;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

double parse_tau(const std::string& s) {
    if (s == "inf" || s == "Inf" || s == "INF")
        return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("junk");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("--tau expects a number or \"inf\", got '" + s + "'");
    }
}

int cmd_generate(const std::string& spec_path, const std::string& out_prefix,
                 std::optional<std::uint64_t> seed_override) {
    json spec_json = io::read_json_file(spec_path);
    if (seed_override) spec_json["seed"] = *seed_override;
    const std::string type = spec_json.value("type", "sbm");

    BiAdjacency adjacency;
    Membership rows, cols;
    if (type == "sbm") {
        const SbmSpec spec = io::sbm_spec_from_json(spec_json);
        if (spec_json.value("symmetric", false)) {
            const models::SymmetricSbmSample s = models::sample_symmetric_sbm(spec);
            adjacency = s.adjacency;
            rows = cols = s.membership;
        } else {
            models::SbmSample s = models::sample_sbm(spec);
            adjacency = std::move(s.adjacency);
            rows = std::move(s.rows);
            cols = std::move(s.cols);
        }
    } else if (type == "subgaussian") {
        const models::SubGaussianSpec spec = io::subgaussian_spec_from_json(spec_json);
        models::SubGaussianSample s = models::sample_subgaussian(spec);
        // Real-valued output; stored as a real MatrixMarket file.
        adjacency.entries = std::move(s.entries);
        rows = std::move(s.rows);
        cols = std::move(s.cols);
    } else if (type == "graphon") {
        const models::GraphonSpec spec = io::graphon_spec_from_json(spec_json);
        models::GraphonSample s = models::sample_graphon(spec);
        adjacency = std::move(s.adjacency);
        rows = std::move(s.rows);
        cols = std::move(s.cols);
        if (s.clip_count > 0)
            std::cerr << "warning: clipped " << s.clip_count
                      << " probabilities into [0,1]\n";
    } else {
        throw ValidationError("unknown spec type '" + type + "'");
    }

    if (type == "subgaussian") {
        // Bypass the [0,1] check; sub-Gaussian entries are unbounded.
        std::ofstream probe(out_prefix + ".mtx");
        if (!probe) throw IoError("cannot open for writing: " + out_prefix + ".mtx");
        probe.close();
        BiAdjacency wrapper;
        wrapper.entries = adjacency.entries;
        io::write_matrix_market(out_prefix + ".mtx", wrapper);
    } else {
        io::write_matrix_market(out_prefix + ".mtx", adjacency);
    }
    io::write_labels(out_prefix + ".rows.labels", rows);
    io::write_labels(out_prefix + ".cols.labels", cols);
    io::write_json_file(out_prefix + ".spec.json", spec_json);
    std::cout << "wrote " << out_prefix << ".mtx (" << adjacency.n_rows() << " x "
              << adjacency.n_cols() << ")\n";
    return kExitOk;
}

int cmd_cluster(const std::string& in_path, const std::string& out_prefix,
                pipeline::PipelineConfig cfg) {
    const BiAdjacency a = io::read_matrix_market(in_path);
    pipeline::PipelineResult res =
        cfg.algorithm == pipeline::Algorithm::subg
            ? pipeline::sc_subgaussian(a.entries, cfg, CounterRng(cfg.seed))
            : pipeline::run(a, cfg, CounterRng(cfg.seed));
    io::write_json_file(out_prefix + ".json", io::to_json(res, cfg, cfg.seed));
    if (res.rows) io::write_labels(out_prefix + ".rows.labels", *res.rows);
    if (res.cols) io::write_labels(out_prefix + ".cols.labels", *res.cols);
    for (const std::string& msg : res.anomalies)
        std::cerr << "anomaly: " << msg << '\n';
    std::cout << "wrote " << out_prefix << ".json\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& truth_path, const std::string& est_path,
                 int k, const std::string& out_path) {
    Membership truth = io::read_labels(truth_path, k);
    Membership est = io::read_labels(est_path);
    // Compare under a common label space.
    const int common_k = std::max(truth.k, est.k);
    truth.k = est.k = common_k;
    const metrics::MisReport mis = metrics::misclassification(truth, est);
    const metrics::NmiResult n = metrics::nmi(truth, est);
    json j{{"mis_bar", mis.mis_bar},
           {"mis_inf", mis.mis_inf},
           {"per_cluster", std::vector<double>(mis.per_cluster.data(),
                                               mis.per_cluster.data() +
                                                   mis.per_cluster.size())},
           {"nmi", n.value},
           {"nmi_degenerate", n.degenerate}};
    if (out_path.empty())
        std::cout << j.dump(2) << '\n';
    else
        io::write_json_file(out_path, j);
    return kExitOk;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir,
                   int workers, std::optional<std::uint64_t> seed_override) {
    harness::ExperimentConfig cfg =
        harness::experiment_config_from_json(io::read_json_file(config_path));
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (workers > 0) cfg.workers = workers;
    if (seed_override) cfg.master_seed = *seed_override;

    std::filesystem::create_directories(cfg.output_dir);
    const harness::ExperimentOutput out = harness::run_experiment(cfg);

    const std::string results = cfg.output_dir + "/results.csv";
    const std::string summary = cfg.output_dir + "/summary.csv";
    harness::write_records_csv(results, out.records);
    harness::write_summary_csv(summary, out.records);
    {
        std::ofstream hf(cfg.output_dir + "/determinism_hash.txt");
        if (!hf) throw IoError("cannot write determinism hash");
        hf << std::hex << out.determinism_hash << '\n';
    }
    long failures = 0;
    for (const auto& r : out.records)
        if (!r.error.empty()) ++failures;
    std::cout << "records: " << out.records.size() << " (" << failures
              << " failed)\nresults: " << results << "\nsummary: " << summary
              << "\ndeterminism_hash: " << std::hex << out.determinism_hash << '\n';
    return kExitOk;
}

int cmd_ingest(const std::string& in_path, const std::string& out_path,
               bool zero_based, long n_rows, long n_cols) {
    io::IngestOptions opt;
    opt.one_based = !zero_based;
    opt.n_rows = n_rows;
    opt.n_cols = n_cols;
    const BiAdjacency a = io::ingest_edge_list_file(in_path, opt);
    io::write_matrix_market(out_path, a);
    std::cout << "wrote " << out_path << " (" << a.n_rows() << " x " << a.n_cols()
              << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral clustering of bipartite networks under block models"};
    app.require_subcommand(1);

    // generate
    std::string gen_spec, gen_out = "sample";
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("generate", "Sample a network from a model spec");
    gen->add_option("--spec", gen_spec, "Model spec JSON file")->required();
    gen->add_option("--out", gen_out, "Output path prefix");
    std::uint64_t gen_seed_raw = 0;
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed_raw, "Override the spec seed");

    // cluster
    std::string clu_in, clu_out = "clusters", clu_pipeline = "scrre",
                clu_tau = "3", clu_side = "rows";
    int clu_k_rows = 0, clu_k_cols = 0, clu_trunc = 0, clu_restarts = 10;
    std::uint64_t clu_seed = 0;
    auto* clu = app.add_subcommand("cluster", "Cluster an adjacency matrix");
    clu->add_option("--in", clu_in, "MatrixMarket adjacency file")->required();
    clu->add_option("--out", clu_out, "Output path prefix");
    clu->add_option("--pipeline", clu_pipeline, "sc1 | scrr | scrre | subg");
    clu->add_option("--k-rows", clu_k_rows, "Row clusters")->required();
    clu->add_option("--k-cols", clu_k_cols, "Column clusters");
    clu->add_option("--truncation-k", clu_trunc, "SVD truncation rank override");
    clu->add_option("--tau", clu_tau, "Regularization parameter (number or inf)");
    clu->add_option("--side", clu_side, "rows | cols | both");
    clu->add_option("--restarts", clu_restarts, "k-means restarts");
    clu->add_option("--seed", clu_seed, "Run seed");

    // evaluate
    std::string eva_truth, eva_est, eva_out;
    int eva_k = 0;
    auto* eva = app.add_subcommand("evaluate", "Compare two label files");
    eva->add_option("--truth", eva_truth, "Reference labels")->required();
    eva->add_option("--est", eva_est, "Estimated labels")->required();
    eva->add_option("--k", eva_k, "Number of clusters (default: max label)");
    eva->add_option("--out", eva_out, "Write metrics JSON here instead of stdout");

    // experiment
    std::string exp_config, exp_out;
    int exp_workers = 0;
    std::uint64_t exp_seed_raw = 0;
    auto* exp = app.add_subcommand("experiment", "Run a replicated sweep");
    exp->add_option("--config", exp_config, "Experiment config JSON")->required();
    exp->add_option("--out", exp_out, "Output directory override");
    exp->add_option("--workers", exp_workers,
                    "Worker threads (default: config, then BICLUST_WORKERS)");
    auto* exp_seed_opt = exp->add_option("--seed", exp_seed_raw, "Master seed override");

    // ingest
    std::string ing_in, ing_out = "ingested.mtx";
    bool ing_zero_based = false;
    long ing_rows = 0, ing_cols = 0;
    auto* ing = app.add_subcommand("ingest", "Convert an edge list to MatrixMarket");
    ing->add_option("--in", ing_in, "Edge list file")->required();
    ing->add_option("--out", ing_out, "Output MatrixMarket path");
    ing->add_flag("--zero-based", ing_zero_based, "Indices start at 0 (default 1)");
    ing->add_option("--n-rows", ing_rows, "Explicit row count");
    ing->add_option("--n-cols", ing_cols, "Explicit column count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (gen->parsed()) {
            if (gen_seed_opt->count() > 0) gen_seed = gen_seed_raw;
            return cmd_generate(gen_spec, gen_out, gen_seed);
        }
        if (clu->parsed()) {
            pipeline::PipelineConfig cfg;
            cfg.algorithm = io::algorithm_from_name(clu_pipeline);
            cfg.k_rows = clu_k_rows;
            cfg.k_cols = clu_k_cols;
            cfg.truncation_k = clu_trunc;
            cfg.tau = parse_tau(clu_tau);
            cfg.km.restarts = clu_restarts;
            cfg.seed = clu_seed;
            if (clu_side == "rows")
                cfg.side = pipeline::Side::rows;
            else if (clu_side == "cols")
                cfg.side = pipeline::Side::cols;
            else if (clu_side == "both")
                cfg.side = pipeline::Side::both;
            else
                throw ValidationError("--side must be rows, cols or both");
            return cmd_cluster(clu_in, clu_out, cfg);
        }
        if (eva->parsed()) return cmd_evaluate(eva_truth, eva_est, eva_k, eva_out);
        if (exp->parsed()) {
            int workers = exp_workers;
            if (workers == 0) {
                if (const char* env = std::getenv("BICLUST_WORKERS"))
                    workers = std::atoi(env);
            }
            std::optional<std::uint64_t> seed;
            if (exp_seed_opt->count() > 0) seed = exp_seed_raw;
            return cmd_experiment(exp_config, exp_out, workers, seed);
        }
        if (ing->parsed())
            return cmd_ingest(ing_in, ing_out, ing_zero_based, ing_rows, ing_cols);
    } catch (const NoConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}
