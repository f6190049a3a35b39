#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "biclust/io.hpp"
#include "biclust/models.hpp"
#include "biclust/rng.hpp"

using namespace biclust;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / "biclust_io_test";
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

}  // namespace

TEST_F(IoTest, MatrixMarketRoundTripBinary) {
    CounterRng rng(1);
    Matrix m(7, 9);
    for (Index i = 0; i < 7; ++i)
        for (Index j = 0; j < 9; ++j) m(i, j) = rng.next_bernoulli(0.3) ? 1.0 : 0.0;
    const BiAdjacency a(m);
    io::write_matrix_market(path("a.mtx"), a);
    const BiAdjacency back = io::read_matrix_market(path("a.mtx"));
    EXPECT_EQ(back.entries, a.entries);

    // Header advertises integer entries for a binary matrix.
    std::ifstream in(path("a.mtx"));
    std::string header;
    std::getline(in, header);
    EXPECT_NE(header.find("integer"), std::string::npos);
}

TEST_F(IoTest, MatrixMarketRoundTripReal) {
    CounterRng rng(2);
    Matrix m(5, 4);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 4; ++j)
            m(i, j) = rng.next_bernoulli(0.5) ? rng.next_double() : 0.0;
    const BiAdjacency a(m);
    io::write_matrix_market(path("w.mtx"), a);
    const BiAdjacency back = io::read_matrix_market(path("w.mtx"));
    EXPECT_EQ(back.entries, a.entries);  // %.17g survives the round trip
}

TEST_F(IoTest, MatrixMarketPattern) {
    std::ofstream out(path("p.mtx"));
    out << "%%MatrixMarket matrix coordinate pattern general\n"
        << "% comment line\n"
        << "2 3 2\n"
        << "1 1\n"
        << "2 3\n";
    out.close();
    const BiAdjacency a = io::read_matrix_market(path("p.mtx"));
    EXPECT_EQ(a.n_rows(), 2);
    EXPECT_EQ(a.n_cols(), 3);
    EXPECT_EQ(a.entries(0, 0), 1.0);
    EXPECT_EQ(a.entries(1, 2), 1.0);
    EXPECT_EQ(a.entries.sum(), 2.0);
}

TEST_F(IoTest, MatrixMarketErrors) {
    std::ofstream out(path("bad.mtx"));
    out << "%%MatrixMarket matrix coordinate integer general\n"
        << "2 2 1\n"
        << "3 1 1\n";  // out of range
    out.close();
    EXPECT_THROW(io::read_matrix_market(path("bad.mtx")), ParseError);
    EXPECT_THROW(io::read_matrix_market(path("missing.mtx")), IoError);
}

TEST_F(IoTest, LabelsRoundTrip) {
    const Membership m({2, 1, 3, 3, 1}, 3);
    io::write_labels(path("l.txt"), m);
    const Membership back = io::read_labels(path("l.txt"));
    EXPECT_EQ(back.labels, m.labels);
    EXPECT_EQ(back.k, 3);
}

TEST_F(IoTest, LabelsParseErrorHasLineNumber) {
    std::ofstream out(path("bad.txt"));
    out << "1\nxyz\n2\n";
    out.close();
    try {
        io::read_labels(path("bad.txt"));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
    }
}

TEST_F(IoTest, IngestOneBasedIdentity) {
    std::istringstream in("1 1\n2 2\n");
    const BiAdjacency a = io::ingest_edge_list(in, io::IngestOptions{});
    EXPECT_EQ(a.n_rows(), 2);
    EXPECT_EQ(a.n_cols(), 2);
    EXPECT_EQ(a.entries, Matrix::Identity(2, 2));
}

TEST_F(IoTest, IngestDeduplicatesAndParsesCommas) {
    std::istringstream in("1,2\n1,2\n2,1,0.5\n# comment\n");
    const BiAdjacency a = io::ingest_edge_list(in, io::IngestOptions{});
    EXPECT_EQ(a.entries(0, 1), 1.0);
    EXPECT_EQ(a.entries(1, 0), 1.0);
    EXPECT_EQ(a.entries.sum(), 2.0);
}

TEST_F(IoTest, IngestRaggedLineReportsNumber) {
    std::istringstream in("1 1\n2 2 1 7\n");
    try {
        io::ingest_edge_list(in, io::IngestOptions{}, "edges");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("edges:2"), std::string::npos);
    }
}

TEST_F(IoTest, IngestZeroBasedAndExplicitDims) {
    std::istringstream in("0 0\n1 2\n");
    io::IngestOptions opt;
    opt.one_based = false;
    opt.n_rows = 3;
    opt.n_cols = 4;
    const BiAdjacency a = io::ingest_edge_list(in, opt);
    EXPECT_EQ(a.n_rows(), 3);
    EXPECT_EQ(a.n_cols(), 4);

    std::istringstream out_of_range("5 1\n");
    io::IngestOptions strict;
    strict.n_rows = 2;
    strict.n_cols = 2;
    EXPECT_THROW(io::ingest_edge_list(out_of_range, strict), ParseError);
}

TEST_F(IoTest, SbmSpecJsonRoundTrip) {
    SbmSpec s;
    s.n1 = 30;
    s.n2 = 40;
    s.k1 = 2;
    s.k2 = 3;
    s.proportions_rows = (Vector(2) << 0.4, 0.6).finished();
    s.proportions_cols = Vector::Constant(3, 1.0 / 3);
    s.psi = Matrix::Constant(2, 3, 5.0);
    s.seed = 77;
    const SbmSpec back = io::sbm_spec_from_json(io::to_json(s));
    EXPECT_EQ(back.n1, s.n1);
    EXPECT_EQ(back.seed, s.seed);
    EXPECT_EQ(back.psi, s.psi);
    EXPECT_EQ(back.proportions_rows, s.proportions_rows);
}

TEST_F(IoTest, PipelineConfigJsonRoundTripWithInfTau) {
    pipeline::PipelineConfig c;
    c.algorithm = pipeline::Algorithm::scrr;
    c.k_rows = 4;
    c.k_cols = 5;
    c.tau = std::numeric_limits<double>::infinity();
    c.side = pipeline::Side::both;
    const pipeline::PipelineConfig back =
        io::pipeline_config_from_json(io::to_json(c));
    EXPECT_EQ(back.algorithm, pipeline::Algorithm::scrr);
    EXPECT_TRUE(std::isinf(back.tau));
    EXPECT_EQ(back.k_cols, 5);
    EXPECT_EQ(back.side, pipeline::Side::both);
}

TEST_F(IoTest, KMeansMatrixJsonRoundTrip) {
    KMeansMatrix x;
    x.labels = Membership({1, 2, 1}, 2);
    x.centers = (Matrix(2, 2) << 0.5, 1.5, -2, 3).finished();
    const KMeansMatrix back = io::kmeans_matrix_from_json(io::to_json(x));
    EXPECT_EQ(back.labels.labels, x.labels.labels);
    EXPECT_EQ(back.centers, x.centers);
}

TEST_F(IoTest, GraphonSpecJsonRoundTrip) {
    models::GraphonSpec g;
    g.n = 100;
    g.row_breaks = {0.5};
    g.col_breaks = {0.25, 0.75};
    g.psi_block = Matrix::Constant(2, 3, 7.0);
    g.perturbation.kind = models::GraphonPerturbation::Kind::sine;
    g.perturbation.amplitude = 0.3;
    g.perturbation.freq_x = 2;
    const models::GraphonSpec back = io::graphon_spec_from_json(io::to_json(g));
    EXPECT_EQ(back.n, 100);
    EXPECT_EQ(back.row_breaks, g.row_breaks);
    EXPECT_EQ(back.psi_block, g.psi_block);
    EXPECT_EQ(back.perturbation.kind, models::GraphonPerturbation::Kind::sine);
}

TEST_F(IoTest, GeneratedSampleRoundTripsThroughFiles) {
    SbmSpec spec;
    spec.n1 = 25;
    spec.n2 = 35;
    spec.k1 = spec.k2 = 2;
    spec.proportions_rows = Vector::Constant(2, 0.5);
    spec.proportions_cols = Vector::Constant(2, 0.5);
    spec.psi = (Matrix(2, 2) << 12, 3, 3, 12).finished();
    spec.seed = 5;
    const models::SbmSample s = models::sample_sbm(spec);
    io::write_matrix_market(path("gen.mtx"), s.adjacency);
    const BiAdjacency back = io::read_matrix_market(path("gen.mtx"));
    EXPECT_EQ(back.entries, s.adjacency.entries);
}

TEST_F(IoTest, DegreeHistogram) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    io::write_degree_histogram_csv(path("h.csv"), BiAdjacency(m), reg::Side::rows);
    std::ifstream in(path("h.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "degree,count");
    std::getline(in, line);
    EXPECT_EQ(line, "0,1");
}
