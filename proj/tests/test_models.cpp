#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "biclust/linalg.hpp"
#include "biclust/models.hpp"
#include "biclust/rng.hpp"

using namespace biclust;
using namespace biclust::models;

namespace {

SbmSpec balanced_spec(int n1, int n2, int k1, int k2, Matrix psi,
                      std::uint64_t seed = 0) {
    SbmSpec s;
    s.n1 = n1;
    s.n2 = n2;
    s.k1 = k1;
    s.k2 = k2;
    s.proportions_rows = Vector::Constant(k1, 1.0 / k1);
    s.proportions_cols = Vector::Constant(k2, 1.0 / k2);
    s.psi = std::move(psi);
    s.seed = seed;
    return s;
}

Matrix sbpp_psi(double a, double b, int k) {
    return b * Matrix::Ones(k, k) + (a - b) * Matrix::Identity(k, k);
}

SbmSpec random_spec(CounterRng& rng, int max_k = 6, int max_n = 500) {
    const int k1 = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_k)));
    const int k2 = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_k)));
    const int n1 = std::max(4 * k1, static_cast<int>(rng.next_below(max_n)) + 2 * k1);
    const int n2 = std::max(4 * k2, static_cast<int>(rng.next_below(max_n)) + 2 * k2);
    SbmSpec s;
    s.n1 = n1;
    s.n2 = n2;
    s.k1 = k1;
    s.k2 = k2;
    Vector pr(k1), pc(k2);
    for (int i = 0; i < k1; ++i) pr[i] = 1.0 + rng.next_double();
    for (int i = 0; i < k2; ++i) pc[i] = 1.0 + rng.next_double();
    s.proportions_rows = pr / pr.sum();
    s.proportions_cols = pc / pc.sum();
    // Keep edge probabilities inside [0, 0.4].
    const double scale = 0.4 * std::sqrt(static_cast<double>(n1) * n2);
    s.psi = Matrix(k1, k2);
    for (int i = 0; i < k1; ++i)
        for (int j = 0; j < k2; ++j) s.psi(i, j) = scale * rng.next_double();
    s.seed = rng.next_u64();
    return s;
}

}  // namespace

TEST(Models, LargestRemainderRounding) {
    Vector p(2);
    p << 0.5, 0.5;
    EXPECT_EQ(cluster_sizes_from_proportions(p, 5), (std::vector<int>{3, 2}));
    Vector q(3);
    q << 0.5, 0.3, 0.2;
    const std::vector<int> sizes = cluster_sizes_from_proportions(q, 7);
    EXPECT_EQ(sizes[0] + sizes[1] + sizes[2], 7);
    EXPECT_EQ(sizes, (std::vector<int>{4, 2, 1}));
}

TEST(Models, SampleSbmZeroPsi) {
    const SbmSpec spec = balanced_spec(10, 12, 2, 2, Matrix::Zero(2, 2), 3);
    const SbmSample s = sample_sbm(spec);
    EXPECT_EQ(s.adjacency.entries.sum(), 0.0);
}

TEST(Models, SampleSbmMeanConcentrates) {
    const double p = 0.01;
    const int n = 2000;
    SbmSpec spec = balanced_spec(n, n, 1, 1, Matrix::Constant(1, 1, p * n), 17);
    const SbmSample s = sample_sbm(spec);
    const double mean = s.adjacency.entries.mean();
    const double tol = 3.0 * std::sqrt(p * (1 - p) / (static_cast<double>(n) * n));
    EXPECT_NEAR(mean, p, tol);
}

TEST(Models, SampleSbmReproducible) {
    CounterRng r1(99), r2(99);
    const SbmSpec spec = balanced_spec(30, 40, 2, 3, Matrix::Constant(2, 3, 8.0), 5);
    const SbmSample a = sample_sbm(spec, r1);
    const SbmSample b = sample_sbm(spec, r2);
    EXPECT_EQ(a.adjacency.entries, b.adjacency.entries);
    EXPECT_EQ(a.rows.labels, b.rows.labels);
    const SbmSample c = sample_sbm(spec, CounterRng(100));
    EXPECT_NE(a.adjacency.entries, c.adjacency.entries);
}

TEST(Models, SampleSbmValidation) {
    SbmSpec spec = balanced_spec(4, 4, 2, 2, Matrix::Constant(2, 2, 100.0));
    EXPECT_THROW(sample_sbm(spec), InvalidProbabilityError);
    SbmSpec tiny = balanced_spec(30, 30, 2, 2, Matrix::Constant(2, 2, 1.0));
    tiny.proportions_rows << 0.999, 0.001;  // second cluster rounds to zero
    EXPECT_THROW(sample_sbm(tiny), EmptyClusterError);
}

TEST(Models, SymmetricSampleIsSymmetric) {
    SbmSpec spec = balanced_spec(40, 40, 3, 3, sbpp_psi(6, 1, 3), 7);
    const SymmetricSbmSample s = sample_symmetric_sbm(spec);
    EXPECT_EQ(s.adjacency.entries, s.adjacency.entries.transpose().eval());
    EXPECT_TRUE(s.adjacency.symmetric);

    SbmSpec zero = balanced_spec(10, 10, 2, 2, Matrix::Zero(2, 2));
    EXPECT_EQ(sample_symmetric_sbm(zero).adjacency.entries.sum(), 0.0);

    SbmSpec asym = balanced_spec(10, 10, 2, 2, (Matrix(2, 2) << 1, 2, 3, 4).finished());
    EXPECT_THROW(sample_symmetric_sbm(asym), ValidationError);
}

TEST(Models, PopulationSvdSbppSpectrum) {
    // Balanced SBPP with a=6, b=1, k=3: spectrum of Bbar is {8/3, 5/3, 5/3}.
    const SbmSpec spec = balanced_spec(300, 300, 3, 3, sbpp_psi(6, 1, 3));
    const TruncatedSvd svd = population_svd(spec);
    EXPECT_NEAR(svd.sigma[0], 8.0 / 3.0, 1e-10);
    EXPECT_NEAR(svd.sigma[1], 5.0 / 3.0, 1e-10);
    EXPECT_NEAR(svd.sigma[2], 5.0 / 3.0, 1e-10);
    const SeparationConstants sep = separation_constants(spec);
    EXPECT_NEAR(sep.sigma_k, 5.0 / 3.0, 1e-10);
}

TEST(Models, PopulationSvdReconstructsMean) {
    CounterRng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        SbmSpec spec = random_spec(rng);
        const SbmSample s = sample_sbm(spec);
        const TruncatedSvd svd = population_svd(spec, s.rows, s.cols);
        const Matrix p = population_mean(spec, s.rows, s.cols);
        EXPECT_NO_THROW(svd.validate());
        const double denom = std::max(p.norm(), 1e-300);
        EXPECT_LE((svd.reconstruct() - p).norm() / denom, 1e-10);
    }
}

TEST(Models, PopulationSvdRankOne) {
    const SbmSpec spec = balanced_spec(30, 40, 1, 2, (Matrix(1, 2) << 5, 2).finished());
    const TruncatedSvd svd = population_svd(spec);
    EXPECT_EQ(svd.k(), 1);
    EXPECT_GT(svd.sigma[0], 0.0);
}

TEST(Models, SeparationConstantsSbpp) {
    const SbmSpec spec = balanced_spec(300, 300, 3, 3, sbpp_psi(6, 1, 3));
    const SeparationConstants sep = separation_constants(spec);
    // k * Psi-tilde^2 = Psi^2 = 2 (a-b)^2 / k = 50/3.
    EXPECT_NEAR(sep.psi_min_sq, 50.0 / 3.0, 1e-10);
    EXPECT_NEAR(3.0 * sep.psi_tilde_min_sq, sep.psi_min_sq, 1e-10);
}

TEST(Models, SeparationConstantsLambdaExample) {
    // B = [[.5,.1],[.1,.5]] with column cluster sizes (10,10).
    const int n1 = 20, n2 = 20;
    Matrix b(2, 2);
    b << 0.5, 0.1, 0.1, 0.5;
    const Matrix psi = b * std::sqrt(static_cast<double>(n1) * n2);
    const SbmSpec spec = balanced_spec(n1, n2, 2, 2, psi);
    const SeparationConstants sep = separation_constants(spec);
    EXPECT_NEAR(sep.lambda(0, 0), 5.0, 1e-12);
    EXPECT_NEAR(sep.lambda(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(sep.lambda_min_sq, 32.0, 1e-12);
}

TEST(Models, SeparationZeroForIdenticalRows) {
    Matrix psi(2, 2);
    psi << 3, 4, 3, 4;
    const SbmSpec spec = balanced_spec(20, 20, 2, 2, psi);
    EXPECT_EQ(separation_constants(spec).psi_min_sq, 0.0);
}

TEST(Models, PsiSeparationInequalities) {
    CounterRng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        SbmSpec spec = random_spec(rng, 5, 60);
        if (spec.k1 < 2) continue;
        const SeparationConstants sep = separation_constants(spec);
        const double pi_min = spec.proportions_rows.minCoeff();
        const double pi_max = spec.proportions_rows.maxCoeff();
        EXPECT_GE(sep.psi_tilde_min_sq + 1e-12, pi_min * sep.psi_min_sq);
        EXPECT_GE(sep.psi_min_sq + 1e-12, sep.psi_tilde_min_sq / pi_max);
    }
}

TEST(Models, AverageDegreeMatchesDav) {
    // Empirical average degree over 20 replicates within 4 standard errors.
    SbmSpec spec = balanced_spec(200, 200, 2, 2, sbpp_psi(8, 3, 2));
    const double d_av = spec.average_degree();
    std::vector<double> degs;
    for (int rep = 0; rep < 20; ++rep) {
        const SymmetricSbmSample s =
            sample_symmetric_sbm(spec, CounterRng(400 + static_cast<std::uint64_t>(rep)));
        degs.push_back(s.adjacency.entries.sum() / spec.n1);
    }
    double mean = 0.0;
    for (const double d : degs) mean += d;
    mean /= degs.size();
    double var = 0.0;
    for (const double d : degs) var += (d - mean) * (d - mean);
    var /= (degs.size() - 1);
    const double se = std::sqrt(var / degs.size());
    EXPECT_NEAR(mean, d_av, 4.0 * se + 1e-9);
}

TEST(Models, SubGaussianExactWhenNoiseless) {
    SubGaussianSpec spec;
    spec.n1 = 20;
    spec.n2 = 30;
    spec.k1 = spec.k2 = 2;
    spec.proportions_rows = Vector::Constant(2, 0.5);
    spec.proportions_cols = Vector::Constant(2, 0.5);
    spec.b = (Matrix(2, 2) << 1, 0, 0, 1).finished();
    spec.noise_sigma = 0.0;
    const SubGaussianSample s = sample_subgaussian(spec);
    for (int i = 0; i < spec.n1; ++i)
        for (int j = 0; j < spec.n2; ++j)
            EXPECT_EQ(s.entries(i, j),
                      spec.b(s.rows.labels[static_cast<std::size_t>(i)] - 1,
                             s.cols.labels[static_cast<std::size_t>(j)] - 1));
}

TEST(Models, SubGaussianNoiseVariance) {
    SubGaussianSpec spec;
    spec.n1 = spec.n2 = 1000;
    spec.k1 = spec.k2 = 1;
    spec.proportions_rows = Vector::Ones(1);
    spec.proportions_cols = Vector::Ones(1);
    spec.b = Matrix::Zero(1, 1);
    spec.noise_sigma = 0.7;
    spec.seed = 8;
    const SubGaussianSample s = sample_subgaussian(spec);
    const double var = s.entries.array().square().mean();
    EXPECT_NEAR(var, 0.49, 0.05 * 0.49);
}

TEST(Models, GraphonBlockConstantBehavesLikeSbm) {
    GraphonSpec g;
    g.n = 400;
    g.row_breaks = {0.5};
    g.col_breaks = {0.5};
    g.psi_block = (Matrix(2, 2) << 30, 5, 5, 20).finished();
    g.seed = 12;
    const GraphonSample s = sample_graphon(g);
    EXPECT_EQ(s.clip_count, 0);
    // Entry mean within binomial tolerance of the block-average density.
    double expected = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) expected += 0.25 * g.psi_block(a, b) / g.n;
    const double mean = s.adjacency.entries.mean();
    EXPECT_NEAR(mean, expected, 5.0 * std::sqrt(expected / (g.n * g.n)));
    // Implicit labels follow interval membership.
    EXPECT_EQ(s.rows.k, 2);
    EXPECT_EQ(static_cast<int>(s.rows.labels.size()), g.n);
}

TEST(Models, GraphonClipCounter) {
    GraphonSpec g;
    g.n = 50;
    g.psi_block = Matrix::Constant(1, 1, 49.0);
    g.perturbation.kind = GraphonPerturbation::Kind::constant;
    g.perturbation.constant = 10.0;  // pushes rho0 above n on every entry
    g.seed = 3;
    const GraphonSample s = sample_graphon(g);
    EXPECT_EQ(s.clip_count, static_cast<long>(g.n) * g.n);
}

TEST(Models, GraphonL4DeviationConstantShift) {
    GraphonSpec g;
    g.n = 100;
    g.psi_block = Matrix::Constant(1, 1, 10.0);
    g.perturbation.kind = GraphonPerturbation::Kind::constant;
    g.perturbation.constant = -0.75;
    const double l4 = graphon_l4_deviation(g, 2000, CounterRng(5));
    EXPECT_NEAR(l4, 0.75, 1e-12);  // constant deviation integrates exactly
}

TEST(Models, SbmApproximationFixedPointAndIdempotence) {
    CounterRng rng(41);
    const Membership rows({1, 1, 2, 2, 2}, 2);
    const Membership cols({1, 2, 2, 1}, 2);
    Matrix p(5, 4);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) p(i, j) = rng.next_double();

    const SbmApproximation first = sbm_approximation(p, rows, cols);
    const SbmApproximation second = sbm_approximation(first.p_tilde, rows, cols);
    EXPECT_LE((second.p_tilde - first.p_tilde).norm(), 1e-12);

    // Projection formula Pi_1 P Pi_2 via normalized memberships.
    const Matrix z1 = normalized_membership(rows);
    const Matrix z2 = normalized_membership(cols);
    const Matrix projected = z1 * z1.transpose() * p * z2 * z2.transpose();
    EXPECT_LE((projected - first.p_tilde).norm(), 1e-12);
}

TEST(Models, SbmApproximationHalfHalfBlocks) {
    const Membership rows({1, 1, 2, 2}, 2);
    const Membership cols({1, 1, 2, 2}, 2);
    Matrix p(4, 4);
    p << 1, 0, 1, 0,
         0, 1, 0, 1,
         1, 0, 1, 0,
         0, 1, 0, 1;
    const SbmApproximation approx = sbm_approximation(p, rows, cols);
    EXPECT_EQ(approx.b_tilde, Matrix::Constant(2, 2, 0.5));
}

TEST(Models, Fig2DesignConnectivity) {
    // The simulation design: B = sqrt(log(n1 n2)/(n1 n2)) * B0.
    const int n0 = 100;
    SbmSpec spec;
    spec.k1 = 3;
    spec.k2 = 4;
    spec.n1 = 3 * n0;
    spec.n2 = 4 * n0;
    spec.proportions_rows = Vector::Constant(3, 1.0 / 3);
    spec.proportions_cols = Vector::Constant(4, 0.25);
    Matrix b0(3, 4);
    b0 << 6, 1, 1, 1, 1, 6, 1, 1, 1, 1, 6, 1;
    b0 *= 0.5;
    spec.psi = std::sqrt(std::log(300.0 * 400.0)) * b0;
    const Matrix b = spec.connectivity();
    const double scale = std::sqrt(std::log(300.0 * 400.0) / (300.0 * 400.0));
    EXPECT_LE((b - scale * b0).norm(), 1e-12);
    EXPECT_NO_THROW(spec.validate());
}
