#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "biclust/metrics.hpp"
#include "biclust/rng.hpp"

using namespace biclust;
using namespace biclust::metrics;

namespace {

Membership mem(std::vector<int> l, int k) { return Membership(std::move(l), k); }

Membership random_membership(int n, int k, CounterRng& rng) {
    std::vector<int> labels;
    for (int i = 0; i < n; ++i)
        labels.push_back(1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k))));
    return mem(std::move(labels), k);
}

Membership relabel(const Membership& m, const std::vector<int>& perm) {
    Membership out = m;
    for (int& l : out.labels) l = perm[static_cast<std::size_t>(l - 1)];
    return out;
}

}  // namespace

TEST(Metrics, MisclassificationExamples) {
    EXPECT_EQ(misclassification(mem({1, 1, 2, 2}, 2), mem({1, 1, 2, 2}, 2)).mis_bar, 0.0);
    EXPECT_EQ(misclassification(mem({1, 1, 2, 2}, 2), mem({2, 2, 1, 1}, 2)).mis_bar, 0.0);

    const MisReport r = misclassification(mem({1, 1, 2, 2}, 2), mem({1, 2, 2, 2}, 2));
    EXPECT_DOUBLE_EQ(r.mis_bar, 0.25);
    EXPECT_DOUBLE_EQ(r.per_cluster[0], 0.5);
    EXPECT_DOUBLE_EQ(r.per_cluster[1], 0.0);
    EXPECT_DOUBLE_EQ(r.mis_inf, 0.5);
}

TEST(Metrics, MisBarDecomposesOverClusters) {
    CounterRng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 20 + static_cast<int>(rng.next_below(30));
        const int k = 2 + static_cast<int>(rng.next_below(4));
        const Membership z = random_membership(n, k, rng);
        const Membership z2 = random_membership(n, k, rng);
        const MisReport r = misclassification(z, z2);
        const std::vector<int> sizes = z.cluster_sizes();
        double acc = 0.0;
        for (int t = 0; t < k; ++t)
            acc += r.per_cluster[t] * sizes[static_cast<std::size_t>(t)] / n;
        EXPECT_NEAR(acc, r.mis_bar, 1e-12);
        EXPECT_LE(r.mis_bar, 1.0 - 1.0 / k + 1e-12);
    }
}

TEST(Metrics, MisInvariantUnderRelabeling) {
    CounterRng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Membership z = random_membership(25, 3, rng);
        const Membership z2 = random_membership(25, 3, rng);
        const double base = misclassification(z, z2).mis_bar;
        std::vector<int> perm{2, 3, 1};
        EXPECT_DOUBLE_EQ(misclassification(z, relabel(z2, perm)).mis_bar, base);
        EXPECT_DOUBLE_EQ(misclassification(relabel(z, perm), z2).mis_bar, base);
    }
}

TEST(Metrics, MisIsPseudoMetric) {
    CounterRng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Membership a = random_membership(30, 3, rng);
        const Membership b = random_membership(30, 3, rng);
        const Membership c = random_membership(30, 3, rng);
        const double ab = misclassification(a, b).mis_bar;
        const double ba = misclassification(b, a).mis_bar;
        const double ac = misclassification(a, c).mis_bar;
        const double cb = misclassification(c, b).mis_bar;
        EXPECT_NEAR(ab, ba, 1e-12);
        EXPECT_LE(ab, ac + cb + 1e-12);
    }
}

TEST(Metrics, MisDimensionMismatch) {
    EXPECT_THROW(misclassification(mem({1, 2}, 2), mem({1}, 2)), DimensionMismatchError);
}

TEST(Metrics, UnequalKZeroPadding) {
    // Extra estimated labels count as errors after padding.
    const MisReport r = misclassification(mem({1, 1, 2, 2}, 2), mem({1, 2, 3, 3}, 3));
    EXPECT_DOUBLE_EQ(r.mis_bar, 0.25);  // best map: 1->1, 3->2, the lone 2 is wrong
}

TEST(Metrics, PermutationMatchExamples) {
    // Diagonal-dominant: identity.
    ConfusionMatrix diag;
    diag.counts = (Eigen::MatrixXi(3, 3) << 9, 1, 0, 0, 8, 1, 1, 0, 7).finished();
    diag.n = 27;
    const auto [p1, v1] = permutation_match(diag);
    EXPECT_EQ(p1, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(v1, 24);

    // Anti-diagonal: reversal.
    ConfusionMatrix anti;
    anti.counts = (Eigen::MatrixXi(3, 3) << 0, 0, 5, 0, 5, 0, 5, 0, 0).finished();
    anti.n = 15;
    const auto [p2, v2] = permutation_match(anti);
    EXPECT_EQ(p2, (std::vector<int>{2, 1, 0}));
    EXPECT_EQ(v2, 15);
}

TEST(Metrics, BruteForceAgreesWithAssignmentSolver) {
    CounterRng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_below(5));  // up to 6
        ConfusionMatrix c;
        c.counts = Eigen::MatrixXi(k, k);
        long total = 0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                c.counts(i, j) = static_cast<int>(rng.next_below(20));
                total += c.counts(i, j);
            }
        c.n = total;
        const auto [pb, vb] = permutation_match(c, /*force_brute=*/true);
        const auto [ps, vs] = permutation_match(c, false, /*force_solver=*/true);
        EXPECT_EQ(vb, vs);
    }
}

TEST(Metrics, NmiExamples) {
    EXPECT_DOUBLE_EQ(nmi(mem({1, 1, 2, 2}, 2), mem({2, 2, 1, 1}, 2)).value, 1.0);

    CounterRng rng(5);
    const Membership a = random_membership(10000, 4, rng);
    const Membership b = random_membership(10000, 4, rng);
    EXPECT_LE(nmi(a, b).value, 0.01);

    const NmiResult constant = nmi(mem({1, 1, 1}, 1), mem({1, 2, 3}, 3));
    EXPECT_EQ(constant.value, 0.0);
    EXPECT_TRUE(constant.degenerate);
}

TEST(Metrics, NmiInvariantUnderRelabeling) {
    CounterRng rng(6);
    const Membership z = random_membership(50, 3, rng);
    const Membership z2 = random_membership(50, 3, rng);
    const double base = nmi(z, z2).value;
    EXPECT_NEAR(nmi(z, relabel(z2, {3, 1, 2})).value, base, 1e-12);
}

TEST(Metrics, NmiIncreasesTowardTruthOnNestedPartitions) {
    // Truth has 4 clusters; merging pairs loses information.
    std::vector<int> truth, merged;
    for (int i = 0; i < 40; ++i) {
        truth.push_back(1 + i % 4);
        merged.push_back(1 + (i % 4) / 2);
    }
    const double coarse = nmi(mem(truth, 4), mem(merged, 2)).value;
    const double fine = nmi(mem(truth, 4), mem(truth, 4)).value;
    EXPECT_LT(coarse, fine);
    EXPECT_DOUBLE_EQ(fine, 1.0);
}

TEST(Metrics, KMeansDelegation) {
    KMeansMatrix a, b;
    a.labels = mem({1, 1, 2, 2}, 2);
    a.centers = Matrix::Zero(2, 1);
    a.centers << 0, 1;
    b.labels = mem({2, 2, 1, 1}, 2);
    b.centers = a.centers;
    EXPECT_EQ(misclassification_kmeans(a, b).mis_bar, 0.0);
}
