#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "biclust/rng.hpp"
#include "biclust/types.hpp"

using namespace biclust;

namespace {

Membership mem(std::vector<int> labels, int k) { return Membership(std::move(labels), k); }

Matrix random_orthogonal(int k, CounterRng& rng) {
    Matrix g(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) g(i, j) = rng.next_gaussian();
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(k, k);
}

}  // namespace

TEST(Types, MembershipToMatrixExamples) {
    Matrix z = membership_to_matrix(mem({1, 1, 2}, 2));
    Matrix expect(3, 2);
    expect << 1, 0, 1, 0, 0, 1;
    EXPECT_EQ(z, expect);

    Matrix single = membership_to_matrix(mem({2}, 2));
    Matrix expect1(1, 2);
    expect1 << 0, 1;
    EXPECT_EQ(single, expect1);

    Matrix z3 = membership_to_matrix(mem({1, 2, 3, 3}, 3));
    Vector sums = z3.colwise().sum();
    EXPECT_EQ(sums[0], 1);
    EXPECT_EQ(sums[1], 1);
    EXPECT_EQ(sums[2], 2);
}

TEST(Types, NormalizedMembershipOrthonormal) {
    Matrix zb = normalized_membership(mem({1, 1, 2, 2}, 2));
    EXPECT_NEAR(zb(0, 0), 1.0 / std::sqrt(2.0), 1e-15);
    Matrix gram = zb.transpose() * zb - Matrix::Identity(2, 2);
    EXPECT_LE(gram.norm(), 1e-12);

    Matrix zb2 = normalized_membership(mem({1, 1, 1, 2}, 2));
    EXPECT_NEAR(zb2(0, 0), 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(zb2(3, 1), 1.0, 1e-15);

    EXPECT_THROW(normalized_membership(mem({1}, 2)), EmptyClusterError);
}

TEST(Types, KmeansExpandExamples) {
    KMeansMatrix x;
    x.labels = mem({1, 2}, 2);
    x.centers = Matrix(2, 1);
    x.centers << 0, 5;
    Matrix e = kmeans_expand(x);
    EXPECT_EQ(e(0, 0), 0);
    EXPECT_EQ(e(1, 0), 5);

    x.labels = mem({1, 1}, 2);
    x.centers = Matrix(2, 2);
    x.centers << 3, 3, 0, 0;
    e = kmeans_expand(x);
    EXPECT_EQ(e, (Matrix(2, 2) << 3, 3, 3, 3).finished());

    x.labels = mem({2, 1, 2}, 2);
    x.centers = Matrix(2, 1);
    x.centers << 1, 4;
    e = kmeans_expand(x);
    EXPECT_EQ(e, (Matrix(3, 1) << 4, 1, 4).finished());
}

TEST(Types, CenterSeparationExamples) {
    KMeansMatrix x;
    x.labels = mem({1, 2, 3}, 3);
    x.centers = Matrix(3, 1);
    x.centers << 0, 3, 7;
    CenterSeparation s = center_separation(x);
    EXPECT_DOUBLE_EQ(s.delta[0], 3);
    EXPECT_DOUBLE_EQ(s.delta[1], 3);
    EXPECT_DOUBLE_EQ(s.delta[2], 4);
    EXPECT_DOUBLE_EQ(s.delta_min, 3);

    x.labels = mem({1, 2}, 2);
    x.centers = Matrix(2, 2);
    x.centers << 0, 0, 0, 1;
    EXPECT_DOUBLE_EQ(center_separation(x).delta_min, 1.0);
}

TEST(Types, CenterSeparationOfNormalizedMembership) {
    // Sizes (2,3): delta^2 = 1/2 + 1/3 = 5/6.
    KMeansMatrix x;
    x.labels = mem({1, 1, 2, 2, 2}, 2);
    x.centers = Matrix(2, 2);
    x.centers << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(3.0);
    const CenterSeparation s = center_separation(x);
    EXPECT_NEAR(s.delta_min * s.delta_min, 5.0 / 6.0, 1e-12);
}

TEST(Types, CenterSeparationErrors) {
    KMeansMatrix x;
    x.labels = mem({1, 2}, 2);
    x.centers = Matrix::Zero(2, 2);  // nonempty clusters share a center
    EXPECT_THROW(center_separation(x), DegenerateCentersError);

    KMeansMatrix one;
    one.labels = mem({1, 1}, 2);
    one.centers = Matrix::Zero(2, 1);
    EXPECT_THROW(center_separation(one), ValidationError);
}

TEST(Types, CenterSeparationIsometryInvariant) {
    CounterRng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 3, d = 3;
        KMeansMatrix x;
        x.labels = mem({1, 2, 3, 1, 2, 3}, k);
        x.centers = Matrix(k, d);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < d; ++j) x.centers(i, j) = rng.next_gaussian();
        const CenterSeparation base = center_separation(x);
        KMeansMatrix rotated = x;
        rotated.centers = x.centers * random_orthogonal(d, rng);
        const CenterSeparation rot = center_separation(rotated);
        EXPECT_NEAR(base.delta_min, rot.delta_min, 1e-12);
        for (int r = 0; r < k; ++r) EXPECT_NEAR(base.delta[r], rot.delta[r], 1e-12);
    }
}

TEST(Types, MembershipGramIsExactClusterSizes) {
    CounterRng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(40));
        const int k = 1 + static_cast<int>(rng.next_below(5));
        std::vector<int> labels;
        for (int i = 0; i < n; ++i)
            labels.push_back(1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k))));
        const Membership m = mem(labels, k);
        const Matrix z = membership_to_matrix(m);
        const Matrix gram = z.transpose() * z;
        const std::vector<int> sizes = m.cluster_sizes();
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                EXPECT_EQ(gram(a, b), a == b ? sizes[static_cast<std::size_t>(a)] : 0);
        // Column sums recover cluster sizes.
        for (int a = 0; a < k; ++a)
            EXPECT_EQ(z.col(a).sum(), sizes[static_cast<std::size_t>(a)]);
    }
}

TEST(Types, ExpandHasOneDistinctRowPerNonemptyCluster) {
    CounterRng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.next_below(20));
        const int k = 2 + static_cast<int>(rng.next_below(4));
        KMeansMatrix x;
        std::vector<int> labels;
        for (int i = 0; i < n; ++i)
            labels.push_back(1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k))));
        x.labels = mem(labels, k);
        x.centers = Matrix(k, 2);
        for (int i = 0; i < k; ++i) {
            x.centers(i, 0) = i + 1;  // distinct by construction
            x.centers(i, 1) = rng.next_gaussian();
        }
        const Matrix e = kmeans_expand(x);
        std::set<std::pair<double, double>> distinct;
        for (int i = 0; i < n; ++i) distinct.insert({e(i, 0), e(i, 1)});
        const std::vector<int> sizes = x.labels.cluster_sizes();
        const long nonempty =
            std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
        EXPECT_EQ(static_cast<long>(distinct.size()), nonempty);
    }
}

TEST(Types, BiAdjacencyValidation) {
    BiAdjacency ok(Matrix::Zero(2, 3));
    ok.entries(0, 0) = 1.0;
    EXPECT_NO_THROW(ok.validate());
    EXPECT_TRUE(ok.is_binary());

    BiAdjacency frac(Matrix::Constant(2, 2, 0.5));
    EXPECT_NO_THROW(frac.validate());
    EXPECT_FALSE(frac.is_binary());

    BiAdjacency bad(Matrix::Constant(2, 2, 1.5));
    EXPECT_THROW(bad.validate(), ValidationError);

    BiAdjacency asym(Matrix::Zero(2, 2), true);
    asym.entries(0, 1) = 1.0;
    EXPECT_THROW(asym.validate(), ValidationError);
}

TEST(Types, TruncatedSvdValidation) {
    TruncatedSvd svd;
    svd.u = Matrix::Identity(4, 2);
    svd.v = Matrix::Identity(5, 2);
    svd.sigma = Vector(2);
    svd.sigma << 3, 1;
    EXPECT_NO_THROW(svd.validate());
    svd.sigma << 1, 3;  // out of order
    EXPECT_THROW(svd.validate(), ValidationError);
}
