#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "biclust/rng.hpp"

using biclust::CounterRng;

TEST(Rng, SameKeySameSequence) {
    CounterRng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentKeysDiffer) {
    CounterRng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    EXPECT_EQ(same, 0);
}

TEST(Rng, SubstreamIndependentOfConsumption) {
    CounterRng a(7), b(7);
    for (int i = 0; i < 10; ++i) a.next_u64();  // only a is consumed
    CounterRng sa = a.substream("x");
    CounterRng sb = b.substream("x");
    for (int i = 0; i < 20; ++i) EXPECT_EQ(sa.next_u64(), sb.next_u64());
}

TEST(Rng, NamedSubstreamsDistinct) {
    CounterRng root(9);
    CounterRng a = root.substream("alpha");
    CounterRng b = root.substream("beta");
    CounterRng c = root.substream("alpha", 1);
    EXPECT_NE(a.next_u64(), b.next_u64());
    EXPECT_NE(a.next_u64(), c.next_u64());
}

TEST(Rng, DoubleInUnitInterval) {
    CounterRng r(3);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.next_double();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
        sum += x;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.02);
}

TEST(Rng, GaussianMoments) {
    CounterRng r(4);
    const int n = 50000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.next_gaussian();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.02);
    EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(Rng, NextBelowInRange) {
    CounterRng r(5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t x = r.next_below(7);
        ASSERT_LT(x, 7u);
        seen.insert(x);
    }
    EXPECT_EQ(seen.size(), 7u);  // all residues hit
    EXPECT_EQ(r.next_below(1), 0u);
}

TEST(Rng, ShuffleIsPermutation) {
    CounterRng r(6);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
    std::vector<int> orig = v;
    r.shuffle(v);
    EXPECT_NE(v, orig);  // astronomically unlikely to be identity
    std::sort(v.begin(), v.end());
    EXPECT_EQ(v, orig);
}
