#include <gtest/gtest.h>

#include <cmath>

#include "molf/numerics/rng.hpp"

using namespace molf;

// Reference values from an independent port of the published
// splitmix64 / xoshiro256** algorithms.
TEST(Rng, SplitMix64Reference) {
    std::uint64_t s = 0;
    EXPECT_EQ(splitmix64(s), 0xe220a8397b1dcdafULL);
}

TEST(Rng, XoshiroReferenceStreams) {
    Rng zero(0);
    EXPECT_EQ(zero.next_u64(), 0x99ec5f36cb75f2b4ULL);
    EXPECT_EQ(zero.next_u64(), 0xbf6e1f784956452aULL);
    EXPECT_EQ(zero.next_u64(), 0x1a5f849d4933e6e0ULL);
    Rng answer(42);
    EXPECT_EQ(answer.next_u64(), 0x15780b2e0c2ec716ULL);
    EXPECT_EQ(answer.next_u64(), 0x6104d9866d113a7eULL);
    EXPECT_EQ(answer.next_u64(), 0xae17533239e499a1ULL);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.gaussian(), b.gaussian());
}

TEST(Rng, StateRoundTripIncludesCachedSpare) {
    Rng a(9);
    (void)a.gaussian(); // leaves a spare behind
    const Rng::State saved = a.state();
    ASSERT_TRUE(saved.has_spare);
    const double x1 = a.gaussian(), x2 = a.gaussian();
    Rng b(0);
    b.set_state(saved);
    EXPECT_EQ(b.gaussian(), x1);
    EXPECT_EQ(b.gaussian(), x2);
}

TEST(Rng, UniformInHalfOpenUnitInterval) {
    Rng rng(1);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, GaussianMoments) {
    Rng rng(2);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        s += g;
        s2 += g * g;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    // 5 standard errors.
    EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(var, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Rng, ForksAreDistinctAndDoNotAdvanceParent) {
    const Rng parent(77);
    const Rng::State before = parent.state();
    Rng a = parent.fork(1), b = parent.fork(2), a2 = parent.fork(1);
    EXPECT_EQ(parent.state(), before);
    const auto x = a.next_u64();
    EXPECT_NE(x, b.next_u64());
    EXPECT_EQ(x, a2.next_u64());
}

TEST(Rng, GaussianMatrixScalesByStddev) {
    Rng a(4), b(4);
    const Matrix m = a.gaussian_matrix(3, 3, 2.5);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m[i], 2.5 * b.gaussian());
}
