#include <gtest/gtest.h>

#include "molf/harness/schedule.hpp"

using namespace molf;

namespace {

ScheduleSpec spec(ScheduleKind kind, double ratio = 0.05, std::size_t total = 1000) {
    ScheduleSpec s;
    s.kind = kind;
    s.warmup_ratio = ratio;
    s.total_steps = total;
    return s;
}

} // namespace

TEST(Schedule, WarmupStartsAtZero) {
    EXPECT_EQ(lr_at(spec(ScheduleKind::cosine), 0), 0.0);
    EXPECT_EQ(spec(ScheduleKind::cosine).warmup_steps(), 50u);
}

TEST(Schedule, WarmupEndsAtOne) {
    EXPECT_DOUBLE_EQ(lr_at(spec(ScheduleKind::cosine), 50), 1.0);
    EXPECT_DOUBLE_EQ(lr_at(spec(ScheduleKind::linear), 50), 1.0);
    EXPECT_DOUBLE_EQ(lr_at(spec(ScheduleKind::cosine), 25), 0.5);
}

TEST(Schedule, CosineMidpointIsHalf) {
    EXPECT_NEAR(lr_at(spec(ScheduleKind::cosine), 525), 0.5, 1e-15);
}

TEST(Schedule, LinearDecay) {
    EXPECT_NEAR(lr_at(spec(ScheduleKind::linear), 525), 0.5, 1e-15);
    EXPECT_NEAR(lr_at(spec(ScheduleKind::linear), 1000), 0.0, 1e-15);
}

TEST(Schedule, ClampsPastTotal) {
    const auto s = spec(ScheduleKind::cosine);
    EXPECT_EQ(lr_at(s, 5000), lr_at(s, 1000));
    EXPECT_NEAR(lr_at(s, 1000), 0.0, 1e-15);
}

TEST(Schedule, NoWarmup) {
    const auto s = spec(ScheduleKind::cosine, 0.0, 100);
    EXPECT_EQ(lr_at(s, 0), 1.0);
}

TEST(ScheduleProperty, BoundedAndMonotoneAfterWarmup) {
    for (auto kind : {ScheduleKind::cosine, ScheduleKind::linear}) {
        const auto s = spec(kind, 0.1, 300);
        double prev = 2.0;
        for (std::size_t t = 0; t <= 300; ++t) {
            const double v = lr_at(s, t);
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
            if (t >= s.warmup_steps()) {
                ASSERT_LE(v, prev);
                prev = v;
            }
        }
    }
}
