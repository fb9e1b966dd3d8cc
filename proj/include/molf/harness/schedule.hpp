#pragma once

#include <cstddef>

namespace molf {

enum class ScheduleKind { cosine, linear };

/// Linear warmup from 0 to 1, then cosine or linear decay to 0 at total_steps.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::cosine;
    double warmup_ratio = 0.05;
    std::size_t total_steps = 1000;

    [[nodiscard]] std::size_t warmup_steps() const;
};

/// Learning-rate multiplier at `step` (0-based). Steps past total_steps clamp to the final value.
double lr_at(const ScheduleSpec& schedule, std::size_t step);

} // namespace molf
