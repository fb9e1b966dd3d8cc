#include "molf/harness/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace molf {

std::size_t ScheduleSpec::warmup_steps() const {
    return static_cast<std::size_t>(std::llround(warmup_ratio * static_cast<double>(total_steps)));
}

double lr_at(const ScheduleSpec& schedule, std::size_t step) {
    const std::size_t total = schedule.total_steps;
    const std::size_t warmup = std::min(schedule.warmup_steps(), total);
    const std::size_t s = std::min(step, total);
    if (s < warmup) return static_cast<double>(s) / static_cast<double>(warmup);
    if (total == warmup) return 1.0;
    const double progress =
        static_cast<double>(s - warmup) / static_cast<double>(total - warmup);
    switch (schedule.kind) {
    case ScheduleKind::cosine:
        return 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    case ScheduleKind::linear:
        return 1.0 - progress;
    }
    return 0.0;
}

} // namespace molf
