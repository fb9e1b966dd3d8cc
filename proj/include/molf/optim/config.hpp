#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "molf/harness/schedule.hpp"

namespace molf {

enum class ScoringMode {
    epd,   // Expected Preconditioned Descent
    pfn,   // Preconditioned Frobenius Norm
    dense, // every expert updated every step; EPD still recorded
};

std::string_view to_string(ScoringMode mode);
ScoringMode parse_scoring_mode(std::string_view text);

struct OptimizerConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t k_top = 1;
    double lambda_fft = 0.1;
    double lambda_lora = 0.01;
    ScoringMode scoring = ScoringMode::epd;
    double lr_fft = 1e-4;
    double lr_lora = 5e-4;
    /// Per-expert gradient norm clip applied before moment tracking; 0 disables it.
    double grad_clip = 0.0;
    ScheduleSpec schedule;

    /// Throws ContractError when a field is out of range.
    void validate() const;
};

} // namespace molf
