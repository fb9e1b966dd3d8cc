#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "molf/optim/config.hpp"

namespace molf {

/// What the router saw and chose for one module at one optimizer step.
struct RoutingDecision {
    std::uint64_t step = 0;
    std::string module_name;
    std::vector<double> scores;
    std::vector<std::size_t> winners; // descending score
    std::vector<double> lr_used;
    ScoringMode scoring_mode = ScoringMode::epd;
};

} // namespace molf
