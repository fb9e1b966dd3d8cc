#pragma once

#include <cstdint>
#include <vector>

#include "molf/model/network.hpp"
#include "molf/optim/expert_state.hpp"
#include "molf/optim/routing.hpp"

namespace molf {

/// Three-phase sparse AdamW. Each module routes independently:
///   1. track moments of every expert from the full-batch gradient,
///   2. score every expert (EPD or PFN),
///   3. apply the AdamW step to the top-k experts only.
/// In dense mode every expert is stepped, and EPD scores are still recorded.
class SparseAdamW {
public:
    SparseAdamW(const Network& net, OptimizerConfig cfg);

    /// One optimizer step. `lr_multiplier` is the schedule value applied to
    /// each expert's class base rate. Returns one decision per module.
    std::vector<RoutingDecision> step(Network& net, const NetworkGrads& grads,
                                      double lr_multiplier);

    [[nodiscard]] const OptimizerConfig& config() const { return cfg_; }
    [[nodiscard]] const std::vector<std::vector<ExpertState>>& states() const { return states_; }
    [[nodiscard]] std::vector<std::vector<ExpertState>>& states() { return states_; }
    [[nodiscard]] std::uint64_t steps_taken() const { return steps_; }
    void set_steps_taken(std::uint64_t steps) { steps_ = steps; }

private:
    OptimizerConfig cfg_;
    std::vector<std::vector<ExpertState>> states_;
    std::uint64_t steps_ = 0;
};

} // namespace molf
