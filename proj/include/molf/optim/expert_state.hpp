#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "molf/model/molf_module.hpp"
#include "molf/optim/config.hpp"

namespace molf {

/// AdamW state of one routable expert. Moments are tracked every step for
/// every expert, whether or not it wins the update.
struct ExpertState {
    ExpertClass expert_class = ExpertClass::lora;
    std::vector<std::string> param_names;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::uint64_t t = 0;
    std::size_t n_params = 0;
    double lr_base = 0.0;
    double weight_decay = 0.0;
};

/// Zero moments shaped like the expert's parameters; rate and decay from its class.
ExpertState make_expert_state(const MoLFModule& module, std::size_t routable,
                              const OptimizerConfig& cfg);

/// Phase 1: m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2, t <- t + 1.
/// Parameters are not touched. Throws NumericError naming the parameter on a
/// non-finite gradient, DimensionError on a shape mismatch.
void track_moments(ExpertState& state, std::span<const Matrix> grads, const OptimizerConfig& cfg);

/// Decoupled-weight-decay AdamW step with bias correction at the state's t.
void adamw_update(std::span<const std::reference_wrapper<Matrix>> params, const ExpertState& state,
                  double lr, const OptimizerConfig& cfg);

/// Phase 3: AdamW step for each winner, losers left bitwise unchanged.
/// `lr_now[i]` is the current rate of routable expert i.
void apply_topk_update(MoLFModule& module, std::span<const ExpertState> states,
                       std::span<const std::size_t> winners, std::span<const double> lr_now,
                       const OptimizerConfig& cfg);

} // namespace molf
