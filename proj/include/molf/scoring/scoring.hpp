#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "molf/optim/expert_state.hpp"

namespace molf {

struct ScoreRecord {
    std::size_t expert_index = 0;
    double score = 0.0;
    std::size_t n_params = 0;
    double lr_used = 0.0;
};

/// Expected Preconditioned Descent: (lr / N) * sum over every parameter entry
/// of m^2 / (sqrt(v) + eps). Uses the raw (not bias-corrected) moments.
double epd_score(const ExpertState& state, double lr, double eps);

/// Preconditioned Frobenius Norm: sqrt(sum (m / (sqrt(v) + eps))^2) / sqrt(N).
double pfn_score(const ExpertState& state, double eps);

/// First-order loss decrease predicted for the expert's step: lr * sum m^2 / (sqrt(v) + eps).
double predicted_loss_drop(const ExpertState& state, double lr, double eps);

/// Indices of the k highest scores, highest first; equal scores go to the lower index.
std::vector<std::size_t> select_winners(std::span<const ScoreRecord> scores, int k);

} // namespace molf
