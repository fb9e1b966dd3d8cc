#include "molf/scoring/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "molf/errors.hpp"

namespace molf {

namespace {

// sum over entries of m^2 / (sqrt(v) + eps); an entry whose m is exactly zero
// contributes nothing (keeps 0/0 out when eps = 0).
double preconditioned_mass(const ExpertState& state, double eps) {
    double total = 0.0;
    for (std::size_t p = 0; p < state.m.size(); ++p) {
        auto m = state.m[p].data();
        auto v = state.v[p].data();
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i] == 0.0) continue;
            total += (m[i] * m[i]) / (std::sqrt(v[i]) + eps);
        }
    }
    return total;
}

} // namespace

double epd_score(const ExpertState& state, double lr, double eps) {
    return lr / static_cast<double>(state.n_params) * preconditioned_mass(state, eps);
}

double pfn_score(const ExpertState& state, double eps) {
    double total = 0.0;
    for (std::size_t p = 0; p < state.m.size(); ++p) {
        auto m = state.m[p].data();
        auto v = state.v[p].data();
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i] == 0.0) continue;
            const double u = m[i] / (std::sqrt(v[i]) + eps);
            total += u * u;
        }
    }
    return std::sqrt(total) / std::sqrt(static_cast<double>(state.n_params));
}

double predicted_loss_drop(const ExpertState& state, double lr, double eps) {
    return lr * preconditioned_mass(state, eps);
}

std::vector<std::size_t> select_winners(std::span<const ScoreRecord> scores, int k) {
    if (k <= 0) throw ContractError("select_winners: k must be positive, got " + std::to_string(k));
    if (static_cast<std::size_t>(k) > scores.size()) {
        throw ContractError("select_winners: k = " + std::to_string(k) + " exceeds " +
                            std::to_string(scores.size()) + " candidates");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].score != scores[b].score) return scores[a].score > scores[b].score;
        return scores[a].expert_index < scores[b].expert_index;
    });
    std::vector<std::size_t> winners;
    winners.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) winners.push_back(scores[order[static_cast<std::size_t>(i)]].expert_index);
    return winners;
}

} // namespace molf
