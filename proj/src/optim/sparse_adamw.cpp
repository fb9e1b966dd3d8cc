#include "molf/optim/sparse_adamw.hpp"

#include <cmath>
#include <numeric>

#include "molf/errors.hpp"
#include "molf/scoring/scoring.hpp"

namespace molf {

namespace {

ExpertGrads clipped(const ExpertGrads& grads, double max_norm) {
    double norm_sq = 0.0;
    for (const auto& g : grads) norm_sq += frobenius_norm_sq(g);
    const double norm = std::sqrt(norm_sq);
    if (norm <= max_norm) return grads;
    ExpertGrads out;
    out.reserve(grads.size());
    for (const auto& g : grads) out.push_back(scale(g, max_norm / norm));
    return out;
}

} // namespace

SparseAdamW::SparseAdamW(const Network& net, OptimizerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    states_.resize(net.modules.size());
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        const auto& m = net.modules[l];
        const std::size_t n = m.routable_count();
        if (n == 0) throw ContractError(m.name + ": module has no trainable expert");
        if (cfg_.scoring != ScoringMode::dense && cfg_.k_top > n) {
            throw ContractError(m.name + ": k_top " + std::to_string(cfg_.k_top) + " exceeds " +
                                std::to_string(n) + " experts");
        }
        for (std::size_t e = 0; e < n; ++e) states_[l].push_back(make_expert_state(m, e, cfg_));
    }
}

std::vector<RoutingDecision> SparseAdamW::step(Network& net, const NetworkGrads& grads,
                                               double lr_multiplier) {
    if (grads.size() != net.modules.size() || states_.size() != net.modules.size()) {
        throw DimensionError("SparseAdamW::step: gradient/module count mismatch");
    }
    // Validate everything first so a bad gradient leaves no partial step behind.
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        const MoLFModule& module = net.modules[l];
        const auto& states = states_[l];
        if (grads[l].size() != states.size()) {
            throw DimensionError(module.name + ": expected gradients for " +
                                 std::to_string(states.size()) + " experts, got " +
                                 std::to_string(grads[l].size()));
        }
        for (std::size_t e = 0; e < states.size(); ++e) {
            const auto& g = grads[l][e];
            if (g.size() != states[e].m.size()) {
                throw DimensionError(module.name + ": expert " + std::to_string(e) + " expects " +
                                     std::to_string(states[e].m.size()) + " gradients, got " +
                                     std::to_string(g.size()));
            }
            for (std::size_t p = 0; p < g.size(); ++p) {
                const std::string& where = states[e].param_names[p];
                if (!g[p].same_shape(states[e].m[p])) {
                    throw DimensionError(where + ": gradient " + g[p].shape_string() +
                                         ", parameter " + states[e].m[p].shape_string());
                }
                if (!g[p].all_finite()) throw NumericError(where + ": non-finite gradient");
            }
        }
    }

    ++steps_;
    std::vector<RoutingDecision> decisions;
    decisions.reserve(net.modules.size());

    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        MoLFModule& module = net.modules[l];
        auto& states = states_[l];
        const std::size_t n = states.size();

        // Phase 1: every expert, winner or not.
        for (std::size_t e = 0; e < n; ++e) {
            if (cfg_.grad_clip > 0.0) {
                track_moments(states[e], clipped(grads[l][e], cfg_.grad_clip), cfg_);
            } else {
                track_moments(states[e], grads[l][e], cfg_);
            }
        }

        // Phase 2.
        std::vector<double> lr_now(n);
        std::vector<ScoreRecord> records(n);
        for (std::size_t e = 0; e < n; ++e) {
            lr_now[e] = states[e].lr_base * lr_multiplier;
            const double score = cfg_.scoring == ScoringMode::pfn
                                     ? pfn_score(states[e], cfg_.eps)
                                     : epd_score(states[e], lr_now[e], cfg_.eps);
            records[e] = ScoreRecord{e, score, states[e].n_params, lr_now[e]};
        }

        // Phase 3.
        const int k = cfg_.scoring == ScoringMode::dense ? static_cast<int>(n)
                                                         : static_cast<int>(cfg_.k_top);
        std::vector<std::size_t> winners = select_winners(records, k);
        apply_topk_update(module, states, winners, lr_now, cfg_);

        RoutingDecision d;
        d.step = steps_;
        d.module_name = module.name;
        d.scores.reserve(n);
        for (const auto& r : records) d.scores.push_back(r.score);
        d.winners = std::move(winners);
        d.lr_used = std::move(lr_now);
        d.scoring_mode = cfg_.scoring;
        decisions.push_back(std::move(d));
    }
    return decisions;
}

} // namespace molf
