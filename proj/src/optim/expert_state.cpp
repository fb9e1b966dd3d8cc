#include "molf/optim/expert_state.hpp"

#include <cmath>

#include "molf/errors.hpp"

namespace molf {

ExpertState make_expert_state(const MoLFModule& module, std::size_t routable,
                              const OptimizerConfig& cfg) {
    ExpertState s;
    s.expert_class = module.expert_class(routable);
    s.param_names = module.expert_parameter_names(routable);
    for (const Matrix& p : module.expert_parameters(routable)) {
        s.m.emplace_back(p.rows(), p.cols());
        s.v.emplace_back(p.rows(), p.cols());
        s.n_params += p.size();
    }
    const bool fft = s.expert_class == ExpertClass::fft;
    s.lr_base = fft ? cfg.lr_fft : cfg.lr_lora;
    s.weight_decay = fft ? cfg.lambda_fft : cfg.lambda_lora;
    return s;
}

void track_moments(ExpertState& state, std::span<const Matrix> grads, const OptimizerConfig& cfg) {
    if (grads.size() != state.m.size()) {
        throw DimensionError("track_moments: expected " + std::to_string(state.m.size()) +
                             " gradients, got " + std::to_string(grads.size()));
    }
    for (std::size_t p = 0; p < grads.size(); ++p) {
        if (!grads[p].same_shape(state.m[p])) {
            throw DimensionError("track_moments: gradient for " + state.param_names[p] + " is " +
                                 grads[p].shape_string() + ", parameter is " +
                                 state.m[p].shape_string());
        }
        if (!grads[p].all_finite()) {
            throw NumericError("track_moments: non-finite gradient for " + state.param_names[p]);
        }
    }
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    for (std::size_t p = 0; p < grads.size(); ++p) {
        auto m = state.m[p].data();
        auto v = state.v[p].data();
        auto g = grads[p].data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
        }
    }
    ++state.t;
}

void adamw_update(std::span<const std::reference_wrapper<Matrix>> params, const ExpertState& state,
                  double lr, const OptimizerConfig& cfg) {
    if (state.t == 0) {
        throw ContractError("adamw_update: moments must be tracked before the first update");
    }
    const double t = static_cast<double>(state.t);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);
    const double decay = 1.0 - lr * state.weight_decay;
    const double step_size = lr / bias1;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto theta = params[p].get().data();
        auto m = state.m[p].data();
        auto v = state.v[p].data();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta[i] = theta[i] * decay - step_size * (m[i] / (std::sqrt(v[i] / bias2) + cfg.eps));
        }
    }
}

void apply_topk_update(MoLFModule& module, std::span<const ExpertState> states,
                       std::span<const std::size_t> winners, std::span<const double> lr_now,
                       const OptimizerConfig& cfg) {
    const std::size_t n = module.routable_count();
    if (states.size() != n || lr_now.size() != n) {
        throw ContractError(module.name + ": state/rate count does not match " +
                            std::to_string(n) + " experts");
    }
    for (std::size_t w : winners) {
        if (w >= n) {
            throw ContractError(module.name + ": winner index " + std::to_string(w) +
                                " out of range");
        }
    }
    for (std::size_t w : winners) {
        auto params = module.expert_parameters(w);
        adamw_update(params, states[w], lr_now[w], cfg);
    }
}

} // namespace molf
