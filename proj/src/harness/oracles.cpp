#include "molf/harness/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>

#include "molf/errors.hpp"
#include "molf/fusion/fusion.hpp"
#include "molf/harness/schedule.hpp"
#include "molf/model/network.hpp"
#include "molf/numerics/finite_diff.hpp"
#include "molf/optim/sparse_adamw.hpp"
#include "molf/scoring/scoring.hpp"

namespace molf {

namespace {

constexpr double kFdStep = 1e-5;

constexpr std::array<GradOp, 8> kOps{GradOp::matmul, GradOp::add,  GradOp::add_bias,
                                     GradOp::scale,  GradOp::relu, GradOp::dropout,
                                     GradOp::mse,    GradOp::softmax_cross_entropy};

// Builds a scalar loss from the given input leaves.
using LossBuilder = std::function<NodeId(Graph&, std::span<const NodeId>)>;

double max_gradient_error(const std::vector<Matrix>& inputs, const LossBuilder& build) {
    Graph g;
    std::vector<NodeId> leaves;
    for (const auto& x : inputs) leaves.push_back(g.leaf(x));
    const NodeId loss = build(g, leaves);
    const std::vector<Matrix> analytic = g.backward(loss, leaves);

    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto f = [&](const Matrix& probe) {
            Graph h;
            std::vector<NodeId> ls;
            for (std::size_t j = 0; j < inputs.size(); ++j) ls.push_back(h.leaf(j == k ? probe : inputs[j]));
            return h.value(build(h, ls))[0];
        };
        worst = std::max(worst, relative_error(analytic[k], finite_diff_grad(f, inputs[k], kFdStep)));
    }
    return worst;
}

// Pseudo-loss that turns a matrix-valued op into a smooth scalar.
NodeId against(Graph& g, NodeId out, const Matrix& target) {
    return g.mse(out, g.leaf(target));
}

Network small_mlp(Rng& rng) {
    const std::array<std::size_t, 3> dims{4, 6, 3};
    const std::vector<std::vector<ExpertSpec>> experts{{{2, 16.0}, {3, 16.0}}};
    MlpOptions opts;
    opts.bias = true;
    opts.dropout = 0.2;
    Network net = build_mlp(dims, experts, AdapterMode::molf, rng, opts);
    // Zero-initialised B would leave dL/dA identically zero.
    for (auto& m : net.modules) {
        for (auto& e : m.experts) e.b = rng.gaussian_matrix(e.b.rows(), e.b.cols(), 0.1);
        if (m.bias) *m.bias = rng.gaussian_matrix(m.bias->rows(), 1, 0.5);
    }
    return net;
}

double regression_loss(const Network& net, const Matrix& x, const Matrix& y, const Rng& dropout) {
    Rng rng = dropout;
    NetworkTape tape = record_network(net, x, true, rng);
    const NodeId t = tape.graph.leaf(y);
    return tape.graph.value(tape.graph.mse(tape.output, t))[0];
}

std::string fmt(const char* format, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

} // namespace

std::span<const GradOp> all_grad_ops() { return kOps; }

std::string_view to_string(GradOp op) {
    switch (op) {
    case GradOp::matmul: return "matmul";
    case GradOp::add: return "add";
    case GradOp::add_bias: return "add_bias";
    case GradOp::scale: return "scale";
    case GradOp::relu: return "relu";
    case GradOp::dropout: return "dropout";
    case GradOp::mse: return "mse";
    case GradOp::softmax_cross_entropy: return "softmax_cross_entropy";
    }
    return "?";
}

double op_gradient_error(GradOp op, std::uint64_t seed) {
    Rng rng(seed);
    const auto gm = [&](std::size_t r, std::size_t c) { return rng.gaussian_matrix(r, c); };
    switch (op) {
    case GradOp::matmul: {
        const Matrix t = gm(3, 2);
        return max_gradient_error({gm(3, 4), gm(4, 2)}, [&](Graph& g, std::span<const NodeId> l) {
            return against(g, g.matmul(l[0], l[1]), t);
        });
    }
    case GradOp::add: {
        const Matrix t = gm(3, 2);
        return max_gradient_error({gm(3, 2), gm(3, 2)}, [&](Graph& g, std::span<const NodeId> l) {
            return against(g, g.add(l[0], l[1]), t);
        });
    }
    case GradOp::add_bias: {
        const Matrix t = gm(3, 4);
        return max_gradient_error({gm(3, 4), gm(3, 1)}, [&](Graph& g, std::span<const NodeId> l) {
            return against(g, g.add_bias(l[0], l[1]), t);
        });
    }
    case GradOp::scale: {
        const Matrix t = gm(3, 4);
        const double c = rng.gaussian(0.0, 2.0);
        return max_gradient_error({gm(3, 4)}, [&](Graph& g, std::span<const NodeId> l) {
            return against(g, g.scale(l[0], c), t);
        });
    }
    case GradOp::relu: {
        const Matrix t = gm(3, 4);
        return max_gradient_error({gm(3, 4)}, [&](Graph& g, std::span<const NodeId> l) {
            return against(g, g.relu(l[0]), t);
        });
    }
    case GradOp::dropout: {
        const Matrix t = gm(3, 4);
        const Rng mask_rng = rng.fork(7);
        return max_gradient_error({gm(3, 4)}, [&](Graph& g, std::span<const NodeId> l) {
            Rng r = mask_rng; // same mask on every evaluation
            return against(g, g.dropout(l[0], 0.3, r), t);
        });
    }
    case GradOp::mse:
        return max_gradient_error({gm(3, 4), gm(3, 4)}, [&](Graph& g, std::span<const NodeId> l) {
            return g.mse(l[0], l[1]);
        });
    case GradOp::softmax_cross_entropy: {
        std::vector<std::size_t> labels(5);
        for (auto& y : labels) y = rng.next_u64() % 4;
        return max_gradient_error({gm(4, 5)}, [&](Graph& g, std::span<const NodeId> l) {
            return g.softmax_cross_entropy(l[0], labels);
        });
    }
    }
    throw ContractError("op_gradient_error: unknown op");
}

double mlp_gradient_error(std::uint64_t seed) {
    Rng rng(seed);
    const Network net = small_mlp(rng);
    const Matrix x = rng.gaussian_matrix(4, 5);
    const Matrix y = rng.gaussian_matrix(3, 5);
    const Rng dropout = rng.fork(11);

    Rng tape_rng = dropout;
    NetworkTape tape = record_network(net, x, true, tape_rng);
    const NodeId t = tape.graph.leaf(y);
    const NodeId loss = tape.graph.mse(tape.output, t);
    const NetworkGrads grads = expert_gradients(net, tape, loss);

    double worst = 0.0;
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        for (std::size_t e = 0; e < net.modules[l].routable_count(); ++e) {
            const auto params = net.modules[l].expert_parameters(e);
            for (std::size_t p = 0; p < params.size(); ++p) {
                const auto f = [&](const Matrix& probe) {
                    Network copy = net;
                    copy.modules[l].expert_parameters(e)[p].get() = probe;
                    return regression_loss(copy, x, y, dropout);
                };
                const Matrix numeric = finite_diff_grad(f, params[p].get(), kFdStep);
                worst = std::max(worst, relative_error(grads[l][e][p], numeric));
            }
        }
    }
    return worst;
}

double epd_fidelity_error(EpdStep step, double lr, std::size_t warmup, std::size_t measured) {
    Rng rng(2024);
    MoLFModule module;
    module.name = "q";
    module.weight = rng.gaussian_matrix(4, 5);
    const Matrix target = rng.gaussian_matrix(4, 5);

    Network net;
    net.modules.push_back(module);

    OptimizerConfig cfg;
    cfg.lr_fft = lr;
    cfg.lambda_fft = 0.0;
    cfg.k_top = 1;
    SparseAdamW opt(net, cfg);

    const auto loss = [&](const Matrix& w) { return 0.5 * frobenius_norm_sq(subtract(w, target)); };

    double total = 0.0;
    for (std::size_t t = 1; t <= warmup + measured; ++t) {
        Matrix& w = net.modules[0].weight;
        const NetworkGrads grads{{{subtract(w, target)}}};
        const double before = loss(w);
        double predicted = 0.0;
        if (step == EpdStep::optimizer) {
            const auto decisions = opt.step(net, grads, 1.0);
            // The recorded EPD score is lr/N times the predicted drop.
            predicted = decisions[0].scores[0] * static_cast<double>(w.size());
        } else {
            ExpertState& state = opt.states()[0][0];
            track_moments(state, grads[0][0], cfg);
            predicted = predicted_loss_drop(state, lr, cfg.eps);
            auto theta = w.data();
            auto m = state.m[0].data();
            auto v = state.v[0].data();
            for (std::size_t i = 0; i < theta.size(); ++i) {
                theta[i] -= lr * m[i] / (std::sqrt(v[i]) + cfg.eps);
            }
        }
        const double drop = before - loss(w);
        if (t > warmup) total += std::abs(drop - predicted) / drop;
    }
    return total / static_cast<double>(measured);
}

double fusion_deviation(std::span<const std::size_t> ranks, std::size_t probes, std::uint64_t seed) {
    Rng rng(seed);
    MoLFModule module;
    module.name = "fuse";
    const std::size_t d_in = 32, d_out = 24;
    module.weight = rng.gaussian_matrix(d_out, d_in, 1.0 / std::sqrt(static_cast<double>(d_in)));
    module.bias = rng.gaussian_matrix(d_out, 1);
    for (std::size_t r : ranks) {
        LoRAExpert e;
        e.rank = r;
        module.experts.push_back(e);
    }
    init_experts(module, rng);
    for (auto& e : module.experts) e.b = rng.gaussian_matrix(d_out, e.rank, 0.05);
    return verify_fusion(module, probes, rng, 1e-9).max_relative_deviation;
}

bool loser_moments_match_replay(std::size_t steps, std::uint64_t seed) {
    Rng rng(seed);
    MoLFModule module;
    module.name = "adv";
    module.weight = rng.gaussian_matrix(6, 5);
    module.base_trainable = false;
    for (std::size_t r : {2, 3}) {
        LoRAExpert e;
        e.rank = r;
        module.experts.push_back(e);
    }
    init_experts(module, rng);
    Network net;
    net.mode = AdapterMode::molf_e;
    net.modules.push_back(module);

    OptimizerConfig cfg;
    cfg.k_top = 1;
    SparseAdamW opt(net, cfg);
    const LoRAExpert frozen = net.modules[0].experts[1];

    std::vector<Matrix> m{Matrix(3, 5), Matrix(6, 3)};
    std::vector<Matrix> v = m;
    bool never_won = true;
    for (std::size_t t = 1; t <= steps; ++t) {
        // The loser's gradients are a thousand times weaker, so it never wins.
        ExpertGrads g0{rng.gaussian_matrix(2, 5), rng.gaussian_matrix(6, 2)};
        ExpertGrads g1{rng.gaussian_matrix(3, 5, 1e-3), rng.gaussian_matrix(6, 3, 1e-3)};
        for (std::size_t p = 0; p < 2; ++p) {
            for (std::size_t i = 0; i < g1[p].size(); ++i) {
                m[p][i] = cfg.beta1 * m[p][i] + (1.0 - cfg.beta1) * g1[p][i];
                v[p][i] = cfg.beta2 * v[p][i] + (1.0 - cfg.beta2) * (g1[p][i] * g1[p][i]);
            }
        }
        const NetworkGrads grads{{g0, g1}};
        const auto decisions = opt.step(net, grads, lr_at(cfg.schedule, t - 1));
        for (std::size_t w : decisions[0].winners) never_won = never_won && w != 1;
    }
    const ExpertState& s = opt.states()[0][1];
    const LoRAExpert& after = net.modules[0].experts[1];
    return never_won && s.t == steps && s.m[0].bitwise_equal(m[0]) && s.m[1].bitwise_equal(m[1]) &&
           s.v[0].bitwise_equal(v[0]) && s.v[1].bitwise_equal(v[1]) &&
           after.a.bitwise_equal(frozen.a) && after.b.bitwise_equal(frozen.b);
}

bool single_expert_matches_adamw(std::size_t steps, std::uint64_t seed) {
    Rng rng(seed);
    MoLFModule module;
    module.name = "solo";
    module.weight = rng.gaussian_matrix(5, 7, 0.4);
    module.bias = rng.gaussian_matrix(5, 1, 0.1);
    Network net;
    net.modules.push_back(module);
    const Matrix teacher = rng.gaussian_matrix(5, 7, 0.4);

    OptimizerConfig cfg;
    cfg.lr_fft = 1e-2;
    cfg.schedule.total_steps = steps;
    SparseAdamW opt(net, cfg);

    // Hand-written reference on its own copy of the parameters.
    Matrix w = module.weight;
    Matrix b = *module.bias;
    std::array<Matrix, 2> m{Matrix(5, 7), Matrix(5, 1)};
    std::array<Matrix, 2> v = m;

    const auto gradients = [&](const Matrix& weight, const Matrix& bias, const Matrix& x) {
        Network probe;
        probe.modules.push_back(module);
        probe.modules[0].weight = weight;
        probe.modules[0].bias = bias;
        Rng unused(0);
        NetworkTape tape = record_network(probe, x, true, unused);
        const NodeId y = tape.graph.leaf(matmul(teacher, x));
        const NodeId loss = tape.graph.mse(tape.output, y);
        return expert_gradients(probe, tape, loss);
    };

    for (std::size_t t = 1; t <= steps; ++t) {
        const Matrix x = rng.gaussian_matrix(7, 8);
        const double mult = lr_at(cfg.schedule, t - 1);
        opt.step(net, gradients(net.modules[0].weight, *net.modules[0].bias, x), mult);

        const NetworkGrads g = gradients(w, b, x);
        const double lr = cfg.lr_fft * mult;
        const double td = static_cast<double>(t);
        std::array<Matrix*, 2> theta{&w, &b};
        for (std::size_t p = 0; p < 2; ++p) {
            for (std::size_t i = 0; i < theta[p]->size(); ++i) {
                const double gi = g[0][0][p][i];
                m[p][i] = cfg.beta1 * m[p][i] + (1.0 - cfg.beta1) * gi;
                v[p][i] = cfg.beta2 * v[p][i] + (1.0 - cfg.beta2) * (gi * gi);
                (*theta[p])[i] = (*theta[p])[i] * (1.0 - lr * cfg.lambda_fft) -
                                 lr / (1.0 - std::pow(cfg.beta1, td)) *
                                     (m[p][i] / (std::sqrt(v[p][i] / (1.0 - std::pow(cfg.beta2, td))) +
                                                 cfg.eps));
            }
        }
        if (!w.bitwise_equal(net.modules[0].weight) || !b.bitwise_equal(*net.modules[0].bias)) {
            return false;
        }
    }
    return true;
}

std::vector<CheckResult> run_self_checks() {
    std::vector<CheckResult> out;
    for (GradOp op : all_grad_ops()) {
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) worst = std::max(worst, op_gradient_error(op, s));
        out.push_back({"gradient." + std::string(to_string(op)), worst <= 1e-4,
                       fmt("max rel err %.3g", worst)});
    }
    {
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 5; ++s) worst = std::max(worst, mlp_gradient_error(s));
        out.push_back({"gradient.molf_mlp", worst <= 1e-4, fmt("max rel err %.3g", worst)});
    }
    {
        const double err = epd_fidelity_error(EpdStep::preconditioned);
        out.push_back({"epd.first_order", err <= 0.10,
                       fmt("mean rel err %.3g vs preconditioned step", err)});
    }
    {
        double worst = 0.0;
        for (std::size_t r : {1, 8, 64}) {
            const std::array<std::size_t, 2> ranks{r, 2};
            worst = std::max(worst, fusion_deviation(ranks, 100, r));
        }
        out.push_back({"fusion.exact", worst <= 1e-9, fmt("max rel dev %.3g", worst)});
    }
    out.push_back({"moments.ema_replay", loser_moments_match_replay(200, 3), "bitwise"});
    out.push_back({"adamw.single_expert", single_expert_matches_adamw(100, 5), "bitwise"});
    return out;
}

} // namespace molf
