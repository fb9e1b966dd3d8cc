#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace molf {

// Independent numerical checks shared by `molf check` and the acceptance suite.

enum class GradOp { matmul, add, add_bias, scale, relu, dropout, mse, softmax_cross_entropy };

std::span<const GradOp> all_grad_ops();
std::string_view to_string(GradOp op);

/// Worst relative error between reverse-mode and central-difference
/// gradients (h = 1e-5) over every input of one primitive, random inputs from `seed`.
double op_gradient_error(GradOp op, std::uint64_t seed);

/// Same for every expert parameter of a two-layer MoLF MLP with bias and dropout.
double mlp_gradient_error(std::uint64_t seed);

/// How the parameter moves on each step of the EPD fidelity probe.
enum class EpdStep {
    optimizer,      // the full bias-corrected AdamW step the optimizer takes
    preconditioned, // theta -= lr * m / (sqrt(v) + eps), the step the score linearises
};

/// Mean over steps warmup+1 .. warmup+measured of |measured - predicted| / measured on
/// L = 1/2 ||theta - theta*||^2 with 20 parameters, no weight decay, constant rate.
double epd_fidelity_error(EpdStep step, double lr = 1e-3, std::size_t warmup = 50,
                          std::size_t measured = 100);

/// Largest verify_fusion deviation for a module with the given LoRA ranks (random B).
double fusion_deviation(std::span<const std::size_t> ranks, std::size_t probes, std::uint64_t seed);

/// Two experts fed a fixed gradient stream where expert 1 always loses; true when
/// expert 1 never won, its weights are untouched and its (m, v, t) equal a plain EMA replay bitwise.
bool loser_moments_match_replay(std::size_t steps, std::uint64_t seed);

/// Single-expert module trained by SparseAdamW against a hand-written AdamW loop;
/// true when the weights agree bitwise after every step.
bool single_expert_matches_adamw(std::size_t steps, std::uint64_t seed);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

std::vector<CheckResult> run_self_checks();

} // namespace molf
