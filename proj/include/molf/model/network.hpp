#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "molf/model/molf_module.hpp"

namespace molf {

enum class AdapterMode {
    molf,   // base weight is the FFT expert
    molf_e, // base weight and biases frozen, routing among LoRA experts only
};

struct ExpertSpec {
    std::size_t rank = 8;
    double alpha = 16.0;
};

struct MlpOptions {
    bool bias = false;
    double dropout = 0.0;
    double a_std = 1.0;
};

/// Stack of MoLF modules with ReLU between consecutive layers; the last layer is linear.
struct Network {
    std::vector<MoLFModule> modules;
    AdapterMode mode = AdapterMode::molf;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t parameter_count() const;
};

/// `expert_specs` holds either one entry per layer or a single entry applied to every layer.
Network build_mlp(std::span<const std::size_t> layer_dims,
                  std::span<const std::vector<ExpertSpec>> expert_specs, AdapterMode mode,
                  Rng& rng, const MlpOptions& options = {});

/// Inference forward through the whole stack.
Matrix network_forward(const Network& net, const Matrix& x, bool training, Rng& rng);

/// Gradients per module, per routable expert, per parameter.
using ExpertGrads = std::vector<Matrix>;
using ModuleGrads = std::vector<ExpertGrads>;
using NetworkGrads = std::vector<ModuleGrads>;

/// A recorded forward pass: the tape plus the leaves needed to pull gradients back out.
struct NetworkTape {
    Graph graph;
    std::vector<ModuleLeaves> leaves;
    NodeId input;
    NodeId output;
};

NetworkTape record_network(const Network& net, const Matrix& x, bool training, Rng& rng);

/// Full-batch gradients of `loss` for every routable expert of every module.
NetworkGrads expert_gradients(const Network& net, const NetworkTape& tape, NodeId loss);

} // namespace molf
