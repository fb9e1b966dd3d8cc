#include "molf/model/network.hpp"

#include <algorithm>
#include <iostream>

#include "molf/errors.hpp"

namespace molf {

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& m : modules) n += m.parameter_count();
    return n;
}

Network build_mlp(std::span<const std::size_t> layer_dims,
                  std::span<const std::vector<ExpertSpec>> expert_specs, AdapterMode mode,
                  Rng& rng, const MlpOptions& options) {
    if (layer_dims.size() < 2) {
        throw ContractError("build_mlp: need at least an input and an output dimension");
    }
    if (std::any_of(layer_dims.begin(), layer_dims.end(), [](std::size_t d) { return d == 0; })) {
        throw ContractError("build_mlp: layer dimensions must be positive");
    }
    const std::size_t layers = layer_dims.size() - 1;
    if (expert_specs.size() != 1 && expert_specs.size() != layers) {
        throw ContractError("build_mlp: expected 1 or " + std::to_string(layers) +
                            " expert specs, got " + std::to_string(expert_specs.size()));
    }

    Network net;
    net.mode = mode;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t d_in = layer_dims[l], d_out = layer_dims[l + 1];
        MoLFModule m;
        m.name = "layer" + std::to_string(l);
        m.weight = rng.gaussian_matrix(d_out, d_in, 1.0 / std::sqrt(static_cast<double>(d_in)));
        if (options.bias) m.bias = Matrix(d_out, 1);
        m.dropout_rate = options.dropout;
        m.base_trainable = mode == AdapterMode::molf;

        const auto& specs = expert_specs.size() == 1 ? expert_specs[0] : expert_specs[l];
        for (const auto& spec : specs) {
            if (spec.rank == 0) throw ContractError("build_mlp: LoRA rank must be positive");
            if (spec.rank > std::min(d_in, d_out)) {
                std::string w = m.name + ": rank " + std::to_string(spec.rank) +
                                " exceeds min(d_out, d_in) = " +
                                std::to_string(std::min(d_in, d_out)) +
                                "; extra capacity is redundant";
                std::clog << "warning: " << w << '\n';
                net.warnings.push_back(std::move(w));
            }
            LoRAExpert e;
            e.rank = spec.rank;
            e.alpha = spec.alpha;
            m.experts.push_back(std::move(e));
        }
        init_experts(m, rng, options.a_std);
        m.validate();
        net.modules.push_back(std::move(m));
    }
    return net;
}

Matrix network_forward(const Network& net, const Matrix& x, bool training, Rng& rng) {
    Matrix h = x;
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        h = molf_forward(net.modules[l], h, training, rng);
        if (l + 1 < net.modules.size()) {
            for (auto& v : h.data()) v = v > 0.0 ? v : 0.0;
        }
    }
    return h;
}

NetworkTape record_network(const Network& net, const Matrix& x, bool training, Rng& rng) {
    NetworkTape tape;
    tape.input = tape.graph.leaf(x);
    NodeId h = tape.input;
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        const auto& m = net.modules[l];
        tape.leaves.push_back(register_leaves(tape.graph, m));
        h = record_forward(tape.graph, m, tape.leaves.back(), h, training, rng);
        if (l + 1 < net.modules.size()) h = tape.graph.relu(h);
    }
    tape.output = h;
    return tape;
}

NetworkGrads expert_gradients(const Network& net, const NetworkTape& tape, NodeId loss) {
    // One backward sweep over every trainable leaf, then regroup per expert.
    std::vector<NodeId> requested;
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        const auto& m = net.modules[l];
        const auto& lv = tape.leaves[l];
        if (m.base_trainable) {
            requested.push_back(lv.weight);
            if (lv.bias) requested.push_back(*lv.bias);
        }
        for (std::size_t i = 0; i < m.experts.size(); ++i) {
            requested.push_back(lv.a[i]);
            requested.push_back(lv.b[i]);
        }
    }
    std::vector<Matrix> flat = tape.graph.backward(loss, requested);

    NetworkGrads grads(net.modules.size());
    std::size_t k = 0;
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        const auto& m = net.modules[l];
        auto& mg = grads[l];
        if (m.base_trainable) {
            ExpertGrads fft{std::move(flat[k++])};
            if (m.bias) fft.push_back(std::move(flat[k++]));
            mg.push_back(std::move(fft));
        }
        for (std::size_t i = 0; i < m.experts.size(); ++i) {
            ExpertGrads lora;
            lora.push_back(std::move(flat[k++]));
            lora.push_back(std::move(flat[k++]));
            mg.push_back(std::move(lora));
        }
    }
    return grads;
}

} // namespace molf
