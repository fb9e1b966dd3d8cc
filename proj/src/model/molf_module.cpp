#include "molf/model/molf_module.hpp"

#include "molf/errors.hpp"

namespace molf {

namespace {

Matrix draw_dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Matrix mask(rows, cols, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

bool dropout_active(const MoLFModule& module, bool training) {
    return training && module.dropout_rate > 0.0 && !module.experts.empty();
}

} // namespace

ExpertClass MoLFModule::expert_class(std::size_t routable) const {
    if (routable >= routable_count()) {
        throw ContractError(name + ": expert index " + std::to_string(routable) +
                            " out of range (" + std::to_string(routable_count()) + " experts)");
    }
    return base_trainable && routable == 0 ? ExpertClass::fft : ExpertClass::lora;
}

std::size_t MoLFModule::lora_index(std::size_t routable) const {
    if (expert_class(routable) != ExpertClass::lora) {
        throw ContractError(name + ": expert 0 is the FFT pathway, not a LoRA expert");
    }
    return base_trainable ? routable - 1 : routable;
}

std::vector<std::reference_wrapper<Matrix>> MoLFModule::expert_parameters(std::size_t routable) {
    if (expert_class(routable) == ExpertClass::fft) {
        std::vector<std::reference_wrapper<Matrix>> params{std::ref(weight)};
        if (bias) params.emplace_back(*bias);
        return params;
    }
    auto& e = experts[lora_index(routable)];
    return {std::ref(e.a), std::ref(e.b)};
}

std::vector<std::reference_wrapper<const Matrix>> MoLFModule::expert_parameters(
    std::size_t routable) const {
    if (expert_class(routable) == ExpertClass::fft) {
        std::vector<std::reference_wrapper<const Matrix>> params{std::cref(weight)};
        if (bias) params.emplace_back(*bias);
        return params;
    }
    const auto& e = experts[lora_index(routable)];
    return {std::cref(e.a), std::cref(e.b)};
}

std::vector<std::string> MoLFModule::expert_parameter_names(std::size_t routable) const {
    if (expert_class(routable) == ExpertClass::fft) {
        std::vector<std::string> names{name + ".weight"};
        if (bias) names.push_back(name + ".bias");
        return names;
    }
    const std::string prefix = name + ".lora" + std::to_string(lora_index(routable));
    return {prefix + ".A", prefix + ".B"};
}

std::size_t MoLFModule::parameter_count() const {
    std::size_t n = weight.size() + (bias ? bias->size() : 0);
    for (const auto& e : experts) n += e.parameter_count();
    return n;
}

void MoLFModule::validate() const {
    if (weight.empty()) throw ContractError(name + ": base weight is empty");
    if (bias && (bias->rows() != d_out() || bias->cols() != 1)) {
        throw DimensionError(name + ": bias " + bias->shape_string() + " does not match d_out " +
                             std::to_string(d_out()));
    }
    if (!base_trainable && experts.empty()) {
        throw ContractError(name + ": a frozen-base module needs at least one LoRA expert");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ContractError(name + ": dropout rate must lie in [0, 1)");
    }
    for (std::size_t i = 0; i < experts.size(); ++i) {
        const auto& e = experts[i];
        if (e.rank == 0) throw ContractError(name + ": LoRA expert rank must be positive");
        if (!(e.alpha > 0.0)) throw ContractError(name + ": LoRA alpha must be positive");
        if (e.a.rows() != e.rank || e.a.cols() != d_in() || e.b.rows() != d_out() ||
            e.b.cols() != e.rank) {
            throw DimensionError(name + ": expert " + std::to_string(i) + " has A " +
                                 e.a.shape_string() + ", B " + e.b.shape_string() +
                                 " for rank " + std::to_string(e.rank) + " and weight " +
                                 weight.shape_string());
        }
    }
}

Matrix molf_forward(const MoLFModule& module, const Matrix& x, bool training, Rng& rng) {
    if (x.rows() != module.d_in()) {
        throw DimensionError(module.name + ": input " + x.shape_string() +
                             " does not match d_in " + std::to_string(module.d_in()));
    }
    Matrix y = matmul(module.weight, x);
    if (module.bias) y = add_bias(y, *module.bias);
    if (module.experts.empty()) return y;

    Matrix dropped = x;
    if (dropout_active(module, training)) {
        dropped = hadamard(x, draw_dropout_mask(x.rows(), x.cols(), module.dropout_rate, rng));
    }
    for (const auto& e : module.experts) {
        y = add(y, scale(matmul(e.b, matmul(e.a, dropped)), e.scale()));
    }
    return y;
}

void init_experts(MoLFModule& module, Rng& rng, double a_std) {
    const double stddev = a_std / std::sqrt(static_cast<double>(module.d_in()));
    for (auto& e : module.experts) {
        e.a = rng.gaussian_matrix(e.rank, module.d_in(), stddev);
        e.b = Matrix(module.d_out(), e.rank);
    }
}

ModuleLeaves register_leaves(Graph& graph, const MoLFModule& module) {
    ModuleLeaves leaves;
    leaves.weight = graph.leaf(module.weight);
    if (module.bias) leaves.bias = graph.leaf(*module.bias);
    for (const auto& e : module.experts) {
        leaves.a.push_back(graph.leaf(e.a));
        leaves.b.push_back(graph.leaf(e.b));
    }
    return leaves;
}

NodeId record_forward(Graph& graph, const MoLFModule& module, const ModuleLeaves& leaves,
                      NodeId x, bool training, Rng& rng) {
    const Matrix& xv = graph.value(x);
    if (xv.rows() != module.d_in()) {
        throw DimensionError(module.name + ": input " + xv.shape_string() +
                             " does not match d_in " + std::to_string(module.d_in()));
    }
    NodeId y = graph.matmul(leaves.weight, x);
    if (leaves.bias) y = graph.add_bias(y, *leaves.bias);
    if (module.experts.empty()) return y;

    NodeId dropped = x;
    if (dropout_active(module, training)) {
        dropped = graph.dropout_with_mask(
            x, draw_dropout_mask(xv.rows(), xv.cols(), module.dropout_rate, rng));
    }
    for (std::size_t i = 0; i < module.experts.size(); ++i) {
        NodeId low = graph.matmul(leaves.b[i], graph.matmul(leaves.a[i], dropped));
        y = graph.add(y, graph.scale(low, module.experts[i].scale()));
    }
    return y;
}

} // namespace molf
