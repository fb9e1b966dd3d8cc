#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "molf/numerics/graph.hpp"
#include "molf/numerics/matrix.hpp"
#include "molf/numerics/rng.hpp"

namespace molf {

/// One low-rank pathway: the product B A, applied with RS-LoRA scale alpha / sqrt(rank).
struct LoRAExpert {
    std::size_t rank = 0;
    double alpha = 16.0;
    Matrix a;  // rank x d_in
    Matrix b;  // d_out x rank

    [[nodiscard]] double scale() const { return alpha / std::sqrt(static_cast<double>(rank)); }
    [[nodiscard]] std::size_t parameter_count() const { return a.size() + b.size(); }
};

enum class ExpertClass { fft, lora };

/// A linear projection whose output superposes the base weight and every
/// LoRA expert, ungated:
///
///   y = W x + bias + sum_i (alpha_i / sqrt(r_i)) B_i (A_i dropout(x))
///
/// Inputs are column batches (d_in x batch). When the base weight is
/// trainable it is routable expert 0 (bias bundled with it) and LoRA expert j
/// is routable expert j + 1; otherwise LoRA expert j is routable expert j.
struct MoLFModule {
    std::string name;
    Matrix weight;              // d_out x d_in
    std::optional<Matrix> bias; // d_out x 1
    std::vector<LoRAExpert> experts;
    double dropout_rate = 0.0;
    bool base_trainable = true;

    [[nodiscard]] std::size_t d_in() const { return weight.cols(); }
    [[nodiscard]] std::size_t d_out() const { return weight.rows(); }

    [[nodiscard]] std::size_t routable_count() const {
        return experts.size() + (base_trainable ? 1 : 0);
    }
    [[nodiscard]] ExpertClass expert_class(std::size_t routable) const;
    /// Index into `experts` for a routable LoRA expert.
    [[nodiscard]] std::size_t lora_index(std::size_t routable) const;

    /// Parameters the optimizer updates for one routable expert:
    /// {weight, bias?} for the FFT pathway, {A, B} for a LoRA pathway.
    [[nodiscard]] std::vector<std::reference_wrapper<Matrix>> expert_parameters(std::size_t routable);
    [[nodiscard]] std::vector<std::reference_wrapper<const Matrix>> expert_parameters(
        std::size_t routable) const;
    [[nodiscard]] std::vector<std::string> expert_parameter_names(std::size_t routable) const;

    [[nodiscard]] std::size_t parameter_count() const;

    /// Throws DimensionError / ContractError when any invariant is broken.
    void validate() const;
};

/// Ungated superposed forward pass. Dropout (one mask shared by all LoRA
/// pathways of the module) is drawn from `rng` only when `training` is set.
Matrix molf_forward(const MoLFModule& module, const Matrix& x, bool training, Rng& rng);

/// Draws every A_i ~ N(0, a_std^2 / d_in) and zeroes every B_i.
void init_experts(MoLFModule& module, Rng& rng, double a_std = 1.0);

/// Graph leaves for one module, in the order the optimizer expects gradients.
struct ModuleLeaves {
    NodeId weight;
    std::optional<NodeId> bias;
    std::vector<NodeId> a;
    std::vector<NodeId> b;
};

ModuleLeaves register_leaves(Graph& graph, const MoLFModule& module);

/// Same arithmetic as molf_forward, recorded on a tape.
NodeId record_forward(Graph& graph, const MoLFModule& module, const ModuleLeaves& leaves,
                      NodeId x, bool training, Rng& rng);

} // namespace molf
