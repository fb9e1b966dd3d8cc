#pragma once

#include <cstddef>

#include "molf/model/network.hpp"

namespace molf {

/// W_base + sum_i (alpha_i / sqrt(r_i)) B_i A_i. The module is not modified.
Matrix fuse(const MoLFModule& module);

/// Rewrites the module in place as a plain linear layer holding the fused
/// weight; its LoRA experts are dropped.
void collapse(MoLFModule& module);

/// Copy of the network with every module collapsed. Same structure and
/// parameter count as the base network.
Network fuse_network(const Network& net);

struct FusionReport {
    std::size_t probes = 0;
    double max_relative_deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Compares the superposed forward against W_final x + bias on `probes`
/// random Gaussian inputs. Only meaningful in inference mode, so
/// `training = true` is rejected with ContractError.
FusionReport verify_fusion(const MoLFModule& module, std::size_t probes, Rng& rng, double tol,
                           bool training = false);

} // namespace molf
