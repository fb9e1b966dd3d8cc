#include "molf/fusion/fusion.hpp"

#include <algorithm>

#include "molf/errors.hpp"

namespace molf {

Matrix fuse(const MoLFModule& module) {
    try {
        module.validate();
    } catch (const DimensionError& e) {
        throw ContractError(std::string("fuse: ") + e.what());
    }
    Matrix fused = module.weight;
    for (const auto& e : module.experts) {
        fused = add(fused, scale(matmul(e.b, e.a), e.scale()));
    }
    return fused;
}

void collapse(MoLFModule& module) {
    module.weight = fuse(module);
    module.experts.clear();
    module.base_trainable = true;
}

Network fuse_network(const Network& net) {
    Network out;
    out.mode = AdapterMode::molf;
    out.modules = net.modules;
    for (auto& m : out.modules) collapse(m);
    return out;
}

FusionReport verify_fusion(const MoLFModule& module, std::size_t probes, Rng& rng, double tol,
                           bool training) {
    if (training) {
        throw ContractError("verify_fusion: dropout makes the superposed forward stochastic; "
                            "fusion can only be checked in inference mode");
    }
    if (!(tol > 0.0)) throw ContractError("verify_fusion: tolerance must be positive");

    const Matrix fused = fuse(module);
    FusionReport report;
    report.probes = probes;
    report.tolerance = tol;
    for (std::size_t p = 0; p < probes; ++p) {
        const Matrix x = rng.gaussian_matrix(module.d_in(), 1);
        const Matrix superposed = molf_forward(module, x, false, rng);
        Matrix collapsed = matmul(fused, x);
        if (module.bias) collapsed = add_bias(collapsed, *module.bias);
        const double denom = frobenius_norm(collapsed);
        const double diff = frobenius_norm(subtract(superposed, collapsed));
        const double dev = denom > 0.0 ? diff / denom : diff;
        report.max_relative_deviation = std::max(report.max_relative_deviation, dev);
    }
    report.passed = report.max_relative_deviation <= tol;
    return report;
}

} // namespace molf
