#include "molf/optim/config.hpp"

#include "molf/errors.hpp"

namespace molf {

std::string_view to_string(ScoringMode mode) {
    switch (mode) {
    case ScoringMode::epd:
        return "epd";
    case ScoringMode::pfn:
        return "pfn";
    case ScoringMode::dense:
        return "dense";
    }
    return "?";
}

ScoringMode parse_scoring_mode(std::string_view text) {
    if (text == "epd") return ScoringMode::epd;
    if (text == "pfn") return ScoringMode::pfn;
    if (text == "dense") return ScoringMode::dense;
    throw ContractError("unknown scoring mode '" + std::string(text) + "' (epd, pfn, dense)");
}

void OptimizerConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ContractError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ContractError("beta2 must lie in [0, 1)");
    if (!(eps > 0.0)) throw ContractError("eps must be positive");
    if (k_top < 1) throw ContractError("k_top must be at least 1");
    if (!(lr_fft >= 0.0) || !(lr_lora >= 0.0)) throw ContractError("learning rates must be >= 0");
    if (!(lambda_fft >= 0.0) || !(lambda_lora >= 0.0)) {
        throw ContractError("weight decay must be >= 0");
    }
    if (!(grad_clip >= 0.0)) throw ContractError("grad_clip must be >= 0");
}

} // namespace molf
