#include "molf/synth/spectral_task.hpp"

#include <algorithm>
#include <cmath>

#include "molf/errors.hpp"
#include "molf/numerics/linalg.hpp"

namespace molf {

std::string_view to_string(Regime regime) {
    switch (regime) {
    case Regime::heavy_tail:
        return "heavy_tail";
    case Regime::concentrated:
        return "concentrated";
    case Regime::custom:
        return "custom";
    }
    return "?";
}

Regime parse_regime(std::string_view text) {
    if (text == "heavy_tail") return Regime::heavy_tail;
    if (text == "concentrated") return Regime::concentrated;
    if (text == "custom") return Regime::custom;
    throw ContractError("unknown regime '" + std::string(text) +
                        "' (heavy_tail, concentrated, custom)");
}

SpectralTask gen_spectral_target(std::size_t d_out, std::size_t d_in, Regime regime,
                                 const SpectralParams& params, Rng& rng) {
    if (d_out == 0 || d_in == 0) throw ContractError("gen_spectral_target: dims must be positive");
    const std::size_t k = std::min(d_out, d_in);

    std::vector<double> spectrum(k, 0.0);
    switch (regime) {
    case Regime::heavy_tail:
        if (!(params.power >= 0.0)) throw ContractError("gen_spectral_target: power must be >= 0");
        for (std::size_t i = 0; i < k; ++i) {
            spectrum[i] = std::pow(static_cast<double>(i + 1), -params.power);
        }
        break;
    case Regime::concentrated:
        if (params.rank > k) {
            throw ContractError("gen_spectral_target: rank " + std::to_string(params.rank) +
                                " exceeds min(d_out, d_in) = " + std::to_string(k));
        }
        std::fill(spectrum.begin(), spectrum.begin() + static_cast<long>(params.rank), 1.0);
        break;
    case Regime::custom:
        if (params.custom_spectrum.size() > k) {
            throw ContractError("gen_spectral_target: custom spectrum longer than min(dims)");
        }
        if (!std::is_sorted(params.custom_spectrum.rbegin(), params.custom_spectrum.rend()) ||
            std::any_of(params.custom_spectrum.begin(), params.custom_spectrum.end(),
                        [](double s) { return !(s >= 0.0); })) {
            throw ContractError("gen_spectral_target: custom spectrum must be descending and >= 0");
        }
        std::copy(params.custom_spectrum.begin(), params.custom_spectrum.end(), spectrum.begin());
        break;
    }

    SpectralTask task;
    task.regime = regime;
    task.noise_std = params.noise_std;
    task.w_base = rng.gaussian_matrix(d_out, d_in, 1.0 / std::sqrt(static_cast<double>(d_in)));
    task.u = random_orthonormal(d_out, k, rng);
    task.v = random_orthonormal(d_in, k, rng);
    task.spectrum = std::move(spectrum);
    task.delta_star = compose_delta(task.u, task.spectrum, task.v);
    return task;
}

Matrix compose_delta(const Matrix& u, std::span<const double> spectrum, const Matrix& v) {
    if (u.cols() != spectrum.size() || v.cols() != spectrum.size()) {
        throw DimensionError("compose_delta: factor widths do not match spectrum length");
    }
    Matrix scaled_u = u;
    for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t j = 0; j < u.cols(); ++j) scaled_u(i, j) *= spectrum[j];
    return matmul(scaled_u, transpose(v));
}

double tail_energy(std::span<const double> spectrum, long r) {
    if (r < 0) throw ContractError("tail_energy: rank must be >= 0, got " + std::to_string(r));
    double total = 0.0;
    for (std::size_t i = static_cast<std::size_t>(r); i < spectrum.size(); ++i) {
        total += spectrum[i] * spectrum[i];
    }
    return total;
}

Matrix best_rank_approximation(const SpectralTask& task, std::size_t r) {
    std::vector<double> truncated = task.spectrum;
    for (std::size_t i = r; i < truncated.size(); ++i) truncated[i] = 0.0;
    return compose_delta(task.u, truncated, task.v);
}

Batch sample_batch(const SpectralTask& task, std::size_t batch, Rng& rng) {
    if (batch == 0) throw ContractError("sample_batch: batch must be >= 1");
    Batch b;
    b.x = rng.gaussian_matrix(task.d_in(), batch);
    b.y = matmul(task.teacher(), b.x);
    if (task.noise_std > 0.0) {
        for (auto& y : b.y.data()) y += task.noise_std * rng.gaussian();
    }
    return b;
}

double population_loss(const SpectralTask& task, const Matrix& weight, const Matrix* bias) {
    double loss = frobenius_norm_sq(subtract(task.teacher(), weight));
    if (bias) loss += frobenius_norm_sq(*bias);
    loss += static_cast<double>(task.d_out()) * task.noise_std * task.noise_std;
    return 0.5 * loss;
}

double population_loss(const SpectralTask& task, const MoLFModule& student) {
    if (student.d_out() != task.d_out() || student.d_in() != task.d_in()) {
        throw DimensionError("population_loss: student " + student.weight.shape_string() +
                             " does not match task dims");
    }
    Matrix learned = subtract(student.weight, task.w_base);
    for (const auto& e : student.experts) {
        learned = add(learned, scale(matmul(e.b, e.a), e.scale()));
    }
    double loss = frobenius_norm_sq(subtract(learned, task.delta_star));
    if (student.bias) loss += frobenius_norm_sq(*student.bias);
    loss += static_cast<double>(task.d_out()) * task.noise_std * task.noise_std;
    return 0.5 * loss;
}

} // namespace molf
