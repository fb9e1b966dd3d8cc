#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "molf/model/molf_module.hpp"

namespace molf {

enum class Regime {
    heavy_tail,   // sigma_i = i^-power, the capacity-bound case
    concentrated, // sigma_i = 1 for i <= rank, else 0
    custom,
};

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

struct SpectralParams {
    double power = 0.1;
    std::size_t rank = 8;
    std::vector<double> custom_spectrum;
    double noise_std = 0.0;
};

/// Linear teacher W* = W_base + dW*, with dW* = U diag(sigma) V^T built from
/// Haar-random orthonormal factors.
struct SpectralTask {
    Regime regime = Regime::heavy_tail;
    Matrix w_base;     // d_out x d_in
    Matrix delta_star; // d_out x d_in
    Matrix u;          // d_out x k
    Matrix v;          // d_in x k
    std::vector<double> spectrum; // k = min(d_out, d_in), descending
    double noise_std = 0.0;

    [[nodiscard]] std::size_t d_out() const { return w_base.rows(); }
    [[nodiscard]] std::size_t d_in() const { return w_base.cols(); }
    [[nodiscard]] Matrix teacher() const { return add(w_base, delta_star); }
};

SpectralTask gen_spectral_target(std::size_t d_out, std::size_t d_in, Regime regime,
                                 const SpectralParams& params, Rng& rng);

/// Rebuilds dW* from the stored factors and spectrum.
Matrix compose_delta(const Matrix& u, std::span<const double> spectrum, const Matrix& v);

/// sum_{i > r} sigma_i^2: the smallest squared Frobenius error any rank-r matrix can reach.
double tail_energy(std::span<const double> spectrum, long r);

/// Truncated-SVD optimum sum_{i <= r} sigma_i u_i v_i^T.
Matrix best_rank_approximation(const SpectralTask& task, std::size_t r);

struct Batch {
    Matrix x; // d_in x batch, whitened Gaussian
    Matrix y; // d_out x batch
};

/// X ~ N(0, I) columns, Y = W* X + noise_std * N(0, I).
Batch sample_batch(const SpectralTask& task, std::size_t batch, Rng& rng);

/// Expected value of the regression loss 1/2 ||y - W x - b||^2 under the task
/// distribution: 1/2 (||W* - W||_F^2 + ||b||^2 + d_out noise_std^2).
double population_loss(const SpectralTask& task, const Matrix& weight, const Matrix* bias = nullptr);

/// Same closed form evaluated from the student's realized pieces: the base
/// offset and each scaled B A product are summed before subtracting dW*.
double population_loss(const SpectralTask& task, const MoLFModule& student);

} // namespace molf
