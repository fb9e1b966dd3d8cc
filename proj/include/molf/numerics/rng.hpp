#pragma once

#include <array>
#include <cstdint>

#include "molf/numerics/matrix.hpp"

namespace molf {

/// xoshiro256** seeded through splitmix64. Gaussians come from Box-Muller;
/// both outputs of a pair are used, the second one is held for the next call.
class Rng {
public:
    struct State {
        std::array<std::uint64_t, 4> words{};
        bool has_spare = false;
        double spare = 0.0;

        bool operator==(const State&) const = default;
    };

    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double gaussian();
    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);

    /// Independent child generator for a named stream, keyed off this one's seed material.
    [[nodiscard]] Rng fork(std::uint64_t stream) const;

    [[nodiscard]] const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

private:
    State state_;
};

std::uint64_t splitmix64(std::uint64_t& x);

} // namespace molf
