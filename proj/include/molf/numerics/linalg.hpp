#pragma once

#include "molf/numerics/matrix.hpp"
#include "molf/numerics/rng.hpp"

namespace molf {

/// Q factor of a thin QR decomposition (rows >= cols) via Householder
/// reflections, with column signs fixed so that diag(R) >= 0.
Matrix orthonormal_columns(const Matrix& a);

/// n x k matrix with orthonormal columns drawn from the Haar measure.
Matrix random_orthonormal(std::size_t n, std::size_t k, Rng& rng);

} // namespace molf
