#pragma once

#include <functional>

#include "molf/numerics/matrix.hpp"

namespace molf {

using ScalarFunction = std::function<double(const Matrix&)>;

/// Central-difference gradient: (f(x + h e) - f(x - h e)) / 2h for each entry.
Matrix finite_diff_grad(const ScalarFunction& f, const Matrix& x, double h = 1e-5);

/// ||a - b||_F / max(||a||_F, ||b||_F), zero when both are zero.
double relative_error(const Matrix& a, const Matrix& b);

} // namespace molf
