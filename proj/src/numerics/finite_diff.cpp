#include "molf/numerics/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "molf/errors.hpp"

namespace molf {

Matrix finite_diff_grad(const ScalarFunction& f, const Matrix& x, double h) {
    if (!(h > 0.0)) {
        throw ContractError("finite_diff_grad: step h must be positive, got " + std::to_string(h));
    }
    Matrix grad(x.rows(), x.cols());
    Matrix probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("finite_diff_grad: non-finite function value at entry " +
                               std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double relative_error(const Matrix& a, const Matrix& b) {
    const double denom = std::max(frobenius_norm(a), frobenius_norm(b));
    if (denom == 0.0) return 0.0;
    return frobenius_norm(subtract(a, b)) / denom;
}

} // namespace molf
