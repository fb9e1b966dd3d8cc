#include "molf/numerics/linalg.hpp"

#include <cmath>

#include "molf/errors.hpp"

namespace molf {

Matrix orthonormal_columns(const Matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) {
        throw DimensionError("orthonormal_columns: need rows >= cols, got " + a.shape_string());
    }
    Matrix r = a;
    std::vector<std::vector<double>> reflectors(n);
    std::vector<double> diag_sign(n, 1.0);

    for (std::size_t k = 0; k < n; ++k) {
        double norm_sq = 0.0;
        for (std::size_t i = k; i < m; ++i) norm_sq += r(i, k) * r(i, k);
        const double norm = std::sqrt(norm_sq);
        if (norm == 0.0) {
            throw NumericError("orthonormal_columns: input is rank deficient at column " +
                               std::to_string(k));
        }
        const double alpha = r(k, k) >= 0.0 ? -norm : norm;
        std::vector<double> v(m - k);
        for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
        v[0] -= alpha;
        double v_norm_sq = 0.0;
        for (double e : v) v_norm_sq += e * e;
        if (v_norm_sq > 0.0) {
            for (std::size_t j = k; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t i = k; i < m; ++i) dot += v[i - k] * r(i, j);
                const double f = 2.0 * dot / v_norm_sq;
                for (std::size_t i = k; i < m; ++i) r(i, j) -= f * v[i - k];
            }
        }
        diag_sign[k] = r(k, k) >= 0.0 ? 1.0 : -1.0;
        reflectors[k] = std::move(v);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of the identity.
    Matrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
    for (std::size_t k = n; k-- > 0;) {
        const auto& v = reflectors[k];
        double v_norm_sq = 0.0;
        for (double e : v) v_norm_sq += e * e;
        if (v_norm_sq == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += v[i - k] * q(i, j);
            const double f = 2.0 * dot / v_norm_sq;
            for (std::size_t i = k; i < m; ++i) q(i, j) -= f * v[i - k];
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (diag_sign[j] < 0.0) {
            for (std::size_t i = 0; i < m; ++i) q(i, j) = -q(i, j);
        }
    }
    return q;
}

Matrix random_orthonormal(std::size_t n, std::size_t k, Rng& rng) {
    return orthonormal_columns(rng.gaussian_matrix(n, k));
}

} // namespace molf
