#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "paneldml/feature_matrix.hpp"

namespace testsupport {

// Least squares with intercept via normal equations and Gaussian elimination
// with partial pivoting. Returns {intercept, beta_1, ..., beta_p}.
inline std::vector<double> ols_fit(const paneldml::FeatureMatrix& X,
                                   std::span<const double> y) {
    std::size_t n = X.n_rows(), p = X.n_cols(), m = p + 1;
    auto design = [&](std::size_t i, std::size_t j) {
        return j == 0 ? 1.0 : X.at(i, j - 1);
    };
    std::vector<double> A(m * m, 0.0), b(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < m; ++r) {
            b[r] += design(i, r) * y[i];
            for (std::size_t c = 0; c < m; ++c) A[r * m + c] += design(i, r) * design(i, c);
        }
    }
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::fabs(A[r * m + col]) > std::fabs(A[pivot * m + col])) pivot = r;
        if (std::fabs(A[pivot * m + col]) < 1e-12)
            throw std::runtime_error("ols oracle: singular system");
        if (pivot != col) {
            for (std::size_t c = 0; c < m; ++c) std::swap(A[col * m + c], A[pivot * m + c]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            double f = A[r * m + col] / A[col * m + col];
            for (std::size_t c = 0; c < m; ++c) A[r * m + c] -= f * A[col * m + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> beta(m);
    for (std::size_t r = 0; r < m; ++r) beta[r] = b[r] / A[r * m + r];
    return beta;
}

} // namespace testsupport
