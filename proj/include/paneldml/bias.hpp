#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "paneldml/dml.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/truth.hpp"

namespace paneldml {

struct BiasDecomposition {
    double sampling_term = 0.0;       // a
    double regularization_term = 0.0; // b, the own-sample overfitting channel
    double remainder_term = 0.0;      // third summand (orthogonal path only)

    double total() const { return sampling_term + regularization_term + remainder_term; }
};

// Naive decomposition:
//   a = (n^-1 sum d^2)^-1 n^-1/2 sum d*u
//   b = (n^-1 sum d^2)^-1 n^-1/2 sum d*(g0 - g_hat)
// so a + b = sqrt(n)(theta_hat - theta0) exactly.
inline BiasDecomposition naive_bias_decomposition(std::span<const double> treatment,
                                                  std::span<const double> g_hat,
                                                  const TruthView& truth) {
    std::size_t n = treatment.size();
    if (n < 2 || g_hat.size() != n || truth.g0.size() != n)
        throw UserError("bias decomposition: misaligned inputs");
    double d2 = 0.0;
    for (double d : treatment) d2 += d * d;
    d2 /= static_cast<double>(n);
    if (d2 <= 0) throw UserError("bias decomposition: treatment has zero variance");

    double root_n = std::sqrt(static_cast<double>(n));
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_missing(truth.u[i]))
            throw UserError("bias decomposition: truth record lacks a lead outcome for a row");
        a += treatment[i] * truth.u[i];
        b += treatment[i] * (truth.g0[i] - g_hat[i]);
    }
    BiasDecomposition out;
    out.sampling_term = a / root_n / d2;
    out.regularization_term = b / root_n / d2;
    out.remainder_term = 0.0;
    return out;
}

// Orthogonal-path decomposition, the three summands as printed:
//   (E[V^2])^-1 n^-1/2 sum V*U
//   (E[V^2])^-1 n^-1/2 sum (m_hat - m0)(g_hat - g0)
//   n^-1/2 sum V*(g_hat - g0)
// with E[V^2] estimated from the recorded true V.
inline BiasDecomposition dml_bias_decomposition(const CrossFitResult& cf,
                                                const TruthView& truth) {
    std::size_t n = cf.n();
    if (truth.g0.size() != n) throw UserError("bias decomposition: misaligned inputs");
    double ev2 = 0.0;
    for (double v : truth.v) ev2 += v * v;
    ev2 /= static_cast<double>(n);
    if (ev2 <= 0) throw UserError("bias decomposition: treatment residual has zero variance");

    double root_n = std::sqrt(static_cast<double>(n));
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_missing(truth.u[i]))
            throw UserError("bias decomposition: truth record lacks a lead outcome for a row");
        t1 += truth.v[i] * truth.u[i];
        t2 += (cf.m_hat[i] - truth.m0[i]) * (cf.g_hat[i] - truth.g0[i]);
        t3 += truth.v[i] * (cf.g_hat[i] - truth.g0[i]);
    }
    BiasDecomposition out;
    out.sampling_term = t1 / root_n / ev2;
    out.regularization_term = t2 / root_n / ev2;
    out.remainder_term = t3 / root_n;
    return out;
}

} // namespace paneldml
