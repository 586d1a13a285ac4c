#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "paneldml/learners/model.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

// Coordinate descent for (1/2n)||y - b0 - Xb||^2 + lambda*||b||_1 on
// centered columns scaled to population sd 1, so each coordinate update is
// the exact soft threshold S(rho_j, lambda) with unit curvature.
namespace detail {

struct LassoWork {
    std::size_t n = 0, p = 0;
    std::vector<double> cols;    // column-major standardized X
    std::vector<double> x_mean, x_scale;
    std::vector<double> yc;      // y - mean(y)
    double y_mean = 0.0;

    const double* col(std::size_t j) const { return cols.data() + j * n; }
};

inline LassoWork lasso_prepare(const FeatureMatrix& X, std::span<const double> y) {
    LassoWork w;
    w.n = X.n_rows();
    w.p = X.n_cols();
    w.cols.resize(w.n * w.p);
    w.x_mean.resize(w.p);
    w.x_scale.resize(w.p);
    for (std::size_t j = 0; j < w.p; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < w.n; ++i) sum += X.at(i, j);
        double mean = sum / static_cast<double>(w.n);
        double ss = 0.0;
        for (std::size_t i = 0; i < w.n; ++i) {
            double c = X.at(i, j) - mean;
            ss += c * c;
        }
        double sd = std::sqrt(ss / static_cast<double>(w.n));
        w.x_mean[j] = mean;
        w.x_scale[j] = sd;
        double* out = w.cols.data() + j * w.n;
        if (sd > 0)
            for (std::size_t i = 0; i < w.n; ++i) out[i] = (X.at(i, j) - mean) / sd;
        else
            for (std::size_t i = 0; i < w.n; ++i) out[i] = 0.0; // constant column stays inert
    }
    double ysum = std::accumulate(y.begin(), y.end(), 0.0);
    w.y_mean = ysum / static_cast<double>(w.n);
    w.yc.resize(w.n);
    for (std::size_t i = 0; i < w.n; ++i) w.yc[i] = y[i] - w.y_mean;
    return w;
}

inline double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

inline double lasso_lambda_max(const LassoWork& w) {
    double lmax = 0.0;
    for (std::size_t j = 0; j < w.p; ++j) {
        double dot = 0.0;
        const double* x = w.col(j);
        for (std::size_t i = 0; i < w.n; ++i) dot += x[i] * w.yc[i];
        lmax = std::max(lmax, std::fabs(dot) / static_cast<double>(w.n));
    }
    return lmax;
}

// beta/resid are the warm-start state and are updated in place;
// resid must equal yc - sum_j beta_j x_j on entry.
inline void cd_solve(const LassoWork& w, double lambda, double tol, std::vector<double>& beta,
                     std::vector<double>& resid) {
    auto n = static_cast<double>(w.n);
    double move_tol = tol * 1e-3;
    auto pass = [&]() {
        double max_move = 0.0;
        for (std::size_t j = 0; j < w.p; ++j) {
            const double* x = w.col(j);
            double dot = 0.0;
            for (std::size_t i = 0; i < w.n; ++i) dot += x[i] * resid[i];
            double rho = dot / n + beta[j];
            double next = soft_threshold(rho, lambda);
            double delta = next - beta[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < w.n; ++i) resid[i] -= delta * x[i];
                beta[j] = next;
                max_move = std::max(max_move, std::fabs(delta));
            }
        }
        return max_move;
    };
    for (int sweep = 0; sweep < 100000; ++sweep)
        if (pass() <= move_tol) break;

    // verify KKT stationarity; a few extra sweeps if residual drift broke it
    for (int round = 0; round < 50; ++round) {
        double worst = 0.0;
        for (std::size_t j = 0; j < w.p; ++j) {
            if (w.x_scale[j] == 0) continue;
            const double* x = w.col(j);
            double dot = 0.0;
            for (std::size_t i = 0; i < w.n; ++i) dot += x[i] * resid[i];
            double grad = -dot / n; // d/dbeta_j of the smooth part
            double viol = beta[j] != 0.0 ? std::fabs(grad + lambda * (beta[j] > 0 ? 1 : -1))
                                         : std::max(0.0, std::fabs(grad) - lambda);
            worst = std::max(worst, viol);
        }
        if (worst <= tol * 0.5) break;
        pass();
    }
}

} // namespace detail

class LassoModel : public Model {
public:
    LassoModel(double intercept, std::vector<double> coef, double lambda)
        : intercept_(intercept), coef_(std::move(coef)), lambda_(lambda) {}

    LearnerKind kind() const override { return LearnerKind::Lasso; }

    double predict_row(std::span<const double> x) const override {
        double out = intercept_;
        for (std::size_t j = 0; j < coef_.size(); ++j) out += coef_[j] * x[j];
        return out;
    }

    double intercept() const { return intercept_; }
    const std::vector<double>& coef() const { return coef_; } // original scale
    double lambda() const { return lambda_; }                 // value actually used

private:
    double intercept_;
    std::vector<double> coef_;
    double lambda_;
};

struct LassoPath {
    std::vector<double> lambdas;
    std::vector<double> intercepts;
    std::vector<std::vector<double>> coefs; // original scale, one per lambda
};

inline double lasso_lambda_max(const FeatureMatrix& X, std::span<const double> y) {
    return detail::lasso_lambda_max(detail::lasso_prepare(X, y));
}

namespace detail {

inline void unstandardize(const LassoWork& w, const std::vector<double>& beta_std,
                          double& intercept, std::vector<double>& coef) {
    coef.assign(w.p, 0.0);
    intercept = w.y_mean;
    for (std::size_t j = 0; j < w.p; ++j) {
        if (w.x_scale[j] == 0) continue;
        coef[j] = beta_std[j] / w.x_scale[j];
        intercept -= coef[j] * w.x_mean[j];
    }
}

inline std::vector<double> default_lambda_grid(double lmax, std::size_t count = 100,
                                               double min_ratio = 1e-4) {
    if (lmax <= 0) lmax = 1e-3; // degenerate target; any grid works
    std::vector<double> grid(count);
    for (std::size_t k = 0; k < count; ++k)
        grid[k] = lmax * std::pow(min_ratio, static_cast<double>(k) /
                                                 static_cast<double>(count - 1));
    return grid;
}

// 5-fold CV over the default grid; returns the winning lambda
// (ties break toward stronger regularization).
inline double lasso_cv_lambda(const FeatureMatrix& X, std::span<const double> y, double tol,
                              std::uint64_t seed) {
    std::size_t n = X.n_rows();
    const std::size_t k_folds = std::min<std::size_t>(5, n);
    auto full = lasso_prepare(X, y);
    auto grid = default_lambda_grid(lasso_lambda_max(full));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(derive_seed(seed, 2));
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);

    std::vector<double> cv_sse(grid.size(), 0.0);
    for (std::size_t f = 0; f < k_folds; ++f) {
        std::size_t lo = f * n / k_folds, hi = (f + 1) * n / k_folds;
        std::vector<std::size_t> train;
        train.reserve(n - (hi - lo));
        for (std::size_t i = 0; i < n; ++i)
            if (i < lo || i >= hi) train.push_back(order[i]);
        if (train.size() < 2) continue;

        std::vector<double> y_train(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = y[train[i]];
        auto Xt = X.gather(train);
        auto w = lasso_prepare(Xt, y_train);

        std::vector<double> beta(w.p, 0.0), resid = w.yc, coef;
        double intercept = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            cd_solve(w, grid[g], tol, beta, resid);
            unstandardize(w, beta, intercept, coef);
            for (std::size_t i = lo; i < hi; ++i) {
                auto row = X.row(order[i]);
                double pred = intercept;
                for (std::size_t j = 0; j < w.p; ++j) pred += coef[j] * row[j];
                double e = pred - y[order[i]];
                cv_sse[g] += e * e;
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (cv_sse[g] < cv_sse[best]) best = g;
    return grid[best];
}

} // namespace detail

inline std::unique_ptr<LassoModel> fit_lasso(const LearnerSpec& spec, const FeatureMatrix& X,
                                             std::span<const double> y) {
    double lambda = spec.lambda;
    if (lambda < 0) lambda = detail::lasso_cv_lambda(X, y, spec.tol, spec.seed);

    auto w = detail::lasso_prepare(X, y);
    std::vector<double> beta(w.p, 0.0), resid = w.yc;
    detail::cd_solve(w, lambda, spec.tol, beta, resid);

    double intercept = 0.0;
    std::vector<double> coef;
    detail::unstandardize(w, beta, intercept, coef);
    return std::make_unique<LassoModel>(intercept, std::move(coef), lambda);
}

inline LassoPath fit_lasso_path(const FeatureMatrix& X, std::span<const double> y,
                                const std::vector<double>& lambdas, double tol = 1e-6) {
    if (lambdas.empty()) throw UserError("lambda grid is empty");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (lambdas[k] <= 0) throw UserError("lambda grid must be positive");
        if (k > 0 && lambdas[k] >= lambdas[k - 1])
            throw UserError("lambda grid must be strictly descending");
    }
    auto w = detail::lasso_prepare(X, y);
    LassoPath path;
    path.lambdas = lambdas;
    path.intercepts.resize(lambdas.size());
    path.coefs.resize(lambdas.size());

    std::vector<double> beta(w.p, 0.0), resid = w.yc;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        detail::cd_solve(w, lambdas[k], tol, beta, resid);
        detail::unstandardize(w, beta, path.intercepts[k], path.coefs[k]);
    }
    return path;
}

} // namespace paneldml
