#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "paneldml/learners/model.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

// Single hidden layer of tanh units, linear output. Parameter layout:
//   W1 (hidden x p, row-major) | b1 (hidden) | w2 (hidden) | b2
inline std::size_t mlp_param_count(std::size_t p, std::size_t hidden) {
    return hidden * p + hidden + hidden + 1;
}

// Loss (1/2n) sum (f(x_i) - y_i)^2 and its parameter gradient, on the data
// exactly as given. Training standardizes first; the finite-difference test
// calls this directly.
inline double mlp_loss_grad(std::span<const double> params, std::size_t hidden,
                            const FeatureMatrix& X, std::span<const double> y,
                            std::span<double> grad) {
    std::size_t n = X.n_rows(), p = X.n_cols();
    const double* W1 = params.data();
    const double* b1 = W1 + hidden * p;
    const double* w2 = b1 + hidden;
    const double b2 = w2[hidden];

    double* gW1 = grad.data();
    double* gb1 = gW1 + hidden * p;
    double* gw2 = gb1 + hidden;
    double* gb2 = gw2 + hidden;
    std::fill(grad.begin(), grad.end(), 0.0);

    std::vector<double> z(hidden);
    double loss = 0.0;
    auto inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = X.row(i);
        double out = b2;
        for (std::size_t h = 0; h < hidden; ++h) {
            double a = b1[h];
            const double* wrow = W1 + h * p;
            for (std::size_t j = 0; j < p; ++j) a += wrow[j] * x[j];
            z[h] = std::tanh(a);
            out += w2[h] * z[h];
        }
        double e = out - y[i];
        loss += 0.5 * e * e * inv_n;

        double dout = e * inv_n;
        *gb2 += dout;
        for (std::size_t h = 0; h < hidden; ++h) {
            gw2[h] += dout * z[h];
            double da = dout * w2[h] * (1.0 - z[h] * z[h]);
            gb1[h] += da;
            double* growk = gW1 + h * p;
            for (std::size_t j = 0; j < p; ++j) growk[j] += da * x[j];
        }
    }
    return loss;
}

class MlpModel : public Model {
public:
    MlpModel(std::size_t hidden, std::vector<double> params, std::vector<double> x_mean,
             std::vector<double> x_scale, double y_mean, double y_scale)
        : hidden_(hidden), params_(std::move(params)), x_mean_(std::move(x_mean)),
          x_scale_(std::move(x_scale)), y_mean_(y_mean), y_scale_(y_scale) {}

    LearnerKind kind() const override { return LearnerKind::Mlp; }

    double predict_row(std::span<const double> x) const override {
        std::size_t p = x_mean_.size();
        const double* W1 = params_.data();
        const double* b1 = W1 + hidden_ * p;
        const double* w2 = b1 + hidden_;
        double out = w2[hidden_];
        for (std::size_t h = 0; h < hidden_; ++h) {
            double a = b1[h];
            const double* wrow = W1 + h * p;
            for (std::size_t j = 0; j < p; ++j)
                a += wrow[j] * (x[j] - x_mean_[j]) / x_scale_[j];
            out += w2[h] * std::tanh(a);
        }
        return y_mean_ + y_scale_ * out;
    }

    const std::vector<double>& params() const { return params_; }

private:
    std::size_t hidden_;
    std::vector<double> params_;
    std::vector<double> x_mean_, x_scale_;
    double y_mean_, y_scale_;
};

inline std::unique_ptr<MlpModel> fit_mlp(const LearnerSpec& spec, const FeatureMatrix& X,
                                         std::span<const double> y) {
    std::size_t n = X.n_rows(), p = X.n_cols();
    auto hidden = static_cast<std::size_t>(spec.hidden_units);

    // z-score inputs and target; gradient descent needs comparable scales
    std::vector<double> x_mean(p, 0.0), x_scale(p, 1.0);
    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += X.at(i, j);
        x_mean[j] = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = X.at(i, j) - x_mean[j];
            ss += c * c;
        }
        double sd = std::sqrt(ss / static_cast<double>(n));
        x_scale[j] = sd > 0 ? sd : 1.0;
    }
    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);
    double y_ss = 0.0;
    for (double v : y) y_ss += (v - y_mean) * (v - y_mean);
    double y_scale = std::sqrt(y_ss / static_cast<double>(n));
    if (y_scale <= 0) y_scale = 1.0;

    std::vector<double> values(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            values[i * p + j] = (X.at(i, j) - x_mean[j]) / x_scale[j];
    FeatureMatrix Xs(X.names(), n, std::move(values));
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = (y[i] - y_mean) / y_scale;

    std::size_t n_params = mlp_param_count(p, hidden);
    std::vector<double> params(n_params);
    Rng rng(derive_seed(spec.seed, 3));
    double a1 = 1.0 / std::sqrt(static_cast<double>(p));
    double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t k = 0; k < hidden * p + hidden; ++k)
        params[k] = (2.0 * rng.uniform() - 1.0) * a1;
    for (std::size_t k = hidden * p + hidden; k < n_params; ++k)
        params[k] = (2.0 * rng.uniform() - 1.0) * a2;

    std::vector<double> grad(n_params), velocity(n_params, 0.0);
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        mlp_loss_grad(params, hidden, Xs, ys, grad);
        for (std::size_t k = 0; k < n_params; ++k) {
            velocity[k] = spec.momentum * velocity[k] - spec.step * grad[k];
            params[k] += velocity[k];
        }
    }
    return std::make_unique<MlpModel>(hidden, std::move(params), std::move(x_mean),
                                      std::move(x_scale), y_mean, y_scale);
}

} // namespace paneldml
