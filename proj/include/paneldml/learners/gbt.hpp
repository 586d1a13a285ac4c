#pragma once

#include <memory>
#include <span>
#include <vector>

#include "paneldml/learners/tree.hpp"

namespace paneldml {

// Gradient boosting with squared-error loss: each stage fits a shallow tree
// to the current residuals, shrunk by the learning rate.
class GbtModel : public Model {
public:
    GbtModel(double base, double learning_rate, std::vector<RegressionTree> trees)
        : base_(base), learning_rate_(learning_rate), trees_(std::move(trees)) {}

    LearnerKind kind() const override { return LearnerKind::Gbt; }

    double predict_row(std::span<const double> x) const override {
        double out = base_;
        for (const auto& tree : trees_) out += learning_rate_ * tree.predict(x);
        return out;
    }

    double base() const { return base_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

private:
    double base_;
    double learning_rate_;
    std::vector<RegressionTree> trees_;
};

inline std::unique_ptr<GbtModel> fit_gbt(const LearnerSpec& spec, const FeatureMatrix& X,
                                         std::span<const double> y) {
    std::size_t n = X.n_rows();
    double base = 0.0;
    for (double v : y) base += v;
    base /= static_cast<double>(n);

    TreeGrowParams params{spec.max_depth, spec.min_leaf, spec.mtry};
    std::vector<double> residual(y.begin(), y.end());
    for (auto& r : residual) r -= base;

    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(spec.n_trees));
    for (int m = 0; m < spec.n_trees; ++m) {
        auto tree = detail::grow_tree(X, residual, detail::all_rows(n), params);
        for (std::size_t i = 0; i < n; ++i)
            residual[i] -= spec.learning_rate * tree.predict(X.row(i));
        trees.push_back(std::move(tree));
    }
    return std::make_unique<GbtModel>(base, spec.learning_rate, std::move(trees));
}

} // namespace paneldml
