#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "paneldml/learners/tree.hpp"
#include "paneldml/parallel.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

class ForestModel : public Model {
public:
    ForestModel(std::vector<RegressionTree> trees, std::vector<double> importance)
        : trees_(std::move(trees)), importance_(std::move(importance)) {}

    LearnerKind kind() const override { return LearnerKind::Forest; }

    double predict_row(std::span<const double> x) const override {
        double sum = 0.0;
        for (const auto& tree : trees_) sum += tree.predict(x);
        return sum / static_cast<double>(trees_.size());
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }

    // Impurity (SSE-reduction) importances, normalized to sum 1.
    const std::vector<double>& importance() const { return importance_; }

private:
    std::vector<RegressionTree> trees_;
    std::vector<double> importance_;
};

inline std::unique_ptr<ForestModel> fit_forest(const LearnerSpec& spec, const FeatureMatrix& X,
                                               std::span<const double> y) {
    std::size_t p = X.n_cols(), n = X.n_rows();
    int mtry = spec.mtry != 0
                   ? spec.mtry
                   : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
    TreeGrowParams params{spec.max_depth, spec.min_leaf, mtry};

    auto n_trees = static_cast<std::size_t>(spec.n_trees);
    std::vector<RegressionTree> trees(n_trees);
    std::vector<std::vector<double>> gains(n_trees, std::vector<double>(p, 0.0));

    parallel_for(n_trees, [&](std::size_t t) {
        Rng rng(derive_seed(spec.seed, 1, t));
        std::vector<std::size_t> sample;
        if (spec.bootstrap) {
            sample.resize(n);
            for (auto& s : sample) s = rng.uniform_int(n);
        } else {
            sample = detail::all_rows(n);
        }
        trees[t] = detail::grow_tree(X, y, std::move(sample), params, &rng, &gains[t]);
    });

    std::vector<double> importance(p, 0.0);
    double total = 0.0;
    for (const auto& g : gains)
        for (std::size_t j = 0; j < p; ++j) {
            importance[j] += g[j];
            total += g[j];
        }
    if (total > 0)
        for (auto& v : importance) v /= total;
    else
        for (auto& v : importance) v = 1.0 / static_cast<double>(p);

    return std::make_unique<ForestModel>(std::move(trees), std::move(importance));
}

inline std::vector<double> feature_importance(const Model& model) {
    const auto* forest = dynamic_cast<const ForestModel*>(&model);
    if (!forest)
        throw UserError("feature importance requires a fitted forest, got " +
                        to_string(model.kind()) +
                        (model.info().constant ? " (degenerate constant fit)" : ""));
    return forest->importance();
}

} // namespace paneldml
