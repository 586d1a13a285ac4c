#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "paneldml/feature_matrix.hpp"
#include "paneldml/learners/model.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

struct TreeNode {
    int feature = -1; // -1 = leaf
    double threshold = 0.0;
    double value = 0.0; // leaf prediction
    int left = -1;
    int right = -1;
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // node 0 is the root

    double predict(std::span<const double> x) const {
        int i = 0;
        while (nodes[i].feature >= 0)
            i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                    ? nodes[i].left
                    : nodes[i].right;
        return nodes[i].value;
    }
};

struct TreeGrowParams {
    int max_depth = 0; // 0 = unbounded
    int min_leaf = 1;
    int mtry = 0;      // features tried per split; 0 = all
};

namespace detail {

// Exact greedy CART: per node, candidate features are scanned in sorted
// order of their values; split gain is the SSE reduction
//   gain = s_L^2/n_L + s_R^2/n_R - s^2/n   (sum-of-squares terms cancel).
class TreeGrower {
public:
    TreeGrower(const FeatureMatrix& X, std::span<const double> y, const TreeGrowParams& params,
               Rng* rng, std::vector<double>* gain_accum)
        : X_(X), y_(y), params_(params), rng_(rng), gain_accum_(gain_accum) {}

    RegressionTree grow(std::vector<std::size_t> sample) {
        idx_ = std::move(sample);
        feature_pool_.resize(X_.n_cols());
        std::iota(feature_pool_.begin(), feature_pool_.end(), 0u);
        tree_.nodes.clear();
        build(0, idx_.size(), 0);
        return std::move(tree_);
    }

private:
    struct Split {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    int build(std::size_t begin, std::size_t end, int depth) {
        int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        std::size_t n = end - begin;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += y_[idx_[i]];
        tree_.nodes[id].value = sum / static_cast<double>(n);

        bool depth_ok = params_.max_depth == 0 || depth < params_.max_depth;
        if (!depth_ok || n < 2 * static_cast<std::size_t>(params_.min_leaf)) return id;

        Split best = find_split(begin, end, sum);
        if (!best.found) return id;

        if (gain_accum_) (*gain_accum_)[best.feature] += best.gain;

        auto mid = std::stable_partition(
            idx_.begin() + static_cast<std::ptrdiff_t>(begin),
            idx_.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::size_t r) { return X_.at(r, best.feature) <= best.threshold; });
        std::size_t split_at = static_cast<std::size_t>(mid - idx_.begin());

        tree_.nodes[id].feature = static_cast<int>(best.feature);
        tree_.nodes[id].threshold = best.threshold;
        int left = build(begin, split_at, depth + 1);
        int right = build(split_at, end, depth + 1);
        tree_.nodes[id].left = left;
        tree_.nodes[id].right = right;
        return id;
    }

    Split find_split(std::size_t begin, std::size_t end, double sum) {
        std::size_t n = end - begin;
        double parent_score = sum * sum / static_cast<double>(n);
        double gain_floor = 1e-12 * std::max(1.0, std::fabs(parent_score));

        std::span<const std::size_t> candidates = candidate_features();
        Split best;
        auto min_leaf = static_cast<std::size_t>(params_.min_leaf);

        for (std::size_t f : candidates) {
            sorted_.assign(idx_.begin() + static_cast<std::ptrdiff_t>(begin),
                           idx_.begin() + static_cast<std::ptrdiff_t>(end));
            std::sort(sorted_.begin(), sorted_.end(), [&](std::size_t a, std::size_t b) {
                return X_.at(a, f) < X_.at(b, f);
            });

            double left_sum = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_sum += y_[sorted_[k]];
                std::size_t n_left = k + 1, n_right = n - n_left;
                if (n_left < min_leaf) continue;
                if (n_right < min_leaf) break;
                double lo = X_.at(sorted_[k], f), hi = X_.at(sorted_[k + 1], f);
                if (lo == hi) continue;
                double right_sum = sum - left_sum;
                double gain = left_sum * left_sum / static_cast<double>(n_left) +
                              right_sum * right_sum / static_cast<double>(n_right) -
                              parent_score;
                if (gain > gain_floor && gain > best.gain) {
                    double thr = lo + (hi - lo) / 2;
                    if (thr >= hi) thr = lo; // midpoint rounded up; keep the cut exact
                    best = {true, f, thr, gain};
                }
            }
        }
        return best;
    }

    std::span<const std::size_t> candidate_features() {
        std::size_t p = X_.n_cols();
        std::size_t m = params_.mtry == 0 ? p : std::min<std::size_t>(params_.mtry, p);
        if (m >= p || rng_ == nullptr) return feature_pool_;
        // partial Fisher-Yates, then sorted so ties break by feature order
        for (std::size_t i = 0; i < m; ++i)
            std::swap(feature_pool_[i], feature_pool_[i + rng_->uniform_int(p - i)]);
        subset_.assign(feature_pool_.begin(),
                       feature_pool_.begin() + static_cast<std::ptrdiff_t>(m));
        std::sort(subset_.begin(), subset_.end());
        return subset_;
    }

    const FeatureMatrix& X_;
    std::span<const double> y_;
    TreeGrowParams params_;
    Rng* rng_;
    std::vector<double>* gain_accum_;

    std::vector<std::size_t> idx_;
    std::vector<std::size_t> sorted_;
    std::vector<std::size_t> feature_pool_;
    std::vector<std::size_t> subset_;
    RegressionTree tree_;
};

inline RegressionTree grow_tree(const FeatureMatrix& X, std::span<const double> y,
                                std::vector<std::size_t> sample, const TreeGrowParams& params,
                                Rng* rng = nullptr, std::vector<double>* gain_accum = nullptr) {
    return TreeGrower(X, y, params, rng, gain_accum).grow(std::move(sample));
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    return idx;
}

} // namespace detail

class TreeModel : public Model {
public:
    explicit TreeModel(RegressionTree tree) : tree_(std::move(tree)) {}
    LearnerKind kind() const override { return LearnerKind::Tree; }
    double predict_row(std::span<const double> x) const override { return tree_.predict(x); }
    const RegressionTree& tree() const { return tree_; }

private:
    RegressionTree tree_;
};

inline std::unique_ptr<TreeModel> fit_tree(const LearnerSpec& spec, const FeatureMatrix& X,
                                           std::span<const double> y) {
    TreeGrowParams params{spec.max_depth, spec.min_leaf, spec.mtry};
    auto tree = detail::grow_tree(X, y, detail::all_rows(X.n_rows()), params);
    return std::make_unique<TreeModel>(std::move(tree));
}

} // namespace paneldml
