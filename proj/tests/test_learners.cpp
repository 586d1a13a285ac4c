#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "paneldml/learners.hpp"
#include "paneldml/rng.hpp"

using namespace paneldml;

namespace {

struct Sample {
    FeatureMatrix X;
    std::vector<double> y;
};

Sample step_function_sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> cols(2, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        cols[0][i] = rng.uniform() * 2 - 1;
        cols[1][i] = rng.normal();
        y[i] = cols[0][i] > 0 ? 1.0 : 0.0;
    }
    return {FeatureMatrix::from_columns({"x1", "x2"}, cols), std::move(y)};
}

Sample friedman_sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> cols(5, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& c : cols) c[i] = rng.uniform();
        y[i] = 10 * std::sin(std::numbers::pi * cols[0][i] * cols[1][i]) +
               20 * (cols[2][i] - 0.5) * (cols[2][i] - 0.5) + 10 * cols[3][i] +
               5 * cols[4][i] + rng.normal();
    }
    return {FeatureMatrix::from_columns({"x1", "x2", "x3", "x4", "x5"}, cols), std::move(y)};
}

double held_out_mse(const Model& model, const Sample& test) {
    auto pred = model.predict(test.X);
    double sse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double e = pred[i] - test.y[i];
        sse += e * e;
    }
    return sse / static_cast<double>(pred.size());
}

double constant_baseline_mse(const Sample& train, const Sample& test) {
    double mean = 0.0;
    for (double v : train.y) mean += v;
    mean /= static_cast<double>(train.y.size());
    double sse = 0.0;
    for (double v : test.y) sse += (v - mean) * (v - mean);
    return sse / static_cast<double>(test.y.size());
}

} // namespace

TEST(FitDispatch, ConstantTargetAllKinds) {
    Rng rng(11);
    std::vector<std::vector<double>> cols(2, std::vector<double>(20));
    for (auto& c : cols)
        for (auto& v : c) v = rng.normal();
    auto X = FeatureMatrix::from_columns({"a", "b"}, cols);
    std::vector<double> y(20, 7.0);
    for (auto kind : {LearnerKind::Tree, LearnerKind::Forest, LearnerKind::Gbt,
                      LearnerKind::Lasso, LearnerKind::Mlp}) {
        auto model = fit(LearnerSpec::defaults(kind), X, y);
        EXPECT_TRUE(model->info().constant) << to_string(kind);
        for (double p : model->predict(X)) EXPECT_NEAR(p, 7.0, 1e-6) << to_string(kind);
    }
}

TEST(FitDispatch, RejectsBadInputs) {
    auto X = FeatureMatrix::from_columns({"a"}, {{1.0, 2.0}});
    std::vector<double> y{1.0, 2.0};
    EXPECT_THROW(fit(LearnerSpec::defaults(LearnerKind::Tree),
                     FeatureMatrix::from_columns({"a"}, {{1.0}}), {y.data(), 1}),
                 UserError);
    std::vector<double> bad{1.0, std::nan("")};
    EXPECT_THROW(fit(LearnerSpec::defaults(LearnerKind::Tree), X, bad), UserError);
    auto spec = LearnerSpec::defaults(LearnerKind::Forest);
    spec.min_leaf = 0;
    EXPECT_THROW(fit(spec, X, y), UserError);
}

TEST(Forest, LearnsStepFunction) {
    auto train = step_function_sample(500, 21);
    auto test = step_function_sample(500, 22);
    auto spec = LearnerSpec::defaults(LearnerKind::Forest);
    spec.seed = 42;
    auto model = fit(spec, train.X, train.y);
    EXPECT_GT(constant_baseline_mse(train, test), 0.2); // the bar is meaningful
    EXPECT_LT(held_out_mse(*model, test), 0.05);
}

TEST(Forest, FriedmanBeatsConstantPredictor) {
    auto train = friedman_sample(1000, 31);
    auto test = friedman_sample(500, 32);
    auto spec = LearnerSpec::defaults(LearnerKind::Forest);
    spec.seed = 1;
    auto model = fit(spec, train.X, train.y);
    EXPECT_LT(held_out_mse(*model, test), constant_baseline_mse(train, test));
}

TEST(Gbt, FriedmanBeatsConstantPredictor) {
    auto train = friedman_sample(500, 41);
    auto test = friedman_sample(500, 42);
    auto model = fit(LearnerSpec::defaults(LearnerKind::Gbt), train.X, train.y);
    EXPECT_LT(held_out_mse(*model, test), constant_baseline_mse(train, test));
}

TEST(Gbt, ZeroRoundsPredictsMean) {
    auto train = friedman_sample(50, 51);
    auto spec = LearnerSpec::defaults(LearnerKind::Gbt);
    spec.n_trees = 0;
    auto model = fit(spec, train.X, train.y);
    double mean = 0.0;
    for (double v : train.y) mean += v;
    mean /= static_cast<double>(train.y.size());
    for (double p : model->predict(train.X)) EXPECT_NEAR(p, mean, 1e-12);
}

TEST(Tree, UnboundedDepthMemorizesUniqueRows) {
    Rng rng(61);
    std::size_t n = 30;
    std::vector<std::vector<double>> cols(2, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        cols[0][i] = rng.normal();
        cols[1][i] = rng.normal();
        y[i] = rng.normal();
    }
    auto X = FeatureMatrix::from_columns({"a", "b"}, cols);
    auto spec = LearnerSpec::defaults(LearnerKind::Tree);
    spec.max_depth = 0;
    spec.min_leaf = 1;
    auto model = fit(spec, X, y);
    auto pred = model->predict(X);
    for (std::size_t i = 0; i < n; ++i) EXPECT_DOUBLE_EQ(pred[i], y[i]);
    EXPECT_NEAR(model->info().in_sample_mse, 0.0, 1e-30);
}

TEST(Forest, PredictionIsMeanOfTrees) {
    auto train = step_function_sample(200, 71);
    auto spec = LearnerSpec::defaults(LearnerKind::Forest);
    spec.n_trees = 20;
    auto model = fit(spec, train.X, train.y);
    const auto& forest = dynamic_cast<const ForestModel&>(*model);
    for (std::size_t i = 0; i < 50; ++i) {
        auto row = train.X.row(i);
        double mean = 0.0;
        for (const auto& tree : forest.trees()) mean += tree.predict(row);
        mean /= static_cast<double>(forest.trees().size());
        EXPECT_DOUBLE_EQ(forest.predict_row(row), mean);
    }
}

TEST(Forest, ImportanceConcentratesOnSignalFeature) {
    Rng rng(81);
    std::size_t n = 1000;
    std::vector<std::vector<double>> cols(2, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        cols[0][i] = rng.normal();
        cols[1][i] = rng.normal();
        y[i] = 3 * cols[0][i] + rng.normal();
    }
    auto X = FeatureMatrix::from_columns({"signal", "noise"}, cols);
    auto model = fit(LearnerSpec::defaults(LearnerKind::Forest), X, y);
    auto imp = feature_importance(*model);
    EXPECT_GT(imp[0], 0.9);
    EXPECT_NEAR(imp[0] + imp[1], 1.0, 1e-9);
}

TEST(Forest, NoiseOnlyFeaturesShareImportance) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(1000 + seed);
        std::size_t n = 200;
        std::vector<std::vector<double>> cols(3, std::vector<double>(n));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& c : cols) c[i] = rng.normal();
            y[i] = rng.normal();
        }
        auto X = FeatureMatrix::from_columns({"a", "b", "c"}, cols);
        auto spec = LearnerSpec::defaults(LearnerKind::Forest);
        spec.n_trees = 100;
        spec.seed = seed;
        auto imp = feature_importance(*fit(spec, X, y));
        EXPECT_NEAR(imp[0] + imp[1] + imp[2], 1.0, 1e-9);
        EXPECT_LT(*std::max_element(imp.begin(), imp.end()), 0.5) << "seed " << seed;
    }
}

TEST(Forest, ImportanceRequiresForest) {
    auto train = step_function_sample(50, 91);
    auto tree = fit(LearnerSpec::defaults(LearnerKind::Tree), train.X, train.y);
    EXPECT_THROW(feature_importance(*tree), UserError);
}

TEST(Learners, DeterministicGivenSeed) {
    auto train = step_function_sample(300, 101);
    auto grid = step_function_sample(100, 102);
    for (auto kind : {LearnerKind::Forest, LearnerKind::Mlp, LearnerKind::Gbt}) {
        auto spec = LearnerSpec::defaults(kind);
        spec.seed = 7;
        if (kind == LearnerKind::Mlp) spec.epochs = 50;
        if (kind != LearnerKind::Mlp) spec.n_trees = 30;
        auto a = fit(spec, train.X, train.y)->predict(grid.X);
        auto b = fit(spec, train.X, train.y)->predict(grid.X);
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_EQ(a[i], b[i]) << to_string(kind) << " row " << i;
    }
}

TEST(Learners, SeedChangesRandomizedFits) {
    auto train = step_function_sample(300, 111);
    auto spec = LearnerSpec::defaults(LearnerKind::Forest);
    spec.n_trees = 30;
    spec.seed = 1;
    auto a = fit(spec, train.X, train.y)->predict(train.X);
    spec.seed = 2;
    auto b = fit(spec, train.X, train.y)->predict(train.X);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i] != b[i];
    EXPECT_TRUE(any_diff);
}

TEST(Learners, TreeStructureIsDeterministic) {
    auto train = step_function_sample(300, 121);
    auto spec = LearnerSpec::defaults(LearnerKind::Forest);
    spec.n_trees = 10;
    spec.seed = 9;
    auto a = fit(spec, train.X, train.y);
    auto b = fit(spec, train.X, train.y);
    const auto& fa = dynamic_cast<const ForestModel&>(*a);
    const auto& fb = dynamic_cast<const ForestModel&>(*b);
    ASSERT_EQ(fa.trees().size(), fb.trees().size());
    for (std::size_t t = 0; t < fa.trees().size(); ++t) {
        const auto& na = fa.trees()[t].nodes;
        const auto& nb = fb.trees()[t].nodes;
        ASSERT_EQ(na.size(), nb.size());
        for (std::size_t k = 0; k < na.size(); ++k) {
            EXPECT_EQ(na[k].feature, nb[k].feature);
            EXPECT_EQ(na[k].threshold, nb[k].threshold);
            EXPECT_EQ(na[k].value, nb[k].value);
            EXPECT_EQ(na[k].left, nb[k].left);
            EXPECT_EQ(na[k].right, nb[k].right);
        }
    }
}

TEST(Learners, PredictColumnMismatchListsNames) {
    auto train = step_function_sample(50, 131);
    auto model = fit(LearnerSpec::defaults(LearnerKind::Tree), train.X, train.y);
    auto other = FeatureMatrix::from_columns({"x1", "zzz"}, {{1.0, 2.0}, {3.0, 4.0}});
    try {
        model->predict(other);
        FAIL() << "expected mismatch error";
    } catch (const UserError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("missing: [x2]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("extra: [zzz]"), std::string::npos) << msg;
    }
}

TEST(Learners, PredictHandlesPermutedColumns) {
    auto train = step_function_sample(100, 141);
    auto spec = LearnerSpec::defaults(LearnerKind::Forest);
    spec.n_trees = 20;
    auto model = fit(spec, train.X, train.y);

    std::vector<std::vector<double>> swapped(2);
    for (std::size_t i = 0; i < train.X.n_rows(); ++i) {
        swapped[0].push_back(train.X.at(i, 1));
        swapped[1].push_back(train.X.at(i, 0));
    }
    auto permuted = FeatureMatrix::from_columns({"x2", "x1"}, swapped);
    auto a = model->predict(train.X);
    auto b = model->predict(permuted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}
