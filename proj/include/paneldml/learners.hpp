#pragma once

#include <memory>
#include <span>

#include "paneldml/learners/forest.hpp"
#include "paneldml/learners/gbt.hpp"
#include "paneldml/learners/lasso.hpp"
#include "paneldml/learners/mlp.hpp"
#include "paneldml/learners/model.hpp"
#include "paneldml/learners/spec.hpp"
#include "paneldml/learners/tree.hpp"

namespace paneldml {

inline std::unique_ptr<Model> fit(const LearnerSpec& spec, const FeatureMatrix& X,
                                  std::span<const double> y) {
    spec.validate();
    if (X.n_rows() != y.size()) throw UserError("fit: rows(X) must equal len(y)");
    if (X.n_rows() < 2) throw UserError("fit: need at least 2 rows");
    for (double v : y)
        if (!std::isfinite(v)) throw UserError("fit: target contains non-finite values");

    std::unique_ptr<Model> model;
    auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (*lo == *hi) {
        model = std::make_unique<ConstantModel>(spec.kind, *lo);
        model->mutable_info().constant = true;
    } else {
        switch (spec.kind) {
            case LearnerKind::Tree: model = fit_tree(spec, X, y); break;
            case LearnerKind::Forest: model = fit_forest(spec, X, y); break;
            case LearnerKind::Gbt: model = fit_gbt(spec, X, y); break;
            case LearnerKind::Lasso: model = fit_lasso(spec, X, y); break;
            case LearnerKind::Mlp: model = fit_mlp(spec, X, y); break;
        }
    }

    model->set_training_columns(X.names());
    model->mutable_info().seed = spec.seed;
    double sse = 0.0;
    for (std::size_t i = 0; i < X.n_rows(); ++i) {
        double e = model->predict_row(X.row(i)) - y[i];
        sse += e * e;
    }
    model->mutable_info().in_sample_mse = sse / static_cast<double>(X.n_rows());
    return model;
}

} // namespace paneldml
