#pragma once

#include <cstdint>
#include <string>

#include "paneldml/errors.hpp"

namespace paneldml {

enum class LearnerKind { Tree, Forest, Gbt, Lasso, Mlp };

inline std::string to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::Tree: return "tree";
        case LearnerKind::Forest: return "forest";
        case LearnerKind::Gbt: return "gbt";
        case LearnerKind::Lasso: return "lasso";
        case LearnerKind::Mlp: return "mlp";
    }
    return "?";
}

inline LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "tree") return LearnerKind::Tree;
    if (s == "forest") return LearnerKind::Forest;
    if (s == "gbt") return LearnerKind::Gbt;
    if (s == "lasso") return LearnerKind::Lasso;
    if (s == "mlp") return LearnerKind::Mlp;
    throw UserError("unknown learner kind '" + s + "' (expected tree, forest, gbt, lasso, mlp)");
}

// One bag of hyperparameters for all learner families; defaults() fills the
// fields relevant to a kind, the rest stay inert.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::Forest;
    std::uint64_t seed = 0;

    // tree-based
    int n_trees = 200;
    int max_depth = 12;          // 0 = unbounded
    int min_leaf = 5;
    int mtry = 0;                // features tried per split; 0 = kind default
    bool bootstrap = true;

    // gbt
    double learning_rate = 0.1;

    // lasso
    double lambda = -1.0;        // < 0 = choose by 5-fold cross-validation
    double tol = 1e-6;

    // mlp
    int hidden_units = 32;
    int epochs = 500;
    double step = 0.01;
    double momentum = 0.0;

    static LearnerSpec defaults(LearnerKind kind) {
        LearnerSpec s;
        s.kind = kind;
        switch (kind) {
            case LearnerKind::Tree:
                s.n_trees = 1;
                s.bootstrap = false;
                break;
            case LearnerKind::Forest:
                break; // struct defaults are the forest defaults
            case LearnerKind::Gbt:
                s.max_depth = 3;
                s.bootstrap = false;
                break;
            case LearnerKind::Lasso:
            case LearnerKind::Mlp:
                break;
        }
        return s;
    }

    void validate() const {
        if (n_trees < 0) throw UserError("n_trees must be >= 0");
        if (kind == LearnerKind::Forest && n_trees < 1)
            throw UserError("forest needs n_trees >= 1");
        if (max_depth < 0) throw UserError("max_depth must be >= 0 (0 = unbounded)");
        if (min_leaf < 1) throw UserError("min_leaf must be >= 1");
        if (mtry < 0) throw UserError("mtry must be >= 0 (0 = default)");
        if (learning_rate <= 0) throw UserError("learning_rate must be positive");
        if (tol <= 0) throw UserError("tol must be positive");
        if (hidden_units < 1) throw UserError("hidden_units must be >= 1");
        if (epochs < 0) throw UserError("epochs must be >= 0");
        if (step <= 0) throw UserError("step must be positive");
        if (momentum < 0 || momentum >= 1) throw UserError("momentum must be in [0, 1)");
    }
};

} // namespace paneldml
