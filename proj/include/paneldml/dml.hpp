#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/feature_matrix.hpp"
#include "paneldml/hash.hpp"
#include "paneldml/learners.hpp"
#include "paneldml/numeric.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/panel_transform.hpp"
#include "paneldml/parallel.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

struct DmlConfig {
    int n_folds = 5;
    LearnerSpec outcome_learner = LearnerSpec::defaults(LearnerKind::Forest);
    LearnerSpec treatment_learner = LearnerSpec::defaults(LearnerKind::Forest);
    std::uint64_t seed = 0;
    bool fe_firm = true;
    bool fe_year = true;
    int outcome_lead = 1;
    bool dml1 = false;           // per-fold solves averaged instead of one pooled solve
    bool cluster_by_firm = false;

    std::string canonical_text() const {
        auto learner_text = [](const LearnerSpec& s) {
            return to_string(s.kind) + ",trees=" + std::to_string(s.n_trees) +
                   ",depth=" + std::to_string(s.max_depth) +
                   ",leaf=" + std::to_string(s.min_leaf) + ",mtry=" + std::to_string(s.mtry) +
                   ",boot=" + std::to_string(s.bootstrap) +
                   ",lr=" + detail::format_double(s.learning_rate) +
                   ",lambda=" + detail::format_double(s.lambda) +
                   ",tol=" + detail::format_double(s.tol) +
                   ",hidden=" + std::to_string(s.hidden_units) +
                   ",epochs=" + std::to_string(s.epochs) +
                   ",step=" + detail::format_double(s.step) +
                   ",momentum=" + detail::format_double(s.momentum);
        };
        return "folds=" + std::to_string(n_folds) + ";g=[" + learner_text(outcome_learner) +
               "];m=[" + learner_text(treatment_learner) + "];seed=" + std::to_string(seed) +
               ";fe_firm=" + std::to_string(fe_firm) + ";fe_year=" + std::to_string(fe_year) +
               ";lead=" + std::to_string(outcome_lead) + ";dml1=" + std::to_string(dml1) +
               ";cluster=" + std::to_string(cluster_by_firm);
    }
};

struct CrossFitResult {
    std::vector<std::size_t> fold;      // per row
    std::vector<double> outcome;        // SCR (already led/transformed)
    std::vector<double> treatment;      // Mde
    std::vector<double> g_hat, m_hat;   // out-of-fold nuisance predictions
    std::vector<double> v_hat;          // treatment - m_hat
    std::vector<std::uint32_t> firm_group; // dense firm index, for clustered se
    std::vector<double> fold_mse_g, fold_mse_m; // held-out, per fold

    std::size_t n() const { return treatment.size(); }
};

struct DmlResult {
    double theta = 0.0;
    double se = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    std::size_t n_used = 0;
    std::vector<double> u_hat; // outcome - theta*treatment - g_hat

    // config echo
    int n_folds = 0;
    std::uint64_t seed = 0;
    std::string outcome_learner, treatment_learner;
    double mean_fold_mse_g = 0.0, mean_fold_mse_m = 0.0;

    std::string to_text() const {
        std::string out = "{";
        out += "\"theta\": " + detail::format_double(theta);
        out += ", \"se\": " + detail::format_double(se);
        out += ", \"t_stat\": " + detail::format_double(t_stat);
        out += ", \"p_value\": " + detail::format_double(p_value);
        out += ", \"n\": " + std::to_string(n_used);
        out += ", \"folds\": " + std::to_string(n_folds);
        out += ", \"seed\": " + std::to_string(seed);
        out += ", \"outcome_learner\": \"" + outcome_learner + "\"";
        out += ", \"treatment_learner\": \"" + treatment_learner + "\"";
        out += ", \"fold_mse_g\": " + detail::format_double(mean_fold_mse_g);
        out += ", \"fold_mse_m\": " + detail::format_double(mean_fold_mse_m);
        out += "}";
        return out;
    }
};

// Partialled-out least squares: theta = (sum d_i^2)^-1 sum d_i (y_i - g_i).
inline double naive_theta(std::span<const double> treatment, std::span<const double> outcome,
                          std::span<const double> g_hat) {
    if (treatment.size() != outcome.size() || treatment.size() != g_hat.size())
        throw UserError("naive_theta: input lengths differ");
    if (treatment.size() < 2) throw UserError("naive_theta: need at least 2 rows");
    double denom = 0.0, numer = 0.0;
    for (std::size_t i = 0; i < treatment.size(); ++i) {
        denom += treatment[i] * treatment[i];
        numer += treatment[i] * (outcome[i] - g_hat[i]);
    }
    if (denom <= 0.0) throw UserError("naive_theta: treatment has zero variance");
    return numer / denom;
}

inline CrossFitResult cross_fit(const PanelDataset& data, const std::string& outcome,
                                const std::string& treatment,
                                const std::vector<std::string>& controls,
                                const DmlConfig& config) {
    std::size_t n = data.n_rows();
    auto k = static_cast<std::size_t>(config.n_folds);
    if (config.n_folds < 2) throw UserError("n_folds must be >= 2");
    if (k > n / 10)
        throw UserError("n_folds = " + std::to_string(k) + " exceeds rows/10 = " +
                        std::to_string(n / 10));

    auto y_col = data.column(outcome);
    auto d_col = data.column(treatment);
    for (std::size_t i = 0; i < n; ++i)
        if (is_missing(y_col[i]) || is_missing(d_col[i]))
            throw UserError("cross_fit requires complete rows; run listwise deletion first");
    for (const auto& c : controls)
        for (double v : data.column(c))
            if (is_missing(v))
                throw UserError("cross_fit requires complete rows; control '" + c +
                                "' has missing cells");

    auto X = FeatureMatrix::from_dataset(data, controls);

    // seeded shuffle, then contiguous blocks of the shuffled order
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(derive_seed(config.seed, 10));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);

    CrossFitResult cf;
    cf.fold.resize(n);
    cf.outcome.assign(y_col.begin(), y_col.end());
    cf.treatment.assign(d_col.begin(), d_col.end());
    cf.g_hat.resize(n);
    cf.m_hat.resize(n);
    cf.v_hat.resize(n);
    cf.fold_mse_g.resize(k);
    cf.fold_mse_m.resize(k);

    std::vector<std::vector<std::size_t>> fold_rows(k), train_rows(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t f = std::min(i * k / n, k - 1);
        cf.fold[order[i]] = f;
        fold_rows[f].push_back(order[i]);
    }
    for (std::size_t f = 0; f < k; ++f) {
        if (fold_rows[f].size() < 2)
            throw UserError("fold " + std::to_string(f) + " has fewer than 2 rows");
        for (std::size_t i = 0; i < n; ++i)
            if (cf.fold[i] != f) train_rows[f].push_back(i);
    }

    parallel_for(k, [&](std::size_t f) {
        const auto& train = train_rows[f];
        auto X_train = X.gather(train);
        std::vector<double> y_train(train.size()), d_train(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            y_train[i] = cf.outcome[train[i]];
            d_train[i] = cf.treatment[train[i]];
        }

        auto g_spec = config.outcome_learner;
        g_spec.seed = derive_seed(config.seed, 11, f);
        auto m_spec = config.treatment_learner;
        m_spec.seed = derive_seed(config.seed, 12, f);
        auto g_model = fit(g_spec, X_train, y_train);
        auto m_model = fit(m_spec, X_train, d_train);

        double sse_g = 0.0, sse_m = 0.0;
        for (std::size_t r : fold_rows[f]) {
            double g = g_model->predict_row(X.row(r));
            double m = m_model->predict_row(X.row(r));
            cf.g_hat[r] = g;
            cf.m_hat[r] = m;
            cf.v_hat[r] = cf.treatment[r] - m;
            sse_g += (cf.outcome[r] - g) * (cf.outcome[r] - g);
            sse_m += (cf.treatment[r] - m) * (cf.treatment[r] - m);
        }
        cf.fold_mse_g[f] = sse_g / static_cast<double>(fold_rows[f].size());
        cf.fold_mse_m[f] = sse_m / static_cast<double>(fold_rows[f].size());
    });

    cf.firm_group.resize(n);
    std::unordered_map<std::string, std::uint32_t> firm_index;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] =
            firm_index.emplace(data.firm_id(i), static_cast<std::uint32_t>(firm_index.size()));
        cf.firm_group[i] = it->second;
    }
    return cf;
}

namespace detail {

inline double pooled_theta(const CrossFitResult& cf, std::span<const std::size_t> rows) {
    double denom = 0.0, numer = 0.0;
    for (std::size_t i : rows) {
        denom += cf.v_hat[i] * cf.treatment[i];
        numer += cf.v_hat[i] * (cf.outcome[i] - cf.g_hat[i]);
    }
    if (std::fabs(denom) < 1e-12 * static_cast<double>(rows.size()))
        throw UserError("treatment fully explained by controls");
    return numer / denom;
}

} // namespace detail

inline DmlResult dml_theta(const CrossFitResult& cf, const DmlConfig& config = {}) {
    std::size_t n = cf.n();
    if (n < 2) throw UserError("dml_theta: empty cross-fit result");

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0u);

    DmlResult res;
    if (config.dml1) {
        std::size_t k = cf.fold_mse_g.size();
        double sum = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < n; ++i)
                if (cf.fold[i] == f) rows.push_back(i);
            sum += detail::pooled_theta(cf, rows);
        }
        res.theta = sum / static_cast<double>(k);
    } else {
        res.theta = detail::pooled_theta(cf, all);
    }

    res.u_hat.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        res.u_hat[i] = cf.outcome[i] - res.theta * cf.treatment[i] - cf.g_hat[i];

    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) denom += cf.v_hat[i] * cf.treatment[i];
    if (std::fabs(denom) < 1e-12 * static_cast<double>(n))
        throw UserError("treatment fully explained by controls");

    double meat = 0.0;
    if (config.cluster_by_firm) {
        std::uint32_t n_groups = 0;
        for (auto g : cf.firm_group) n_groups = std::max(n_groups, g + 1);
        std::vector<double> group_sum(n_groups, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            group_sum[cf.firm_group[i]] += cf.v_hat[i] * res.u_hat[i];
        for (double s : group_sum) meat += s * s;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double s = cf.v_hat[i] * res.u_hat[i];
            meat += s * s;
        }
    }
    res.se = std::sqrt(meat) / std::fabs(denom);
    res.t_stat = res.theta / res.se;
    res.p_value = two_sided_p(res.t_stat);
    res.n_used = n;
    res.n_folds = static_cast<int>(cf.fold_mse_g.size());
    res.seed = config.seed;
    res.outcome_learner = to_string(config.outcome_learner.kind);
    res.treatment_learner = to_string(config.treatment_learner.kind);
    res.mean_fold_mse_g = mean(cf.fold_mse_g);
    res.mean_fold_mse_m = mean(cf.fold_mse_m);
    return res;
}

// Moment value m(eps) = mean_i w_i * (y_i - (g_i + eps*h_i) - theta*d_i);
// w = v_hat gives the orthogonal score, w = d the naive one.
inline double perturbed_moment(std::span<const double> weights, std::span<const double> outcome,
                               std::span<const double> g_hat, std::span<const double> treatment,
                               double theta, std::span<const double> h, double eps) {
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        sum += weights[i] * (outcome[i] - (g_hat[i] + eps * h[i]) - theta * treatment[i]);
    return sum / static_cast<double>(weights.size());
}

// Central-difference Gateaux slope of the moment in direction h at eps = 0.
inline double moment_gateaux_slope(std::span<const double> weights,
                                   std::span<const double> outcome,
                                   std::span<const double> g_hat,
                                   std::span<const double> treatment, double theta,
                                   std::span<const double> h, double eps = 1e-4) {
    double up = perturbed_moment(weights, outcome, g_hat, treatment, theta, h, eps);
    double down = perturbed_moment(weights, outcome, g_hat, treatment, theta, h, -eps);
    return (up - down) / (2 * eps);
}

struct PipelineManifest {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::size_t rows_in = 0;
    std::size_t rows_dropped = 0;
};

struct PipelineResult {
    DmlResult dml;
    CrossFitResult cf;
    PanelDataset prepared; // post lead, deletion, and (optional) within transform
    std::string lead_column;
    WithinReport within;
    PipelineManifest manifest;
};

// lead_outcome -> listwise deletion -> within transform -> cross_fit ->
// dml_theta, with errors tagged by stage.
inline PipelineResult run_dml_pipeline(const PanelDataset& data, const std::string& outcome,
                                       const std::string& treatment,
                                       const std::vector<std::string>& controls,
                                       const DmlConfig& config) {
    auto stage = [](const char* name, auto&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
    };

    std::string lead_col = outcome;
    PanelDataset current = data;
    if (config.outcome_lead > 0) {
        current = stage("lead_outcome",
                        [&] { return lead_outcome(data, outcome, config.outcome_lead); });
        lead_col = outcome + "_lead" + std::to_string(config.outcome_lead);
    }

    std::vector<std::string> active{lead_col, treatment};
    active.insert(active.end(), controls.begin(), controls.end());

    std::size_t dropped = 0;
    current = stage("listwise_deletion", [&] { return drop_missing(current, active, &dropped); });

    WithinReport within;
    if (config.fe_firm || config.fe_year) {
        WithinEffects effects{config.fe_firm, config.fe_year};
        current = stage("within_transform", [&] {
            return within_transform(current, active, effects, &within);
        });
    }

    auto cf = stage("cross_fit",
                    [&] { return cross_fit(current, lead_col, treatment, controls, config); });
    auto dml = stage("dml_theta", [&] { return dml_theta(cf, config); });

    PipelineManifest manifest;
    manifest.seed = config.seed;
    manifest.config_hash = hex64(fnv1a64(config.canonical_text() + "|y=" + outcome +
                                         "|d=" + treatment + "|x=" + [&] {
                                             std::string joined;
                                             for (const auto& c : controls) joined += c + ",";
                                             return joined;
                                         }()));
    manifest.rows_in = data.n_rows();
    manifest.rows_dropped = dropped;

    return {std::move(dml), std::move(cf), std::move(current), lead_col, within, manifest};
}

} // namespace paneldml
