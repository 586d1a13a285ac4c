#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "paneldml/bias.hpp"
#include "paneldml/dml.hpp"
#include "paneldml/numeric.hpp"
#include "paneldml/synthgen.hpp"

namespace paneldml {

struct EstimatorConfig {
    enum class Kind { NaiveOwnSample, Dml };
    std::string name;
    Kind kind = Kind::Dml;
    DmlConfig dml; // for the naive path only outcome_learner, lead, and fe flags apply
};

struct EstimatorStats {
    std::string name;
    std::size_t replications = 0; // successful ones
    std::size_t failures = 0;
    double mean_bias = 0.0;
    double rmse = 0.0;
    double empirical_se = 0.0;    // population sd so rmse^2 = bias^2 + se^2
    double mean_reported_se = 0.0;
    double coverage = 0.0;        // 95% CI
};

struct MonteCarloReport {
    std::size_t replications = 0;
    std::vector<EstimatorStats> estimators;
};

struct EstimateOutcome {
    double theta = 0.0;
    double se = 0.0;
};

namespace detail {

struct NaivePrepared {
    PanelDataset data;
    std::string lead_col;
};

inline NaivePrepared naive_prepare(const PanelDataset& data, const std::string& outcome,
                                   const std::string& treatment,
                                   const std::vector<std::string>& controls,
                                   const DmlConfig& config) {
    PanelDataset current = data;
    std::string lead_col = outcome;
    if (config.outcome_lead > 0) {
        current = lead_outcome(data, outcome, config.outcome_lead);
        lead_col = outcome + "_lead" + std::to_string(config.outcome_lead);
    }
    std::vector<std::string> active{lead_col, treatment};
    active.insert(active.end(), controls.begin(), controls.end());
    current = drop_missing(current, active);
    if (config.fe_firm || config.fe_year)
        current = within_transform(current, active, {config.fe_firm, config.fe_year});
    return {std::move(current), std::move(lead_col)};
}

// Own-sample Eq.-(6) path: g_hat fit and evaluated on the same rows.
// Reported se is the heteroskedasticity-robust one for that moment.
inline EstimateOutcome naive_estimate(const PanelDataset& prepared, const std::string& lead_col,
                                      const std::string& treatment,
                                      const std::vector<std::string>& controls,
                                      const DmlConfig& config) {
    auto X = FeatureMatrix::from_dataset(prepared, controls);
    auto y_col = prepared.column(lead_col);
    auto d_col = prepared.column(treatment);
    std::vector<double> y(y_col.begin(), y_col.end());
    std::vector<double> d(d_col.begin(), d_col.end());

    auto g_spec = config.outcome_learner;
    g_spec.seed = derive_seed(config.seed, 13);
    auto g_model = fit(g_spec, X, y);
    auto g_hat = g_model->predict(X);

    double theta = naive_theta(d, y, g_hat);
    double denom = 0.0, meat = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        denom += d[i] * d[i];
        double u = y[i] - theta * d[i] - g_hat[i];
        meat += d[i] * d[i] * u * u;
    }
    return {theta, std::sqrt(meat) / denom};
}

} // namespace detail

inline MonteCarloReport monte_carlo(const DgpSpec& spec,
                                    const std::vector<EstimatorConfig>& estimators,
                                    std::size_t replications) {
    if (replications < 50) throw UserError("monte_carlo needs replications >= 50");
    if (estimators.empty()) throw UserError("monte_carlo needs at least one estimator");

    std::size_t n_est = estimators.size();
    std::vector<std::vector<double>> thetas(n_est), ses(n_est);
    std::vector<std::vector<char>> ok(n_est, std::vector<char>(replications, 0));
    std::vector<std::vector<double>> theta_slot(n_est, std::vector<double>(replications)),
        se_slot(n_est, std::vector<double>(replications));

    auto controls = control_names(spec);
    parallel_for(replications, [&](std::size_t r) {
        DgpSpec rep_spec = spec;
        rep_spec.seed = derive_seed(spec.seed, 30, r);
        auto draw = generate_panel(rep_spec);
        for (std::size_t e = 0; e < n_est; ++e) {
            auto config = estimators[e].dml;
            config.seed = derive_seed(spec.seed, 31, r, e);
            try {
                EstimateOutcome out;
                if (estimators[e].kind == EstimatorConfig::Kind::NaiveOwnSample) {
                    auto prep = detail::naive_prepare(draw.data, "SCR", "Mde", controls, config);
                    out = detail::naive_estimate(prep.data, prep.lead_col, "Mde", controls,
                                                 config);
                } else {
                    auto res = run_dml_pipeline(draw.data, "SCR", "Mde", controls, config);
                    out = {res.dml.theta, res.dml.se};
                }
                theta_slot[e][r] = out.theta;
                se_slot[e][r] = out.se;
                ok[e][r] = 1;
            } catch (const std::exception&) {
                ok[e][r] = 0;
            }
        }
    });

    MonteCarloReport report;
    report.replications = replications;
    for (std::size_t e = 0; e < n_est; ++e) {
        EstimatorStats st;
        st.name = estimators[e].name;
        std::vector<double> th, se;
        for (std::size_t r = 0; r < replications; ++r) {
            if (ok[e][r]) {
                th.push_back(theta_slot[e][r]);
                se.push_back(se_slot[e][r]);
            } else {
                ++st.failures;
            }
        }
        st.replications = th.size();
        if (!th.empty()) {
            auto n = static_cast<double>(th.size());
            double m = mean(th);
            st.mean_bias = m - spec.theta0;
            double sq = 0.0, var = 0.0, covered = 0.0;
            for (std::size_t i = 0; i < th.size(); ++i) {
                sq += (th[i] - spec.theta0) * (th[i] - spec.theta0);
                var += (th[i] - m) * (th[i] - m);
                if (std::fabs(th[i] - spec.theta0) <= kZ975 * se[i]) covered += 1.0;
            }
            st.rmse = std::sqrt(sq / n);
            st.empirical_se = std::sqrt(var / n);
            st.mean_reported_se = mean(se);
            st.coverage = covered / n;
        }
        report.estimators.push_back(std::move(st));
    }
    return report;
}

} // namespace paneldml
