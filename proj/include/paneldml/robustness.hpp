#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "paneldml/dml.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/filter.hpp"
#include "paneldml/learners/spec.hpp"
#include "paneldml/panel.hpp"

namespace paneldml {

/// One named modification of (data, config). Only the field matching `kind`
/// is consulted.
struct RobustnessVariant {
    enum class Kind { SampleExclusion, ConfounderAdd, LearnerSwap, Refold };

    std::string name;
    Kind kind = Kind::Refold;
    SampleFilter filter;     // sample_exclusion: rows matching are dropped
    std::string confounder;  // confounder_add: column joined to the controls
    LearnerSpec learner;     // learner_swap: replaces both nuisance learners
    int folds = 0;           // refold
};

inline std::string to_string(RobustnessVariant::Kind k) {
    switch (k) {
        case RobustnessVariant::Kind::SampleExclusion: return "sample_exclusion";
        case RobustnessVariant::Kind::ConfounderAdd: return "confounder_add";
        case RobustnessVariant::Kind::LearnerSwap: return "learner_swap";
        case RobustnessVariant::Kind::Refold: return "refold";
    }
    return "refold";
}

inline RobustnessVariant::Kind variant_kind_from_string(std::string_view s) {
    if (s == "sample_exclusion") return RobustnessVariant::Kind::SampleExclusion;
    if (s == "confounder_add") return RobustnessVariant::Kind::ConfounderAdd;
    if (s == "learner_swap") return RobustnessVariant::Kind::LearnerSwap;
    if (s == "refold") return RobustnessVariant::Kind::Refold;
    throw UserError("unknown robustness variant kind '" + std::string(s) + "'");
}

/// The base run is implicit and always executed; variants add to it.
struct RobustnessSuite {
    std::vector<RobustnessVariant> variants;
};

/// Per-variant outcomes: successes land in `results`, failures in `failures`
/// keyed by outcome, so one broken variant never hides the others.
struct VariantRun {
    std::map<std::string, DmlResult> results;
    std::map<std::string, std::string> failures;
    std::size_t rows_in = 0; // dataset size after the variant's data change
};

struct SuiteReport {
    std::vector<std::string> order; // "base" first, then declared order
    std::map<std::string, VariantRun> runs;
};

namespace detail {

inline void validate_suite(const RobustnessSuite& suite) {
    std::set<std::string> seen{"base"};
    for (const auto& v : suite.variants) {
        if (v.name.empty()) throw UserError("robustness variant needs a name");
        if (!seen.insert(v.name).second)
            throw UserError("duplicate robustness variant name '" + v.name + "'");
        if (v.kind == RobustnessVariant::Kind::Refold && v.folds < 2)
            throw UserError("variant '" + v.name + "': refold needs folds >= 2");
    }
}

} // namespace detail

/// Runs the base pipeline plus every variant over every outcome. Each
/// variant is a pure transformation of the shared (data, config) inputs, so
/// base results are identical whether run alone or inside a suite.
inline SuiteReport run_suite(const PanelDataset& data, const std::string& treatment,
                             const std::vector<std::string>& outcomes,
                             const std::vector<std::string>& controls, const DmlConfig& base,
                             const RobustnessSuite& suite) {
    if (outcomes.empty()) throw UserError("run_suite: no outcomes given");
    detail::validate_suite(suite);

    SuiteReport report;
    auto run_one = [&](const std::string& name, const PanelDataset& vdata,
                       const std::vector<std::string>& vcontrols, const DmlConfig& vconfig) {
        VariantRun run;
        run.rows_in = vdata.n_rows();
        for (const auto& outcome : outcomes) {
            try {
                run.results.emplace(outcome,
                                    run_dml_pipeline(vdata, outcome, treatment, vcontrols, vconfig)
                                        .dml);
            } catch (const std::exception& e) {
                run.failures.emplace(outcome, e.what());
            }
        }
        report.order.push_back(name);
        report.runs.emplace(name, std::move(run));
    };

    run_one("base", data, controls, base);

    for (const auto& variant : suite.variants) {
        switch (variant.kind) {
            case RobustnessVariant::Kind::SampleExclusion: {
                VariantRun run;
                try {
                    FilterReport freport;
                    const PanelDataset vdata = apply_filter(data, variant.filter, &freport);
                    if (freport.all_rows_excluded)
                        throw UserError("filter excluded every row");
                    run_one(variant.name, vdata, controls, base);
                    continue;
                } catch (const std::exception& e) {
                    for (const auto& outcome : outcomes) run.failures.emplace(outcome, e.what());
                }
                report.order.push_back(variant.name);
                report.runs.emplace(variant.name, std::move(run));
                break;
            }
            case RobustnessVariant::Kind::ConfounderAdd: {
                if (!data.has_column(variant.confounder) ||
                    data.is_text_column(variant.confounder)) {
                    VariantRun run;
                    for (const auto& outcome : outcomes)
                        run.failures.emplace(outcome, "confounder column '" + variant.confounder +
                                                          "' not found or not numeric");
                    report.order.push_back(variant.name);
                    report.runs.emplace(variant.name, std::move(run));
                    break;
                }
                auto vcontrols = controls;
                vcontrols.push_back(variant.confounder);
                run_one(variant.name, data, vcontrols, base);
                break;
            }
            case RobustnessVariant::Kind::LearnerSwap: {
                DmlConfig vconfig = base;
                vconfig.outcome_learner = variant.learner;
                vconfig.treatment_learner = variant.learner;
                run_one(variant.name, data, controls, vconfig);
                break;
            }
            case RobustnessVariant::Kind::Refold: {
                DmlConfig vconfig = base;
                vconfig.n_folds = variant.folds;
                run_one(variant.name, data, controls, vconfig);
                break;
            }
        }
    }
    return report;
}

} // namespace paneldml
