#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "paneldml/dml.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/filter.hpp"
#include "paneldml/hash.hpp"
#include "paneldml/indicators.hpp"
#include "paneldml/learners/spec.hpp"
#include "paneldml/monte_carlo.hpp"
#include "paneldml/robustness.hpp"
#include "paneldml/synthgen.hpp"

namespace paneldml {

enum class Command { Indicators, Estimate, Robustness, Simulate };

inline std::string to_string(Command c) {
    switch (c) {
        case Command::Indicators: return "indicators";
        case Command::Estimate: return "estimate";
        case Command::Robustness: return "robustness";
        case Command::Simulate: return "simulate";
    }
    return "estimate";
}

/// Indicator groups are auto-detected from available raw columns when
/// `compute` is empty.
struct IndicatorsJob {
    std::filesystem::path input;
    std::vector<std::string> compute; // subset of scr, mde, mediators, controls
    Scr1Mode scr1_mode = Scr1Mode::PooledAverage;
    std::array<double, 3> mde_weights = kMdeDefaultWeights;
};

struct EstimateJob {
    std::filesystem::path input;
    std::vector<std::string> outcomes;
    std::string treatment;
    std::vector<std::string> controls;
    std::vector<std::string> text_columns; // CSV columns parsed as text
    DmlConfig dml;
};

struct RobustnessJob {
    EstimateJob estimate;
    RobustnessSuite suite;
};

struct SimulateJob {
    DgpSpec dgp;
    std::size_t replications = 200;
    std::vector<EstimatorConfig> estimators;
};

struct RunConfig {
    Command command = Command::Estimate;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    IndicatorsJob indicators;
    EstimateJob estimate;
    RobustnessJob robustness;
    SimulateJob simulate;
    std::string canonical; // sorted-key JSON of the effective config

    std::string config_hash() const { return hex64(fnv1a64(canonical)); }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const char* where,
                                std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok |= key == a;
        if (!ok)
            throw UserError(std::string(where) + ": unknown key '" + key + "'");
    }
}

inline const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

template <typename T>
T get_as(const json& value, const char* where, const char* key) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw UserError(std::string(where) + ": bad value for '" + key + "'");
    }
}

template <typename T>
void assign(const json& obj, const char* where, const char* key, T& out) {
    if (const json* v = find(obj, key)) out = get_as<T>(*v, where, key);
}

inline std::vector<std::string> string_list(const json& value, const char* where,
                                            const char* key) {
    if (value.is_string()) return {value.get<std::string>()};
    if (value.is_array()) {
        std::vector<std::string> out;
        for (const auto& v : value) out.push_back(get_as<std::string>(v, where, key));
        return out;
    }
    throw UserError(std::string(where) + ": '" + key + "' must be a string or string array");
}

inline LearnerSpec parse_learner(const json& obj, const char* where) {
    if (!obj.is_object()) throw UserError(std::string(where) + ": learner must be an object");
    reject_unknown_keys(obj, where,
                        {"kind", "n_trees", "max_depth", "min_leaf", "mtry", "bootstrap",
                         "learning_rate", "lambda", "tol", "hidden_units", "epochs", "step",
                         "momentum"});
    const json* kind = find(obj, "kind");
    if (!kind) throw UserError(std::string(where) + ": learner needs a 'kind'");
    LearnerSpec spec =
        LearnerSpec::defaults(learner_kind_from_string(get_as<std::string>(*kind, where, "kind")));
    assign(obj, where, "n_trees", spec.n_trees);
    assign(obj, where, "max_depth", spec.max_depth);
    assign(obj, where, "min_leaf", spec.min_leaf);
    assign(obj, where, "mtry", spec.mtry);
    assign(obj, where, "bootstrap", spec.bootstrap);
    assign(obj, where, "learning_rate", spec.learning_rate);
    assign(obj, where, "lambda", spec.lambda);
    assign(obj, where, "tol", spec.tol);
    assign(obj, where, "hidden_units", spec.hidden_units);
    assign(obj, where, "epochs", spec.epochs);
    assign(obj, where, "step", spec.step);
    assign(obj, where, "momentum", spec.momentum);
    spec.validate();
    return spec;
}

inline SampleFilter parse_filter(const json& obj, const char* where) {
    if (!obj.is_object()) throw UserError(std::string(where) + ": filter must be an object");
    reject_unknown_keys(obj, where, {"combine", "conditions"});
    SampleFilter filter;
    if (const json* combine = find(obj, "combine")) {
        const auto s = get_as<std::string>(*combine, where, "combine");
        if (s == "all") filter.combine = SampleFilter::Combine::All;
        else if (s == "any") filter.combine = SampleFilter::Combine::Any;
        else throw UserError(std::string(where) + ": combine must be 'all' or 'any'");
    }
    const json* conditions = find(obj, "conditions");
    if (!conditions || !conditions->is_array())
        throw UserError(std::string(where) + ": filter needs a 'conditions' array");
    for (const auto& c : *conditions) {
        reject_unknown_keys(c, where, {"column", "op", "value"});
        FilterCondition cond;
        if (const json* col = find(c, "column"))
            cond.column = get_as<std::string>(*col, where, "column");
        else
            throw UserError(std::string(where) + ": condition needs a 'column'");
        std::string op = "eq";
        assign(c, where, "op", op);
        using Op = FilterCondition::Op;
        if (op == "eq") cond.op = Op::Eq;
        else if (op == "ne") cond.op = Op::Ne;
        else if (op == "lt") cond.op = Op::Lt;
        else if (op == "le") cond.op = Op::Le;
        else if (op == "gt") cond.op = Op::Gt;
        else if (op == "ge") cond.op = Op::Ge;
        else if (op == "in") cond.op = Op::In;
        else throw UserError(std::string(where) + ": unknown op '" + op + "'");
        const json* value = find(c, "value");
        if (!value) throw UserError(std::string(where) + ": condition needs a 'value'");
        if (value->is_number()) {
            cond.value = value->get<double>();
        } else if (value->is_string()) {
            cond.value = value->get<std::string>();
        } else if (value->is_array()) {
            std::vector<std::string> set;
            for (const auto& v : *value) set.push_back(get_as<std::string>(v, where, "value"));
            cond.value = std::move(set);
        } else {
            throw UserError(std::string(where) +
                            ": condition value must be a number, string, or string array");
        }
        filter.conditions.push_back(std::move(cond));
    }
    return filter;
}

/// Shared estimation fields for the estimate and robustness sections.
inline EstimateJob parse_estimate(const json& obj, const char* where, std::uint64_t seed,
                                  std::initializer_list<std::string_view> extra_keys = {}) {
    std::vector<std::string_view> allowed{"input",        "outcome",      "treatment",
                                          "controls",     "text_columns", "lead",
                                          "folds",        "learner",      "g_learner",
                                          "m_learner",    "firm_effects", "year_effects",
                                          "dml1",         "cluster_by_firm"};
    allowed.insert(allowed.end(), extra_keys.begin(), extra_keys.end());
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok |= key == a;
        if (!ok) throw UserError(std::string(where) + ": unknown key '" + key + "'");
    }

    EstimateJob job;
    if (const json* input = find(obj, "input"))
        job.input = get_as<std::string>(*input, where, "input");
    else
        throw UserError(std::string(where) + ": needs an 'input' CSV path");
    if (const json* outcome = find(obj, "outcome"))
        job.outcomes = string_list(*outcome, where, "outcome");
    else
        throw UserError(std::string(where) + ": needs 'outcome'");
    if (const json* treatment = find(obj, "treatment"))
        job.treatment = get_as<std::string>(*treatment, where, "treatment");
    else
        throw UserError(std::string(where) + ": needs 'treatment'");
    if (const json* controls = find(obj, "controls"))
        job.controls = string_list(*controls, where, "controls");
    if (const json* text = find(obj, "text_columns"))
        job.text_columns = string_list(*text, where, "text_columns");

    job.dml.seed = seed;
    assign(obj, where, "lead", job.dml.outcome_lead);
    assign(obj, where, "folds", job.dml.n_folds);
    assign(obj, where, "firm_effects", job.dml.fe_firm);
    assign(obj, where, "year_effects", job.dml.fe_year);
    assign(obj, where, "dml1", job.dml.dml1);
    assign(obj, where, "cluster_by_firm", job.dml.cluster_by_firm);
    if (const json* learner = find(obj, "learner")) {
        job.dml.outcome_learner = parse_learner(*learner, where);
        job.dml.treatment_learner = job.dml.outcome_learner;
    }
    if (const json* g = find(obj, "g_learner"))
        job.dml.outcome_learner = parse_learner(*g, where);
    if (const json* m = find(obj, "m_learner"))
        job.dml.treatment_learner = parse_learner(*m, where);
    return job;
}

inline RobustnessSuite parse_suite(const json& arr, const char* where) {
    if (!arr.is_array()) throw UserError(std::string(where) + ": 'variants' must be an array");
    RobustnessSuite suite;
    for (const auto& v : arr) {
        reject_unknown_keys(v, where, {"name", "kind", "filter", "column", "learner", "folds"});
        RobustnessVariant variant;
        if (const json* name = find(v, "name"))
            variant.name = get_as<std::string>(*name, where, "name");
        else
            throw UserError(std::string(where) + ": variant needs a 'name'");
        const json* kind = find(v, "kind");
        if (!kind) throw UserError(std::string(where) + ": variant needs a 'kind'");
        variant.kind = variant_kind_from_string(get_as<std::string>(*kind, where, "kind"));
        switch (variant.kind) {
            case RobustnessVariant::Kind::SampleExclusion: {
                const json* filter = find(v, "filter");
                if (!filter)
                    throw UserError(std::string(where) + ": sample_exclusion needs 'filter'");
                variant.filter = parse_filter(*filter, where);
                break;
            }
            case RobustnessVariant::Kind::ConfounderAdd: {
                const json* column = find(v, "column");
                if (!column)
                    throw UserError(std::string(where) + ": confounder_add needs 'column'");
                variant.confounder = get_as<std::string>(*column, where, "column");
                break;
            }
            case RobustnessVariant::Kind::LearnerSwap: {
                const json* learner = find(v, "learner");
                if (!learner)
                    throw UserError(std::string(where) + ": learner_swap needs 'learner'");
                variant.learner = parse_learner(*learner, where);
                break;
            }
            case RobustnessVariant::Kind::Refold: {
                const json* folds = find(v, "folds");
                if (!folds) throw UserError(std::string(where) + ": refold needs 'folds'");
                variant.folds = get_as<int>(*folds, where, "folds");
                break;
            }
        }
        suite.variants.push_back(std::move(variant));
    }
    return suite;
}

inline DgpSpec parse_dgp(const json& obj, const char* where, std::uint64_t seed) {
    reject_unknown_keys(obj, where,
                        {"n_firms", "n_years", "theta", "p", "g_family", "m_family", "sigma_u",
                         "sigma_v", "firm_effect_sd", "year_effect_sd", "binary_treatment",
                         "first_year"});
    DgpSpec spec;
    spec.seed = seed;
    assign(obj, where, "n_firms", spec.n_firms);
    assign(obj, where, "n_years", spec.n_years);
    assign(obj, where, "theta", spec.theta0);
    assign(obj, where, "p", spec.p);
    if (const json* g = find(obj, "g_family"))
        spec.g_family = nuisance_family_from_string(get_as<std::string>(*g, where, "g_family"));
    if (const json* m = find(obj, "m_family"))
        spec.m_family = nuisance_family_from_string(get_as<std::string>(*m, where, "m_family"));
    assign(obj, where, "sigma_u", spec.sigma_u);
    assign(obj, where, "sigma_v", spec.sigma_v);
    assign(obj, where, "firm_effect_sd", spec.firm_effect_sd);
    assign(obj, where, "year_effect_sd", spec.year_effect_sd);
    assign(obj, where, "binary_treatment", spec.binary_treatment);
    assign(obj, where, "first_year", spec.first_year);
    spec.validate();
    return spec;
}

inline SimulateJob parse_simulate(const json& obj, const char* where, std::uint64_t seed) {
    reject_unknown_keys(obj, where, {"dgp", "replications", "estimators"});
    SimulateJob job;
    if (const json* dgp = find(obj, "dgp")) job.dgp = parse_dgp(*dgp, "simulate.dgp", seed);
    job.dgp.seed = seed;
    assign(obj, where, "replications", job.replications);
    const json* estimators = find(obj, "estimators");
    if (!estimators || !estimators->is_array() || estimators->empty())
        throw UserError(std::string(where) + ": needs a non-empty 'estimators' array");
    for (const auto& e : *estimators) {
        reject_unknown_keys(e, "simulate.estimators",
                            {"name", "kind", "folds", "learner", "g_learner", "m_learner",
                             "firm_effects", "year_effects", "dml1", "cluster_by_firm"});
        EstimatorConfig config;
        if (const json* name = find(e, "name"))
            config.name = get_as<std::string>(*name, where, "name");
        else
            throw UserError(std::string(where) + ": estimator needs a 'name'");
        std::string kind = "dml";
        assign(e, where, "kind", kind);
        if (kind == "naive") config.kind = EstimatorConfig::Kind::NaiveOwnSample;
        else if (kind == "dml") config.kind = EstimatorConfig::Kind::Dml;
        else throw UserError(std::string(where) + ": estimator kind must be 'naive' or 'dml'");
        // The synthetic DGP has no fixed effects by default, so the within
        // transform defaults off here (unlike observational estimation).
        config.dml.fe_firm = false;
        config.dml.fe_year = false;
        assign(e, where, "folds", config.dml.n_folds);
        assign(e, where, "firm_effects", config.dml.fe_firm);
        assign(e, where, "year_effects", config.dml.fe_year);
        assign(e, where, "dml1", config.dml.dml1);
        assign(e, where, "cluster_by_firm", config.dml.cluster_by_firm);
        if (const json* learner = find(e, "learner")) {
            config.dml.outcome_learner = parse_learner(*learner, "simulate.estimators.learner");
            config.dml.treatment_learner = config.dml.outcome_learner;
        }
        if (const json* g = find(e, "g_learner"))
            config.dml.outcome_learner = parse_learner(*g, "simulate.estimators.g_learner");
        if (const json* m = find(e, "m_learner"))
            config.dml.treatment_learner = parse_learner(*m, "simulate.estimators.m_learner");
        job.estimators.push_back(std::move(config));
    }
    return job;
}

inline IndicatorsJob parse_indicators(const json& obj, const char* where) {
    reject_unknown_keys(obj, where, {"input", "compute", "scr1_mode", "mde_weights"});
    IndicatorsJob job;
    if (const json* input = find(obj, "input"))
        job.input = get_as<std::string>(*input, where, "input");
    else
        throw UserError(std::string(where) + ": needs an 'input' CSV path");
    if (const json* compute = find(obj, "compute")) {
        job.compute = string_list(*compute, where, "compute");
        for (const auto& group : job.compute)
            if (group != "scr" && group != "mde" && group != "mediators" && group != "controls")
                throw UserError(std::string(where) + ": unknown compute group '" + group + "'");
    }
    if (const json* mode = find(obj, "scr1_mode"))
        job.scr1_mode = scr1_mode_from_string(get_as<std::string>(*mode, where, "scr1_mode"));
    if (const json* weights = find(obj, "mde_weights")) {
        if (!weights->is_array() || weights->size() != 3)
            throw UserError(std::string(where) + ": 'mde_weights' must hold 3 numbers");
        for (std::size_t i = 0; i < 3; ++i)
            job.mde_weights[i] = get_as<double>((*weights)[i], where, "mde_weights");
    }
    return job;
}

} // namespace detail

namespace detail {

inline json parse_json_text(const std::string& text) {
    try {
        return json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw UserError(std::string("config is not valid JSON: ") + e.what());
    }
}

} // namespace detail

/// Builds the run configuration from already-parsed JSON. Exactly one command
/// section must be present; unknown keys anywhere are rejected.
inline RunConfig run_config_from_json(detail::json root) {
    if (!root.is_object()) throw UserError("config root must be an object");
    detail::reject_unknown_keys(root, "config",
                                {"seed", "out", "indicators", "estimate", "robustness",
                                 "simulate"});

    RunConfig config;
    detail::assign(root, "config", "seed", config.seed);
    if (const detail::json* out = detail::find(root, "out"))
        config.out_dir = detail::get_as<std::string>(*out, "config", "out");
    else
        throw UserError("config: needs an 'out' directory");

    std::vector<std::string> sections;
    for (const char* name : {"indicators", "estimate", "robustness", "simulate"})
        if (detail::find(root, name)) sections.push_back(name);
    if (sections.size() != 1)
        throw UserError("config: exactly one command section required, found " +
                        std::to_string(sections.size()));

    const std::string& section = sections.front();
    if (section == "indicators") {
        config.command = Command::Indicators;
        config.indicators = detail::parse_indicators(root["indicators"], "indicators");
    } else if (section == "estimate") {
        config.command = Command::Estimate;
        config.estimate = detail::parse_estimate(root["estimate"], "estimate", config.seed);
    } else if (section == "robustness") {
        config.command = Command::Robustness;
        config.robustness.estimate =
            detail::parse_estimate(root["robustness"], "robustness", config.seed, {"variants"});
        if (const detail::json* variants = detail::find(root["robustness"], "variants"))
            config.robustness.suite = detail::parse_suite(*variants, "robustness.variants");
    } else {
        config.command = Command::Simulate;
        config.simulate = detail::parse_simulate(root["simulate"], "simulate", config.seed);
    }

    // Effective config for hashing: the parsed JSON with the seed folded in,
    // re-serialized with sorted keys.
    root["seed"] = config.seed;
    config.canonical = root.dump();
    return config;
}

inline RunConfig parse_run_config(const std::string& text) {
    return run_config_from_json(detail::parse_json_text(text));
}

/// Command-line values that take precedence over the config file. They are
/// merged into the JSON before validation so the config hash reflects the
/// effective run.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> folds;
    std::optional<std::string> learner;
};

inline RunConfig load_run_config(const std::filesystem::path& path,
                                 const CliOverrides& overrides = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open config file '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    detail::json root = detail::parse_json_text(text);
    if (!root.is_object()) throw UserError("config root must be an object");
    if (overrides.seed) root["seed"] = *overrides.seed;
    if (overrides.out) root["out"] = *overrides.out;
    if (overrides.folds || overrides.learner) {
        detail::json* section = nullptr;
        for (const char* name : {"estimate", "robustness"})
            if (root.contains(name)) section = &root[name];
        if (!section)
            throw UserError("--folds/--learner apply only to estimate or robustness configs");
        if (overrides.folds) (*section)["folds"] = *overrides.folds;
        if (overrides.learner) (*section)["learner"] = {{"kind", *overrides.learner}};
    }
    return run_config_from_json(std::move(root));
}

} // namespace paneldml
