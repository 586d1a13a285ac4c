#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "paneldml/config.hpp"
#include "paneldml/dml.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/indicators.hpp"
#include "paneldml/monte_carlo.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/robustness.hpp"
#include "paneldml/table.hpp"

namespace paneldml {

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw UserError("short write to '" + path.string() + "'");
}

inline void write_json_file(const std::filesystem::path& path, const json& value) {
    write_text_file(path, value.dump(2) + "\n");
}

inline std::vector<std::string> csv_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open input file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw UserError("empty file '" + path.string() + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return split_csv_line(line);
}

inline std::string column_summary(const PanelDataset& data, const std::string& name) {
    auto col = data.column(name);
    std::size_t missing = 0, n = 0;
    double sum = 0.0, lo = 0.0, hi = 0.0;
    for (double v : col) {
        if (std::isnan(v)) {
            ++missing;
            continue;
        }
        if (n == 0) lo = hi = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++n;
    }
    std::ostringstream os;
    os << name << ": n=" << n << " missing=" << missing;
    if (n > 0)
        os << " mean=" << format_double(sum / static_cast<double>(n)) << " min="
           << format_double(lo) << " max=" << format_double(hi);
    return os.str();
}

/// Filesystem-safe variant of a config-authored name.
inline std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')
                   ? c
                   : '_';
    return out;
}

inline json dml_result_json(const DmlResult& r) {
    return json{{"theta", r.theta},
                {"se", r.se},
                {"t_stat", r.t_stat},
                {"p_value", r.p_value},
                {"n", r.n_used},
                {"folds", r.n_folds},
                {"seed", r.seed},
                {"outcome_learner", r.outcome_learner},
                {"treatment_learner", r.treatment_learner},
                {"fold_mse_g", r.mean_fold_mse_g},
                {"fold_mse_m", r.mean_fold_mse_m}};
}

/// Schema for an estimation input: declared columns only, with roles. Extra
/// CSV columns are ignored by the loader and listed in the load report.
inline Schema estimation_schema(const EstimateJob& job,
                                const std::vector<std::string>& extra_numeric,
                                const std::vector<std::string>& extra_text) {
    Schema schema;
    std::set<std::string> seen;
    auto add = [&](const std::string& name, ColumnRole role, bool is_text) {
        if (name == "firm_id" || name == "year")
            throw UserError("column '" + name + "' is a key column, not a data column");
        if (!seen.insert(name).second)
            throw UserError("column '" + name + "' appears twice in the config");
        schema.columns.push_back({name, role, is_text});
    };
    for (const auto& outcome : job.outcomes) add(outcome, ColumnRole::Outcome, false);
    add(job.treatment, ColumnRole::Treatment, false);
    for (const auto& control : job.controls) add(control, ColumnRole::Control, false);
    for (const auto& name : job.text_columns)
        if (!seen.contains(name)) add(name, ColumnRole::Auxiliary, true);
    for (const auto& name : extra_numeric)
        if (!seen.contains(name)) add(name, ColumnRole::Auxiliary, false);
    for (const auto& name : extra_text)
        if (!seen.contains(name)) add(name, ColumnRole::Auxiliary, true);
    return schema;
}

} // namespace detail

/// Computes the requested indicator groups and writes indicators.csv,
/// report.txt, and manifest.json under out_dir. With no explicit `compute`
/// list, every group whose raw columns are all present runs.
inline void cmd_indicators(const RunConfig& config) {
    const IndicatorsJob& job = config.indicators;

    auto header = detail::csv_header(job.input);
    Schema schema;
    for (const auto& name : header) {
        if (name == "firm_id" || name == "year") continue;
        const bool is_text = name == "top_suppliers" || name == "top_customers";
        schema.columns.push_back({name, ColumnRole::Auxiliary, is_text});
    }
    LoadReport load_report;
    PanelDataset data = load_csv(job.input, schema, &load_report);

    const bool use_suppliers = job.scr1_mode != Scr1Mode::Customers;
    const bool use_customers = job.scr1_mode != Scr1Mode::Suppliers;
    std::vector<std::string> scr_required{"top3_supplier_share", "top3_customer_share",
                                          "actual_sales",        "wc_turnover",
                                          "ar_turnover",         "op_cashflow",
                                          "scf_quota",           "current_liabilities"};
    if (use_suppliers) scr_required.push_back("top_suppliers");
    if (use_customers) scr_required.push_back("top_customers");
    const std::map<std::string, std::vector<std::string>> group_columns{
        {"scr", scr_required},
        {"mde", {"platform_volume", "asset_registrations", "provider_density"}},
        {"mediators",
         {"invention_patents", "utility_patents", "digital_expense", "total_assets",
          "keyword_freq", "admin_expense", "operating_income", "scf_balance_ratio",
          "guarantee_ratio"}},
        {"controls",
         {"total_assets", "total_liabilities", "net_profit", "operating_cost", "inventory",
          "net_fixed_assets", "board_members", "dual", "top1_share", "monetary_funds",
          "current_liabilities", "soe", "operating_revenue"}}};

    std::vector<std::string> groups;
    const std::vector<std::string> group_order{"scr", "mde", "mediators", "controls"};
    if (job.compute.empty()) {
        for (const auto& group : group_order) {
            bool all = true;
            for (const auto& col : group_columns.at(group)) all &= data.has_column(col);
            if (all) groups.push_back(group);
        }
        if (groups.empty())
            throw UserError(
                "indicators: no indicator group has all of its raw columns in '" +
                job.input.string() + "'");
    } else {
        // keep canonical order, dedupe; missing raw columns error inside the
        // appliers with the full missing-column list
        for (const auto& group : group_order)
            for (const auto& requested : job.compute)
                if (requested == group &&
                    std::find(groups.begin(), groups.end(), group) == groups.end())
                    groups.push_back(group);
    }

    std::ostringstream report;
    report << "== load ==\n" << load_report.to_text();
    std::vector<std::string> added;
    auto run_group = [&](const std::string& group) {
        std::vector<std::string> notes;
        std::vector<std::string> cols;
        if (group == "scr") {
            data = apply_scr_indicators(data, job.scr1_mode, &notes);
            cols = scr_column_names();
        } else if (group == "mde") {
            data = apply_mde_index(data, job.mde_weights, &notes);
            cols = {"Mde"};
        } else if (group == "mediators") {
            data = apply_mediators(data, &notes);
            cols = mediator_column_names();
        } else {
            data = compute_controls(data, &notes);
            cols = control_column_names();
        }
        report << "== " << group << " ==\n";
        if (notes.empty()) report << "no issues\n";
        for (const auto& note : notes) report << note << "\n";
        added.insert(added.end(), cols.begin(), cols.end());
    };
    for (const auto& group : groups) run_group(group);

    report << "== column summaries ==\n";
    for (const auto& name : added) report << detail::column_summary(data, name) << "\n";

    save_csv(data, config.out_dir / "indicators.csv");
    detail::write_text_file(config.out_dir / "report.txt", report.str());
    detail::write_json_file(config.out_dir / "manifest.json",
                            detail::json{{"command", "indicators"},
                                         {"seed", config.seed},
                                         {"config_hash", config.config_hash()},
                                         {"input", job.input.string()},
                                         {"rows", data.n_rows()},
                                         {"groups", groups},
                                         {"columns_added", added},
                                         {"scr1_mode", to_string(job.scr1_mode)}});
}

/// Runs the cross-fitted estimator once per outcome and writes per-outcome
/// JSON results, the rendered table (text / markdown / CSV), and manifest.json.
inline void cmd_estimate(const RunConfig& config) {
    const EstimateJob& job = config.estimate;
    LoadReport load_report;
    PanelDataset data = load_csv(job.input, detail::estimation_schema(job, {}, {}), &load_report);

    std::map<std::string, DmlResult> results;
    detail::json outcome_manifest = detail::json::array();
    for (const auto& outcome : job.outcomes) {
        PipelineResult res = run_dml_pipeline(data, outcome, job.treatment, job.controls, job.dml);
        detail::write_text_file(config.out_dir / ("estimate_" + outcome + ".json"),
                                res.dml.to_text() + "\n");
        outcome_manifest.push_back(detail::json{{"outcome", outcome},
                                                {"rows_in", res.manifest.rows_in},
                                                {"rows_dropped", res.manifest.rows_dropped},
                                                {"n_used", res.dml.n_used},
                                                {"pipeline_hash", res.manifest.config_hash}});
        results.emplace(outcome, std::move(res.dml));
    }

    RegressionTableLayout layout;
    layout.outcomes = job.outcomes;
    RegressionTable table = regression_table(results, layout, !job.controls.empty(),
                                             job.dml.fe_year, job.dml.fe_firm);
    detail::write_text_file(config.out_dir / "table.txt", table.to_text());
    detail::write_text_file(config.out_dir / "table.md", table.to_markdown());
    detail::write_text_file(config.out_dir / "table.csv", table.to_csv());
    detail::write_json_file(config.out_dir / "manifest.json",
                            detail::json{{"command", "estimate"},
                                         {"seed", config.seed},
                                         {"config_hash", config.config_hash()},
                                         {"input", job.input.string()},
                                         {"rows", load_report.rows},
                                         {"treatment", job.treatment},
                                         {"outcomes", outcome_manifest}});
}

/// Runs the base estimate plus every variant, writing one table CSV per
/// variant, stacked text/markdown tables, and manifest.json with per-variant
/// row counts and failures.
inline void cmd_robustness(const RunConfig& config) {
    const EstimateJob& job = config.robustness.estimate;
    const RobustnessSuite& suite = config.robustness.suite;

    // Confounder and filter columns must be loaded even though the base
    // estimation does not use them.
    std::vector<std::string> extra_numeric, extra_text;
    for (const auto& variant : suite.variants) {
        if (variant.kind == RobustnessVariant::Kind::ConfounderAdd)
            extra_numeric.push_back(variant.confounder);
        if (variant.kind == RobustnessVariant::Kind::SampleExclusion)
            for (const auto& cond : variant.filter.conditions) {
                if (cond.column == "firm_id" || cond.column == "year") continue;
                if (std::holds_alternative<double>(cond.value))
                    extra_numeric.push_back(cond.column);
                else
                    extra_text.push_back(cond.column);
            }
    }
    LoadReport load_report;
    PanelDataset data =
        load_csv(job.input, detail::estimation_schema(job, extra_numeric, extra_text),
                 &load_report);

    SuiteReport report =
        run_suite(data, job.treatment, job.outcomes, job.controls, job.dml, suite);

    RegressionTableLayout layout;
    layout.outcomes = job.outcomes;
    std::ostringstream text, md;
    detail::json variants = detail::json::array();
    std::set<std::string> used_files;
    for (const auto& name : report.order) {
        const VariantRun& run = report.runs.at(name);
        text << "== " << name << " ==\n";
        md << "## " << name << "\n\n";
        if (!run.results.empty()) {
            layout.title = "ROBUSTNESS: " + name;
            RegressionTable table = regression_table(run.results, layout, !job.controls.empty(),
                                                     job.dml.fe_year, job.dml.fe_firm);
            text << table.to_text() << "\n";
            md << table.to_markdown() << "\n";
            const std::string file = detail::sanitize_name(name) + ".csv";
            if (!used_files.insert(file).second)
                throw UserError("variant names '" + name +
                                "' and another collide as file name '" + file + "'");
            detail::write_text_file(config.out_dir / file, table.to_csv());
        }
        for (const auto& [outcome, message] : run.failures) {
            text << "FAILED " << outcome << ": " << message << "\n";
            md << "FAILED " << outcome << ": " << message << "\n";
        }
        text << "\n";
        md << "\n";

        detail::json n_used = detail::json::object();
        for (const auto& [outcome, result] : run.results) n_used[outcome] = result.n_used;
        variants.push_back(detail::json{{"name", name},
                                        {"rows_in", run.rows_in},
                                        {"n_used", n_used},
                                        {"failures", run.failures}});
    }
    detail::write_text_file(config.out_dir / "table.txt", text.str());
    detail::write_text_file(config.out_dir / "table.md", md.str());
    detail::write_json_file(config.out_dir / "manifest.json",
                            detail::json{{"command", "robustness"},
                                         {"seed", config.seed},
                                         {"config_hash", config.config_hash()},
                                         {"input", job.input.string()},
                                         {"rows", load_report.rows},
                                         {"treatment", job.treatment},
                                         {"outcomes", job.outcomes},
                                         {"variants", variants}});
}

/// Monte Carlo study on the synthetic oracle; writes monte_carlo.json and
/// manifest.json.
inline void cmd_simulate(const RunConfig& config) {
    const SimulateJob& job = config.simulate;
    MonteCarloReport report = monte_carlo(job.dgp, job.estimators, job.replications);

    detail::json estimators = detail::json::array();
    for (const auto& st : report.estimators)
        estimators.push_back(detail::json{{"name", st.name},
                                          {"replications", st.replications},
                                          {"failures", st.failures},
                                          {"mean_bias", st.mean_bias},
                                          {"rmse", st.rmse},
                                          {"empirical_se", st.empirical_se},
                                          {"mean_reported_se", st.mean_reported_se},
                                          {"coverage", st.coverage}});
    detail::write_json_file(config.out_dir / "monte_carlo.json",
                            detail::json{{"replications", report.replications},
                                         {"theta0", job.dgp.theta0},
                                         {"estimators", estimators}});
    detail::write_json_file(config.out_dir / "manifest.json",
                            detail::json{{"command", "simulate"},
                                         {"seed", config.seed},
                                         {"config_hash", config.config_hash()},
                                         {"n_firms", job.dgp.n_firms},
                                         {"n_years", job.dgp.n_years},
                                         {"replications", job.replications}});
}

inline void run_command(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    switch (config.command) {
        case Command::Indicators: cmd_indicators(config); break;
        case Command::Estimate: cmd_estimate(config); break;
        case Command::Robustness: cmd_robustness(config); break;
        case Command::Simulate: cmd_simulate(config); break;
    }
}

} // namespace paneldml
