#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/numeric.hpp"
#include "paneldml/panel.hpp"

namespace paneldml {

/// Share of last year's core partners (at most 3) retained this year:
/// |prev ∩ current| / 3. An empty previous set scores 0.
inline double scr1_stability(const std::set<std::string>& prev,
                             const std::set<std::string>& current) {
    if (prev.size() > 3)
        throw UserError("scr1: " + std::to_string(prev.size()) +
                        " previous core partners; at most 3 allowed");
    std::size_t kept = 0;
    for (const auto& p : prev) kept += current.count(p);
    return static_cast<double>(kept) / 3.0;
}

/// Mean of the top-3 supplier purchase share and top-3 customer sales share.
inline double scr2_concentration(double supplier_share, double customer_share) {
    if (!(supplier_share >= 0.0 && supplier_share <= 1.0))
        throw UserError("scr2: supplier share " + detail::format_double(supplier_share) +
                        " outside [0, 1]");
    if (!(customer_share >= 0.0 && customer_share <= 1.0))
        throw UserError("scr2: customer share " + detail::format_double(customer_share) +
                        " outside [0, 1]");
    return 0.5 * (supplier_share + customer_share);
}

/// max(0, 1 - |predicted - actual| / actual); clamped so the value stays in
/// the documented [0, 1] range.
inline double scr3_forecast_accuracy(double predicted, double actual) {
    if (!(actual > 0.0))
        throw UserError("scr3: actual sales must be positive, got " +
                        detail::format_double(actual));
    return std::max(0.0, 1.0 - std::fabs(predicted - actual) / actual);
}

/// ln(working-capital turnover x accounts-receivable turnover).
inline double scr4_adaptation(double wc_turnover, double ar_turnover) {
    const double product = wc_turnover * ar_turnover;
    if (!(product > 0.0))
        throw UserError("scr4: turnover product must be positive, got " +
                        detail::format_double(product));
    return std::log(product);
}

/// (operating cash flow + supply-chain financing quota) / current liabilities.
inline double scr5_recovery(double op_cashflow, double scf_quota, double current_liabilities) {
    if (!(current_liabilities > 0.0))
        throw UserError("scr5: current liabilities must be positive, got " +
                        detail::format_double(current_liabilities));
    return (op_cashflow + scf_quota) / current_liabilities;
}

/// All SCR inputs for one firm-year, partner sets pooled across sides.
struct ScrInputs {
    std::set<std::string> prev_core_partners; // size <= 3
    std::set<std::string> current_partners;
    double top3_supplier_share = 0.0;
    double top3_customer_share = 0.0;
    double predicted_sales = 0.0;
    double actual_sales = 0.0;
    double wc_turnover = 0.0;
    double ar_turnover = 0.0;
    double op_cashflow = 0.0;
    double scf_quota = 0.0;
    double current_liabilities = 0.0;
};

struct ScrValues {
    double scr1 = 0.0, scr2 = 0.0, scr3 = 0.0, scr4 = 0.0, scr5 = 0.0;
};

inline ScrValues scr_values(const ScrInputs& in) {
    return {scr1_stability(in.prev_core_partners, in.current_partners),
            scr2_concentration(in.top3_supplier_share, in.top3_customer_share),
            scr3_forecast_accuracy(in.predicted_sales, in.actual_sales),
            scr4_adaptation(in.wc_turnover, in.ar_turnover),
            scr5_recovery(in.op_cashflow, in.scf_quota, in.current_liabilities)};
}

/// Moving-average forecast: the prediction at position t is the mean of the
/// non-missing values among the three preceding observations, missing when
/// none exist (so the first observation never has a forecast).
inline std::vector<double> forecast_ma3(std::span<const double> actual) {
    std::vector<double> pred(actual.size(), kMissing);
    for (std::size_t t = 0; t < actual.size(); ++t) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t back = 1; back <= 3 && back <= t; ++back) {
            const double v = actual[t - back];
            if (is_missing(v)) continue;
            sum += v;
            ++count;
        }
        if (count > 0) pred[t] = sum / count;
    }
    return pred;
}

inline constexpr std::array<double, 3> kMdeDefaultWeights{0.42, 0.35, 0.23};

/// One region-year of the marketization index inputs.
struct MdeObservation {
    double platform_volume = 0.0;
    double asset_registrations = 0.0;
    double provider_density = 0.0;
};

namespace detail {

inline void check_mde_weights(const std::array<double, 3>& w) {
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw UserError("mde weights must be non-negative");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw UserError("mde weights must sum to 1, got " + format_double(sum));
}

} // namespace detail

/// Marketization index: z-score each base indicator over the full sample,
/// weight, then min-max rescale the composite to [0, 1]. A zero-variance base
/// indicator contributes z = 0 (with a warning); an all-equal composite maps
/// every region-year to 0.5 (with a warning).
inline std::vector<double> mde_index(std::span<const MdeObservation> sample,
                                     const std::array<double, 3>& weights = kMdeDefaultWeights,
                                     std::vector<std::string>* warnings = nullptr) {
    detail::check_mde_weights(weights);
    const std::size_t n = sample.size();
    if (n < 2) throw UserError("mde_index: need >= 2 region-years");
    static constexpr std::array<const char*, 3> names{"platform_volume", "asset_registrations",
                                                      "provider_density"};
    std::array<std::vector<double>, 3> base;
    for (auto& b : base) b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        base[0][i] = sample[i].platform_volume;
        base[1][i] = sample[i].asset_registrations;
        base[2][i] = sample[i].provider_density;
        for (std::size_t j = 0; j < 3; ++j)
            if (!std::isfinite(base[j][i]))
                throw UserError(std::string("mde_index: non-finite ") + names[j] + " at row " +
                                std::to_string(i));
    }
    std::vector<double> composite(n, 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
        bool degenerate = false;
        const auto z = zscore(base[j], &degenerate);
        if (degenerate && warnings)
            warnings->push_back(std::string(names[j]) +
                                " has zero variance; its z-scores are all 0");
        for (std::size_t i = 0; i < n; ++i) composite[i] += weights[j] * z[i];
    }
    const auto [lo_it, hi_it] = std::minmax_element(composite.begin(), composite.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi - lo > 0.0)) {
        if (warnings)
            warnings->push_back("all composite values equal; Mde set to 0.5 everywhere");
        return std::vector<double>(n, 0.5);
    }
    for (double& c : composite) c = (c - lo) / (hi - lo);
    return composite;
}

/// One firm-year of mediator inputs.
struct MediatorInputs {
    double invention_patents = 0.0;
    double utility_patents = 0.0;
    double digital_expense = 0.0;
    double total_assets = 1.0;
    double keyword_freq = 0.0; // occurrences per 10,000 tokens
    double admin_expense = 0.0;
    double operating_income = 1.0;
    double scf_balance_ratio = 0.0;
    double guarantee_ratio = 0.0;
};

struct MediatorValues {
    double tech_inno = 0.0;
    double trans_cost = 0.0;
    double fin_sync = 0.0;
};

/// Mediators are sample-level: tech_inno and both trans_cost components are
/// z-scored across the whole sample, so a single row cannot be standardized.
inline std::vector<MediatorValues> mediators(std::span<const MediatorInputs> sample,
                                             std::vector<std::string>* warnings = nullptr) {
    const std::size_t n = sample.size();
    if (n < 2) throw UserError("mediators: need >= 2 rows to standardize");
    std::vector<double> tech_raw(n), keyword(n), admin_ratio(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = sample[i];
        if (!(m.total_assets > 0.0))
            throw UserError("row " + std::to_string(i) + ": tech_inno needs total_assets > 0, got " +
                            detail::format_double(m.total_assets));
        if (!(m.operating_income > 0.0))
            throw UserError("row " + std::to_string(i) +
                            ": trans_cost needs operating_income > 0, got " +
                            detail::format_double(m.operating_income));
        tech_raw[i] = 2.0 * m.invention_patents + m.utility_patents +
                      m.digital_expense / m.total_assets;
        keyword[i] = m.keyword_freq;
        admin_ratio[i] = m.admin_expense / m.operating_income;
    }
    auto z_or_warn = [&](std::span<const double> v, const char* label) {
        bool degenerate = false;
        auto z = zscore(v, &degenerate);
        if (degenerate && warnings)
            warnings->push_back(std::string(label) + " has zero variance; its z-scores are all 0");
        return z;
    };
    const auto zt = z_or_warn(tech_raw, "tech_inno input");
    const auto zk = z_or_warn(keyword, "keyword frequency");
    const auto za = z_or_warn(admin_ratio, "admin expense ratio");
    std::vector<MediatorValues> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].tech_inno = zt[i];
        out[i].trans_cost = 0.5 * (zk[i] + za[i]);
        out[i].fin_sync = 0.5 * (sample[i].scf_balance_ratio + sample[i].guarantee_ratio);
    }
    return out;
}

namespace detail {

inline std::vector<std::string> tokenize_lower(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

} // namespace detail

inline const std::vector<std::string>& default_keyword_phrases() {
    static const std::vector<std::string> phrases{"coordination cost", "information cost"};
    return phrases;
}

/// Case-insensitive exact phrase occurrences, normalized per 10,000
/// whitespace-delimited tokens. Empty text scores 0 with a warning.
inline double count_keywords(std::string_view text, std::span<const std::string> phrases,
                             std::vector<std::string>* warnings = nullptr) {
    if (phrases.empty()) throw UserError("keyword list is empty");
    std::vector<std::vector<std::string>> needles;
    needles.reserve(phrases.size());
    for (const auto& p : phrases) {
        auto toks = detail::tokenize_lower(p);
        if (toks.empty()) throw UserError("empty keyword phrase");
        needles.push_back(std::move(toks));
    }
    const auto tokens = detail::tokenize_lower(text);
    if (tokens.empty()) {
        if (warnings) warnings->push_back("empty text; keyword frequency is 0");
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (const auto& needle : needles)
            if (i + needle.size() <= tokens.size() &&
                std::equal(needle.begin(), needle.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i)))
                ++hits;
    return static_cast<double>(hits) * 10000.0 / static_cast<double>(tokens.size());
}

/// One phrase per line; blank lines are skipped.
inline std::vector<std::string> load_keyword_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UserError("cannot open keyword file '" + path.string() + "'");
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::tokenize_lower(line).empty()) continue;
        phrases.push_back(line);
    }
    if (phrases.empty())
        throw UserError("keyword file '" + path.string() + "' contains no phrases");
    return phrases;
}

/// Which side's top-3 partner list feeds SCR1.
enum class Scr1Mode { Suppliers, Customers, PooledAverage };

inline std::string to_string(Scr1Mode m) {
    switch (m) {
        case Scr1Mode::Suppliers: return "suppliers";
        case Scr1Mode::Customers: return "customers";
        case Scr1Mode::PooledAverage: return "pooled";
    }
    return "pooled";
}

inline Scr1Mode scr1_mode_from_string(std::string_view s) {
    if (s == "suppliers") return Scr1Mode::Suppliers;
    if (s == "customers") return Scr1Mode::Customers;
    if (s == "pooled") return Scr1Mode::PooledAverage;
    throw UserError("unknown scr1 mode '" + std::string(s) + "' (suppliers|customers|pooled)");
}

namespace detail {

inline std::string row_where(const PanelDataset& d, std::size_t r) {
    return "(" + d.firm_id(r) + ", " + std::to_string(d.year(r)) + ") ";
}

inline void require_columns(const PanelDataset& d, const std::vector<std::string>& cols,
                            const char* op) {
    std::string missing;
    for (const auto& c : cols) {
        if (d.has_column(c)) continue;
        if (!missing.empty()) missing += ", ";
        missing += c;
    }
    if (!missing.empty())
        throw UserError(std::string(op) + ": missing required columns: " + missing);
}

/// "id;id;id" -> set of trimmed ids. An empty cell is an empty set.
inline std::set<std::string> parse_partner_list(std::string_view cell) {
    std::set<std::string> ids;
    std::string current;
    auto flush = [&] {
        const auto b = current.find_first_not_of(" \t");
        if (b == std::string::npos) {
            current.clear();
            return;
        }
        const auto e = current.find_last_not_of(" \t");
        ids.insert(current.substr(b, e - b + 1));
        current.clear();
    };
    for (char ch : cell) {
        if (ch == ';') flush();
        else current.push_back(ch);
    }
    flush();
    if (ids.size() > 3)
        throw UserError("partner list '" + std::string(cell) + "' has more than 3 ids");
    return ids;
}

} // namespace detail

inline const std::vector<std::string>& scr_column_names() {
    static const std::vector<std::string> names{"SCR1", "SCR2", "SCR3", "SCR4", "SCR5"};
    return names;
}

inline const std::vector<std::string>& mediator_column_names() {
    static const std::vector<std::string> names{"Tech_inno", "Trans_cost", "Fin_sync"};
    return names;
}

/// Appends SCR1..SCR5. Raw columns:
///   top_suppliers, top_customers          text, "id;id;id" top-3 lists
///   top3_supplier_share, top3_customer_share
///   actual_sales                          plus optional predicted_sales;
///                                         without it a window-3 moving
///                                         average of the firm's prior
///                                         actuals supplies the forecast
///   wc_turnover, ar_turnover, op_cashflow, scf_quota, current_liabilities
/// Row-level domain errors become missing cells plus a report entry; rows
/// with missing inputs or no prior firm-year stay missing silently.
inline PanelDataset apply_scr_indicators(const PanelDataset& data,
                                         Scr1Mode scr1_mode = Scr1Mode::PooledAverage,
                                         std::vector<std::string>* report = nullptr) {
    const bool use_suppliers = scr1_mode != Scr1Mode::Customers;
    const bool use_customers = scr1_mode != Scr1Mode::Suppliers;
    {
        std::vector<std::string> required{"top3_supplier_share", "top3_customer_share",
                                          "actual_sales",        "wc_turnover",
                                          "ar_turnover",         "op_cashflow",
                                          "scf_quota",           "current_liabilities"};
        if (use_suppliers) required.push_back("top_suppliers");
        if (use_customers) required.push_back("top_customers");
        detail::require_columns(data, required, "indicators");
    }
    const std::size_t n = data.n_rows();
    auto note = [&](std::size_t r, const char* col, const std::string& msg) {
        if (report) report->push_back(detail::row_where(data, r) + col + ": " + msg);
    };

    std::vector<double> scr1(n, kMissing), scr2(n, kMissing), scr3(n, kMissing),
        scr4(n, kMissing), scr5(n, kMissing);

    for (std::size_t r = 0; r < n; ++r) {
        const auto prev = data.find_row(data.firm_id(r), data.year(r) - 1);
        if (!prev) continue;
        try {
            double sum = 0.0;
            int sides = 0;
            if (use_suppliers) {
                const auto col = data.text_column("top_suppliers");
                sum += scr1_stability(detail::parse_partner_list(col[*prev]),
                                      detail::parse_partner_list(col[r]));
                ++sides;
            }
            if (use_customers) {
                const auto col = data.text_column("top_customers");
                sum += scr1_stability(detail::parse_partner_list(col[*prev]),
                                      detail::parse_partner_list(col[r]));
                ++sides;
            }
            scr1[r] = sum / sides;
        } catch (const UserError& e) {
            note(r, "SCR1", e.what());
        }
    }

    const auto supplier_share = data.column("top3_supplier_share");
    const auto customer_share = data.column("top3_customer_share");
    const auto actual = data.column("actual_sales");
    const auto wc = data.column("wc_turnover");
    const auto ar = data.column("ar_turnover");
    const auto cashflow = data.column("op_cashflow");
    const auto quota = data.column("scf_quota");
    const auto liabilities = data.column("current_liabilities");

    std::vector<double> predicted(n, kMissing);
    if (data.has_column("predicted_sales")) {
        const auto p = data.column("predicted_sales");
        predicted.assign(p.begin(), p.end());
    } else {
        std::map<std::string, std::vector<std::size_t>> firms;
        for (std::size_t r = 0; r < n; ++r) firms[data.firm_id(r)].push_back(r);
        for (auto& [firm, rows] : firms) {
            std::sort(rows.begin(), rows.end(),
                      [&](std::size_t a, std::size_t b) { return data.year(a) < data.year(b); });
            std::vector<double> series;
            series.reserve(rows.size());
            for (std::size_t r : rows) series.push_back(actual[r]);
            const auto pred = forecast_ma3(series);
            for (std::size_t i = 0; i < rows.size(); ++i) predicted[rows[i]] = pred[i];
        }
    }

    for (std::size_t r = 0; r < n; ++r) {
        if (!is_missing(supplier_share[r]) && !is_missing(customer_share[r])) {
            try {
                scr2[r] = scr2_concentration(supplier_share[r], customer_share[r]);
            } catch (const UserError& e) {
                note(r, "SCR2", e.what());
            }
        }
        if (!is_missing(predicted[r]) && !is_missing(actual[r])) {
            try {
                scr3[r] = scr3_forecast_accuracy(predicted[r], actual[r]);
            } catch (const UserError& e) {
                note(r, "SCR3", e.what());
            }
        }
        if (!is_missing(wc[r]) && !is_missing(ar[r])) {
            try {
                scr4[r] = scr4_adaptation(wc[r], ar[r]);
            } catch (const UserError& e) {
                note(r, "SCR4", e.what());
            }
        }
        if (!is_missing(cashflow[r]) && !is_missing(quota[r]) && !is_missing(liabilities[r])) {
            try {
                scr5[r] = scr5_recovery(cashflow[r], quota[r], liabilities[r]);
            } catch (const UserError& e) {
                note(r, "SCR5", e.what());
            }
        }
    }

    PanelDataset out = data.with_numeric_column("SCR1", ColumnRole::Outcome, std::move(scr1));
    out = out.with_numeric_column("SCR2", ColumnRole::Outcome, std::move(scr2));
    out = out.with_numeric_column("SCR3", ColumnRole::Outcome, std::move(scr3));
    out = out.with_numeric_column("SCR4", ColumnRole::Outcome, std::move(scr4));
    out = out.with_numeric_column("SCR5", ColumnRole::Outcome, std::move(scr5));
    return out;
}

/// Appends an Mde column from region-year rows (firm_id carries the region
/// id) with columns platform_volume, asset_registrations, provider_density.
/// Standardization runs over the rows with complete inputs; incomplete rows
/// stay missing and are reported.
inline PanelDataset apply_mde_index(const PanelDataset& data,
                                    const std::array<double, 3>& weights = kMdeDefaultWeights,
                                    std::vector<std::string>* report = nullptr) {
    detail::require_columns(data, {"platform_volume", "asset_registrations", "provider_density"},
                            "mde");
    const auto volume = data.column("platform_volume");
    const auto registrations = data.column("asset_registrations");
    const auto density = data.column("provider_density");
    std::vector<std::size_t> rows;
    std::vector<MdeObservation> sample;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        if (is_missing(volume[r]) || is_missing(registrations[r]) || is_missing(density[r])) {
            if (report)
                report->push_back(detail::row_where(data, r) +
                                  "Mde: incomplete base indicators; left missing");
            continue;
        }
        rows.push_back(r);
        sample.push_back({volume[r], registrations[r], density[r]});
    }
    if (sample.size() < 2)
        throw UserError("mde: need >= 2 region-years with complete base indicators");
    const auto index = mde_index(sample, weights, report);
    std::vector<double> column(data.n_rows(), kMissing);
    for (std::size_t i = 0; i < rows.size(); ++i) column[rows[i]] = index[i];
    return data.with_numeric_column("Mde", ColumnRole::Treatment, std::move(column));
}

/// Appends Tech_inno, Trans_cost, Fin_sync. Raw columns: invention_patents,
/// utility_patents, digital_expense, total_assets, keyword_freq,
/// admin_expense, operating_income, scf_balance_ratio, guarantee_ratio.
/// Each mediator standardizes over the rows where its own inputs are valid;
/// bad denominators become missing cells plus a report entry.
inline PanelDataset apply_mediators(const PanelDataset& data,
                                    std::vector<std::string>* report = nullptr) {
    detail::require_columns(data,
                            {"invention_patents", "utility_patents", "digital_expense",
                             "total_assets", "keyword_freq", "admin_expense", "operating_income",
                             "scf_balance_ratio", "guarantee_ratio"},
                            "mediators");
    const std::size_t n = data.n_rows();
    auto note = [&](std::size_t r, const char* col, const std::string& msg) {
        if (report) report->push_back(detail::row_where(data, r) + col + ": " + msg);
    };
    const auto invention = data.column("invention_patents");
    const auto utility = data.column("utility_patents");
    const auto digital = data.column("digital_expense");
    const auto assets = data.column("total_assets");
    const auto keyword = data.column("keyword_freq");
    const auto admin = data.column("admin_expense");
    const auto income = data.column("operating_income");
    const auto scf = data.column("scf_balance_ratio");
    const auto guarantee = data.column("guarantee_ratio");

    std::vector<std::size_t> tech_rows, trans_rows;
    std::vector<double> tech_raw, keyword_vals, admin_ratio;
    for (std::size_t r = 0; r < n; ++r) {
        if (!is_missing(invention[r]) && !is_missing(utility[r]) && !is_missing(digital[r]) &&
            !is_missing(assets[r])) {
            if (!(assets[r] > 0.0)) {
                note(r, "Tech_inno", "total_assets must be positive, got " +
                                         detail::format_double(assets[r]));
            } else {
                tech_rows.push_back(r);
                tech_raw.push_back(2.0 * invention[r] + utility[r] + digital[r] / assets[r]);
            }
        }
        if (!is_missing(keyword[r]) && !is_missing(admin[r]) && !is_missing(income[r])) {
            if (!(income[r] > 0.0)) {
                note(r, "Trans_cost", "operating_income must be positive, got " +
                                          detail::format_double(income[r]));
            } else {
                trans_rows.push_back(r);
                keyword_vals.push_back(keyword[r]);
                admin_ratio.push_back(admin[r] / income[r]);
            }
        }
    }
    if (tech_rows.size() < 2)
        throw UserError("mediators: need >= 2 rows with valid tech_inno inputs");
    if (trans_rows.size() < 2)
        throw UserError("mediators: need >= 2 rows with valid trans_cost inputs");

    auto z_or_warn = [&](std::span<const double> v, const char* label) {
        bool degenerate = false;
        auto z = zscore(v, &degenerate);
        if (degenerate && report)
            report->push_back(std::string(label) + " has zero variance; its z-scores are all 0");
        return z;
    };
    const auto zt = z_or_warn(tech_raw, "tech_inno input");
    const auto zk = z_or_warn(keyword_vals, "keyword frequency");
    const auto za = z_or_warn(admin_ratio, "admin expense ratio");

    std::vector<double> tech(n, kMissing), trans(n, kMissing), fin(n, kMissing);
    for (std::size_t i = 0; i < tech_rows.size(); ++i) tech[tech_rows[i]] = zt[i];
    for (std::size_t i = 0; i < trans_rows.size(); ++i)
        trans[trans_rows[i]] = 0.5 * (zk[i] + za[i]);
    for (std::size_t r = 0; r < n; ++r)
        if (!is_missing(scf[r]) && !is_missing(guarantee[r]))
            fin[r] = 0.5 * (scf[r] + guarantee[r]);

    PanelDataset out = data.with_numeric_column("Tech_inno", ColumnRole::Auxiliary, std::move(tech));
    out = out.with_numeric_column("Trans_cost", ColumnRole::Auxiliary, std::move(trans));
    out = out.with_numeric_column("Fin_sync", ColumnRole::Auxiliary, std::move(fin));
    return out;
}

inline const std::vector<std::string>& control_column_names() {
    static const std::vector<std::string> names{"Size",       "Lev",  "Roa",        "Inv_turn",
                                                "Fix_ratio",  "Board_size", "Dual", "Top1",
                                                "Cash_ratio", "Soe",  "Growth"};
    return names;
}

/// Appends the 11 control columns. Raw columns: total_assets,
/// total_liabilities, net_profit, operating_cost, inventory,
/// net_fixed_assets, board_members, dual, top1_share, monetary_funds,
/// current_liabilities, soe, operating_revenue. Averages (Roa, Inv_turn) and
/// Growth use the firm's previous year and stay missing in its first
/// observed year; non-positive denominators or log arguments become missing
/// cells plus a report entry.
inline PanelDataset compute_controls(const PanelDataset& data,
                                     std::vector<std::string>* report = nullptr) {
    detail::require_columns(data,
                            {"total_assets", "total_liabilities", "net_profit", "operating_cost",
                             "inventory", "net_fixed_assets", "board_members", "dual",
                             "top1_share", "monetary_funds", "current_liabilities", "soe",
                             "operating_revenue"},
                            "controls");
    const std::size_t n = data.n_rows();
    auto note = [&](std::size_t r, const char* col, const std::string& msg) {
        if (report) report->push_back(detail::row_where(data, r) + col + ": " + msg);
    };
    const auto assets = data.column("total_assets");
    const auto liabilities = data.column("total_liabilities");
    const auto profit = data.column("net_profit");
    const auto op_cost = data.column("operating_cost");
    const auto inventory = data.column("inventory");
    const auto fixed_assets = data.column("net_fixed_assets");
    const auto board = data.column("board_members");
    const auto dual_raw = data.column("dual");
    const auto top1_raw = data.column("top1_share");
    const auto monetary = data.column("monetary_funds");
    const auto current_liab = data.column("current_liabilities");
    const auto soe_raw = data.column("soe");
    const auto revenue = data.column("operating_revenue");

    std::vector<double> size(n, kMissing), lev(n, kMissing), roa(n, kMissing),
        inv_turn(n, kMissing), fix_ratio(n, kMissing), board_size(n, kMissing),
        dual(n, kMissing), top1(n, kMissing), cash_ratio(n, kMissing), soe(n, kMissing),
        growth(n, kMissing);

    auto check_flag = [&](std::size_t r, const char* col, double v, std::vector<double>& out) {
        if (is_missing(v)) return;
        if (v == 0.0 || v == 1.0) out[r] = v;
        else note(r, col, "must be 0 or 1, got " + detail::format_double(v));
    };

    for (std::size_t r = 0; r < n; ++r) {
        const auto prev = data.find_row(data.firm_id(r), data.year(r) - 1);

        if (!is_missing(assets[r])) {
            if (!(assets[r] > 0.0)) {
                note(r, "Size", "total_assets must be positive, got " +
                                    detail::format_double(assets[r]));
            } else {
                size[r] = std::log(assets[r]);
                if (!is_missing(liabilities[r])) lev[r] = liabilities[r] / assets[r];
                if (!is_missing(fixed_assets[r])) fix_ratio[r] = fixed_assets[r] / assets[r];
            }
            if (assets[r] > 0.0 && prev && !is_missing(assets[*prev]) && !is_missing(profit[r])) {
                const double avg_assets = 0.5 * (assets[r] + assets[*prev]);
                if (!(avg_assets > 0.0))
                    note(r, "Roa", "average assets must be positive, got " +
                                       detail::format_double(avg_assets));
                else
                    roa[r] = profit[r] / avg_assets;
            }
        }

        if (prev && !is_missing(inventory[r]) && !is_missing(inventory[*prev]) &&
            !is_missing(op_cost[r])) {
            const double avg_inventory = 0.5 * (inventory[r] + inventory[*prev]);
            if (!(avg_inventory > 0.0))
                note(r, "Inv_turn", "average inventory must be positive, got " +
                                        detail::format_double(avg_inventory));
            else
                inv_turn[r] = op_cost[r] / avg_inventory;
        }

        if (!is_missing(board[r])) {
            if (!(board[r] > 0.0))
                note(r, "Board_size", "board_members must be positive, got " +
                                          detail::format_double(board[r]));
            else
                board_size[r] = std::log(board[r]);
        }

        check_flag(r, "Dual", dual_raw[r], dual);
        check_flag(r, "Soe", soe_raw[r], soe);
        top1[r] = top1_raw[r];

        if (!is_missing(monetary[r]) && !is_missing(current_liab[r])) {
            if (!(current_liab[r] > 0.0))
                note(r, "Cash_ratio", "current_liabilities must be positive, got " +
                                          detail::format_double(current_liab[r]));
            else
                cash_ratio[r] = monetary[r] / current_liab[r];
        }

        if (prev && !is_missing(revenue[r]) && !is_missing(revenue[*prev])) {
            if (!(revenue[*prev] > 0.0))
                note(r, "Growth", "previous-year revenue must be positive, got " +
                                      detail::format_double(revenue[*prev]));
            else
                growth[r] = (revenue[r] - revenue[*prev]) / revenue[*prev];
        }
    }

    PanelDataset out = data.with_numeric_column("Size", ColumnRole::Control, std::move(size));
    out = out.with_numeric_column("Lev", ColumnRole::Control, std::move(lev));
    out = out.with_numeric_column("Roa", ColumnRole::Control, std::move(roa));
    out = out.with_numeric_column("Inv_turn", ColumnRole::Control, std::move(inv_turn));
    out = out.with_numeric_column("Fix_ratio", ColumnRole::Control, std::move(fix_ratio));
    out = out.with_numeric_column("Board_size", ColumnRole::Control, std::move(board_size));
    out = out.with_numeric_column("Dual", ColumnRole::Control, std::move(dual));
    out = out.with_numeric_column("Top1", ColumnRole::Control, std::move(top1));
    out = out.with_numeric_column("Cash_ratio", ColumnRole::Control, std::move(cash_ratio));
    out = out.with_numeric_column("Soe", ColumnRole::Control, std::move(soe));
    out = out.with_numeric_column("Growth", ColumnRole::Control, std::move(growth));
    return out;
}

} // namespace paneldml
