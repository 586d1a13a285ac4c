#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/panel.hpp"

namespace paneldml {

/// Adds `<column>_lead<k>`: the same firm's value k years ahead, missing when
/// that firm-year is not observed. The source column is untouched.
inline PanelDataset lead_outcome(const PanelDataset& data, const std::string& column, int lead) {
    if (lead < 1) throw std::invalid_argument("lead_outcome: lead must be >= 1");
    const auto src = data.column(column); // validates existence and numeric kind
    std::vector<double> out(data.n_rows(), kMissing);
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        if (auto fut = data.find_row(data.firm_id(r), data.year(r) + lead))
            out[r] = src[*fut];
    }
    return data.with_numeric_column(column + "_lead" + std::to_string(lead),
                                    ColumnRole::Outcome, std::move(out));
}

struct WithinEffects {
    bool firm = true;
    bool year = true;
};

struct WithinReport {
    int sweeps = 0;
    double achieved_tolerance = 0.0; // max |group mean| after the last sweep
    std::size_t rows_excluded = 0;   // rows missing a named column, set to missing on output
};

/// Two-way within transformation: iterated alternate demeaning by firm and
/// year groups until every group mean is below tol in absolute value.
/// Rows missing any named column are excluded from the demeaning sample and
/// their named-column cells become missing in the result.
inline PanelDataset within_transform(const PanelDataset& data,
                                     const std::vector<std::string>& columns,
                                     WithinEffects effects = {}, WithinReport* report = nullptr,
                                     double tol = 1e-8, int max_sweeps = 100) {
    if (columns.empty()) throw std::invalid_argument("within_transform: no columns named");
    if (!effects.firm && !effects.year)
        throw std::invalid_argument("within_transform: no effects requested");
    for (const auto& c : columns) (void)data.column(c);

    const std::size_t n = data.n_rows();
    std::vector<std::size_t> rows; // demeaning sample
    rows.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        bool ok = true;
        for (const auto& c : columns)
            if (is_missing(data.column(c)[r])) { ok = false; break; }
        if (ok) rows.push_back(r);
    }

    // group index per kept row
    std::unordered_map<std::string, std::size_t> firm_ids;
    std::unordered_map<int, std::size_t> year_ids;
    std::vector<std::size_t> firm_of(rows.size()), year_of(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        firm_of[i] = firm_ids.emplace(data.firm_id(rows[i]), firm_ids.size()).first->second;
        year_of[i] = year_ids.emplace(data.year(rows[i]), year_ids.size()).first->second;
    }
    const std::size_t n_firms = firm_ids.size(), n_years = year_ids.size();

    std::vector<std::vector<double>> vals(columns.size(), std::vector<double>(rows.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto col = data.column(columns[c]);
        for (std::size_t i = 0; i < rows.size(); ++i) vals[c][i] = col[rows[i]];
    }

    auto demean_by = [&](std::vector<double>& v, const std::vector<std::size_t>& group,
                         std::size_t n_groups) {
        std::vector<double> sum(n_groups, 0.0);
        std::vector<std::size_t> cnt(n_groups, 0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            sum[group[i]] += v[i];
            ++cnt[group[i]];
        }
        for (std::size_t g = 0; g < n_groups; ++g)
            if (cnt[g]) sum[g] /= static_cast<double>(cnt[g]);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= sum[group[i]];
    };
    auto max_group_mean = [&](const std::vector<double>& v, const std::vector<std::size_t>& group,
                              std::size_t n_groups) {
        std::vector<double> sum(n_groups, 0.0);
        std::vector<std::size_t> cnt(n_groups, 0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            sum[group[i]] += v[i];
            ++cnt[group[i]];
        }
        double worst = 0.0;
        for (std::size_t g = 0; g < n_groups; ++g)
            if (cnt[g]) worst = std::max(worst, std::fabs(sum[g] / static_cast<double>(cnt[g])));
        return worst;
    };

    int sweeps = 0;
    double residual = 0.0;
    for (;;) {
        residual = 0.0;
        for (auto& v : vals) {
            if (effects.firm) residual = std::max(residual, max_group_mean(v, firm_of, n_firms));
            if (effects.year) residual = std::max(residual, max_group_mean(v, year_of, n_years));
        }
        if (residual < tol || rows.empty()) break;
        if (sweeps >= max_sweeps)
            throw std::runtime_error(
                "within_transform: not converged after " + std::to_string(max_sweeps) +
                " sweeps, residual group mean " + std::to_string(residual));
        for (auto& v : vals) {
            if (effects.firm) demean_by(v, firm_of, n_firms);
            if (effects.year) demean_by(v, year_of, n_years);
        }
        ++sweeps;
    }

    PanelDataset out = data;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        std::vector<double> full(n, kMissing);
        for (std::size_t i = 0; i < rows.size(); ++i) full[rows[i]] = vals[c][i];
        out = out.with_replaced_column(columns[c], std::move(full));
    }
    if (report) {
        report->sweeps = sweeps;
        report->achieved_tolerance = residual;
        report->rows_excluded = n - rows.size();
    }
    return out;
}

/// Drops rows missing any of the named columns; returns the kept dataset and
/// (optionally) the number dropped.
inline PanelDataset drop_missing(const PanelDataset& data, const std::vector<std::string>& columns,
                                 std::size_t* dropped = nullptr) {
    std::vector<bool> keep(data.n_rows(), true);
    std::size_t n_drop = 0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        for (const auto& c : columns) {
            if (is_missing(data.column(c)[r])) {
                keep[r] = false;
                ++n_drop;
                break;
            }
        }
    }
    if (dropped) *dropped = n_drop;
    return data.subset(keep);
}

} // namespace paneldml
