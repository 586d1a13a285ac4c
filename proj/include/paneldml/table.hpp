#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "paneldml/dml.hpp"
#include "paneldml/errors.hpp"

namespace paneldml {

/// *** for p < 0.01, ** for p < 0.05, * for p < 0.10; an exact boundary gets
/// the weaker star.
inline std::string significance_stars(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.10) return "*";
    return "";
}

namespace detail {

/// "1.25e-4" -> "0.000125"; strings without an exponent pass through.
inline std::string expand_scientific(const std::string& s) {
    const auto epos = s.find_first_of("eE");
    if (epos == std::string::npos) return s;
    std::string mantissa = s.substr(0, epos);
    const int exponent = std::stoi(s.substr(epos + 1));
    std::string sign;
    if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
        if (mantissa[0] == '-') sign = "-";
        mantissa.erase(mantissa.begin());
    }
    std::string digits;
    int point = 0; // digits before the decimal point
    bool seen_dot = false;
    for (char ch : mantissa) {
        if (ch == '.') {
            seen_dot = true;
            continue;
        }
        digits.push_back(ch);
        if (!seen_dot) ++point;
    }
    point += exponent;
    std::string out;
    if (point <= 0) {
        out = "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
    } else if (static_cast<std::size_t>(point) >= digits.size()) {
        out = digits + std::string(static_cast<std::size_t>(point) - digits.size(), '0');
    } else {
        out = digits.substr(0, static_cast<std::size_t>(point)) + "." +
              digits.substr(static_cast<std::size_t>(point));
    }
    return sign + out;
}

/// Half-even rounding of a plain decimal string to `places` fractional
/// digits. Operates on the decimal digits, so ties like 0.0125 round to the
/// even neighbor regardless of binary representation.
inline std::string round_decimal_string(const std::string& s, int places) {
    std::string sign;
    std::string body = s;
    if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
        if (body[0] == '-') sign = "-";
        body.erase(body.begin());
    }
    const auto dot = body.find('.');
    std::string integer = dot == std::string::npos ? body : body.substr(0, dot);
    std::string fraction = dot == std::string::npos ? "" : body.substr(dot + 1);
    if (integer.empty()) integer = "0";
    const auto p = static_cast<std::size_t>(places);
    if (fraction.size() < p) fraction += std::string(p - fraction.size(), '0');

    bool round_up = false;
    if (fraction.size() > p) {
        const char first = fraction[p];
        bool tail_nonzero = false;
        for (std::size_t i = p + 1; i < fraction.size(); ++i) tail_nonzero |= fraction[i] != '0';
        if (first > '5' || (first == '5' && tail_nonzero)) {
            round_up = true;
        } else if (first == '5') {
            const char last_kept = p > 0 ? fraction[p - 1] : integer.back();
            round_up = (last_kept - '0') % 2 != 0;
        }
        fraction.resize(p);
    }
    if (round_up) {
        std::string digits = integer + fraction;
        for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
            if (*it != '9') {
                ++*it;
                break;
            }
            *it = '0';
            if (std::next(it) == digits.rend()) {
                digits.insert(digits.begin(), '1');
                break;
            }
        }
        const std::size_t int_len = digits.size() - p;
        integer = digits.substr(0, int_len);
        fraction = digits.substr(int_len);
    }
    bool all_zero = true;
    for (char ch : integer) all_zero &= ch == '0';
    for (char ch : fraction) all_zero &= ch == '0';
    if (all_zero) sign.clear(); // never print "-0.000"
    std::string out = sign + integer;
    if (p > 0) out += "." + fraction;
    return out;
}

/// 1234567 -> "1,234,567".
inline std::string group_thousands(std::size_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    const std::size_t len = digits.size();
    for (std::size_t i = 0; i < len; ++i) {
        if (i > 0 && (len - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

} // namespace detail

/// Fixed-point rendering with half-even decimal rounding.
inline std::string format_fixed(double v, int places) {
    if (!std::isfinite(v)) throw UserError("cannot format non-finite value");
    return detail::round_decimal_string(detail::expand_scientific(detail::format_double(v)),
                                        places);
}

/// "0.081*** (5.09)": estimate to 3 decimals, stars from the p-value, t-stat
/// to 2 decimals in parentheses.
inline std::string coefficient_cell(double estimate, double t_stat, double p_value) {
    return format_fixed(estimate, 3) + significance_stars(p_value) + " (" +
           format_fixed(t_stat, 2) + ")";
}

struct TableCell {
    bool present = false;
    double estimate = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

struct RegressionTableLayout {
    std::vector<std::string> outcomes; // column order
    std::string coefficient_label = "Mde";
    std::string title = "BENCHMARK REGRESSION RESULTS";
};

/// One rendered panel: a coefficient row across outcome columns plus the
/// controls / fixed-effects / N footer.
struct RegressionTable {
    std::string title;
    std::string coefficient_label;
    std::vector<std::string> outcomes;
    std::vector<TableCell> cells; // one per outcome
    bool controls = true;
    bool year_effects = true;
    bool firm_effects = true;
    std::string note =
        "Notes: ***, **, * indicate significance at 1%, 5%, 10% levels; "
        "t-statistics in parentheses.";
    std::vector<std::string> warnings;

    std::string header_label(std::size_t i) const {
        return "(" + std::to_string(i + 1) + ") " + outcomes[i];
    }

    std::string cell_text(std::size_t i) const {
        const auto& c = cells[i];
        if (!c.present) return "";
        return coefficient_cell(c.estimate, c.t_stat, c.p_value);
    }

    std::string to_text() const {
        std::vector<std::vector<std::string>> rows;
        rows.push_back({""});
        rows.push_back({coefficient_label});
        rows.push_back({"Control Variables"});
        rows.push_back({"Year Fixed Effects"});
        rows.push_back({"Firm Fixed Effects"});
        rows.push_back({"N"});
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const bool present = cells[i].present;
            rows[0].push_back(header_label(i));
            rows[1].push_back(cell_text(i));
            rows[2].push_back(present ? (controls ? "Yes" : "No") : "");
            rows[3].push_back(present ? (year_effects ? "Yes" : "No") : "");
            rows[4].push_back(present ? (firm_effects ? "Yes" : "No") : "");
            rows[5].push_back(present ? detail::group_thousands(cells[i].n) : "");
        }
        std::vector<std::size_t> widths(rows[0].size(), 0);
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c)
                widths[c] = std::max(widths[c], row[c].size());
        std::ostringstream os;
        os << "TABLE: " << title << "\n\n";
        for (const auto& row : rows) {
            std::string line;
            for (std::size_t c = 0; c < row.size(); ++c) {
                line += row[c];
                if (c + 1 < row.size())
                    line += std::string(widths[c] - row[c].size() + 2, ' ');
            }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            os << line << "\n";
        }
        os << "\n" << note << "\n";
        for (const auto& w : warnings) os << "warning: " << w << "\n";
        return os.str();
    }

    std::string to_markdown() const {
        std::ostringstream os;
        os << "**TABLE: " << title << "**\n\n";
        os << "|  |";
        for (std::size_t i = 0; i < outcomes.size(); ++i) os << " " << header_label(i) << " |";
        os << "\n|---|";
        for (std::size_t i = 0; i < outcomes.size(); ++i) os << "---|";
        os << "\n";
        auto row = [&](const std::string& label, auto value) {
            os << "| " << label << " |";
            for (std::size_t i = 0; i < outcomes.size(); ++i) os << " " << value(i) << " |";
            os << "\n";
        };
        row(coefficient_label, [&](std::size_t i) { return cell_text(i); });
        auto flag = [&](bool on) { return std::string(on ? "Yes" : "No"); };
        row("Control Variables",
            [&](std::size_t i) { return cells[i].present ? flag(controls) : ""; });
        row("Year Fixed Effects",
            [&](std::size_t i) { return cells[i].present ? flag(year_effects) : ""; });
        row("Firm Fixed Effects",
            [&](std::size_t i) { return cells[i].present ? flag(firm_effects) : ""; });
        row("N", [&](std::size_t i) {
            return cells[i].present ? detail::group_thousands(cells[i].n) : std::string();
        });
        os << "\n" << note << "\n";
        return os.str();
    }

    /// Machine-readable export at printed precision: estimates carry 3
    /// decimals and t-stats 2, exactly as in the rendered cells.
    std::string to_csv() const {
        std::ostringstream os;
        os << "outcome,estimate,stars,t_stat,p_value,n\n";
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const auto& c = cells[i];
            os << detail::csv_escape(outcomes[i]) << ',';
            if (c.present) {
                os << format_fixed(c.estimate, 3) << ',' << significance_stars(c.p_value) << ','
                   << format_fixed(c.t_stat, 2) << ',' << detail::format_double(c.p_value) << ','
                   << c.n;
            } else {
                os << ",,,,";
            }
            os << '\n';
        }
        return os.str();
    }
};

/// Lays out per-outcome results as one table panel. Outcomes absent from the
/// results map produce blank columns plus a warning.
inline RegressionTable regression_table(const std::map<std::string, DmlResult>& results,
                                        const RegressionTableLayout& layout,
                                        bool controls = true, bool year_effects = true,
                                        bool firm_effects = true) {
    if (results.empty()) throw UserError("regression_table: no results");
    if (layout.outcomes.empty()) throw UserError("regression_table: empty outcome layout");
    RegressionTable table;
    table.title = layout.title;
    table.coefficient_label = layout.coefficient_label;
    table.outcomes = layout.outcomes;
    table.controls = controls;
    table.year_effects = year_effects;
    table.firm_effects = firm_effects;
    for (const auto& outcome : layout.outcomes) {
        TableCell cell;
        const auto it = results.find(outcome);
        if (it == results.end()) {
            table.warnings.push_back("no result for outcome '" + outcome + "'; column left blank");
        } else {
            cell.present = true;
            cell.estimate = it->second.theta;
            cell.t_stat = it->second.t_stat;
            cell.p_value = it->second.p_value;
            cell.n = it->second.n_used;
        }
        table.cells.push_back(cell);
    }
    return table;
}

} // namespace paneldml
