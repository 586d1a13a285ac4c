#pragma once

#include <string>
#include <variant>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/panel.hpp"

namespace paneldml {

/// One comparison against a row. Applies to the firm_id / year key columns
/// or to any data column; text columns support Eq / Ne / In.
struct FilterCondition {
    enum class Op { Eq, Ne, Lt, Le, Gt, Ge, In };

    std::string column; // "firm_id", "year", or a schema column
    Op op = Op::Eq;
    std::variant<double, std::string, std::vector<std::string>> value;
};

/// Declarative row predicate. Rows MATCHING the predicate are excluded by
/// apply_filter. An empty condition list matches nothing.
struct SampleFilter {
    enum class Combine { All, Any };

    std::vector<FilterCondition> conditions;
    Combine combine = Combine::Any;
};

struct FilterReport {
    std::size_t excluded = 0;
    bool all_rows_excluded = false;
};

namespace detail {

inline bool compare_numeric(double lhs, FilterCondition::Op op, double rhs) {
    using Op = FilterCondition::Op;
    if (is_missing(lhs)) return false; // missing cells never match a condition
    switch (op) {
        case Op::Eq: return lhs == rhs;
        case Op::Ne: return lhs != rhs;
        case Op::Lt: return lhs < rhs;
        case Op::Le: return lhs <= rhs;
        case Op::Gt: return lhs > rhs;
        case Op::Ge: return lhs >= rhs;
        case Op::In: return false;
    }
    return false;
}

inline bool compare_text(const std::string& lhs, const FilterCondition& cond) {
    using Op = FilterCondition::Op;
    switch (cond.op) {
        case Op::Eq: return lhs == std::get<std::string>(cond.value);
        case Op::Ne: return lhs != std::get<std::string>(cond.value);
        case Op::In: {
            const auto& set = std::get<std::vector<std::string>>(cond.value);
            for (const auto& s : set)
                if (s == lhs) return true;
            return false;
        }
        default:
            throw UserError("text column '" + cond.column + "' supports only eq/ne/in");
    }
}

inline bool row_matches(const PanelDataset& data, std::size_t row, const FilterCondition& cond) {
    if (cond.column == "firm_id") return compare_text(data.firm_id(row), cond);
    if (cond.column == "year")
        return compare_numeric(static_cast<double>(data.year(row)), cond.op,
                               std::get<double>(cond.value));
    if (!data.has_column(cond.column)) throw UserError("unknown column '" + cond.column + "'");
    if (data.is_text_column(cond.column))
        return compare_text(data.text_column(cond.column)[row], cond);
    if (!std::holds_alternative<double>(cond.value))
        throw UserError("numeric column '" + cond.column + "' needs a numeric comparison value");
    return compare_numeric(data.column(cond.column)[row], cond.op, std::get<double>(cond.value));
}

} // namespace detail

/// Removes the rows matching the filter (exclusion semantics). Reports how
/// many were excluded and whether nothing survived.
inline PanelDataset apply_filter(const PanelDataset& data, const SampleFilter& filter,
                                 FilterReport* report = nullptr) {
    // validate column references up front, even on an empty dataset
    for (const auto& cond : filter.conditions) {
        if (cond.column != "firm_id" && cond.column != "year" && !data.has_column(cond.column))
            throw UserError("unknown column '" + cond.column + "'");
    }
    std::vector<bool> keep(data.n_rows(), true);
    std::size_t excluded = 0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        bool match;
        if (filter.conditions.empty()) {
            match = false;
        } else if (filter.combine == SampleFilter::Combine::All) {
            match = true;
            for (const auto& c : filter.conditions) match = match && detail::row_matches(data, r, c);
        } else {
            match = false;
            for (const auto& c : filter.conditions) match = match || detail::row_matches(data, r, c);
        }
        if (match) {
            keep[r] = false;
            ++excluded;
        }
    }
    if (report) {
        report->excluded = excluded;
        report->all_rows_excluded = data.n_rows() > 0 && excluded == data.n_rows();
    }
    return data.subset(keep);
}

} // namespace paneldml
