#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/numeric.hpp"

namespace paneldml {

enum class ColumnRole { Outcome, Treatment, Control, Auxiliary };

inline std::string to_string(ColumnRole r) {
    switch (r) {
        case ColumnRole::Outcome: return "outcome";
        case ColumnRole::Treatment: return "treatment";
        case ColumnRole::Control: return "control";
        case ColumnRole::Auxiliary: return "auxiliary";
    }
    return "auxiliary";
}

inline ColumnRole column_role_from_string(std::string_view s) {
    if (s == "outcome") return ColumnRole::Outcome;
    if (s == "treatment") return ColumnRole::Treatment;
    if (s == "control") return ColumnRole::Control;
    if (s == "auxiliary") return ColumnRole::Auxiliary;
    throw UserError("unknown column role '" + std::string(s) + "'");
}

struct ColumnSpec {
    std::string name;
    ColumnRole role = ColumnRole::Auxiliary;
    bool is_text = false; // text columns hold tags (regions, categories)
};

/// Ordered column declaration. firm_id and year are implicit key columns and
/// never appear here.
struct Schema {
    std::vector<ColumnSpec> columns;

    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return i;
        return std::nullopt;
    }
    bool has(std::string_view name) const { return index_of(name).has_value(); }
};

struct LoadReport {
    std::size_t rows = 0;
    std::map<std::string, std::size_t> missing_per_column;
    std::size_t unparseable_cells = 0;
    std::vector<std::string> ignored_columns;

    std::string to_text() const {
        std::ostringstream os;
        os << "rows: " << rows << "\n";
        os << "unparseable numeric cells (stored as missing): " << unparseable_cells << "\n";
        os << "missing per column:\n";
        for (const auto& [name, n] : missing_per_column)
            os << "  " << name << ": " << n << "\n";
        if (!ignored_columns.empty()) {
            os << "ignored columns:";
            for (const auto& c : ignored_columns) os << " " << c;
            os << "\n";
        }
        return os.str();
    }
};

/// Firm-year panel with named columns. Numeric cells use NaN as the explicit
/// missing marker; text columns use the empty string. (firm_id, year) pairs
/// are unique, enforced on every construction path. Instances are immutable
/// once built; operations produce new datasets.
class PanelDataset {
public:
    PanelDataset() = default;

    explicit PanelDataset(Schema schema) : schema_(std::move(schema)) {
        numeric_.resize(schema_.columns.size());
        text_.resize(schema_.columns.size());
    }

    const Schema& schema() const { return schema_; }
    std::size_t n_rows() const { return firm_ids_.size(); }
    std::size_t n_columns() const { return schema_.columns.size(); }

    const std::string& firm_id(std::size_t row) const { return firm_ids_[row]; }
    int year(std::size_t row) const { return years_[row]; }
    std::span<const std::string> firm_ids() const { return firm_ids_; }
    std::span<const int> years() const { return years_; }

    bool has_column(std::string_view name) const { return schema_.has(name); }

    bool is_text_column(std::string_view name) const {
        return schema_.columns[require(name)].is_text;
    }

    std::span<const double> column(std::string_view name) const {
        const std::size_t i = require(name);
        if (schema_.columns[i].is_text)
            throw UserError("column '" + std::string(name) + "' is a text column");
        return numeric_[i];
    }

    std::span<const std::string> text_column(std::string_view name) const {
        const std::size_t i = require(name);
        if (!schema_.columns[i].is_text)
            throw UserError("column '" + std::string(name) + "' is not a text column");
        return text_[i];
    }

    double value(std::size_t row, std::string_view name) const { return column(name)[row]; }

    /// Appends a row. Numeric and text values must follow schema order for
    /// their respective column kinds (missing = NaN / empty string).
    void append_row(std::string firm, int year, std::span<const double> numeric_values,
                    std::span<const std::string> text_values = {}) {
        if (!key_index_.emplace(key(firm, year), firm_ids_.size()).second)
            throw UserError("duplicate key (" + firm + ", " + std::to_string(year) + ")");
        std::size_t ni = 0, ti = 0;
        for (std::size_t c = 0; c < schema_.columns.size(); ++c) {
            if (schema_.columns[c].is_text) {
                text_[c].push_back(ti < text_values.size() ? text_values[ti] : std::string());
                ++ti;
            } else {
                numeric_[c].push_back(ni < numeric_values.size() ? numeric_values[ni] : kMissing);
                ++ni;
            }
        }
        firm_ids_.push_back(std::move(firm));
        years_.push_back(year);
    }

    std::optional<std::size_t> find_row(std::string_view firm, int year) const {
        auto it = key_index_.find(key(firm, year));
        if (it == key_index_.end()) return std::nullopt;
        return it->second;
    }

    /// New dataset with an extra numeric column appended to the schema.
    PanelDataset with_numeric_column(const std::string& name, ColumnRole role,
                                     std::vector<double> values) const {
        if (schema_.has(name)) throw UserError("column '" + name + "' already exists");
        if (values.size() != n_rows())
            throw std::invalid_argument("with_numeric_column: length mismatch");
        PanelDataset out(*this);
        out.schema_.columns.push_back({name, role, false});
        out.numeric_.push_back(std::move(values));
        out.text_.emplace_back();
        return out;
    }

    /// New dataset with one numeric column's values replaced.
    PanelDataset with_replaced_column(std::string_view name, std::vector<double> values) const {
        const std::size_t i = require(name);
        if (schema_.columns[i].is_text)
            throw UserError("cannot replace text column '" + std::string(name) + "' with numbers");
        if (values.size() != n_rows())
            throw std::invalid_argument("with_replaced_column: length mismatch");
        PanelDataset out(*this);
        out.numeric_[i] = std::move(values);
        return out;
    }

    /// New dataset keeping the rows flagged true, in order.
    PanelDataset subset(const std::vector<bool>& keep) const {
        if (keep.size() != n_rows()) throw std::invalid_argument("subset: mask length mismatch");
        PanelDataset out(schema_);
        for (std::size_t r = 0; r < n_rows(); ++r) {
            if (!keep[r]) continue;
            std::vector<double> nv;
            std::vector<std::string> tv;
            for (std::size_t c = 0; c < schema_.columns.size(); ++c) {
                if (schema_.columns[c].is_text) tv.push_back(text_[c][r]);
                else nv.push_back(numeric_[c][r]);
            }
            out.append_row(firm_ids_[r], years_[r], nv, tv);
        }
        return out;
    }

private:
    static std::string key(std::string_view firm, int year) {
        std::string k(firm);
        k.push_back('\x1f');
        k += std::to_string(year);
        return k;
    }

    std::size_t require(std::string_view name) const {
        auto i = schema_.index_of(name);
        if (!i) throw UserError("unknown column '" + std::string(name) + "'");
        return *i;
    }

    Schema schema_;
    std::vector<std::string> firm_ids_;
    std::vector<int> years_;
    std::vector<std::vector<double>> numeric_; // slot per schema column; empty for text
    std::vector<std::vector<std::string>> text_;
    std::unordered_map<std::string, std::size_t> key_index_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') { field.push_back('"'); ++i; }
                else in_quotes = false;
            } else field.push_back(ch);
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline bool parse_double(std::string_view s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

inline bool is_missing_marker(std::string_view s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan";
}

} // namespace detail

/// Loads a firm-year CSV. The header must contain firm_id, year and every
/// schema column; header columns absent from the schema are ignored (listed
/// in the report). Unparseable numeric cells become missing and are counted.
inline PanelDataset load_csv(const std::filesystem::path& path, const Schema& schema,
                             LoadReport* report = nullptr) {
    std::ifstream in(path);
    if (!in) throw UserError("cannot open file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw UserError("empty file '" + path.string() + "'");

    const auto header = detail::split_csv_line(line);
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) pos.emplace(header[i], i);

    auto require_header = [&](const std::string& name) {
        auto it = pos.find(name);
        if (it == pos.end())
            throw UserError("missing mandatory column '" + name + "' in '" + path.string() + "'");
        return it->second;
    };
    const std::size_t firm_pos = require_header("firm_id");
    const std::size_t year_pos = require_header("year");
    std::vector<std::size_t> col_pos;
    col_pos.reserve(schema.columns.size());
    for (const auto& c : schema.columns) col_pos.push_back(require_header(c.name));

    LoadReport rep;
    for (const auto& c : schema.columns) rep.missing_per_column[c.name] = 0;
    {
        std::unordered_set<std::string> declared{"firm_id", "year"};
        for (const auto& c : schema.columns) declared.insert(c.name);
        for (const auto& h : header)
            if (!declared.count(h)) rep.ignored_columns.push_back(h);
    }

    PanelDataset data(schema);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw UserError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        const std::string& firm = fields[firm_pos];
        int year = 0;
        {
            const std::string& ys = fields[year_pos];
            const char* b = ys.data();
            auto [p, ec] = std::from_chars(b, b + ys.size(), year);
            if (ec != std::errc() || p != b + ys.size())
                throw UserError("line " + std::to_string(line_no) + ": year '" + ys +
                                "' is not an integer");
        }
        std::vector<double> nv;
        std::vector<std::string> tv;
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            const std::string& cell = fields[col_pos[c]];
            if (schema.columns[c].is_text) {
                tv.push_back(cell);
                continue;
            }
            double v = kMissing;
            if (detail::is_missing_marker(cell)) {
                ++rep.missing_per_column[schema.columns[c].name];
            } else if (!detail::parse_double(cell, v)) {
                v = kMissing;
                ++rep.unparseable_cells;
                ++rep.missing_per_column[schema.columns[c].name];
            }
            nv.push_back(v);
        }
        data.append_row(firm, year, nv, tv);
    }
    if (data.n_rows() == 0) throw UserError("empty file '" + path.string() + "' (no data rows)");
    rep.rows = data.n_rows();
    if (report) *report = rep;
    return data;
}

inline std::string to_csv_string(const PanelDataset& data) {
    std::ostringstream os;
    os << "firm_id,year";
    for (const auto& c : data.schema().columns) os << ',' << detail::csv_escape(c.name);
    os << '\n';
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        os << detail::csv_escape(data.firm_id(r)) << ',' << data.year(r);
        for (const auto& c : data.schema().columns) {
            os << ',';
            if (c.is_text) {
                os << detail::csv_escape(data.text_column(c.name)[r]);
            } else {
                const double v = data.column(c.name)[r];
                if (!is_missing(v)) os << detail::format_double(v);
            }
        }
        os << '\n';
    }
    return os.str();
}

inline void save_csv(const PanelDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write file '" + path.string() + "'");
    out << to_csv_string(data);
}

} // namespace paneldml
