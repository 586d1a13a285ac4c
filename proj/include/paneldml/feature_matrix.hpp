#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/panel.hpp"

namespace paneldml {

// Dense row-major design matrix. Invariant: every value finite (callers
// impute or drop incomplete rows first), n >= 1, p >= 1.
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    FeatureMatrix(std::vector<std::string> names, std::size_t n, std::vector<double> values)
        : names_(std::move(names)), n_(n), values_(std::move(values)) {
        if (names_.empty()) throw UserError("feature matrix needs at least one column");
        if (n_ == 0) throw UserError("feature matrix needs at least one row");
        if (values_.size() != n_ * names_.size())
            throw UserError("feature matrix shape mismatch");
        for (double v : values_)
            if (!std::isfinite(v))
                throw UserError("feature matrix contains non-finite values");
    }

    static FeatureMatrix from_columns(std::vector<std::string> names,
                                      const std::vector<std::vector<double>>& cols) {
        if (cols.empty() || cols[0].empty()) throw UserError("feature matrix needs data");
        std::size_t n = cols[0].size();
        std::vector<double> values(n * cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j].size() != n) throw UserError("feature columns have unequal lengths");
            for (std::size_t i = 0; i < n; ++i) values[i * cols.size() + j] = cols[j][i];
        }
        return FeatureMatrix(std::move(names), n, std::move(values));
    }

    static FeatureMatrix from_dataset(const PanelDataset& data,
                                      const std::vector<std::string>& names) {
        std::vector<std::vector<double>> cols;
        cols.reserve(names.size());
        for (const auto& name : names) {
            auto col = data.column(name);
            cols.emplace_back(col.begin(), col.end());
        }
        return from_columns(names, cols);
    }

    std::size_t n_rows() const { return n_; }
    std::size_t n_cols() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    double at(std::size_t row, std::size_t col) const { return values_[row * n_cols() + col]; }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * n_cols(), n_cols()};
    }

    // Rows of this matrix restricted to `rows`, same columns.
    FeatureMatrix gather(std::span<const std::size_t> rows) const {
        std::vector<double> values;
        values.reserve(rows.size() * n_cols());
        for (auto r : rows) {
            auto src = row(r);
            values.insert(values.end(), src.begin(), src.end());
        }
        return FeatureMatrix(names_, rows.size(), std::move(values));
    }

private:
    std::vector<std::string> names_;
    std::size_t n_ = 0;
    std::vector<double> values_;
};

} // namespace paneldml
