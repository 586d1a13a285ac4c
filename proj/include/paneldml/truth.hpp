#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/numeric.hpp"
#include "paneldml/panel.hpp"

namespace paneldml {

// Exact per-row nuisance values of a synthetic draw. u is defined against the
// realized lead outcome, u = y_lead - theta0*d - g0(X), so it absorbs any
// fixed effects and the naive identity a + b = sqrt(n)(theta_hat - theta0)
// holds mechanically on every generating process.
struct TruthRow {
    double g0 = 0.0;
    double m0 = 0.0;
    double u = kMissing; // missing when the lead outcome does not exist
    double v = 0.0;
};

struct TruthRecord {
    double theta0 = 0.0;
    std::unordered_map<std::string, TruthRow> rows;

    static std::string key(const std::string& firm, int year) {
        return firm + '\x1f' + std::to_string(year);
    }

    void put(const std::string& firm, int year, TruthRow row) {
        rows[key(firm, year)] = row;
    }

    const TruthRow& at(const std::string& firm, int year) const {
        auto it = rows.find(key(firm, year));
        if (it == rows.end())
            throw UserError("bias decomposition needs synthetic truth; no record for (" + firm +
                            ", " + std::to_string(year) + ")");
        return it->second;
    }
};

// Truth columns aligned to a dataset's row order (typically the prepared
// estimation sample after lead construction and listwise deletion).
struct TruthView {
    double theta0 = 0.0;
    std::vector<double> g0, m0, u, v;
};

inline TruthView align_truth(const TruthRecord& truth, const PanelDataset& data) {
    TruthView view;
    view.theta0 = truth.theta0;
    view.g0.reserve(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        const auto& row = truth.at(data.firm_id(r), data.year(r));
        view.g0.push_back(row.g0);
        view.m0.push_back(row.m0);
        view.u.push_back(row.u);
        view.v.push_back(row.v);
    }
    return view;
}

} // namespace paneldml
