#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/feature_matrix.hpp"
#include "paneldml/learners/spec.hpp"

namespace paneldml {

struct TrainingInfo {
    std::uint64_t seed = 0;
    double in_sample_mse = 0.0;
    bool constant = false; // degenerate (zero-variance) target
};

class Model {
public:
    virtual ~Model() = default;

    virtual LearnerKind kind() const = 0;

    // x holds values in training-column order.
    virtual double predict_row(std::span<const double> x) const = 0;

    const std::vector<std::string>& training_columns() const { return columns_; }
    const TrainingInfo& info() const { return info_; }

    std::vector<double> predict(const FeatureMatrix& X) const {
        auto perm = column_permutation(X);
        std::vector<double> out(X.n_rows());
        std::vector<double> buf(columns_.size());
        for (std::size_t r = 0; r < X.n_rows(); ++r) {
            auto row = X.row(r);
            for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = row[perm[j]];
            out[r] = predict_row(buf);
        }
        return out;
    }

    void set_training_columns(std::vector<std::string> cols) { columns_ = std::move(cols); }
    TrainingInfo& mutable_info() { return info_; }

private:
    // Maps training column j to its position in X; same name set required.
    std::vector<std::size_t> column_permutation(const FeatureMatrix& X) const {
        std::vector<std::size_t> perm(columns_.size());
        std::string missing, extra;
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            auto it = std::find(X.names().begin(), X.names().end(), columns_[j]);
            if (it == X.names().end()) {
                if (!missing.empty()) missing += ", ";
                missing += columns_[j];
            } else {
                perm[j] = static_cast<std::size_t>(it - X.names().begin());
            }
        }
        for (const auto& name : X.names())
            if (std::find(columns_.begin(), columns_.end(), name) == columns_.end()) {
                if (!extra.empty()) extra += ", ";
                extra += name;
            }
        if (!missing.empty() || !extra.empty())
            throw UserError("prediction columns do not match training columns; missing: [" +
                            missing + "], extra: [" + extra + "]");
        return perm;
    }

    std::vector<std::string> columns_;
    TrainingInfo info_;
};

// Degenerate-target fallback: predicts one value everywhere.
class ConstantModel : public Model {
public:
    ConstantModel(LearnerKind requested, double value) : kind_(requested), value_(value) {}
    LearnerKind kind() const override { return kind_; }
    double predict_row(std::span<const double>) const override { return value_; }
    double value() const { return value_; }

private:
    LearnerKind kind_;
    double value_;
};

} // namespace paneldml
