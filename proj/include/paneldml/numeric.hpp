#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace paneldml {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

inline double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Sample variance (ddof = 1).
inline double sample_variance(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need >= 2 values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

/// Population variance (ddof = 0).
inline double population_variance(std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v) { return std::sqrt(sample_variance(v)); }

/// Z-scores with sample standard deviation. Zero-variance input maps every
/// value to 0 and sets *degenerate when provided.
inline std::vector<double> zscore(std::span<const double> v, bool* degenerate = nullptr) {
    if (v.size() < 2) throw std::invalid_argument("zscore: need >= 2 values");
    const double m = mean(v);
    const double sd = sample_sd(v);
    std::vector<double> out(v.size());
    if (sd <= 0.0 || !std::isfinite(sd)) {
        if (degenerate) *degenerate = true;
        return out; // all zeros
    }
    if (degenerate) *degenerate = false;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / sd;
    return out;
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Two-sided p-value for a standard-normal test statistic.
inline double two_sided_p(double t) {
    return std::erfc(std::fabs(t) / std::sqrt(2.0));
}

/// 97.5% standard-normal quantile, used for 95% confidence intervals.
inline constexpr double kZ975 = 1.959963984540054;

inline double correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("correlation: size mismatch or too short");
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace paneldml
