#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/rng.hpp"
#include "paneldml/truth.hpp"

namespace paneldml {

// Nuisance function families. Coefficients are fixed constants recorded here
// so every family is evaluable exactly for the truth record.
enum class NuisanceFamily { Zero, Linear, AdditiveNonlinear, Interaction };

inline std::string to_string(NuisanceFamily f) {
    switch (f) {
        case NuisanceFamily::Zero: return "zero";
        case NuisanceFamily::Linear: return "linear";
        case NuisanceFamily::AdditiveNonlinear: return "additive_nonlinear";
        case NuisanceFamily::Interaction: return "interaction";
    }
    return "?";
}

inline NuisanceFamily nuisance_family_from_string(const std::string& s) {
    if (s == "zero") return NuisanceFamily::Zero;
    if (s == "linear") return NuisanceFamily::Linear;
    if (s == "additive_nonlinear") return NuisanceFamily::AdditiveNonlinear;
    if (s == "interaction") return NuisanceFamily::Interaction;
    throw UserError("unknown nuisance family '" + s +
                    "' (expected zero, linear, additive_nonlinear, interaction)");
}

inline double eval_nuisance(NuisanceFamily family, std::span<const double> x) {
    static constexpr double kLinearCoef[3] = {1.0, 0.7, 0.4};
    std::size_t k = std::min<std::size_t>(3, x.size());
    double out = 0.0;
    switch (family) {
        case NuisanceFamily::Zero:
            break;
        case NuisanceFamily::Linear:
            for (std::size_t j = 0; j < k; ++j) out += kLinearCoef[j] * x[j];
            break;
        case NuisanceFamily::AdditiveNonlinear:
            for (std::size_t j = 0; j < k; ++j) out += 0.5 * std::tanh(x[j]);
            break;
        case NuisanceFamily::Interaction:
            for (std::size_t j = 0; j < k; ++j) out += std::sin(2.0 * x[j]);
            if (x.size() >= 2) out += 0.5 * x[0] * x[1];
            break;
    }
    return out;
}

struct DgpSpec {
    std::size_t n_firms = 400;
    std::size_t n_years = 5;
    double theta0 = 0.5;
    std::size_t p = 5;
    NuisanceFamily g_family = NuisanceFamily::Interaction;        // confounded default
    NuisanceFamily m_family = NuisanceFamily::AdditiveNonlinear;
    double sigma_u = 1.0;
    double sigma_v = 1.0;
    double firm_effect_sd = 0.0;
    double year_effect_sd = 0.0;
    bool binary_treatment = false;
    std::uint64_t seed = 0;
    int first_year = 2010;

    void validate() const {
        if (n_firms * n_years < 50) throw UserError("DGP needs n_firms*n_years >= 50");
        if (p < 1) throw UserError("DGP needs p >= 1");
        if (sigma_u < 0 || sigma_v < 0 || firm_effect_sd < 0 || year_effect_sd < 0)
            throw UserError("DGP standard deviations must be >= 0");
        if (n_years < 2) throw UserError("DGP needs n_years >= 2 for a lead outcome");
    }
};

struct SyntheticPanel {
    PanelDataset data;
    TruthRecord truth;
};

// Panel layout: row (firm, year t) carries Mde_t, X_t, and the level SCR_t.
// The outcome equation defines the NEXT year's level,
//   SCR_{t+1} = theta0*Mde_t + g0(X_t) + alpha_i + gamma_{t+1} + U_t,
// with the first year's level seeded as alpha_i + gamma_first + noise. The
// estimation pipeline recovers the equation via lead_outcome(SCR, 1).
inline SyntheticPanel generate_panel(const DgpSpec& spec) {
    spec.validate();

    Schema schema;
    schema.columns.push_back({"SCR", ColumnRole::Outcome, false});
    schema.columns.push_back({"Mde", ColumnRole::Treatment, false});
    for (std::size_t j = 1; j <= spec.p; ++j)
        schema.columns.push_back({"X" + std::to_string(j), ColumnRole::Control, false});
    schema = Schema{schema.columns};

    Rng rng(derive_seed(spec.seed, 20));

    std::vector<double> alpha(spec.n_firms);
    for (auto& a : alpha) a = spec.firm_effect_sd * rng.normal();
    std::vector<double> gamma(spec.n_years);
    for (auto& g : gamma) g = spec.year_effect_sd * rng.normal();

    struct Draw {
        std::vector<double> x;
        double m0, g0, latent, mde, scr;
    };
    std::vector<std::vector<Draw>> draws(spec.n_firms, std::vector<Draw>(spec.n_years));
    std::vector<std::vector<double>> noise_u(spec.n_firms, std::vector<double>(spec.n_years));
    std::vector<double> base_noise(spec.n_firms);
    std::vector<double> latents;
    latents.reserve(spec.n_firms * spec.n_years);

    for (std::size_t i = 0; i < spec.n_firms; ++i) {
        base_noise[i] = spec.sigma_u * rng.normal();
        for (std::size_t t = 0; t < spec.n_years; ++t) {
            Draw& d = draws[i][t];
            d.x.resize(spec.p);
            for (auto& xv : d.x) xv = rng.normal();
            d.m0 = eval_nuisance(spec.m_family, d.x);
            d.g0 = eval_nuisance(spec.g_family, d.x);
            d.latent = d.m0 + alpha[i] + gamma[t] + spec.sigma_v * rng.normal();
            noise_u[i][t] = spec.sigma_u * rng.normal();
            latents.push_back(d.latent);
        }
    }

    double cut = 0.0;
    if (spec.binary_treatment) {
        auto mid = latents.begin() + static_cast<std::ptrdiff_t>(latents.size() / 2);
        std::nth_element(latents.begin(), mid, latents.end());
        cut = *mid;
    }
    for (std::size_t i = 0; i < spec.n_firms; ++i) {
        for (std::size_t t = 0; t < spec.n_years; ++t) {
            Draw& d = draws[i][t];
            d.mde = spec.binary_treatment ? (d.latent > cut ? 1.0 : 0.0) : d.latent;
            if (t == 0) d.scr = alpha[i] + gamma[0] + base_noise[i];
        }
        // SCR levels computed once; the truth record's u reuses the exact
        // same doubles so the bias identity is mechanical, not approximate.
        for (std::size_t t = 1; t < spec.n_years; ++t) {
            const Draw& prev = draws[i][t - 1];
            draws[i][t].scr = spec.theta0 * prev.mde + prev.g0 + alpha[i] + gamma[t] +
                              noise_u[i][t - 1];
        }
    }

    PanelDataset data(schema);
    TruthRecord truth;
    truth.theta0 = spec.theta0;

    std::size_t digits = std::max<std::size_t>(4, std::to_string(spec.n_firms - 1).size());
    for (std::size_t i = 0; i < spec.n_firms; ++i) {
        std::string num = std::to_string(i);
        std::string firm = "F" + std::string(digits - num.size(), '0') + num;
        for (std::size_t t = 0; t < spec.n_years; ++t) {
            const Draw& d = draws[i][t];
            std::vector<double> row;
            row.reserve(2 + spec.p);
            row.push_back(d.scr);
            row.push_back(d.mde);
            row.insert(row.end(), d.x.begin(), d.x.end());
            int year = spec.first_year + static_cast<int>(t);
            data.append_row(firm, year, row);

            TruthRow tr;
            tr.g0 = d.g0;
            tr.m0 = d.m0;
            tr.v = d.mde - d.m0;
            if (t + 1 < spec.n_years)
                tr.u = draws[i][t + 1].scr - spec.theta0 * d.mde - d.g0;
            truth.put(firm, year, tr);
        }
    }
    return {std::move(data), std::move(truth)};
}

inline std::vector<std::string> control_names(const DgpSpec& spec) {
    std::vector<std::string> names;
    for (std::size_t j = 1; j <= spec.p; ++j) names.push_back("X" + std::to_string(j));
    return names;
}

} // namespace paneldml
