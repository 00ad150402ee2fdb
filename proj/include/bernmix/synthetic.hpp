#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bernmix/dataset.hpp"
#include "bernmix/rng.hpp"
#include "bernmix/special_functions.hpp"

namespace bernmix {

// Deterministic generator of a credit-card-default covariate file in the
// standard 23-column layout (limit, demographics, six months of repayment
// status / bill / payment history, 0/1 next-month default flag).
//
// The default process mixes a weak linear channel with per-level
// delinquency effects that plateau after two months of delay, a dormant
// account segment, utilization and age thresholds and an exclusive-or
// pattern, all driven by latent stress/behaviour factors that load on
// most of the columns. Dormant accounts sit at the inactive end of every
// repayment column yet default more often than active revolvers, so a
// single linear score cannot price them together with the delinquency
// slope, while neighbourhood- and partition-based learners isolate the
// segment easily; the plateau keeps the true intensity flat across the
// ordinal tail a linear fit would otherwise extrapolate. An unobserved
// heterogeneity term keeps discrimination bounded away from perfect, and
// the intensity is capped so individual default probabilities concentrate
// well below one.
struct SyntheticConfig {
    std::size_t n_rows = 30000;
    std::uint64_t seed = 6;
    double intercept = -1.86;  // tuned for a default rate near 0.26
};

namespace detail {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// repayment-status ordinal from a latent score ~ N(0,1):
// -2 (inactive), -1 (paid duly), 0 (revolving), 1..8 (months of delay)
inline int repayment_ordinal(double s) {
    static constexpr std::array<double, 10> thresholds = {
        -1.227, -0.332, 1.175, 1.751, 2.170, 2.387, 2.543, 2.697, 2.878, 3.156};
    static constexpr std::array<int, 11> values = {-2, -1, 0, 1, 2, 3, 4, 5, 6, 7, 8};
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        if (s < thresholds[i]) return values[i];
    return values.back();
}

}  // namespace detail

struct SyntheticRow {
    long long id;
    std::array<long long, 23> features;  // LIMIT_BAL .. PAY_AMT6, integral like the real file
    int label;
};

inline std::vector<SyntheticRow> generate_synthetic_rows(const SyntheticConfig& cfg) {
    if (cfg.n_rows == 0) throw std::invalid_argument("synthetic: n_rows must be positive");
    Rng rng(cfg.seed);
    std::vector<SyntheticRow> rows;
    rows.reserve(cfg.n_rows);

    for (std::size_t i = 0; i < cfg.n_rows; ++i) {
        const double stress = rng.normal();   // latent financial stress
        const double season = rng.normal();   // shared repayment-behaviour factor
        const double habit = rng.normal();    // shared utilization factor

        // a slice of accounts is dormant: no card activity, token balances,
        // no payments; dormancy strikes across the stress spectrum
        const bool dormant = rng.uniform() < 0.19;

        // credit limit: log-normal, higher for the unstressed
        const double log_limit = 11.55 + 0.78 * rng.normal() - 0.33 * stress;
        const long long limit = std::clamp<long long>(
            std::llround(std::exp(log_limit) / 10000.0) * 10000, 10000, 1000000);

        const long long sex = rng.uniform() < 0.604 ? 2 : 1;
        const double ue = rng.uniform();
        const long long education = ue < 0.353 ? 1 : ue < 0.820 ? 2 : ue < 0.970 ? 3 : 4;
        const double um = rng.uniform();
        const long long marriage = um < 0.455 ? 1 : um < 0.987 ? 2 : 3;
        const long long age =
            std::clamp<long long>(std::llround(35.5 + 9.2 * rng.normal()), 21, 79);

        // repayment statuses, most recent month first; strongly cross-correlated
        // through the stress and season factors
        std::array<int, 6> pay{};
        for (auto& p : pay)
            p = dormant ? (rng.uniform() < 0.55 ? -2 : -1)
                        : detail::repayment_ordinal(0.95 * stress + 0.28 * season +
                                                    0.34 * rng.normal());

        // bill amounts as a utilization fraction of the limit
        std::array<long long, 6> bill{};
        for (std::size_t j = 0; j < 6; ++j) {
            const double util =
                dormant ? 0.012 * rng.uniform()
                        : detail::normal_cdf(0.68 * stress + 0.42 * habit + 0.48 * rng.normal());
            bill[j] = std::llround(static_cast<double>(limit) * util *
                                   (1.04 - 0.025 * static_cast<double>(j)));
            if (rng.uniform() < 0.015)  // occasional refund balance
                bill[j] = -std::llround(rng.uniform() * 0.02 * static_cast<double>(limit));
        }

        // payments against the previous month's bill; the stressed pay a
        // smaller fraction and skip payments more often
        std::array<long long, 6> pay_amt{};
        for (std::size_t j = 0; j < 6; ++j) {
            const long long base = std::max<long long>(j + 1 < 6 ? bill[j + 1] : bill[5], 0);
            if (dormant || rng.uniform() < sigmoid(-1.9 + 0.9 * stress)) {
                pay_amt[j] = 0;
            } else {
                const double ratio =
                    std::min(std::exp(-1.6 - 0.5 * stress + 0.6 * rng.normal()), 2.0);
                pay_amt[j] = std::llround(static_cast<double>(base) * ratio);
            }
        }

        // Default intensity. Delinquency persistence (months in arrears)
        // and average utilization drive the risk through plateaued level
        // effects spread across many columns; dormancy, an age threshold,
        // a skipped-payment interaction and exclusive-or patterns supply
        // structure no single linear score can represent, while a small
        // monotone channel remains. The cap keeps even the best attainable
        // individual probability far from one.
        int delinquent_months = 0;
        for (const int p : pay) delinquent_months += p >= 1;
        const auto persistence_level = [](int m) {
            if (m == 0) return 0.00;
            if (m == 1) return 0.40;
            if (m == 2) return 0.90;
            return 1.30;
        };
        double total_bill = 0.0;
        for (const long long b : bill) total_bill += static_cast<double>(std::max<long long>(b, 0));
        const double avg_util = total_bill / (6.0 * static_cast<double>(limit));
        const double z_lim = (std::log(static_cast<double>(limit)) - 11.55) / 0.80;
        const double z_age = (static_cast<double>(age) - 35.5) / 9.2;
        const double linear = 0.05 * pay[0] - 0.40 * std::clamp(z_lim, -1.6, 1.6);
        const double shaped = persistence_level(delinquent_months) +
                              0.30 * (pay[0] >= 2) + 0.25 * (pay[0] <= -2) +
                              0.75 * (avg_util >= 0.80) + 0.30 * (std::fabs(z_age) >= 1.2) +
                              0.55 * (pay_amt[0] == 0 && avg_util >= 0.45) +
                              0.55 * ((pay[2] >= 1) != (pay[4] >= 1)) +
                              0.40 * ((pay[3] >= 1) != (pay[5] >= 1)) +
                              (dormant ? 1.00 : 0.0);
        const double eta =
            std::min(cfg.intercept + linear + shaped + 0.42 * rng.normal(), 1.10);
        const int label = rng.uniform() < sigmoid(eta) ? 1 : 0;

        SyntheticRow row;
        row.id = static_cast<long long>(i) + 1;
        row.features = {limit,       sex,         education,   marriage,    age,
                        pay[0],      pay[1],      pay[2],      pay[3],      pay[4],
                        pay[5],      bill[0],     bill[1],     bill[2],     bill[3],
                        bill[4],     bill[5],     pay_amt[0],  pay_amt[1],  pay_amt[2],
                        pay_amt[3],  pay_amt[4],  pay_amt[5]};
        row.label = label;
        rows.push_back(row);
    }
    return rows;
}

// Write the generated rows as a CSV in the standard header layout, ready
// for load_csv with CovariateSchema::credit_card_default().
inline void write_synthetic_credit_csv(const std::filesystem::path& path,
                                       const SyntheticConfig& cfg) {
    const auto rows = generate_synthetic_rows(cfg);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv file: " + path.string());
    const CovariateSchema schema = CovariateSchema::credit_card_default();
    out << schema.id_name;
    for (const auto& name : schema.feature_names) out << ',' << name;
    out << ',' << schema.target_name << "\n";
    for (const auto& row : rows) {
        out << row.id;
        for (const long long v : row.features) out << ',' << v;
        out << ',' << row.label << "\n";
    }
    if (!out) throw std::runtime_error("failed while writing csv file: " + path.string());
}

}  // namespace bernmix
