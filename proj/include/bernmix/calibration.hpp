#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bernmix/logistic.hpp"
#include "bernmix/special_functions.hpp"

namespace bernmix {

// Platt scaling: a one-dimensional logistic map q = 1 / (1 + exp(a*s + b))
// fitted by maximum likelihood on (score, label) pairs.
struct PlattMap {
    double a = 0.0;
    double b = 0.0;
    bool converged = false;

    double evaluate(double score) const { return sigmoid(-(a * score + b)); }
};

inline PlattMap platt_fit(std::span<const double> scores, std::span<const int> labels,
                          double tol = 1e-8, std::size_t max_iter = 100) {
    if (scores.size() != labels.size()) throw std::invalid_argument("platt_fit: size mismatch");
    if (scores.empty()) throw std::invalid_argument("platt_fit: empty input");
    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
    if (!has_pos || !has_neg)
        throw std::invalid_argument("platt_fit: needs both classes present");

    LabeledSample one_dim;
    one_dim.n_rows = scores.size();
    one_dim.n_features = 1;
    one_dim.features.assign(scores.begin(), scores.end());
    one_dim.labels.assign(labels.begin(), labels.end());
    // a whisper of ridge keeps separable score sets finite without moving
    // the optimum measurably
    const LogisticModel lm = logistic_fit(one_dim, 1e-10, tol, max_iter);

    // logistic_fit parameterizes q = sigmoid(b0 + b1*s); rewrite as
    // q = sigmoid(-(a*s + b))
    PlattMap map;
    map.a = -lm.beta[1];
    map.b = -lm.beta[0];
    map.converged = lm.converged;
    return map;
}

// Isotonic regression of labels on scores: the nondecreasing step function
// minimizing squared error, computed by pool-adjacent-violators. Evaluation
// is right-continuous in the score and clamped to the outermost levels.
struct IsotonicMap {
    std::vector<double> breakpoints;  // ascending distinct score values
    std::vector<double> levels;       // nondecreasing fitted probabilities

    double evaluate(double score) const {
        if (breakpoints.empty()) throw std::logic_error("IsotonicMap: not fitted");
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), score);
        if (it == breakpoints.begin()) return levels.front();
        const auto idx = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
        return levels[idx];
    }
};

inline IsotonicMap isotonic_fit(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("isotonic_fit: size mismatch");
    if (scores.empty()) throw std::invalid_argument("isotonic_fit: empty input");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    // pool tied scores first so the result is a function of the score
    std::vector<double> xs;       // distinct scores
    std::vector<double> sums;     // label sum per distinct score
    std::vector<double> weights;  // count per distinct score
    for (const std::size_t i : order) {
        if (!xs.empty() && scores[i] == xs.back()) {
            sums.back() += labels[i];
            weights.back() += 1.0;
        } else {
            xs.push_back(scores[i]);
            sums.push_back(labels[i]);
            weights.push_back(1.0);
        }
    }

    // pool-adjacent-violators on the means, stack formulation
    std::vector<double> level(xs.size()), weight(xs.size());
    std::vector<std::size_t> count(xs.size());  // distinct scores merged into the block
    std::size_t top = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        level[top] = sums[i] / weights[i];
        weight[top] = weights[i];
        count[top] = 1;
        ++top;
        while (top >= 2 && level[top - 2] >= level[top - 1]) {
            const double w = weight[top - 2] + weight[top - 1];
            level[top - 2] = (level[top - 2] * weight[top - 2] + level[top - 1] * weight[top - 1]) / w;
            weight[top - 2] = w;
            count[top - 2] += count[top - 1];
            --top;
        }
    }

    IsotonicMap map;
    map.breakpoints = xs;
    map.levels.reserve(xs.size());
    for (std::size_t blk = 0; blk < top; ++blk) {
        const double lv = std::clamp(level[blk], 0.0, 1.0);
        for (std::size_t r = 0; r < count[blk]; ++r) map.levels.push_back(lv);
    }
    return map;
}

// Reliability diagram over equal-width probability bins.
struct ReliabilityBins {
    std::size_t n_bins = 0;
    std::vector<std::size_t> count;       // observations per bin
    std::vector<double> mean_prediction;  // average predicted probability
    std::vector<double> positive_rate;    // observed default frequency
};

inline ReliabilityBins make_reliability_bins(std::span<const double> predictions,
                                             std::span<const int> labels,
                                             std::size_t n_bins = 10) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("reliability bins: size mismatch");
    if (predictions.empty()) throw std::invalid_argument("reliability bins: empty input");
    if (n_bins == 0) throw std::invalid_argument("reliability bins: n_bins must be positive");
    ReliabilityBins bins;
    bins.n_bins = n_bins;
    bins.count.assign(n_bins, 0);
    bins.mean_prediction.assign(n_bins, 0.0);
    bins.positive_rate.assign(n_bins, 0.0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = predictions[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("reliability bins: prediction outside [0,1]");
        auto b = static_cast<std::size_t>(p * static_cast<double>(n_bins));
        if (b == n_bins) b = n_bins - 1;  // p == 1 falls in the top bin
        ++bins.count[b];
        bins.mean_prediction[b] += p;
        bins.positive_rate[b] += labels[i];
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (bins.count[b] == 0) continue;
        bins.mean_prediction[b] /= static_cast<double>(bins.count[b]);
        bins.positive_rate[b] /= static_cast<double>(bins.count[b]);
    }
    return bins;
}

// Expected calibration error: the bin-weight average of the absolute gap
// between mean predicted probability and observed frequency.
inline double expected_calibration_error(std::span<const double> predictions,
                                         std::span<const int> labels, std::size_t n_bins = 10) {
    const ReliabilityBins bins = make_reliability_bins(predictions, labels, n_bins);
    const auto n = static_cast<double>(predictions.size());
    double ece = 0.0;
    for (std::size_t b = 0; b < bins.n_bins; ++b) {
        if (bins.count[b] == 0) continue;
        ece += static_cast<double>(bins.count[b]) / n *
               std::fabs(bins.mean_prediction[b] - bins.positive_rate[b]);
    }
    return ece;
}

enum class CalibrationMethod { none, platt, isotonic };

inline const char* to_string(CalibrationMethod m) {
    switch (m) {
        case CalibrationMethod::none: return "none";
        case CalibrationMethod::platt: return "platt";
        case CalibrationMethod::isotonic: return "isotonic";
    }
    throw std::logic_error("to_string: unknown calibration method");
}

// Both candidate calibrators for one model, with their validation ECEs and
// the selected one. Selection: smaller ECE wins, ties go to Platt (the
// lower-variance map).
struct CalibrationChoice {
    CalibrationMethod method = CalibrationMethod::none;
    PlattMap platt;
    IsotonicMap isotonic;
    double platt_ece = 0.0;
    double isotonic_ece = 0.0;

    double evaluate(double score) const {
        switch (method) {
            case CalibrationMethod::none: return score;
            case CalibrationMethod::platt: return platt.evaluate(score);
            case CalibrationMethod::isotonic: return isotonic.evaluate(score);
        }
        throw std::logic_error("CalibrationChoice: unknown method");
    }
};

// Fit both calibrators on (scores, labels) from the calibration rows and
// pick by ECE measured on held-out validation predictions.
inline CalibrationChoice select_calibration(std::span<const double> fit_scores,
                                            std::span<const int> fit_labels,
                                            std::span<const double> validation_scores,
                                            std::span<const int> validation_labels,
                                            std::size_t ece_bins = 10) {
    CalibrationChoice choice;
    choice.platt = platt_fit(fit_scores, fit_labels);
    choice.isotonic = isotonic_fit(fit_scores, fit_labels);

    std::vector<double> platt_pred(validation_scores.size());
    std::vector<double> iso_pred(validation_scores.size());
    for (std::size_t i = 0; i < validation_scores.size(); ++i) {
        platt_pred[i] = choice.platt.evaluate(validation_scores[i]);
        iso_pred[i] = choice.isotonic.evaluate(validation_scores[i]);
    }
    choice.platt_ece = expected_calibration_error(platt_pred, validation_labels, ece_bins);
    choice.isotonic_ece = expected_calibration_error(iso_pred, validation_labels, ece_bins);
    choice.method = choice.isotonic_ece < choice.platt_ece ? CalibrationMethod::isotonic
                                                           : CalibrationMethod::platt;
    return choice;
}

}  // namespace bernmix
