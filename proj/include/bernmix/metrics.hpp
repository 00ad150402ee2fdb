#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace bernmix {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

// Scores at or above the threshold are predicted positive.
inline ConfusionMatrix confusion_at_threshold(std::span<const double> predictions,
                                              std::span<const int> labels,
                                              double threshold = 0.5) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("confusion_at_threshold: size mismatch");
    if (predictions.empty())
        throw std::invalid_argument("confusion_at_threshold: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] >= threshold;
        const bool truth = labels[i] == 1;
        if (pred && truth) ++cm.tp;
        else if (pred && !truth) ++cm.fp;
        else if (!pred && truth) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

// A ratio whose denominator can legitimately be zero (no predicted positives,
// no actual positives, ...). Convention: the value is then 0 and `defined`
// is false, so reports can mark it rather than divide by zero.
struct MetricValue {
    double value = 0.0;
    bool defined = true;
};

inline MetricValue precision(const ConfusionMatrix& cm) {
    const std::size_t denom = cm.tp + cm.fp;
    if (denom == 0) return {0.0, false};
    return {static_cast<double>(cm.tp) / static_cast<double>(denom), true};
}

inline MetricValue recall(const ConfusionMatrix& cm) {
    const std::size_t denom = cm.tp + cm.fn;
    if (denom == 0) return {0.0, false};
    return {static_cast<double>(cm.tp) / static_cast<double>(denom), true};
}

inline MetricValue f1_score(const ConfusionMatrix& cm) {
    const auto p = precision(cm);
    const auto r = recall(cm);
    if (!p.defined || !r.defined || p.value + r.value == 0.0) return {0.0, false};
    return {2.0 * p.value * r.value / (p.value + r.value), true};
}

inline double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

// Per-class metrics averaged with class support as weights. The negative
// class is scored by swapping the roles of the two labels.
struct WeightedPrf {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline WeightedPrf class_weighted_prf(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("class_weighted_prf: empty confusion matrix");
    const ConfusionMatrix flipped{cm.tn, cm.fn, cm.tp, cm.fp};
    const double n_pos = static_cast<double>(cm.tp + cm.fn);
    const double n_neg = static_cast<double>(cm.tn + cm.fp);
    const double n = n_pos + n_neg;
    WeightedPrf out;
    out.precision = (n_pos * precision(cm).value + n_neg * precision(flipped).value) / n;
    out.recall = (n_pos * recall(cm).value + n_neg * recall(flipped).value) / n;
    out.f1 = (n_pos * f1_score(cm).value + n_neg * f1_score(flipped).value) / n;
    return out;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

// ROC curve by a single descending sweep over the distinct score values.
// Tied scores move the operating point in one jump (a diagonal segment),
// which makes the trapezoidal area below equal to the tie-corrected
// Mann-Whitney statistic. Starts at (0,0), ends at (1,1).
inline std::vector<RocPoint> roc_curve(std::span<const double> predictions,
                                       std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("roc_curve: size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (const int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_curve: needs both classes present");

    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return predictions[a] > predictions[b];
    });

    std::vector<RocPoint> curve;
    curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = predictions[order[i]];
        // consume the whole tie group at this threshold
        while (i < order.size() && predictions[order[i]] == s) {
            if (labels[order[i]] == 1) ++tp;
            else ++fp;
            ++i;
        }
        curve.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                         static_cast<double>(tp) / static_cast<double>(n_pos), s});
    }
    return curve;
}

// Area under the ROC curve by the trapezoid rule over the tie-grouped sweep.
inline double roc_auc(std::span<const double> predictions, std::span<const int> labels) {
    const auto curve = roc_curve(predictions, labels);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
    }
    return area;
}

}  // namespace bernmix
