#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bernmix/adaboost.hpp"
#include "bernmix/dataset.hpp"
#include "bernmix/knn.hpp"
#include "bernmix/logistic.hpp"
#include "bernmix/random_forest.hpp"

namespace bernmix {

enum class ModelKind { logistic, knn, random_forest, adaboost };

inline const char* to_tag(ModelKind kind) {
    switch (kind) {
        case ModelKind::logistic: return "lr";
        case ModelKind::knn: return "knn";
        case ModelKind::random_forest: return "rf";
        case ModelKind::adaboost: return "ab";
    }
    throw std::logic_error("to_tag: unknown model kind");
}

inline ModelKind parse_model_tag(const std::string& tag) {
    if (tag == "lr") return ModelKind::logistic;
    if (tag == "knn") return ModelKind::knn;
    if (tag == "rf") return ModelKind::random_forest;
    if (tag == "ab") return ModelKind::adaboost;
    throw std::invalid_argument("unknown model tag '" + tag + "' (expected lr|knn|rf|ab)");
}

using FittedModel = std::variant<LogisticModel, KnnModel, ForestModel, AdaBoostModel>;

inline ModelKind model_kind(const FittedModel& model) {
    return static_cast<ModelKind>(model.index());
}

inline std::size_t model_n_features(const FittedModel& model) {
    return std::visit([](const auto& m) { return m.n_features(); }, model);
}

// One estimated default probability for one obligor.
inline double predict_one(const FittedModel& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

// The estimated default probabilities of a portfolio, used as the sample of
// the mixing variable of the exchangeable Bernoulli mixture.
struct MixingSample {
    std::string model_tag;
    std::vector<double> q;
};

inline MixingSample predict_mixing_sample(const FittedModel& model, const LabeledSample& data) {
    if (data.n_rows == 0)
        throw std::invalid_argument("predict_mixing_sample: empty sample");
    if (data.n_features != model_n_features(model))
        throw std::invalid_argument("predict_mixing_sample: feature count mismatch");
    MixingSample out;
    out.model_tag = to_tag(model_kind(model));
    out.q.resize(data.n_rows);
    for (std::size_t i = 0; i < data.n_rows; ++i) out.q[i] = predict_one(model, data.row(i));
    for (const double v : out.q) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::runtime_error("predict_mixing_sample: prediction outside [0,1]");
    }
    return out;
}

}  // namespace bernmix
