#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "bernmix/dataset.hpp"

namespace bernmix {

// k-nearest-neighbour classifier over Euclidean distance. Features are
// expected already standardized (the pipeline fits the scaler on the
// training rows). Prediction is the positive fraction among the k nearest
// training rows, so it always lies on the grid {0, 1/k, ..., 1}.
//
// Distance ties are broken by training-row index (lower index wins), which
// pins down the neighbour set exactly and keeps predictions deterministic.
class KnnModel {
public:
    static KnnModel fit(const LabeledSample& train, std::size_t k) {
        if (k == 0) throw std::invalid_argument("KnnModel: k must be positive");
        if (train.n_rows == 0) throw std::invalid_argument("KnnModel: empty sample");
        if (k > train.n_rows)
            throw std::invalid_argument("KnnModel: k exceeds number of training rows");
        KnnModel m;
        m.k_ = k;
        m.n_rows_ = train.n_rows;
        m.n_features_ = train.n_features;
        m.features_ = train.features;
        m.labels_ = train.labels;
        return m;
    }

    double predict(std::span<const double> x) const {
        if (x.size() != n_features_)
            throw std::invalid_argument("KnnModel: feature count mismatch");
        thread_local std::vector<std::pair<double, std::size_t>> dist;
        dist.clear();
        dist.reserve(n_rows_);
        for (std::size_t i = 0; i < n_rows_; ++i) {
            const double* r = features_.data() + i * n_features_;
            double d2 = 0.0;
            for (std::size_t j = 0; j < n_features_; ++j) {
                const double diff = x[j] - r[j];
                d2 += diff * diff;
            }
            dist.emplace_back(d2, i);
        }
        const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(k_);
        std::nth_element(dist.begin(), mid - 1, dist.end());  // pair's operator< is (dist, index)
        std::size_t positives = 0;
        for (auto it = dist.begin(); it != mid; ++it) positives += labels_[it->second] == 1;
        return static_cast<double>(positives) / static_cast<double>(k_);
    }

    std::size_t k() const { return k_; }
    std::size_t n_train() const { return n_rows_; }
    std::size_t n_features() const { return n_features_; }
    const std::vector<double>& train_features() const { return features_; }
    const std::vector<int>& train_labels() const { return labels_; }

    static KnnModel from_parts(std::size_t k, std::size_t n_rows, std::size_t n_features,
                               std::vector<double> features, std::vector<int> labels) {
        if (features.size() != n_rows * n_features || labels.size() != n_rows)
            throw std::invalid_argument("KnnModel: inconsistent stored data");
        LabeledSample s;
        s.features = std::move(features);
        s.labels = std::move(labels);
        s.n_rows = n_rows;
        s.n_features = n_features;
        return fit(s, k);
    }

private:
    std::size_t k_ = 0;
    std::size_t n_rows_ = 0;
    std::size_t n_features_ = 0;
    std::vector<double> features_;
    std::vector<int> labels_;
};

}  // namespace bernmix
