#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "bernmix/dataset.hpp"
#include "bernmix/rng.hpp"

namespace bernmix {

struct TreeConfig {
    std::size_t max_depth = 12;
    std::size_t min_leaf = 5;  // minimum row count on each side of a split
    std::size_t m_try = 0;     // features tried per node; 0 means all
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // rows with x[feature] <= threshold go left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // weighted positive fraction of the node's rows
};

// CART-style binary classification tree minimizing the weighted Gini
// impurity. Determinism is pinned down everywhere: candidate features are
// scanned in a fixed order, thresholds ascending, and only a strictly better
// impurity replaces the incumbent, so the first optimum encountered wins.
// The rng is consumed only when m_try restricts the feature set.
class DecisionTree {
public:
    static DecisionTree fit(const LabeledSample& data, std::span<const double> weights,
                            const TreeConfig& cfg, Rng& rng) {
        if (data.n_rows == 0) throw std::invalid_argument("DecisionTree: empty sample");
        if (weights.size() != data.n_rows)
            throw std::invalid_argument("DecisionTree: weight count mismatch");
        if (cfg.min_leaf == 0) throw std::invalid_argument("DecisionTree: min_leaf must be >= 1");
        if (cfg.m_try > data.n_features)
            throw std::invalid_argument("DecisionTree: m_try exceeds feature count");
        double total = 0.0;
        for (const double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("DecisionTree: negative weight");
            total += w;
        }
        if (!(total > 0.0)) throw std::invalid_argument("DecisionTree: weights sum to zero");

        DecisionTree tree;
        tree.n_features_ = data.n_features;
        std::vector<std::size_t> rows(data.n_rows);
        std::iota(rows.begin(), rows.end(), 0);
        tree.build(data, weights, cfg, rng, std::move(rows), 0);
        return tree;
    }

    static DecisionTree fit(const LabeledSample& data, const TreeConfig& cfg, Rng& rng) {
        const std::vector<double> w(data.n_rows, 1.0);
        return fit(data, w, cfg, rng);
    }

    double predict(std::span<const double> x) const {
        if (x.size() != n_features_)
            throw std::invalid_argument("DecisionTree: feature count mismatch");
        std::int32_t at = 0;
        while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
            const TreeNode& nd = nodes_[static_cast<std::size_t>(at)];
            at = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(at)].value;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::size_t n_features() const { return n_features_; }

    static DecisionTree from_nodes(std::size_t n_features, std::vector<TreeNode> nodes) {
        if (nodes.empty()) throw std::invalid_argument("DecisionTree: no nodes");
        DecisionTree t;
        t.n_features_ = n_features;
        t.nodes_ = std::move(nodes);
        return t;
    }

private:
    // Returns the index of the subtree root it created.
    std::int32_t build(const LabeledSample& data, std::span<const double> weights,
                       const TreeConfig& cfg, Rng& rng, std::vector<std::size_t> rows,
                       std::size_t depth) {
        double w_total = 0.0, w_pos = 0.0;
        for (const std::size_t i : rows) {
            w_total += weights[i];
            if (data.labels[i] == 1) w_pos += weights[i];
        }
        const auto node_index = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(node_index)].value =
            w_total > 0.0 ? w_pos / w_total : 0.5;

        const double impurity = w_total > 0.0 ? w_pos * (w_total - w_pos) / w_total : 0.0;
        if (depth >= cfg.max_depth || rows.size() < 2 * cfg.min_leaf || impurity <= 0.0)
            return node_index;

        // candidate features, in ascending order for a stable scan
        std::vector<std::size_t> candidates;
        const std::size_t m = data.n_features;
        if (cfg.m_try == 0 || cfg.m_try >= m) {
            candidates.resize(m);
            std::iota(candidates.begin(), candidates.end(), 0);
        } else {
            std::vector<std::size_t> pool(m);
            std::iota(pool.begin(), pool.end(), 0);
            for (std::size_t t = 0; t < cfg.m_try; ++t) {
                const std::size_t j = t + static_cast<std::size_t>(rng.below(m - t));
                std::swap(pool[t], pool[j]);
            }
            candidates.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.m_try));
            std::sort(candidates.begin(), candidates.end());
        }

        struct Entry {
            double value, weight;
            int label;
        };
        std::vector<Entry> col(rows.size());

        double best_score = impurity;  // a split must strictly beat the parent
        std::int32_t best_feature = -1;
        double best_threshold = 0.0;

        for (const std::size_t j : candidates) {
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const std::size_t i = rows[r];
                col[r] = {data.feature(i, j), weights[i], data.labels[i]};
            }
            std::sort(col.begin(), col.end(),
                      [](const Entry& a, const Entry& b) { return a.value < b.value; });

            double wl = 0.0, pl = 0.0;
            std::size_t cl = 0;
            for (std::size_t r = 0; r + 1 < col.size(); ++r) {
                wl += col[r].weight;
                if (col[r].label == 1) pl += col[r].weight;
                ++cl;
                if (col[r].value == col[r + 1].value) continue;  // split only between distinct values
                if (cl < cfg.min_leaf || rows.size() - cl < cfg.min_leaf) continue;
                const double wr = w_total - wl;
                const double pr = w_pos - pl;
                if (!(wl > 0.0) || !(wr > 0.0)) continue;
                const double score = pl * (wl - pl) / wl + pr * (wr - pr) / wr;
                if (score < best_score) {
                    best_score = score;
                    best_feature = static_cast<std::int32_t>(j);
                    double mid = col[r].value + (col[r + 1].value - col[r].value) / 2.0;
                    if (!(mid < col[r + 1].value)) mid = col[r].value;  // rounding guard
                    best_threshold = mid;
                }
            }
        }

        if (best_feature < 0) return node_index;  // no admissible split improves impurity

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (const std::size_t i : rows) {
            if (data.feature(i, static_cast<std::size_t>(best_feature)) <= best_threshold)
                left_rows.push_back(i);
            else
                right_rows.push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();

        const std::int32_t left = build(data, weights, cfg, rng, std::move(left_rows), depth + 1);
        const std::int32_t right = build(data, weights, cfg, rng, std::move(right_rows), depth + 1);
        TreeNode& nd = nodes_[static_cast<std::size_t>(node_index)];
        nd.feature = best_feature;
        nd.threshold = best_threshold;
        nd.left = left;
        nd.right = right;
        return node_index;
    }

    std::size_t n_features_ = 0;
    std::vector<TreeNode> nodes_;
};

}  // namespace bernmix
