#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bernmix/decision_tree.hpp"

namespace bernmix {

struct ForestConfig {
    std::size_t n_trees = 200;
    TreeConfig tree{/*max_depth=*/12, /*min_leaf=*/5, /*m_try=*/0};  // m_try 0: ceil(sqrt(m))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    std::size_t n_threads = 0;  // 0: hardware concurrency
};

// Bagged ensemble of Gini trees with per-node feature subsampling.
// Every tree's seed is derived from the master seed before any work starts,
// so the fit is bit-for-bit identical regardless of thread count or
// scheduling order.
class ForestModel {
public:
    static ForestModel fit(const LabeledSample& train, const ForestConfig& cfg) {
        if (cfg.n_trees == 0) throw std::invalid_argument("ForestModel: n_trees must be positive");
        if (train.n_rows == 0) throw std::invalid_argument("ForestModel: empty sample");

        ForestModel model;
        model.cfg_ = cfg;
        model.n_features_ = train.n_features;
        if (model.cfg_.tree.m_try == 0) {
            model.cfg_.tree.m_try = static_cast<std::size_t>(
                std::ceil(std::sqrt(static_cast<double>(train.n_features))));
        }
        model.tree_seeds_.resize(cfg.n_trees);
        for (std::size_t t = 0; t < cfg.n_trees; ++t)
            model.tree_seeds_[t] = Rng::derive(cfg.seed, t);

        model.trees_.resize(cfg.n_trees);
        std::size_t n_threads = cfg.n_threads == 0
                                    ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                                    : cfg.n_threads;
        n_threads = std::min(n_threads, cfg.n_trees);

        std::atomic<std::size_t> next{0};
        const auto worker = [&]() {
            while (true) {
                const std::size_t t = next.fetch_add(1);
                if (t >= cfg.n_trees) return;
                model.trees_[t] = fit_one_tree(train, model.cfg_, model.tree_seeds_[t]);
            }
        };
        if (n_threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(n_threads);
            for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        return model;
    }

    double predict(std::span<const double> x) const {
        if (trees_.empty()) throw std::logic_error("ForestModel: not fitted");
        double sum = 0.0;
        for (const auto& tree : trees_) sum += tree.predict(x);
        return sum / static_cast<double>(trees_.size());
    }

    const std::vector<DecisionTree>& trees() const { return trees_; }
    const std::vector<std::uint64_t>& tree_seeds() const { return tree_seeds_; }
    const ForestConfig& config() const { return cfg_; }
    std::size_t n_features() const { return n_features_; }

    static ForestModel from_parts(ForestConfig cfg, std::size_t n_features,
                                  std::vector<std::uint64_t> seeds,
                                  std::vector<DecisionTree> trees) {
        if (trees.empty()) throw std::invalid_argument("ForestModel: no trees");
        ForestModel m;
        m.cfg_ = std::move(cfg);
        m.n_features_ = n_features;
        m.tree_seeds_ = std::move(seeds);
        m.trees_ = std::move(trees);
        return m;
    }

private:
    static DecisionTree fit_one_tree(const LabeledSample& train, const ForestConfig& cfg,
                                     std::uint64_t seed) {
        Rng rng(seed);
        if (!cfg.bootstrap) return DecisionTree::fit(train, cfg.tree, rng);
        std::vector<std::size_t> draw(train.n_rows);
        for (auto& i : draw) i = static_cast<std::size_t>(rng.below(train.n_rows));
        const LabeledSample resampled = train.subset(draw);
        return DecisionTree::fit(resampled, cfg.tree, rng);
    }

    ForestConfig cfg_;
    std::size_t n_features_ = 0;
    std::vector<std::uint64_t> tree_seeds_;
    std::vector<DecisionTree> trees_;
};

}  // namespace bernmix
