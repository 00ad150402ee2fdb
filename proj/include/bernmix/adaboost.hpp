#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bernmix/decision_tree.hpp"
#include "bernmix/special_functions.hpp"

namespace bernmix {

struct AdaBoostConfig {
    std::size_t n_rounds = 200;
    std::size_t stump_depth = 1;
    std::uint64_t seed = 0;
};

struct BoostStage {
    DecisionTree stump;
    double weight = 0.0;          // alpha_t
    double weighted_error = 0.0;  // epsilon_t on the distribution it was fit under
};

// Discrete AdaBoost over Gini stumps (all features considered at every
// node). Edge cases follow the classical algorithm: a stage with weighted
// error >= 1/2 stops boosting before the stage is added; a perfect stage
// (error 0) is kept with its weight capped and ends boosting, since the
// sample reweighting would degenerate.
//
// The additive score F(x) = sum_t alpha_t h_t(x) with h in {-1,+1} is
// mapped to a probability via the logistic link q = 1 / (1 + exp(-2 F)),
// the minimizer of the exponential loss's population risk.
class AdaBoostModel {
public:
    static AdaBoostModel fit(const LabeledSample& train, const AdaBoostConfig& cfg) {
        if (cfg.n_rounds == 0)
            throw std::invalid_argument("AdaBoostModel: n_rounds must be positive");
        if (train.n_rows == 0) throw std::invalid_argument("AdaBoostModel: empty sample");

        AdaBoostModel model;
        model.cfg_ = cfg;
        model.n_features_ = train.n_features;

        const std::size_t n = train.n_rows;
        std::vector<double> dist(n, 1.0 / static_cast<double>(n));
        Rng rng(Rng::derive(cfg.seed, 0));  // untouched while stumps use every feature
        const TreeConfig stump_cfg{/*max_depth=*/cfg.stump_depth, /*min_leaf=*/1, /*m_try=*/0};

        // cap corresponds to a weighted error of 1e-12
        const double weight_cap = 0.5 * std::log(1.0 / 1e-12 - 1.0);

        for (std::size_t round = 0; round < cfg.n_rounds; ++round) {
            DecisionTree stump = DecisionTree::fit(train, dist, stump_cfg, rng);

            double eps = 0.0;
            std::vector<char> correct(n);
            for (std::size_t i = 0; i < n; ++i) {
                const int predicted = stump.predict(train.row(i)) >= 0.5 ? 1 : 0;
                correct[i] = predicted == train.labels[i];
                if (!correct[i]) eps += dist[i];
            }

            if (eps >= 0.5) break;  // no edge left: stop before adding this stage

            if (eps <= 0.0) {
                model.stages_.push_back({std::move(stump), weight_cap, 0.0});
                break;  // perfect separation; reweighting would degenerate
            }

            const double alpha = 0.5 * std::log(1.0 / eps - 1.0);
            model.stages_.push_back({std::move(stump), alpha, eps});

            double z = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dist[i] *= correct[i] ? std::exp(-alpha) : std::exp(alpha);
                z += dist[i];
            }
            if (!(z > 0.0) || !std::isfinite(z))
                throw std::runtime_error("AdaBoostModel: weight distribution degenerated");
            for (auto& w : dist) w /= z;
        }

        if (model.stages_.empty())
            throw std::runtime_error("AdaBoostModel: no stage had an edge on the first round");
        return model;
    }

    // F(x): the additive margin score.
    double decision_score(std::span<const double> x) const {
        if (stages_.empty()) throw std::logic_error("AdaBoostModel: not fitted");
        double f = 0.0;
        for (const auto& st : stages_) {
            const double h = st.stump.predict(x) >= 0.5 ? 1.0 : -1.0;
            f += st.weight * h;
        }
        return f;
    }

    double predict(std::span<const double> x) const { return sigmoid(2.0 * decision_score(x)); }

    const std::vector<BoostStage>& stages() const { return stages_; }
    const AdaBoostConfig& config() const { return cfg_; }
    std::size_t n_features() const { return n_features_; }

    static AdaBoostModel from_parts(AdaBoostConfig cfg, std::size_t n_features,
                                    std::vector<BoostStage> stages) {
        if (stages.empty()) throw std::invalid_argument("AdaBoostModel: no stages");
        AdaBoostModel m;
        m.cfg_ = std::move(cfg);
        m.n_features_ = n_features;
        m.stages_ = std::move(stages);
        return m;
    }

private:
    AdaBoostConfig cfg_;
    std::size_t n_features_ = 0;
    std::vector<BoostStage> stages_;
};

}  // namespace bernmix
