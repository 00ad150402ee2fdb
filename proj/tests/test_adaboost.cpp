#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bernmix/adaboost.hpp"
#include "bernmix/rng.hpp"

using namespace bernmix;

namespace {

LabeledSample threshold_mix_sample(std::size_t n, std::uint64_t seed) {
    // two features; the label needs more than one stump to capture:
    // y = 1 when [x0 > 2] + [x1 > 3] >= 1, with 10% label noise
    Rng rng(seed);
    LabeledSample s;
    s.n_features = 2;
    s.n_rows = n;
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = std::floor(rng.uniform() * 6.0);
        const double x1 = std::floor(rng.uniform() * 6.0);
        s.features.push_back(x0);
        s.features.push_back(x1);
        int y = (x0 > 2.0 || x1 > 3.0) ? 1 : 0;
        if (rng.uniform() < 0.10) y = 1 - y;
        s.labels.push_back(y);
    }
    return s;
}

double ensemble_error(const AdaBoostModel& m, const LabeledSample& s) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < s.n_rows; ++i) {
        const int pred = m.predict(s.row(i)) >= 0.5 ? 1 : 0;
        wrong += pred != s.labels[i] ? 1 : 0;
    }
    return static_cast<double>(wrong) / static_cast<double>(s.n_rows);
}

}  // namespace

TEST_CASE("a perfectly separating stump ends boosting with a capped weight", "[adaboost]") {
    LabeledSample s;
    s.n_features = 1;
    s.features = {0, 1, 2, 3, 10, 11, 12, 13};
    s.labels = {0, 0, 0, 0, 1, 1, 1, 1};
    s.n_rows = 8;
    AdaBoostConfig cfg;
    cfg.n_rounds = 50;
    const AdaBoostModel m = AdaBoostModel::fit(s, cfg);
    REQUIRE(m.stages().size() == 1);
    CHECK(m.stages()[0].weighted_error == 0.0);
    CHECK(m.stages()[0].weight == Catch::Approx(0.5 * std::log(1.0 / 1e-12 - 1.0)));
    for (std::size_t i = 0; i < s.n_rows; ++i) {
        const double q = m.predict(s.row(i));
        if (s.labels[i] == 1) CHECK(q > 0.999);
        else CHECK(q < 0.001);
    }
}

TEST_CASE("no first-round edge is an error", "[adaboost]") {
    // constant features: the only stump is the root leaf, value 0.5 -> always
    // predicts positive, weighted error exactly 0.5
    LabeledSample s;
    s.n_features = 1;
    s.features.assign(10, 7.0);
    for (std::size_t i = 0; i < 10; ++i) s.labels.push_back(i % 2 == 0 ? 1 : 0);
    s.n_rows = 10;
    CHECK_THROWS_AS(AdaBoostModel::fit(s, AdaBoostConfig{}), std::runtime_error);
}

TEST_CASE("stage weights and errors match an independent reimplementation", "[adaboost]") {
    const LabeledSample s = threshold_mix_sample(60, 2024);
    AdaBoostConfig cfg;
    cfg.n_rounds = 5;
    const AdaBoostModel m = AdaBoostModel::fit(s, cfg);
    REQUIRE(m.stages().size() >= 2);

    // replay the boosting loop: the stump fitter is shared, but the
    // error/weight/reweighting arithmetic is recomputed from scratch
    const std::size_t n = s.n_rows;
    std::vector<double> dist(n, 1.0 / static_cast<double>(n));
    Rng rng(Rng::derive(cfg.seed, 0));
    const TreeConfig stump_cfg{1, 1, 0};
    for (std::size_t t = 0; t < m.stages().size(); ++t) {
        const DecisionTree stump = DecisionTree::fit(s, dist, stump_cfg, rng);
        double eps = 0.0;
        std::vector<bool> correct(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int pred = stump.predict(s.row(i)) >= 0.5 ? 1 : 0;
            correct[i] = pred == s.labels[i];
            if (!correct[i]) eps += dist[i];
        }
        const double alpha = 0.5 * std::log(1.0 / eps - 1.0);
        CHECK(m.stages()[t].weighted_error == Catch::Approx(eps).epsilon(0).margin(1e-14));
        CHECK(m.stages()[t].weight == Catch::Approx(alpha).epsilon(0).margin(1e-12));
        // the recorded stump routes every training row identically
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(m.stages()[t].stump.predict(s.row(i)) == stump.predict(s.row(i)));
        }
        // reweight and renormalize; on the new distribution the stage's own
        // stump must sit at exactly one half (the classical identity)
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] *= correct[i] ? std::exp(-alpha) : std::exp(alpha);
            z += dist[i];
        }
        for (auto& w : dist) w /= z;
        double eps_after = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!correct[i]) eps_after += dist[i];
        CHECK(eps_after == Catch::Approx(0.5).epsilon(0).margin(1e-12));
    }
}

TEST_CASE("every kept stage has an edge and boosting helps", "[adaboost]") {
    const LabeledSample s = threshold_mix_sample(200, 7);
    AdaBoostConfig cfg;
    cfg.n_rounds = 40;
    const AdaBoostModel m = AdaBoostModel::fit(s, cfg);
    for (const auto& st : m.stages()) {
        CHECK(st.weighted_error < 0.5);
        CHECK(st.weight > 0.0);
    }
    // the boosted ensemble beats its own first stump on the training set
    const AdaBoostModel one = AdaBoostModel::fit(s, AdaBoostConfig{1, 1, 0});
    CHECK(ensemble_error(m, s) <= ensemble_error(one, s));
}

TEST_CASE("probabilities are the logistic link of twice the margin", "[adaboost]") {
    const LabeledSample s = threshold_mix_sample(80, 99);
    const AdaBoostModel m = AdaBoostModel::fit(s, AdaBoostConfig{10, 1, 0});
    for (const std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{79}}) {
        const double f = m.decision_score(s.row(i));
        CHECK(m.predict(s.row(i)) == Catch::Approx(sigmoid(2.0 * f)));
        // F is bounded by the total stage weight
        double total = 0.0;
        for (const auto& st : m.stages()) total += st.weight;
        CHECK(std::fabs(f) <= total + 1e-12);
    }
}

TEST_CASE("fit validates inputs and repeats deterministically", "[adaboost]") {
    CHECK_THROWS_AS(AdaBoostModel::fit(LabeledSample{}, AdaBoostConfig{}), std::invalid_argument);
    const LabeledSample s = threshold_mix_sample(50, 3);
    CHECK_THROWS_AS(AdaBoostModel::fit(s, AdaBoostConfig{0, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(AdaBoostModel::from_parts(AdaBoostConfig{}, 2, {}), std::invalid_argument);

    const AdaBoostModel a = AdaBoostModel::fit(s, AdaBoostConfig{8, 1, 0});
    const AdaBoostModel b = AdaBoostModel::fit(s, AdaBoostConfig{8, 1, 0});
    REQUIRE(a.stages().size() == b.stages().size());
    for (std::size_t i = 0; i < s.n_rows; ++i) {
        CHECK(a.predict(s.row(i)) == b.predict(s.row(i)));
    }
}
