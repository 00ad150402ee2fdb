#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "bernmix/knn.hpp"
#include "bernmix/rng.hpp"

using namespace bernmix;

namespace {

LabeledSample grid_sample() {
    // 1-d training points 0..9; labels 1 at {0,1,2,8,9}
    LabeledSample s;
    s.n_features = 1;
    for (int i = 0; i < 10; ++i) {
        s.features.push_back(static_cast<double>(i));
        s.labels.push_back((i <= 2 || i >= 8) ? 1 : 0);
    }
    s.n_rows = 10;
    return s;
}

// Reference prediction: full sort by (squared distance, training index).
double oracle_predict(const LabeledSample& train, std::span<const double> x, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < train.n_rows; ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < train.n_features; ++j) {
            const double diff = x[j] - train.feature(i, j);
            d2 += diff * diff;
        }
        d.emplace_back(d2, i);
    }
    std::sort(d.begin(), d.end());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < k; ++i) pos += train.labels[d[i].second] == 1 ? 1 : 0;
    return static_cast<double>(pos) / static_cast<double>(k);
}

}  // namespace

TEST_CASE("neighbour fractions on a hand-checkable line", "[knn]") {
    const LabeledSample s = grid_sample();
    const KnnModel m = KnnModel::fit(s, 3);
    CHECK(m.k() == 3);
    CHECK(m.n_train() == 10);
    CHECK(m.n_features() == 1);

    // query 1.0: neighbours {1,0,2} all positive
    CHECK(m.predict(std::vector<double>{1.0}) == Catch::Approx(1.0));
    // query 5.0: neighbours {5,4,6} all negative
    CHECK(m.predict(std::vector<double>{5.0}) == Catch::Approx(0.0));
    // query 2.6: neighbours {3,2,4} -> one positive
    CHECK(m.predict(std::vector<double>{2.6}) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("equidistant ties break toward the lower training index", "[knn]") {
    LabeledSample s;
    s.n_features = 1;
    s.features = {-1.0, 1.0, -1.0, 1.0};  // two pairs at distance 1 from 0
    s.labels = {1, 0, 0, 1};
    s.n_rows = 4;
    const KnnModel m = KnnModel::fit(s, 1);
    // all four points are at squared distance 1 from the origin; index 0 wins
    CHECK(m.predict(std::vector<double>{0.0}) == 1.0);
    const KnnModel m2 = KnnModel::fit(s, 2);
    // first two by (distance, index): rows 0 (label 1) and 1 (label 0)
    CHECK(m2.predict(std::vector<double>{0.0}) == Catch::Approx(0.5));
    const KnnModel m3 = KnnModel::fit(s, 3);
    CHECK(m3.predict(std::vector<double>{0.0}) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("k equal to the sample size returns the base rate everywhere", "[knn]") {
    const LabeledSample s = grid_sample();
    const KnnModel m = KnnModel::fit(s, s.n_rows);
    for (const double x : {-100.0, 0.0, 4.5, 100.0}) {
        CHECK(m.predict(std::vector<double>{x}) == Catch::Approx(s.positive_rate()));
    }
}

TEST_CASE("predictions live on the grid of multiples of 1/k", "[knn]") {
    Rng rng(31);
    LabeledSample s;
    s.n_features = 2;
    s.n_rows = 60;
    for (std::size_t i = 0; i < s.n_rows; ++i) {
        s.features.push_back(rng.normal());
        s.features.push_back(rng.normal());
        s.labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
    }
    const std::size_t k = 7;
    const KnnModel m = KnnModel::fit(s, k);
    for (int rep = 0; rep < 50; ++rep) {
        const std::vector<double> x = {rng.normal(), rng.normal()};
        const double q = m.predict(x);
        const double scaled = q * static_cast<double>(k);
        CHECK(scaled == Catch::Approx(std::round(scaled)).margin(1e-12));
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
    }
}

TEST_CASE("selection agrees with a full-sort reference", "[knn]") {
    Rng rng(404);
    LabeledSample s;
    s.n_features = 3;
    s.n_rows = 150;
    for (std::size_t i = 0; i < s.n_rows; ++i) {
        for (int j = 0; j < 3; ++j) {
            // quantized coordinates force exact distance ties
            s.features.push_back(std::floor(rng.uniform() * 4.0));
        }
        s.labels.push_back(rng.uniform() < 0.35 ? 1 : 0);
    }
    for (const std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{25}}) {
        const KnnModel m = KnnModel::fit(s, k);
        for (int rep = 0; rep < 80; ++rep) {
            const std::vector<double> x = {std::floor(rng.uniform() * 4.0),
                                           std::floor(rng.uniform() * 4.0),
                                           std::floor(rng.uniform() * 4.0)};
            CHECK(m.predict(x) == oracle_predict(s, x, k));
        }
    }
}

TEST_CASE("fit and predict validate their inputs", "[knn]") {
    const LabeledSample s = grid_sample();
    CHECK_THROWS_AS(KnnModel::fit(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(KnnModel::fit(s, s.n_rows + 1), std::invalid_argument);
    CHECK_THROWS_AS(KnnModel::fit(LabeledSample{}, 1), std::invalid_argument);
    const KnnModel m = KnnModel::fit(s, 3);
    CHECK_THROWS_AS(m.predict(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("from_parts rebuilds an identical model", "[knn]") {
    const LabeledSample s = grid_sample();
    const KnnModel m = KnnModel::fit(s, 4);
    const KnnModel rebuilt = KnnModel::from_parts(m.k(), m.n_train(), m.n_features(),
                                                  m.train_features(), m.train_labels());
    for (const double x : {-0.3, 2.2, 7.9}) {
        const std::vector<double> q = {x};
        CHECK(rebuilt.predict(q) == m.predict(q));
    }
}
