#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <vector>

#include "bernmix/classifier.hpp"
#include "bernmix/model_io.hpp"
#include "bernmix/rng.hpp"
#include "bernmix/special_functions.hpp"

using namespace bernmix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("bernmix_io_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

LabeledSample training_sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    LabeledSample s;
    s.n_features = 3;
    s.n_rows = n;
    for (std::size_t i = 0; i < n; ++i) {
        double z = -0.5;
        for (int j = 0; j < 3; ++j) {
            const double x = std::floor(rng.normal() * 4.0) / 4.0;
            s.features.push_back(x);
            z += (j == 0 ? 1.1 : -0.4) * x;
        }
        s.labels.push_back(rng.uniform() < sigmoid(z) ? 1 : 0);
    }
    return s;
}

std::vector<std::vector<double>> probe_rows(std::size_t n_features, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 25; ++i) {
        std::vector<double> r;
        for (std::size_t j = 0; j < n_features; ++j) r.push_back(rng.normal());
        rows.push_back(std::move(r));
    }
    return rows;
}

// Bit-exact prediction equality between the original and the reloaded model.
void check_roundtrip(const FittedModel& original, const fs::path& file) {
    save_model(file, original);
    const FittedModel reloaded = load_model(file);
    CHECK(model_kind(reloaded) == model_kind(original));
    REQUIRE(model_n_features(reloaded) == model_n_features(original));
    for (const auto& row : probe_rows(model_n_features(original), 99)) {
        CHECK(predict_one(reloaded, row) == predict_one(original, row));
    }
}

}  // namespace

TEST_CASE("every model kind round-trips through its file format", "[model_io]") {
    TempDir dir("models");
    const LabeledSample train = training_sample(250, 8);

    const LogisticModel lr = logistic_fit(train);
    check_roundtrip(FittedModel{lr}, dir.path / "lr.model");

    const KnnModel knn = KnnModel::fit(train, 9);
    check_roundtrip(FittedModel{knn}, dir.path / "knn.model");

    ForestConfig fc;
    fc.n_trees = 10;
    fc.tree = {5, 2, 2};
    fc.seed = 4;
    fc.n_threads = 1;
    const ForestModel rf = ForestModel::fit(train, fc);
    check_roundtrip(FittedModel{rf}, dir.path / "rf.model");

    AdaBoostConfig ac;
    ac.n_rounds = 12;
    const AdaBoostModel ab = AdaBoostModel::fit(train, ac);
    check_roundtrip(FittedModel{ab}, dir.path / "ab.model");
}

TEST_CASE("reloaded forest preserves metadata exactly", "[model_io]") {
    TempDir dir("forest_meta");
    const LabeledSample train = training_sample(150, 5);
    ForestConfig fc;
    fc.n_trees = 6;
    fc.tree = {4, 3, 2};
    fc.bootstrap = true;
    fc.seed = 31;
    fc.n_threads = 1;
    const ForestModel rf = ForestModel::fit(train, fc);
    const fs::path file = dir.path / "rf.model";
    save_model(file, FittedModel{rf});
    const FittedModel loaded = load_model(file);
    const auto& rf2 = std::get<ForestModel>(loaded);
    CHECK(rf2.config().n_trees == 6);
    CHECK(rf2.config().tree.max_depth == 4);
    CHECK(rf2.config().tree.min_leaf == 3);
    CHECK(rf2.config().tree.m_try == 2);
    CHECK(rf2.config().bootstrap == true);
    CHECK(rf2.config().seed == 31);
    CHECK(rf2.tree_seeds() == rf.tree_seeds());
    REQUIRE(rf2.trees().size() == rf.trees().size());
    for (std::size_t t = 0; t < rf.trees().size(); ++t) {
        const auto& a = rf.trees()[t].nodes();
        const auto& b = rf2.trees()[t].nodes();
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].feature == b[i].feature);
            CHECK(a[i].threshold == b[i].threshold);  // %.17g is lossless
            CHECK(a[i].value == b[i].value);
        }
    }
}

TEST_CASE("calibration choices round-trip with their maps", "[model_io]") {
    TempDir dir("calib");
    Rng rng(11);
    std::vector<double> fit_s, val_s;
    std::vector<int> fit_y, val_y;
    for (int i = 0; i < 400; ++i) {
        const double s = rng.normal();
        const int y = rng.uniform() < sigmoid(1.2 * s - 0.3) ? 1 : 0;
        if (i % 4 == 0) {
            val_s.push_back(s);
            val_y.push_back(y);
        } else {
            fit_s.push_back(s);
            fit_y.push_back(y);
        }
    }
    const CalibrationChoice choice = select_calibration(fit_s, fit_y, val_s, val_y, 10);
    const fs::path file = dir.path / "rf.calib";
    save_calibration(file, "rf", choice);
    const auto [tag, loaded] = load_calibration(file);
    CHECK(tag == "rf");
    CHECK(loaded.method == choice.method);
    CHECK(loaded.platt_ece == choice.platt_ece);
    CHECK(loaded.isotonic_ece == choice.isotonic_ece);
    CHECK(loaded.platt.a == choice.platt.a);
    CHECK(loaded.platt.b == choice.platt.b);
    CHECK(loaded.platt.converged == choice.platt.converged);
    REQUIRE(loaded.isotonic.breakpoints == choice.isotonic.breakpoints);
    REQUIRE(loaded.isotonic.levels == choice.isotonic.levels);
    for (const double s : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
        CHECK(loaded.evaluate(s) == choice.evaluate(s));
        CHECK(loaded.platt.evaluate(s) == choice.platt.evaluate(s));
        CHECK(loaded.isotonic.evaluate(s) == choice.isotonic.evaluate(s));
    }
}

TEST_CASE("standardizer round-trips bit-exactly", "[model_io]") {
    TempDir dir("std");
    const LabeledSample train = training_sample(100, 13);
    const Standardizer s = Standardizer::fit(train);
    const fs::path file = dir.path / "standardizer.txt";
    save_standardizer(file, s);
    const Standardizer loaded = load_standardizer(file);
    CHECK(loaded.means() == s.means());
    CHECK(loaded.stddevs() == s.stddevs());
    const LabeledSample a = s.apply(train);
    const LabeledSample b = loaded.apply(train);
    CHECK(a.features == b.features);
}

TEST_CASE("malformed model files are rejected with clear errors", "[model_io]") {
    TempDir dir("bad");
    CHECK_THROWS_AS(load_model(dir.path / "missing.model"), std::runtime_error);

    const fs::path wrong_magic = dir.path / "magic.model";
    {
        std::ofstream out(wrong_magic);
        out << "some-other-format 3\n";
    }
    CHECK_THROWS_AS(load_model(wrong_magic), std::runtime_error);

    // a truncated but well-started file
    const LabeledSample train = training_sample(60, 2);
    const LogisticModel lr = logistic_fit(train);
    const fs::path full = dir.path / "full.model";
    save_model(full, FittedModel{lr});
    std::ifstream in(full);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const fs::path cut = dir.path / "cut.model";
    {
        std::ofstream out(cut);
        out << body.substr(0, body.size() / 2);
    }
    CHECK_THROWS_AS(load_model(cut), std::runtime_error);

    CHECK_THROWS_AS(load_calibration(dir.path / "missing.calib"), std::runtime_error);
    CHECK_THROWS_AS(load_standardizer(dir.path / "missing.txt"), std::runtime_error);
}

TEST_CASE("model kind helpers expose the variant consistently", "[model_io]") {
    const LabeledSample train = training_sample(80, 21);
    const FittedModel lr{logistic_fit(train)};
    CHECK(model_kind(lr) == ModelKind::logistic);
    CHECK(std::string(to_tag(ModelKind::logistic)) == "lr");
    CHECK(std::string(to_tag(ModelKind::knn)) == "knn");
    CHECK(std::string(to_tag(ModelKind::random_forest)) == "rf");
    CHECK(std::string(to_tag(ModelKind::adaboost)) == "ab");
    CHECK(parse_model_tag("lr") == ModelKind::logistic);
    CHECK(parse_model_tag("knn") == ModelKind::knn);
    CHECK(parse_model_tag("rf") == ModelKind::random_forest);
    CHECK(parse_model_tag("ab") == ModelKind::adaboost);
    CHECK_THROWS_AS(parse_model_tag("svm"), std::invalid_argument);

    // mixing-sample helper obeys bounds and dimensions
    const LabeledSample test = training_sample(40, 22);
    const MixingSample mix = predict_mixing_sample(lr, test);
    CHECK(mix.model_tag == "lr");
    REQUIRE(mix.q.size() == 40);
    for (const double v : mix.q) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
