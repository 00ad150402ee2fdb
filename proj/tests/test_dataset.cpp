#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "bernmix/dataset.hpp"
#include "bernmix/synthetic.hpp"

using namespace bernmix;
namespace fs = std::filesystem;

namespace {

// Scratch directory that cleans itself up.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("bernmix_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

CovariateSchema tiny_schema() {
    CovariateSchema s;
    s.id_name = "id";
    s.feature_names = {"x1", "x2"};
    s.target_name = "y";
    return s;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << body;
}

}  // namespace

TEST_CASE("csv loading round-trips a simple file", "[dataset]") {
    TempDir dir("csv_basic");
    const fs::path file = dir.path / "tiny.csv";
    write_file(file,
               "id,x1,x2,y\n"
               "1,0.5,-2,1\n"
               "2,1.5,4,0\n"
               "\n"
               "3,2.5,0,1\n");
    const LabeledSample data = load_csv(file, tiny_schema());
    REQUIRE(data.n_rows == 3);
    REQUIRE(data.n_features == 2);
    CHECK(data.feature(0, 0) == 0.5);
    CHECK(data.feature(0, 1) == -2.0);
    CHECK(data.feature(2, 0) == 2.5);
    CHECK(data.labels == std::vector<int>{1, 0, 1});
    CHECK(data.positive_rate() == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("csv loading tolerates quotes, spaces and CRLF", "[dataset]") {
    TempDir dir("csv_quirks");
    const fs::path file = dir.path / "quirks.csv";
    write_file(file,
               "\"id\", x1 ,\"x2\",y\r\n"
               " 1 ,\"0.5\", -2 ,\"1\"\r\n"
               "2,1.5,4,0\r\n");
    const LabeledSample data = load_csv(file, tiny_schema());
    REQUIRE(data.n_rows == 2);
    CHECK(data.feature(0, 0) == 0.5);
    CHECK(data.labels[0] == 1);
}

TEST_CASE("csv loading rejects malformed inputs", "[dataset]") {
    TempDir dir("csv_bad");
    const CovariateSchema schema = tiny_schema();

    CHECK_THROWS_AS(load_csv(dir.path / "missing.csv", schema), std::runtime_error);

    const fs::path empty = dir.path / "empty.csv";
    write_file(empty, "");
    CHECK_THROWS_WITH(load_csv(empty, schema), Catch::Matchers::ContainsSubstring("empty"));

    const fs::path bad_header = dir.path / "bad_header.csv";
    write_file(bad_header, "id,x1,oops,y\n1,0.5,1,0\n");
    CHECK_THROWS_WITH(load_csv(bad_header, schema),
                      Catch::Matchers::ContainsSubstring("header mismatch"));

    const fs::path wrong_cols = dir.path / "wrong_cols.csv";
    write_file(wrong_cols, "id,x1,x2,y\n1,0.5,1\n");
    CHECK_THROWS_WITH(load_csv(wrong_cols, schema),
                      Catch::Matchers::ContainsSubstring("line 2"));

    const fs::path non_numeric = dir.path / "non_numeric.csv";
    write_file(non_numeric, "id,x1,x2,y\n1,abc,1,0\n");
    CHECK_THROWS_WITH(load_csv(non_numeric, schema),
                      Catch::Matchers::ContainsSubstring("non-numeric"));

    const fs::path bad_label = dir.path / "bad_label.csv";
    write_file(bad_label, "id,x1,x2,y\n1,0.5,1,2\n");
    CHECK_THROWS_WITH(load_csv(bad_label, schema),
                      Catch::Matchers::ContainsSubstring("label"));

    const fs::path header_only = dir.path / "header_only.csv";
    write_file(header_only, "id,x1,x2,y\n");
    CHECK_THROWS_WITH(load_csv(header_only, schema),
                      Catch::Matchers::ContainsSubstring("no data rows"));
}

TEST_CASE("schema validation catches duplicates and gaps", "[dataset]") {
    CovariateSchema s = tiny_schema();
    s.feature_names = {"x1", "x1"};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = tiny_schema();
    s.feature_names.clear();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = tiny_schema();
    s.target_name.clear();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    CHECK_NOTHROW(CovariateSchema::credit_card_default().validate());
    CHECK(CovariateSchema::credit_card_default().feature_names.size() == 23);
}

TEST_CASE("synthetic writer emits a loadable file with the credit schema", "[dataset][synthetic]") {
    TempDir dir("synth");
    const fs::path file = dir.path / "synth.csv";
    SyntheticConfig cfg;
    cfg.n_rows = 500;
    cfg.seed = 11;
    write_synthetic_credit_csv(file, cfg);
    const LabeledSample data = load_csv(file, CovariateSchema::credit_card_default());
    REQUIRE(data.n_rows == 500);
    REQUIRE(data.n_features == 23);
    const double rate = data.positive_rate();
    CHECK(rate > 0.05);
    CHECK(rate < 0.60);
    // same seed, same file
    const fs::path file2 = dir.path / "synth2.csv";
    write_synthetic_credit_csv(file2, cfg);
    std::ifstream a(file), b(file2);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("train/test split partitions the rows at the floor cut", "[dataset]") {
    LabeledSample data;
    data.n_rows = 100;
    data.n_features = 1;
    for (std::size_t i = 0; i < data.n_rows; ++i) {
        data.features.push_back(static_cast<double>(i));
        data.labels.push_back(i % 4 == 0 ? 1 : 0);
    }
    SplitConfig cfg;
    cfg.train_fraction = 2.0 / 3.0;
    cfg.seed = 5;
    const auto [train, test] = train_test_split(data, cfg);
    REQUIRE(train.n_rows == 66);  // floor(100 * 2/3)
    REQUIRE(test.n_rows == 34);

    // the two sides form a partition of the original rows
    std::multiset<double> seen;
    for (std::size_t i = 0; i < train.n_rows; ++i) seen.insert(train.feature(i, 0));
    for (std::size_t i = 0; i < test.n_rows; ++i) seen.insert(test.feature(i, 0));
    REQUIRE(seen.size() == 100);
    std::size_t k = 0;
    for (const double v : seen) CHECK(v == static_cast<double>(k++));

    // labels travel with their rows
    for (std::size_t i = 0; i < train.n_rows; ++i) {
        const auto orig = static_cast<std::size_t>(train.feature(i, 0));
        CHECK(train.labels[i] == (orig % 4 == 0 ? 1 : 0));
    }

    // deterministic in the seed
    const auto [train2, test2] = train_test_split(data, cfg);
    CHECK(train2.features == train.features);
    CHECK(test2.labels == test.labels);
    cfg.seed = 6;
    const auto [train3, test3] = train_test_split(data, cfg);
    CHECK(train3.features != train.features);
}

TEST_CASE("calibration split uses a different seed stream than the main split", "[dataset]") {
    LabeledSample data;
    data.n_rows = 40;
    data.n_features = 1;
    for (std::size_t i = 0; i < data.n_rows; ++i) {
        data.features.push_back(static_cast<double>(i));
        data.labels.push_back(i % 2 == 0 ? 1 : 0);
    }
    SplitConfig cfg;
    cfg.train_fraction = 0.5;
    cfg.calibration_fraction = 0.5;
    cfg.seed = 9;
    const auto [a, b] = train_test_split(data, cfg);
    const auto [c, d] = calibration_split(data, cfg);
    REQUIRE(a.n_rows == c.n_rows);
    CHECK(a.features != c.features);  // same fraction, different stream
}

TEST_CASE("stratified split preserves class balance", "[dataset]") {
    LabeledSample data;
    data.n_rows = 200;
    data.n_features = 1;
    for (std::size_t i = 0; i < data.n_rows; ++i) {
        data.features.push_back(static_cast<double>(i));
        data.labels.push_back(i < 40 ? 1 : 0);  // 20% positives
    }
    SplitConfig cfg;
    cfg.train_fraction = 0.5;
    cfg.seed = 3;
    cfg.stratified = true;
    const auto [train, test] = train_test_split(data, cfg);
    REQUIRE(train.n_rows == 100);
    const auto pos_train = std::count(train.labels.begin(), train.labels.end(), 1);
    const auto pos_test = std::count(test.labels.begin(), test.labels.end(), 1);
    CHECK(pos_train == 20);
    CHECK(pos_test == 20);
}

TEST_CASE("split rejects degenerate fractions", "[dataset]") {
    LabeledSample data;
    data.n_rows = 10;
    data.n_features = 1;
    data.features.assign(10, 0.0);
    data.labels.assign(10, 0);
    data.labels[0] = 1;
    SplitConfig cfg;
    cfg.train_fraction = 0.0;
    CHECK_THROWS_AS(train_test_split(data, cfg), std::invalid_argument);
    cfg.train_fraction = 1.0;
    CHECK_THROWS_AS(train_test_split(data, cfg), std::invalid_argument);
    cfg.train_fraction = 0.05;  // floor(10 * 0.05) = 0 rows on one side
    CHECK_THROWS_AS(train_test_split(data, cfg), std::invalid_argument);
    LabeledSample one;
    one.n_rows = 1;
    one.n_features = 1;
    one.features = {0.0};
    one.labels = {0};
    cfg.train_fraction = 0.5;
    CHECK_THROWS_AS(train_test_split(one, cfg), std::invalid_argument);
}

TEST_CASE("standardizer maps train columns to zero mean and unit spread", "[dataset]") {
    LabeledSample data;
    data.n_rows = 4;
    data.n_features = 3;
    // column 0: {1,2,3,4}; column 1 constant 7; column 2: {0,0,10,10}
    data.features = {1, 7, 0, 2, 7, 0, 3, 7, 10, 4, 7, 10};
    data.labels = {0, 1, 0, 1};
    const Standardizer s = Standardizer::fit(data);
    REQUIRE(s.means().size() == 3);
    CHECK(s.means()[0] == Catch::Approx(2.5));
    CHECK(s.means()[1] == Catch::Approx(7.0));
    CHECK(s.means()[2] == Catch::Approx(5.0));
    CHECK(s.stddevs()[0] == Catch::Approx(std::sqrt(1.25)));  // population sd
    CHECK(s.stddevs()[1] == 0.0);
    CHECK(s.stddevs()[2] == Catch::Approx(5.0));
    CHECK(s.constant_columns() == std::vector<std::size_t>{1});

    const LabeledSample z = s.apply(data);
    for (std::size_t j : {std::size_t{0}, std::size_t{2}}) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < z.n_rows; ++i) mean += z.feature(i, j);
        mean /= 4.0;
        for (std::size_t i = 0; i < z.n_rows; ++i) {
            const double d = z.feature(i, j) - mean;
            var += d * d;
        }
        var /= 4.0;
        CHECK(mean == Catch::Approx(0.0).margin(1e-15));
        CHECK(var == Catch::Approx(1.0));
    }
    for (std::size_t i = 0; i < z.n_rows; ++i) CHECK(z.feature(i, 1) == 0.0);  // constant -> 0

    // applying to new rows uses the *train* parameters
    LabeledSample other;
    other.n_rows = 1;
    other.n_features = 3;
    other.features = {2.5, 100.0, 5.0};
    other.labels = {0};
    const LabeledSample zo = s.apply(other);
    CHECK(zo.feature(0, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(zo.feature(0, 1) == 0.0);
    CHECK(zo.feature(0, 2) == Catch::Approx(0.0).margin(1e-15));

    LabeledSample mismatched;
    mismatched.n_rows = 1;
    mismatched.n_features = 2;
    mismatched.features = {0.0, 0.0};
    mismatched.labels = {0};
    CHECK_THROWS_AS(s.apply(mismatched), std::invalid_argument);
    CHECK_THROWS_AS(Standardizer::fit(LabeledSample{}), std::invalid_argument);
}

TEST_CASE("correlation matrix matches hand-computed Pearson values", "[dataset]") {
    LabeledSample data;
    data.n_rows = 4;
    data.n_features = 3;
    // col1 = 2*col0 (corr 1), col2 constant (corr 0 off-diagonal)
    data.features = {1, 2, 5, 2, 4, 5, 3, 6, 5, 4, 8, 5};
    data.labels = {0, 0, 1, 1};
    const std::vector<double> corr = correlation_matrix(data);
    REQUIRE(corr.size() == 9);
    CHECK(corr[0] == 1.0);
    CHECK(corr[4] == 1.0);
    CHECK(corr[8] == 1.0);
    CHECK(corr[1] == Catch::Approx(1.0));
    CHECK(corr[3] == Catch::Approx(1.0));
    CHECK(corr[2] == 0.0);
    CHECK(corr[5] == 0.0);

    // anti-correlated pair
    LabeledSample anti;
    anti.n_rows = 3;
    anti.n_features = 2;
    anti.features = {1, 3, 2, 2, 3, 1};
    anti.labels = {0, 0, 1};
    const std::vector<double> c2 = correlation_matrix(anti);
    CHECK(c2[1] == Catch::Approx(-1.0));
}

TEST_CASE("subset validates indices", "[dataset]") {
    LabeledSample data;
    data.n_rows = 2;
    data.n_features = 1;
    data.features = {1.0, 2.0};
    data.labels = {0, 1};
    const std::vector<std::size_t> bad = {5};
    CHECK_THROWS_AS(data.subset(bad), std::out_of_range);
    const std::vector<std::size_t> ok = {1, 0, 1};
    const LabeledSample sub = data.subset(ok);
    REQUIRE(sub.n_rows == 3);
    CHECK(sub.feature(0, 0) == 2.0);
    CHECK(sub.labels == std::vector<int>{1, 0, 1});
}
