#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bernmix/rng.hpp"

namespace bernmix {

// Column layout of an obligor covariate file: an optional leading id column,
// the feature columns in order, and a 0/1 target column.
struct CovariateSchema {
    std::string id_name;  // empty means the file has no id column
    std::vector<std::string> feature_names;
    std::string target_name;

    // The credit-card default layout this library is normally run against:
    // 23 covariates per obligor (credit limit, demographics, six months of
    // repayment status / bill / payment history) and a next-month default flag.
    static CovariateSchema credit_card_default() {
        CovariateSchema s;
        s.id_name = "ID";
        s.feature_names = {
            "LIMIT_BAL", "SEX", "EDUCATION", "MARRIAGE", "AGE",
            "PAY_0", "PAY_2", "PAY_3", "PAY_4", "PAY_5", "PAY_6",
            "BILL_AMT1", "BILL_AMT2", "BILL_AMT3", "BILL_AMT4", "BILL_AMT5", "BILL_AMT6",
            "PAY_AMT1", "PAY_AMT2", "PAY_AMT3", "PAY_AMT4", "PAY_AMT5", "PAY_AMT6"};
        s.target_name = "default.payment.next.month";
        return s;
    }

    void validate() const {
        if (feature_names.empty())
            throw std::invalid_argument("schema: no feature columns");
        if (target_name.empty())
            throw std::invalid_argument("schema: no target column");
        std::vector<std::string> all = feature_names;
        all.push_back(target_name);
        if (!id_name.empty()) all.push_back(id_name);
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end())
            throw std::invalid_argument("schema: duplicate column name");
    }
};

// A design matrix (row-major) with 0/1 labels.
struct LabeledSample {
    std::vector<double> features;  // n_rows * n_features
    std::vector<int> labels;       // each 0 or 1
    std::size_t n_rows = 0;
    std::size_t n_features = 0;

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_features, n_features};
    }

    double feature(std::size_t i, std::size_t j) const {
        return features[i * n_features + j];
    }

    double positive_rate() const {
        if (labels.empty()) throw std::logic_error("positive_rate of empty sample");
        const auto pos = std::count(labels.begin(), labels.end(), 1);
        return static_cast<double>(pos) / static_cast<double>(labels.size());
    }

    LabeledSample subset(std::span<const std::size_t> indices) const {
        LabeledSample out;
        out.n_features = n_features;
        out.n_rows = indices.size();
        out.features.reserve(indices.size() * n_features);
        out.labels.reserve(indices.size());
        for (const std::size_t i : indices) {
            if (i >= n_rows) throw std::out_of_range("subset: row index out of range");
            const auto r = row(i);
            out.features.insert(out.features.end(), r.begin(), r.end());
            out.labels.push_back(labels[i]);
        }
        return out;
    }
};

namespace detail {

inline std::string_view trim_cell(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s.remove_prefix(1);
        s.remove_suffix(1);
    }
    return s;
}

inline void split_line(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim_cell(line.substr(start)));
            return;
        }
        out.push_back(trim_cell(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

inline double parse_number(std::string_view cell, std::size_t line_no, std::string_view col) {
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        std::ostringstream msg;
        msg << "csv line " << line_no << ": non-numeric value '" << std::string(cell)
            << "' in column " << std::string(col);
        throw std::runtime_error(msg.str());
    }
    return value;
}

}  // namespace detail

// Read a comma-separated covariate file whose header must match the schema
// exactly (id column if declared, then features in order, then the target).
inline LabeledSample load_csv(const std::filesystem::path& path, const CovariateSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path.string());

    std::vector<std::string> expected;
    if (!schema.id_name.empty()) expected.push_back(schema.id_name);
    expected.insert(expected.end(), schema.feature_names.begin(), schema.feature_names.end());
    expected.push_back(schema.target_name);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv file is empty: " + path.string());
    std::vector<std::string_view> cells;
    detail::split_line(line, cells);
    if (cells.size() != expected.size()) {
        std::ostringstream msg;
        msg << "csv header has " << cells.size() << " columns, expected " << expected.size();
        throw std::runtime_error(msg.str());
    }
    for (std::size_t j = 0; j < expected.size(); ++j) {
        if (cells[j] != expected[j]) {
            std::ostringstream msg;
            msg << "csv header mismatch at column " << j + 1 << ": got '" << std::string(cells[j])
                << "', expected '" << expected[j] << "'";
            throw std::runtime_error(msg.str());
        }
    }

    const std::size_t id_offset = schema.id_name.empty() ? 0 : 1;
    const std::size_t m = schema.feature_names.size();
    LabeledSample out;
    out.n_features = m;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;  // ignore blank trailing lines
        detail::split_line(line, cells);
        if (cells.size() != expected.size()) {
            std::ostringstream msg;
            msg << "csv line " << line_no << ": has " << cells.size() << " fields, expected "
                << expected.size();
            throw std::runtime_error(msg.str());
        }
        for (std::size_t j = 0; j < m; ++j) {
            out.features.push_back(
                detail::parse_number(cells[id_offset + j], line_no, schema.feature_names[j]));
        }
        const double y =
            detail::parse_number(cells[id_offset + m], line_no, schema.target_name);
        if (y != 0.0 && y != 1.0) {
            std::ostringstream msg;
            msg << "csv line " << line_no << ": label must be 0 or 1, got " << y;
            throw std::runtime_error(msg.str());
        }
        out.labels.push_back(y == 1.0 ? 1 : 0);
        ++out.n_rows;
    }
    if (out.n_rows == 0) throw std::runtime_error("csv file has a header but no data rows");
    return out;
}

// Column-wise affine map to zero mean and unit spread, fitted on one sample
// (the training rows) and applied to any other sample with the same columns.
class Standardizer {
public:
    static Standardizer fit(const LabeledSample& data) {
        if (data.n_rows == 0) throw std::invalid_argument("Standardizer: empty sample");
        Standardizer s;
        const std::size_t m = data.n_features;
        s.mean_.assign(m, 0.0);
        s.sd_.assign(m, 0.0);
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            const auto r = data.row(i);
            for (std::size_t j = 0; j < m; ++j) s.mean_[j] += r[j];
        }
        for (std::size_t j = 0; j < m; ++j) mean_div(s.mean_[j], data.n_rows);
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            const auto r = data.row(i);
            for (std::size_t j = 0; j < m; ++j) {
                const double d = r[j] - s.mean_[j];
                s.sd_[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < m; ++j) {
            // population standard deviation; exact zero marks a constant column
            s.sd_[j] = std::sqrt(s.sd_[j] / static_cast<double>(data.n_rows));
        }
        return s;
    }

    LabeledSample apply(const LabeledSample& data) const {
        if (data.n_features != mean_.size())
            throw std::invalid_argument("Standardizer: feature count mismatch");
        LabeledSample out = data;
        for (std::size_t i = 0; i < out.n_rows; ++i) {
            for (std::size_t j = 0; j < out.n_features; ++j) {
                double& x = out.features[i * out.n_features + j];
                // constant columns carry no information: map them to zero
                x = sd_[j] == 0.0 ? 0.0 : (x - mean_[j]) / sd_[j];
            }
        }
        return out;
    }

    const std::vector<double>& means() const { return mean_; }
    const std::vector<double>& stddevs() const { return sd_; }

    std::vector<std::size_t> constant_columns() const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < sd_.size(); ++j)
            if (sd_[j] == 0.0) out.push_back(j);
        return out;
    }

    void set_parameters(std::vector<double> mean, std::vector<double> sd) {
        if (mean.size() != sd.size())
            throw std::invalid_argument("Standardizer: mean/sd size mismatch");
        mean_ = std::move(mean);
        sd_ = std::move(sd);
    }

private:
    static void mean_div(double& v, std::size_t n) { v /= static_cast<double>(n); }

    std::vector<double> mean_;
    std::vector<double> sd_;  // 0 marks a constant column
};

struct SplitConfig {
    double train_fraction = 2.0 / 3.0;
    double calibration_fraction = 0.75;  // share of the training rows used to fit calibrators
    std::uint64_t seed = 0;
    bool stratified = false;  // off by default: plain uniform shuffling
};

namespace detail {

// Shuffle 0..n-1 and cut at floor(n * fraction). With stratification the cut
// is taken inside each label class (largest-remainder on the positive class)
// and the chosen side is re-shuffled so class blocks don't stay contiguous.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const std::vector<int>& labels, double fraction, std::uint64_t seed, bool stratified) {
    const std::size_t n = labels.size();
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split: fraction must lie strictly inside (0,1)");
    const auto n_first = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(n)));
    if (n_first == 0 || n_first == n)
        throw std::invalid_argument("split: a side of the partition would be empty");

    Rng rng(seed);
    std::vector<std::size_t> first, second;
    if (!stratified) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        first.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_first));
        second.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_first), idx.end());
    } else {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
        rng.shuffle(pos);
        rng.shuffle(neg);
        auto n_pos_first = static_cast<std::size_t>(std::llround(
            fraction * static_cast<double>(pos.size())));
        n_pos_first = std::min(n_pos_first, n_first);
        n_pos_first = std::min(n_pos_first, pos.size());
        std::size_t n_neg_first = n_first - n_pos_first;
        if (n_neg_first > neg.size()) {  // rebalance when one class is tiny
            n_pos_first += n_neg_first - neg.size();
            n_neg_first = neg.size();
            if (n_pos_first > pos.size())
                throw std::invalid_argument("split: stratified split infeasible");
        }
        first.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos_first));
        first.insert(first.end(), neg.begin(),
                     neg.begin() + static_cast<std::ptrdiff_t>(n_neg_first));
        second.assign(pos.begin() + static_cast<std::ptrdiff_t>(n_pos_first), pos.end());
        second.insert(second.end(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg_first),
                      neg.end());
        rng.shuffle(first);
        rng.shuffle(second);
    }
    return {std::move(first), std::move(second)};
}

}  // namespace detail

// Partition into model-fitting and held-out rows. Seed stream 0 is reserved
// for this split so that downstream consumers of the master seed cannot
// perturb it.
inline std::pair<LabeledSample, LabeledSample> train_test_split(const LabeledSample& data,
                                                                const SplitConfig& cfg) {
    if (data.n_rows < 2) throw std::invalid_argument("train_test_split: need at least 2 rows");
    const auto [a, b] = detail::split_indices(data.labels, cfg.train_fraction,
                                              Rng::derive(cfg.seed, 0), cfg.stratified);
    return {data.subset(a), data.subset(b)};
}

// Partition training rows into calibration-fit and calibration-validation
// rows (seed stream 1).
inline std::pair<LabeledSample, LabeledSample> calibration_split(const LabeledSample& train,
                                                                 const SplitConfig& cfg) {
    if (train.n_rows < 2) throw std::invalid_argument("calibration_split: need at least 2 rows");
    const auto [a, b] = detail::split_indices(train.labels, cfg.calibration_fraction,
                                              Rng::derive(cfg.seed, 1), cfg.stratified);
    return {train.subset(a), train.subset(b)};
}

// Pearson correlation matrix of the covariates (m x m, row-major).
// Constant columns get zero correlation with everything and one with self.
inline std::vector<double> correlation_matrix(const LabeledSample& data) {
    if (data.n_rows < 2) throw std::invalid_argument("correlation_matrix: need at least 2 rows");
    const std::size_t m = data.n_features;
    const std::size_t n = data.n_rows;
    std::vector<double> mean(m, 0.0), sd(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = data.row(i);
        for (std::size_t j = 0; j < m; ++j) mean[j] += r[j];
    }
    for (auto& v : mean) v /= static_cast<double>(n);
    std::vector<double> cov(m * m, 0.0);
    std::vector<double> centered(m);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = data.row(i);
        for (std::size_t j = 0; j < m; ++j) centered[j] = r[j] - mean[j];
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = j; k < m; ++k) cov[j * m + k] += centered[j] * centered[k];
    }
    for (std::size_t j = 0; j < m; ++j) sd[j] = std::sqrt(cov[j * m + j]);
    std::vector<double> corr(m * m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        corr[j * m + j] = 1.0;
        for (std::size_t k = j + 1; k < m; ++k) {
            const double denom = sd[j] * sd[k];
            const double c = denom == 0.0 ? 0.0 : cov[j * m + k] / denom;
            corr[j * m + k] = c;
            corr[k * m + j] = c;
        }
    }
    return corr;
}

}  // namespace bernmix
