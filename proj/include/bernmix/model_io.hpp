#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "bernmix/calibration.hpp"
#include "bernmix/classifier.hpp"

namespace bernmix {

namespace detail {

// %.17g round-trips every finite double exactly.
inline void put_double(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

inline void expect_token(std::istream& in, const std::string& expected, const char* context) {
    std::string tok;
    if (!(in >> tok) || tok != expected)
        throw std::runtime_error(std::string(context) + ": expected token '" + expected +
                                 "', got '" + tok + "'");
}

template <typename T>
T read_value(std::istream& in, const char* context) {
    T v{};
    if (!(in >> v)) throw std::runtime_error(std::string(context) + ": truncated file");
    return v;
}

inline void write_tree(std::ostream& out, const DecisionTree& tree) {
    out << "tree " << tree.nodes().size() << "\n";
    for (const TreeNode& nd : tree.nodes()) {
        out << nd.feature << ' ';
        put_double(out, nd.threshold);
        out << ' ' << nd.left << ' ' << nd.right << ' ';
        put_double(out, nd.value);
        out << "\n";
    }
}

inline DecisionTree read_tree(std::istream& in, std::size_t n_features, const char* context) {
    expect_token(in, "tree", context);
    const auto n_nodes = read_value<std::size_t>(in, context);
    std::vector<TreeNode> nodes(n_nodes);
    for (auto& nd : nodes) {
        nd.feature = read_value<std::int32_t>(in, context);
        nd.threshold = read_value<double>(in, context);
        nd.left = read_value<std::int32_t>(in, context);
        nd.right = read_value<std::int32_t>(in, context);
        nd.value = read_value<double>(in, context);
    }
    return DecisionTree::from_nodes(n_features, std::move(nodes));
}

}  // namespace detail

// Flat text serialization, versioned by a magic first line. Numbers are
// written with %.17g so a load reproduces bit-identical predictions.
inline void save_model(const std::filesystem::path& path, const FittedModel& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path.string());
    out << "bernmix-model 1\n";
    out << "kind " << to_tag(model_kind(model)) << "\n";
    out << "n_features " << model_n_features(model) << "\n";

    if (const auto* lr = std::get_if<LogisticModel>(&model)) {
        out << "ridge ";
        detail::put_double(out, lr->ridge_lambda);
        out << "\nconverged " << (lr->converged ? 1 : 0) << "\n";
        out << "iterations " << lr->iterations << "\n";
        out << "gradient_sup_norm ";
        detail::put_double(out, lr->gradient_sup_norm);
        out << "\nbeta " << lr->beta.size();
        for (const double b : lr->beta) {
            out << ' ';
            detail::put_double(out, b);
        }
        out << "\n";
    } else if (const auto* knn = std::get_if<KnnModel>(&model)) {
        out << "k " << knn->k() << "\n";
        out << "n_rows " << knn->n_train() << "\n";
        out << "data\n";
        for (std::size_t i = 0; i < knn->n_train(); ++i) {
            for (std::size_t j = 0; j < knn->n_features(); ++j) {
                detail::put_double(out, knn->train_features()[i * knn->n_features() + j]);
                out << ' ';
            }
            out << knn->train_labels()[i] << "\n";
        }
    } else if (const auto* rf = std::get_if<ForestModel>(&model)) {
        const ForestConfig& cfg = rf->config();
        out << "n_trees " << cfg.n_trees << "\n";
        out << "max_depth " << cfg.tree.max_depth << "\n";
        out << "min_leaf " << cfg.tree.min_leaf << "\n";
        out << "m_try " << cfg.tree.m_try << "\n";
        out << "bootstrap " << (cfg.bootstrap ? 1 : 0) << "\n";
        out << "seed " << cfg.seed << "\n";
        out << "tree_seeds " << rf->tree_seeds().size();
        for (const auto s : rf->tree_seeds()) out << ' ' << s;
        out << "\n";
        for (const auto& tree : rf->trees()) detail::write_tree(out, tree);
    } else if (const auto* ab = std::get_if<AdaBoostModel>(&model)) {
        const AdaBoostConfig& cfg = ab->config();
        out << "n_rounds " << cfg.n_rounds << "\n";
        out << "stump_depth " << cfg.stump_depth << "\n";
        out << "seed " << cfg.seed << "\n";
        out << "n_stages " << ab->stages().size() << "\n";
        for (const auto& st : ab->stages()) {
            out << "stage ";
            detail::put_double(out, st.weight);
            out << ' ';
            detail::put_double(out, st.weighted_error);
            out << "\n";
            detail::write_tree(out, st.stump);
        }
    }
    out << "end\n";
    if (!out) throw std::runtime_error("failed while writing model file: " + path.string());
}

inline FittedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path.string());
    const char* ctx = "load_model";
    detail::expect_token(in, "bernmix-model", ctx);
    const auto version = detail::read_value<int>(in, ctx);
    if (version != 1) throw std::runtime_error("unsupported model file version");
    detail::expect_token(in, "kind", ctx);
    const auto tag = detail::read_value<std::string>(in, ctx);
    const ModelKind kind = parse_model_tag(tag);
    detail::expect_token(in, "n_features", ctx);
    const auto m = detail::read_value<std::size_t>(in, ctx);

    FittedModel model;
    switch (kind) {
        case ModelKind::logistic: {
            LogisticModel lr;
            detail::expect_token(in, "ridge", ctx);
            lr.ridge_lambda = detail::read_value<double>(in, ctx);
            detail::expect_token(in, "converged", ctx);
            lr.converged = detail::read_value<int>(in, ctx) != 0;
            detail::expect_token(in, "iterations", ctx);
            lr.iterations = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "gradient_sup_norm", ctx);
            lr.gradient_sup_norm = detail::read_value<double>(in, ctx);
            detail::expect_token(in, "beta", ctx);
            const auto n_beta = detail::read_value<std::size_t>(in, ctx);
            if (n_beta != m + 1) throw std::runtime_error("load_model: coefficient count mismatch");
            lr.beta.resize(n_beta);
            for (auto& b : lr.beta) b = detail::read_value<double>(in, ctx);
            model = std::move(lr);
            break;
        }
        case ModelKind::knn: {
            detail::expect_token(in, "k", ctx);
            const auto k = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "n_rows", ctx);
            const auto n = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "data", ctx);
            std::vector<double> features(n * m);
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j)
                    features[i * m + j] = detail::read_value<double>(in, ctx);
                labels[i] = detail::read_value<int>(in, ctx);
            }
            model = KnnModel::from_parts(k, n, m, std::move(features), std::move(labels));
            break;
        }
        case ModelKind::random_forest: {
            ForestConfig cfg;
            detail::expect_token(in, "n_trees", ctx);
            cfg.n_trees = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "max_depth", ctx);
            cfg.tree.max_depth = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "min_leaf", ctx);
            cfg.tree.min_leaf = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "m_try", ctx);
            cfg.tree.m_try = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "bootstrap", ctx);
            cfg.bootstrap = detail::read_value<int>(in, ctx) != 0;
            detail::expect_token(in, "seed", ctx);
            cfg.seed = detail::read_value<std::uint64_t>(in, ctx);
            detail::expect_token(in, "tree_seeds", ctx);
            const auto n_seeds = detail::read_value<std::size_t>(in, ctx);
            std::vector<std::uint64_t> seeds(n_seeds);
            for (auto& s : seeds) s = detail::read_value<std::uint64_t>(in, ctx);
            std::vector<DecisionTree> trees;
            trees.reserve(cfg.n_trees);
            for (std::size_t t = 0; t < cfg.n_trees; ++t)
                trees.push_back(detail::read_tree(in, m, ctx));
            model = ForestModel::from_parts(cfg, m, std::move(seeds), std::move(trees));
            break;
        }
        case ModelKind::adaboost: {
            AdaBoostConfig cfg;
            detail::expect_token(in, "n_rounds", ctx);
            cfg.n_rounds = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "stump_depth", ctx);
            cfg.stump_depth = detail::read_value<std::size_t>(in, ctx);
            detail::expect_token(in, "seed", ctx);
            cfg.seed = detail::read_value<std::uint64_t>(in, ctx);
            detail::expect_token(in, "n_stages", ctx);
            const auto n_stages = detail::read_value<std::size_t>(in, ctx);
            std::vector<BoostStage> stages;
            stages.reserve(n_stages);
            for (std::size_t s = 0; s < n_stages; ++s) {
                detail::expect_token(in, "stage", ctx);
                BoostStage st;
                st.weight = detail::read_value<double>(in, ctx);
                st.weighted_error = detail::read_value<double>(in, ctx);
                st.stump = detail::read_tree(in, m, ctx);
                stages.push_back(std::move(st));
            }
            model = AdaBoostModel::from_parts(cfg, m, std::move(stages));
            break;
        }
    }
    detail::expect_token(in, "end", ctx);
    return model;
}

inline void save_calibration(const std::filesystem::path& path, const std::string& model_tag,
                             const CalibrationChoice& choice) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write calibration file: " + path.string());
    out << "bernmix-calibration 1\n";
    out << "model " << model_tag << "\n";
    out << "method " << to_string(choice.method) << "\n";
    out << "platt ";
    detail::put_double(out, choice.platt.a);
    out << ' ';
    detail::put_double(out, choice.platt.b);
    out << ' ' << (choice.platt.converged ? 1 : 0) << "\n";
    out << "platt_ece ";
    detail::put_double(out, choice.platt_ece);
    out << "\nisotonic_ece ";
    detail::put_double(out, choice.isotonic_ece);
    out << "\nisotonic " << choice.isotonic.breakpoints.size() << "\n";
    for (std::size_t i = 0; i < choice.isotonic.breakpoints.size(); ++i) {
        detail::put_double(out, choice.isotonic.breakpoints[i]);
        out << ' ';
        detail::put_double(out, choice.isotonic.levels[i]);
        out << "\n";
    }
    out << "end\n";
    if (!out) throw std::runtime_error("failed while writing calibration file: " + path.string());
}

inline std::pair<std::string, CalibrationChoice> load_calibration(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calibration file: " + path.string());
    const char* ctx = "load_calibration";
    detail::expect_token(in, "bernmix-calibration", ctx);
    const auto version = detail::read_value<int>(in, ctx);
    if (version != 1) throw std::runtime_error("unsupported calibration file version");
    detail::expect_token(in, "model", ctx);
    const auto tag = detail::read_value<std::string>(in, ctx);
    detail::expect_token(in, "method", ctx);
    const auto method = detail::read_value<std::string>(in, ctx);
    CalibrationChoice choice;
    if (method == "none") choice.method = CalibrationMethod::none;
    else if (method == "platt") choice.method = CalibrationMethod::platt;
    else if (method == "isotonic") choice.method = CalibrationMethod::isotonic;
    else throw std::runtime_error("load_calibration: unknown method '" + method + "'");
    detail::expect_token(in, "platt", ctx);
    choice.platt.a = detail::read_value<double>(in, ctx);
    choice.platt.b = detail::read_value<double>(in, ctx);
    choice.platt.converged = detail::read_value<int>(in, ctx) != 0;
    detail::expect_token(in, "platt_ece", ctx);
    choice.platt_ece = detail::read_value<double>(in, ctx);
    detail::expect_token(in, "isotonic_ece", ctx);
    choice.isotonic_ece = detail::read_value<double>(in, ctx);
    detail::expect_token(in, "isotonic", ctx);
    const auto n = detail::read_value<std::size_t>(in, ctx);
    choice.isotonic.breakpoints.resize(n);
    choice.isotonic.levels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        choice.isotonic.breakpoints[i] = detail::read_value<double>(in, ctx);
        choice.isotonic.levels[i] = detail::read_value<double>(in, ctx);
    }
    detail::expect_token(in, "end", ctx);
    return {tag, choice};
}

inline void save_standardizer(const std::filesystem::path& path, const Standardizer& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write standardizer file: " + path.string());
    out << "bernmix-standardizer 1\n";
    out << "n_features " << s.means().size() << "\n";
    out << "mean";
    for (const double v : s.means()) {
        out << ' ';
        detail::put_double(out, v);
    }
    out << "\nsd";
    for (const double v : s.stddevs()) {
        out << ' ';
        detail::put_double(out, v);
    }
    out << "\nend\n";
    if (!out) throw std::runtime_error("failed while writing standardizer file: " + path.string());
}

inline Standardizer load_standardizer(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open standardizer file: " + path.string());
    const char* ctx = "load_standardizer";
    detail::expect_token(in, "bernmix-standardizer", ctx);
    const auto version = detail::read_value<int>(in, ctx);
    if (version != 1) throw std::runtime_error("unsupported standardizer file version");
    detail::expect_token(in, "n_features", ctx);
    const auto m = detail::read_value<std::size_t>(in, ctx);
    detail::expect_token(in, "mean", ctx);
    std::vector<double> mean(m);
    for (auto& v : mean) v = detail::read_value<double>(in, ctx);
    detail::expect_token(in, "sd", ctx);
    std::vector<double> sd(m);
    for (auto& v : sd) v = detail::read_value<double>(in, ctx);
    detail::expect_token(in, "end", ctx);
    Standardizer s;
    s.set_parameters(std::move(mean), std::move(sd));
    return s;
}

}  // namespace bernmix
