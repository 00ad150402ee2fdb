#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bernmix/dataset.hpp"

namespace bernmix {

struct LogisticConfig {
    double ridge_lambda = 1e-6;
    double tol = 1e-8;
    std::size_t max_iter = 100;
};

struct KnnConfig {
    std::size_t k = 25;
};

struct ForestHyperConfig {
    std::size_t n_trees = 200;
    std::size_t max_depth = 12;
    std::size_t min_leaf = 5;
    std::size_t m_try = 0;  // 0: ceil(sqrt(m))
    std::size_t n_threads = 0;
};

struct AdaBoostHyperConfig {
    std::size_t n_rounds = 200;
};

// Everything one pipeline run depends on. Serializable to JSON so a run
// directory carries an exact echo of its configuration.
struct RunConfig {
    std::string data_path;
    SplitConfig split;  // fractions, master seed, stratification switch
    LogisticConfig logistic;
    KnnConfig knn;
    ForestHyperConfig forest;
    AdaBoostHyperConfig adaboost;
    std::size_t ece_bins = 10;
    double decision_threshold = 0.5;
    std::vector<std::size_t> portfolio_sizes = {25, 6000};
    std::vector<double> alphas = {0.90, 0.95, 0.99};
    std::size_t nonparametric_max_d = 30;  // non-parametric pmf computed for d up to this
    std::string output_dir = "run_output";

    void validate() const {
        if (data_path.empty()) throw std::invalid_argument("config: data_path is required");
        if (alphas.empty()) throw std::invalid_argument("config: at least one alpha level");
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            if (!(alphas[i] > 0.0 && alphas[i] < 1.0))
                throw std::invalid_argument("config: alphas must lie strictly inside (0,1)");
            if (i > 0 && !(alphas[i] > alphas[i - 1]))
                throw std::invalid_argument("config: alphas must be strictly increasing");
        }
        if (portfolio_sizes.empty())
            throw std::invalid_argument("config: at least one portfolio size");
        for (const std::size_t d : portfolio_sizes)
            if (d < 1) throw std::invalid_argument("config: portfolio sizes must be >= 1");
        if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
            throw std::invalid_argument("config: train_fraction outside (0,1)");
        if (!(split.calibration_fraction > 0.0 && split.calibration_fraction < 1.0))
            throw std::invalid_argument("config: calibration_fraction outside (0,1)");
        if (ece_bins == 0) throw std::invalid_argument("config: ece_bins must be positive");
        if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0))
            throw std::invalid_argument("config: decision_threshold outside [0,1]");
        if (output_dir.empty()) throw std::invalid_argument("config: output_dir is required");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["data_path"] = data_path;
        j["split"] = {{"train_fraction", split.train_fraction},
                      {"calibration_fraction", split.calibration_fraction},
                      {"seed", split.seed},
                      {"stratified", split.stratified}};
        j["logistic"] = {{"ridge_lambda", logistic.ridge_lambda},
                         {"tol", logistic.tol},
                         {"max_iter", logistic.max_iter}};
        j["knn"] = {{"k", knn.k}};
        j["forest"] = {{"n_trees", forest.n_trees},
                       {"max_depth", forest.max_depth},
                       {"min_leaf", forest.min_leaf},
                       {"m_try", forest.m_try},
                       {"n_threads", forest.n_threads}};
        j["adaboost"] = {{"n_rounds", adaboost.n_rounds}};
        j["ece_bins"] = ece_bins;
        j["decision_threshold"] = decision_threshold;
        j["portfolio_sizes"] = portfolio_sizes;
        j["alphas"] = alphas;
        j["nonparametric_max_d"] = nonparametric_max_d;
        j["output_dir"] = output_dir;
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig cfg;
        const auto get = [](const nlohmann::json& node, const char* key, auto& target) {
            if (node.contains(key)) target = node.at(key).get<std::decay_t<decltype(target)>>();
        };
        get(j, "data_path", cfg.data_path);
        if (j.contains("split")) {
            const auto& s = j.at("split");
            get(s, "train_fraction", cfg.split.train_fraction);
            get(s, "calibration_fraction", cfg.split.calibration_fraction);
            get(s, "seed", cfg.split.seed);
            get(s, "stratified", cfg.split.stratified);
        }
        if (j.contains("logistic")) {
            const auto& s = j.at("logistic");
            get(s, "ridge_lambda", cfg.logistic.ridge_lambda);
            get(s, "tol", cfg.logistic.tol);
            get(s, "max_iter", cfg.logistic.max_iter);
        }
        if (j.contains("knn")) get(j.at("knn"), "k", cfg.knn.k);
        if (j.contains("forest")) {
            const auto& s = j.at("forest");
            get(s, "n_trees", cfg.forest.n_trees);
            get(s, "max_depth", cfg.forest.max_depth);
            get(s, "min_leaf", cfg.forest.min_leaf);
            get(s, "m_try", cfg.forest.m_try);
            get(s, "n_threads", cfg.forest.n_threads);
        }
        if (j.contains("adaboost")) get(j.at("adaboost"), "n_rounds", cfg.adaboost.n_rounds);
        get(j, "ece_bins", cfg.ece_bins);
        get(j, "decision_threshold", cfg.decision_threshold);
        get(j, "portfolio_sizes", cfg.portfolio_sizes);
        get(j, "alphas", cfg.alphas);
        get(j, "nonparametric_max_d", cfg.nonparametric_max_d);
        get(j, "output_dir", cfg.output_dir);
        return cfg;
    }

    static RunConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("config file " + path.string() + " is not valid JSON: " +
                                     e.what());
        }
        return from_json(j);
    }
};

}  // namespace bernmix
