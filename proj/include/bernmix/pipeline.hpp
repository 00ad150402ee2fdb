#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bernmix/calibration.hpp"
#include "bernmix/classifier.hpp"
#include "bernmix/config.hpp"
#include "bernmix/dataset.hpp"
#include "bernmix/metrics.hpp"
#include "bernmix/mixture.hpp"
#include "bernmix/model_io.hpp"
#include "bernmix/report.hpp"

namespace bernmix {

namespace detail {

template <typename F>
auto stage(const std::string& name, F&& f) {
    try {
        return std::forward<F>(f)();
    } catch (const std::exception& e) {
        throw std::runtime_error("stage '" + name + "' failed: " + e.what());
    }
}

// Row-parallel batch prediction. Each row is an independent pure function of
// the model, so the result is identical for any thread count.
inline std::vector<double> predict_batch(const FittedModel& model, const LabeledSample& data,
                                         std::size_t n_threads = 0) {
    if (data.n_features != model_n_features(model))
        throw std::invalid_argument("predict_batch: feature count mismatch");
    std::vector<double> out(data.n_rows);
    if (n_threads == 0)
        n_threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    n_threads = std::min<std::size_t>(n_threads, std::max<std::size_t>(1, data.n_rows));
    if (n_threads <= 1 || data.n_rows < 256) {
        for (std::size_t i = 0; i < data.n_rows; ++i) out[i] = predict_one(model, data.row(i));
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    const std::size_t chunk = (data.n_rows + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(lo + chunk, data.n_rows);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            for (std::size_t i = lo; i < hi; ++i) out[i] = predict_one(model, data.row(i));
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace detail

// One count distribution produced by a run, tagged with its model.
struct ProducedDistribution {
    std::string model_tag;
    CountDistribution dist;
};

// Full in-memory result of a pipeline run: the report plus the intermediate
// objects tests and sub-commands reuse.
struct PipelineResult {
    RunReport report;
    std::vector<std::pair<std::string, FittedModel>> models;
    std::vector<std::pair<std::string, CalibrationChoice>> calibrations;  // ML models only
    std::vector<std::pair<std::string, MixingSample>> mixing_samples;
    std::vector<std::pair<std::string, BetaParams>> beta_params;
    std::vector<ProducedDistribution> distributions;
    Standardizer standardizer;
};

namespace detail {

inline ModelMetricsReport compute_metrics_report(std::span<const double> predictions,
                                                 std::span<const int> labels, double threshold) {
    ModelMetricsReport mr;
    mr.confusion = confusion_at_threshold(predictions, labels, threshold);
    mr.precision_pos = precision(mr.confusion);
    mr.recall_pos = recall(mr.confusion);
    mr.f1_pos = f1_score(mr.confusion);
    mr.weighted = class_weighted_prf(mr.confusion);
    mr.auc = roc_auc(predictions, labels);
    return mr;
}

}  // namespace detail

// End-to-end run: ingest, split, fit the four classifiers, calibrate the ML
// models on held-out training rows, evaluate on the test rows, turn the
// predicted probabilities into mixing samples, fit the beta law, compute
// both count distributions, the fit diagnostics and the VaR table. When
// `persist` is set, every intermediate artifact lands under
// config.output_dir so sub-commands can reuse them.
inline PipelineResult run_pipeline_full(const RunConfig& cfg, bool persist = true) {
    detail::stage("config", [&] { cfg.validate(); });

    PipelineResult result;
    RunReport& report = result.report;
    report.config = cfg;

    const CovariateSchema schema = CovariateSchema::credit_card_default();
    const LabeledSample raw = detail::stage("ingest", [&] {
        return load_csv(cfg.data_path, schema);
    });
    report.n_rows_total = raw.n_rows;

    const auto [train_raw, test_raw] = detail::stage("split", [&] {
        return train_test_split(raw, cfg.split);
    });

    LabeledSample train, test;
    detail::stage("standardize", [&] {
        result.standardizer = Standardizer::fit(train_raw);
        train = result.standardizer.apply(train_raw);
        test = result.standardizer.apply(test_raw);
    });
    report.n_train = train.n_rows;
    report.n_test = test.n_rows;
    report.train_positive_rate = train.positive_rate();
    report.test_positive_rate = test.positive_rate();

    const auto [calib, valid] = detail::stage("calibration split", [&] {
        return calibration_split(train, cfg.split);
    });
    report.n_calibration = calib.n_rows;
    report.n_validation = valid.n_rows;

    // fit the four models; tree-based seeds come from decoupled streams of
    // the master seed (streams 0 and 1 belong to the two splits)
    detail::stage("fit lr", [&] {
        result.models.emplace_back("lr", logistic_fit(train, cfg.logistic.ridge_lambda,
                                                      cfg.logistic.tol, cfg.logistic.max_iter));
    });
    detail::stage("fit rf", [&] {
        ForestConfig fc;
        fc.n_trees = cfg.forest.n_trees;
        fc.tree.max_depth = cfg.forest.max_depth;
        fc.tree.min_leaf = cfg.forest.min_leaf;
        fc.tree.m_try = cfg.forest.m_try;
        fc.seed = Rng::derive(cfg.split.seed, 2);
        fc.n_threads = cfg.forest.n_threads;
        result.models.emplace_back("rf", ForestModel::fit(train, fc));
    });
    detail::stage("fit ab", [&] {
        AdaBoostConfig ac;
        ac.n_rounds = cfg.adaboost.n_rounds;
        ac.seed = Rng::derive(cfg.split.seed, 3);
        result.models.emplace_back("ab", AdaBoostModel::fit(train, ac));
    });
    detail::stage("fit knn", [&] {
        result.models.emplace_back("knn", KnnModel::fit(train, cfg.knn.k));
    });

    // raw test predictions drive the discrimination metrics
    std::map<std::string, std::vector<double>> test_scores;
    for (const auto& [tag, model] : result.models) {
        detail::stage("metrics " + tag, [&, &tag = tag, &model = model] {
            test_scores[tag] = detail::predict_batch(model, test);
            ModelReport mr;
            mr.tag = tag;
            mr.metrics = detail::compute_metrics_report(test_scores[tag], test.labels,
                                                        cfg.decision_threshold);
            report.models.push_back(std::move(mr));
        });
    }

    // calibrate the ML models: maps fitted on the calibration rows, the
    // winner chosen by ECE on the validation rows; the linear baseline is
    // already a probability model and stays raw
    for (auto& [tag, model] : result.models) {
        ModelReport& mr = *std::find_if(report.models.begin(), report.models.end(),
                                        [&, &tag = tag](const ModelReport& m) { return m.tag == tag; });
        if (tag == "lr") {
            detail::stage("calibration lr", [&] {
                const auto valid_pred = detail::predict_batch(model, valid);
                mr.calibration.method = CalibrationMethod::none;
                mr.calibration.platt_ece = 0.0;
                mr.calibration.isotonic_ece = 0.0;
                mr.calibration.chosen_ece =
                    expected_calibration_error(valid_pred, valid.labels, cfg.ece_bins);
            });
            continue;
        }
        detail::stage("calibration " + tag, [&, &tag = tag, &model = model] {
            const auto calib_scores = detail::predict_batch(model, calib);
            const auto valid_scores = detail::predict_batch(model, valid);
            CalibrationChoice choice = select_calibration(calib_scores, calib.labels,
                                                          valid_scores, valid.labels,
                                                          cfg.ece_bins);
            mr.calibration.method = choice.method;
            mr.calibration.platt_ece = choice.platt_ece;
            mr.calibration.isotonic_ece = choice.isotonic_ece;
            mr.calibration.chosen_ece = choice.method == CalibrationMethod::platt
                                            ? choice.platt_ece
                                            : choice.isotonic_ece;
            result.calibrations.emplace_back(tag, std::move(choice));
        });
    }

    // mixing samples: calibrated probabilities on the test rows
    for (const auto& [tag, model] : result.models) {
        detail::stage("mixing " + tag, [&, &tag = tag] {
            MixingSample sample;
            sample.model_tag = tag;
            sample.q = test_scores.at(tag);
            if (tag != "lr") {
                const auto it =
                    std::find_if(result.calibrations.begin(), result.calibrations.end(),
                                 [&, &tag = tag](const auto& c) { return c.first == tag; });
                for (double& v : sample.q) v = it->second.evaluate(v);
            }
            for (const double v : sample.q)
                if (!(v >= 0.0 && v <= 1.0))
                    throw std::runtime_error("calibrated probability outside [0,1]");
            result.mixing_samples.emplace_back(tag, std::move(sample));
        });
    }

    // moments, beta fit, count distributions, diagnostics, VaR
    std::vector<std::size_t> sizes(cfg.portfolio_sizes.begin(), cfg.portfolio_sizes.end());
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    std::size_t kl_d = 0;
    for (const std::size_t d : sizes)
        if (d <= cfg.nonparametric_max_d) {
            kl_d = d;
            break;
        }

    for (const auto& [tag, sample] : result.mixing_samples) {
        ModelReport& mr = *std::find_if(report.models.begin(), report.models.end(),
                                        [&, &tag = tag](const ModelReport& m) { return m.tag == tag; });
        detail::stage("mixture " + tag, [&, &tag = tag, &sample = sample] {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const MomentVector moments = sample_moments(sample.q, 2);
            const double p = moments[1];
            const double pi2 = moments[2];
            mr.mixture.p = p;
            mr.mixture.pi2 = pi2;
            // a beta law exists only for non-degenerate moments; on a
            // degenerate mixing sample (constant q, or q concentrated on
            // {0,1}) the parametric side is reported absent (NaN) and only
            // the non-parametric route runs
            const bool p_interior = p > 0.0 && p < 1.0;
            mr.mixture.rho = p_interior ? default_correlation(p, pi2) : nan;
            const bool beta_ok = p_interior && pi2 > p * p && pi2 < p;

            CountDistribution nonparam_small;  // reused for the KL distance
            for (const std::size_t d : sizes) {
                if (d <= cfg.nonparametric_max_d) {
                    CountDistribution nonparam = empirical_count_pmf(sample.q, d);
                    if (d == kl_d) nonparam_small = nonparam;
                    for (const double alpha : cfg.alphas) {
                        const std::size_t v = var_alpha(nonparam, alpha);
                        report.var_table.push_back({tag, nonparam.source, d, alpha, v,
                                                    var_alpha_loss(nonparam, alpha)});
                    }
                    result.distributions.push_back({tag, std::move(nonparam)});
                }
            }

            if (!beta_ok) {
                mr.mixture.beta = BetaParams{nan, nan};
                mr.mixture.beta_p = nan;
                mr.mixture.beta_rho = nan;
                mr.mixture.kl_d = 0;
                mr.mixture.kl = nan;
                mr.mixture.ks = KsResult{nan, nan};
                return;
            }

            const BetaParams params = beta_fit_moments(p, pi2);
            mr.mixture.beta = params;
            mr.mixture.beta_p = params.mean();
            mr.mixture.beta_rho = params.correlation();
            result.beta_params.emplace_back(tag, params);
            mr.mixture.ks = ks_test(sample.q, params);

            for (const std::size_t d : sizes) {
                CountDistribution beta_dist = beta_binomial_pmf(params, d);
                for (const double alpha : cfg.alphas) {
                    const std::size_t v = var_alpha(beta_dist, alpha);
                    report.var_table.push_back({tag, beta_dist.source, d, alpha, v,
                                                var_alpha_loss(beta_dist, alpha)});
                }
                result.distributions.push_back({tag, std::move(beta_dist)});
            }
            if (kl_d > 0) {
                mr.mixture.kl_d = kl_d;
                mr.mixture.kl = kl_divergence(nonparam_small, beta_binomial_pmf(params, kl_d));
            } else {
                mr.mixture.kl_d = 0;
                mr.mixture.kl = std::numeric_limits<double>::quiet_NaN();
            }
        });
    }

    if (persist) {
        detail::stage("persist", [&] {
            namespace fs = std::filesystem;
            const fs::path out_dir(cfg.output_dir);
            fs::create_directories(out_dir / "models");
            fs::create_directories(out_dir / "calibration");
            fs::create_directories(out_dir / "mixing");
            fs::create_directories(out_dir / "pmf");

            {
                std::ofstream cecho(out_dir / "config.json");
                if (!cecho) throw std::runtime_error("cannot write config echo");
                cecho << cfg.to_json().dump(2) << "\n";
            }
            save_standardizer(out_dir / "standardizer.txt", result.standardizer);
            for (const auto& [tag, model] : result.models)
                save_model(out_dir / "models" / (tag + ".model"), model);
            for (const auto& [tag, choice] : result.calibrations)
                save_calibration(out_dir / "calibration" / (tag + ".calib"), tag, choice);
            for (const auto& [tag, sample] : result.mixing_samples)
                export_mixing_sample(sample, out_dir / "mixing" / (tag + ".csv"));
            for (const auto& pd : result.distributions) {
                const std::string name = pd.model_tag + "_" + to_string(pd.dist.source) + "_d" +
                                         std::to_string(pd.dist.d) + ".csv";
                export_pmf(pd.dist, out_dir / "pmf" / name);
            }
            export_named_matrix(schema.feature_names, correlation_matrix(raw),
                                out_dir / "corr_matrix.csv");
            {
                std::ofstream kv(out_dir / "report.kv");
                if (!kv) throw std::runtime_error("cannot write report.kv");
                write_report_kv(kv, report);
            }
            {
                std::ofstream txt(out_dir / "report.txt");
                if (!txt) throw std::runtime_error("cannot write report.txt");
                write_report_text(txt, report);
            }
            {
                std::ofstream cmp(out_dir / "comparisons.txt");
                if (!cmp) throw std::runtime_error("cannot write comparisons.txt");
                write_comparisons(cmp, compare_models(report));
            }
        });
    }

    return result;
}

inline RunReport run_pipeline(const RunConfig& cfg, bool persist = true) {
    return run_pipeline_full(cfg, persist).report;
}

}  // namespace bernmix
