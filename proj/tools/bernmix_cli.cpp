// Command-line front end: drives the default-risk pipeline end to end or in
// independent steps, with every artifact persisted under a run directory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bernmix/pipeline.hpp"
#include "bernmix/synthetic.hpp"

namespace fs = std::filesystem;
using namespace bernmix;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string data_override;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true,
                bool with_out_override = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "run configuration JSON file");
    if (config_required) c->required();
    cmd->add_option("--data", opts.data_override, "override the covariate CSV path");
    if (with_out_override)
        cmd->add_option("--out", opts.out_override, "override the run output directory");
    cmd->add_option("--seed", opts.seed_override, "override the master seed")
        ->each([&opts](const std::string&) { opts.seed_given = true; });
}

RunConfig load_config(const CommonOpts& opts) {
    RunConfig cfg = RunConfig::from_file(opts.config_path);
    if (!opts.data_override.empty()) cfg.data_path = opts.data_override;
    if (!opts.out_override.empty()) cfg.output_dir = opts.out_override;
    if (opts.seed_given) cfg.split.seed = opts.seed_override;
    cfg.validate();
    return cfg;
}

struct PreparedData {
    LabeledSample train, test, calib, valid;
    Standardizer standardizer;
};

// The deterministic pipeline prefix every sub-command shares: ingest,
// train/test split, standardization, calibration split.
PreparedData prepare(const RunConfig& cfg) {
    PreparedData prep;
    const LabeledSample raw = load_csv(cfg.data_path, CovariateSchema::credit_card_default());
    const auto [train_raw, test_raw] = train_test_split(raw, cfg.split);
    prep.standardizer = Standardizer::fit(train_raw);
    prep.train = prep.standardizer.apply(train_raw);
    prep.test = prep.standardizer.apply(test_raw);
    const auto [calib, valid] = calibration_split(prep.train, cfg.split);
    prep.calib = calib;
    prep.valid = valid;
    return prep;
}

FittedModel fit_model(const RunConfig& cfg, const LabeledSample& train, const std::string& tag) {
    switch (parse_model_tag(tag)) {
        case ModelKind::logistic:
            return logistic_fit(train, cfg.logistic.ridge_lambda, cfg.logistic.tol,
                                cfg.logistic.max_iter);
        case ModelKind::knn:
            return KnnModel::fit(train, cfg.knn.k);
        case ModelKind::random_forest: {
            ForestConfig fc;
            fc.n_trees = cfg.forest.n_trees;
            fc.tree.max_depth = cfg.forest.max_depth;
            fc.tree.min_leaf = cfg.forest.min_leaf;
            fc.tree.m_try = cfg.forest.m_try;
            fc.seed = Rng::derive(cfg.split.seed, 2);
            fc.n_threads = cfg.forest.n_threads;
            return ForestModel::fit(train, fc);
        }
        case ModelKind::adaboost: {
            AdaBoostConfig ac;
            ac.n_rounds = cfg.adaboost.n_rounds;
            ac.seed = Rng::derive(cfg.split.seed, 3);
            return AdaBoostModel::fit(train, ac);
        }
    }
    throw std::logic_error("fit_model: unreachable");
}

FittedModel load_model_or_explain(const RunConfig& cfg, const std::string& tag) {
    const fs::path path = fs::path(cfg.output_dir) / "models" / (tag + ".model");
    if (!fs::exists(path))
        throw std::runtime_error("model file " + path.string() +
                                 " not found; run `fit --model " + tag + "` first");
    return load_model(path);
}

void echo_config(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    std::ofstream out(fs::path(cfg.output_dir) / "config.json");
    if (!out) throw std::runtime_error("cannot write config echo");
    out << cfg.to_json().dump(2) << "\n";
}

const std::vector<std::string> kAllTags = {"lr", "rf", "ab", "knn"};
const std::vector<std::string> kMlTags = {"rf", "ab", "knn"};

int cmd_synth(const std::string& out_path, std::size_t rows, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n_rows = rows;
    cfg.seed = seed;
    write_synthetic_credit_csv(out_path, cfg);
    std::cout << "wrote " << rows << " rows to " << out_path << "\n";
    return 0;
}

int cmd_run(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const PipelineResult result = run_pipeline_full(cfg, /*persist=*/true);
    write_report_text(std::cout, result.report);
    std::cout << "\nModel comparisons\n" << std::string(72, '-') << "\n";
    write_comparisons(std::cout, compare_models(result.report));
    std::cout << "\nartifacts written under " << cfg.output_dir << "\n";
    return 0;
}

int cmd_fit(const CommonOpts& opts, const std::string& tag) {
    const RunConfig cfg = load_config(opts);
    const PreparedData prep = prepare(cfg);
    const FittedModel model = fit_model(cfg, prep.train, tag);
    fs::create_directories(fs::path(cfg.output_dir) / "models");
    echo_config(cfg);
    save_standardizer(fs::path(cfg.output_dir) / "standardizer.txt", prep.standardizer);
    const fs::path path = fs::path(cfg.output_dir) / "models" / (tag + ".model");
    save_model(path, model);
    std::cout << "fitted " << tag << " on " << prep.train.n_rows << " rows; saved to " << path
              << "\n";
    return 0;
}

int cmd_calibrate(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const PreparedData prep = prepare(cfg);
    fs::create_directories(fs::path(cfg.output_dir) / "calibration");
    std::cout << "model   method     platt_ece   isotonic_ece\n";
    for (const std::string& tag : kMlTags) {
        const FittedModel model = load_model_or_explain(cfg, tag);
        const auto calib_scores = detail::predict_batch(model, prep.calib);
        const auto valid_scores = detail::predict_batch(model, prep.valid);
        const CalibrationChoice choice = select_calibration(
            calib_scores, prep.calib.labels, valid_scores, prep.valid.labels, cfg.ece_bins);
        save_calibration(fs::path(cfg.output_dir) / "calibration" / (tag + ".calib"), tag,
                         choice);
        std::cout << tag << (tag.size() < 3 ? "      " : "     ") << to_string(choice.method)
                  << "   " << choice.platt_ece << "   " << choice.isotonic_ece << "\n";
    }
    std::cout << "calibration maps written under " << cfg.output_dir << "/calibration\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const PreparedData prep = prepare(cfg);
    std::cout << "model   precision   recall      f1          auc\n";
    fs::create_directories(cfg.output_dir);
    std::ofstream kv(fs::path(cfg.output_dir) / "metrics.kv");
    for (const std::string& tag : kAllTags) {
        const FittedModel model = load_model_or_explain(cfg, tag);
        const auto scores = detail::predict_batch(model, prep.test);
        const ConfusionMatrix cm =
            confusion_at_threshold(scores, prep.test.labels, cfg.decision_threshold);
        const double auc = roc_auc(scores, prep.test.labels);
        const auto pr = precision(cm), rc = recall(cm), f1 = f1_score(cm);
        std::cout << tag << std::string(8 - tag.size(), ' ');
        for (const double v : {pr.value, rc.value, f1.value, auc}) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%-12.4f", v);
            std::cout << buf;
        }
        std::cout << "\n";
        kv << "model." << tag << ".precision " << pr.value << "\n";
        kv << "model." << tag << ".recall " << rc.value << "\n";
        kv << "model." << tag << ".f1 " << f1.value << "\n";
        kv << "model." << tag << ".auc " << auc << "\n";
    }
    std::cout << "metrics written to " << cfg.output_dir << "/metrics.kv\n";
    return 0;
}

int cmd_mixture(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const PreparedData prep = prepare(cfg);
    fs::create_directories(fs::path(cfg.output_dir) / "mixing");
    fs::create_directories(fs::path(cfg.output_dir) / "pmf");
    std::cout << "model   p           pi2         rho         a           b\n";
    for (const std::string& tag : kAllTags) {
        const FittedModel model = load_model_or_explain(cfg, tag);
        MixingSample sample;
        sample.model_tag = tag;
        sample.q = detail::predict_batch(model, prep.test);
        if (tag != "lr") {
            const fs::path cpath = fs::path(cfg.output_dir) / "calibration" / (tag + ".calib");
            if (!fs::exists(cpath))
                throw std::runtime_error("calibration file " + cpath.string() +
                                         " not found; run `calibrate` first");
            const auto [ctag, choice] = load_calibration(cpath);
            for (double& v : sample.q) v = choice.evaluate(v);
        }
        export_mixing_sample(sample, fs::path(cfg.output_dir) / "mixing" / (tag + ".csv"));

        const MomentVector moments = sample_moments(sample.q, 2);
        const BetaParams params = beta_fit_moments(moments[1], moments[2]);
        for (const std::size_t d : cfg.portfolio_sizes) {
            export_pmf(beta_binomial_pmf(params, d),
                       fs::path(cfg.output_dir) / "pmf" /
                           (tag + "_beta_d" + std::to_string(d) + ".csv"));
            if (d <= cfg.nonparametric_max_d)
                export_pmf(empirical_count_pmf(sample.q, d),
                           fs::path(cfg.output_dir) / "pmf" /
                               (tag + "_nonparam_d" + std::to_string(d) + ".csv"));
        }
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%-8s%-12.4f%-12.4f%-12.4f%-12.4f%-12.4f", tag.c_str(),
                      moments[1], moments[2], default_correlation(moments[1], moments[2]),
                      params.a, params.b);
        std::cout << buf << "\n";
    }
    std::cout << "mixing samples and pmfs written under " << cfg.output_dir << "\n";
    return 0;
}

int cmd_var(const CommonOpts& opts, std::vector<double> alphas, std::vector<std::size_t> sizes,
            const std::string& dist, std::vector<std::string> tags) {
    const RunConfig cfg = load_config(opts);
    if (alphas.empty()) alphas = cfg.alphas;
    if (sizes.empty()) sizes = cfg.portfolio_sizes;
    if (tags.empty()) tags = kAllTags;
    if (dist != "nonparam" && dist != "beta")
        throw std::runtime_error("--dist must be nonparam or beta");

    std::cout << "model   dist       d       alpha   var_count   var_loss\n";
    for (const std::string& tag : tags) {
        parse_model_tag(tag);  // validates
        const fs::path mpath = fs::path(cfg.output_dir) / "mixing" / (tag + ".csv");
        if (!fs::exists(mpath))
            throw std::runtime_error("mixing sample " + mpath.string() +
                                     " not found; run `mixture` (or `run`) first");
        const std::vector<double> q = load_mixing_sample(mpath);
        const MomentVector moments = sample_moments(q, 2);
        for (const std::size_t d : sizes) {
            CountDistribution count_dist;
            if (dist == "beta") {
                count_dist = beta_binomial_pmf(beta_fit_moments(moments[1], moments[2]), d);
            } else {
                count_dist = empirical_count_pmf(q, d);
            }
            for (const double alpha : alphas) {
                const std::size_t v = var_alpha(count_dist, alpha);
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%-8s%-11s%-8zu%-8g%-12zu%-12.6g", tag.c_str(),
                              dist.c_str(), d, alpha, v, var_alpha_loss(count_dist, alpha));
                std::cout << buf << "\n";
            }
        }
    }
    return 0;
}

int cmd_export_pmf(const CommonOpts& opts, const std::string& out_file, const std::string& tag,
                   const std::string& dist, std::size_t d, double a, double b) {
    CountDistribution count_dist;
    if (a > 0.0 || b > 0.0) {
        if (!(a > 0.0 && b > 0.0)) throw std::runtime_error("--a and --b must both be positive");
        count_dist = beta_binomial_pmf(BetaParams{a, b}, d);
    } else {
        if (opts.config_path.empty())
            throw std::runtime_error("pass --config with --model, or direct --a/--b parameters");
        const RunConfig cfg = load_config(opts);
        const fs::path mpath = fs::path(cfg.output_dir) / "mixing" / (tag + ".csv");
        if (!fs::exists(mpath))
            throw std::runtime_error("mixing sample " + mpath.string() +
                                     " not found; run `mixture` (or `run`) first");
        const std::vector<double> q = load_mixing_sample(mpath);
        if (dist == "beta") {
            const MomentVector moments = sample_moments(q, 2);
            count_dist = beta_binomial_pmf(beta_fit_moments(moments[1], moments[2]), d);
        } else if (dist == "nonparam") {
            count_dist = empirical_count_pmf(q, d);
        } else {
            throw std::runtime_error("--dist must be nonparam or beta");
        }
    }
    export_pmf(count_dist, out_file);
    std::cout << "wrote pmf with " << count_dist.d + 1 << " rows to " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint default probability and portfolio VaR from classifier-based "
                 "Bernoulli mixtures"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic covariate CSV");
    std::string synth_out = "credit.csv";
    std::size_t synth_rows = 30000;
    std::uint64_t synth_seed = 6;
    synth->add_option("--out", synth_out, "output CSV path")->required();
    synth->add_option("--rows", synth_rows, "number of rows");
    synth->add_option("--seed", synth_seed, "generator seed");

    // run
    auto* run = app.add_subcommand("run", "execute the full pipeline");
    CommonOpts run_opts;
    add_common(run, run_opts);

    // fit
    auto* fit = app.add_subcommand("fit", "fit one model and persist it");
    CommonOpts fit_opts;
    std::string fit_tag;
    add_common(fit, fit_opts);
    fit->add_option("--model", fit_tag, "model tag: lr|rf|ab|knn")->required();

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "fit and select calibration maps");
    CommonOpts cal_opts;
    add_common(calibrate, cal_opts);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "classification metrics on the test rows");
    CommonOpts eval_opts;
    add_common(evaluate, eval_opts);

    // mixture
    auto* mixture = app.add_subcommand("mixture", "mixing samples, moments, beta fits, pmfs");
    CommonOpts mix_opts;
    add_common(mixture, mix_opts);

    // var
    auto* var = app.add_subcommand("var", "value at risk from persisted mixing samples");
    CommonOpts var_opts;
    std::vector<double> var_alphas;
    std::vector<std::size_t> var_sizes;
    std::string var_dist = "beta";
    std::vector<std::string> var_tags;
    add_common(var, var_opts);
    var->add_option("--alpha", var_alphas, "confidence levels (default: config alphas)");
    var->add_option("--d", var_sizes, "portfolio sizes (default: config sizes)");
    var->add_option("--dist", var_dist, "distribution: nonparam|beta (default beta)");
    var->add_option("--model", var_tags, "model tags (default: all)");

    // export-pmf
    auto* export_cmd = app.add_subcommand("export-pmf", "write one pmf as CSV");
    CommonOpts exp_opts;
    std::string exp_out, exp_tag = "lr", exp_dist = "beta";
    std::size_t exp_d = 25;
    double exp_a = 0.0, exp_b = 0.0;
    // --out here names the CSV to write, so the run-directory override is skipped
    add_common(export_cmd, exp_opts, /*config_required=*/false, /*with_out_override=*/false);
    export_cmd->add_option("--out", exp_out, "output CSV path")->required();
    export_cmd->add_option("--model", exp_tag, "model tag (with --config)");
    export_cmd->add_option("--dist", exp_dist, "nonparam|beta");
    export_cmd->add_option("--d", exp_d, "portfolio size");
    export_cmd->add_option("--a", exp_a, "beta parameter a (direct mode)");
    export_cmd->add_option("--b", exp_b, "beta parameter b (direct mode)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_out, synth_rows, synth_seed);
        if (run->parsed()) return cmd_run(run_opts);
        if (fit->parsed()) return cmd_fit(fit_opts, fit_tag);
        if (calibrate->parsed()) return cmd_calibrate(cal_opts);
        if (evaluate->parsed()) return cmd_evaluate(eval_opts);
        if (mixture->parsed()) return cmd_mixture(mix_opts);
        if (var->parsed()) return cmd_var(var_opts, var_alphas, var_sizes, var_dist, var_tags);
        if (export_cmd->parsed())
            return cmd_export_pmf(exp_opts, exp_out, exp_tag, exp_dist, exp_d, exp_a, exp_b);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
