#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bernmix/calibration.hpp"
#include "bernmix/classifier.hpp"
#include "bernmix/config.hpp"
#include "bernmix/metrics.hpp"
#include "bernmix/mixture.hpp"

namespace bernmix {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

struct ModelMetricsReport {
    ConfusionMatrix confusion;
    MetricValue precision_pos, recall_pos, f1_pos;
    WeightedPrf weighted;
    double auc = 0.0;
};

struct ModelCalibrationReport {
    CalibrationMethod method = CalibrationMethod::none;
    double platt_ece = 0.0;
    double isotonic_ece = 0.0;
    double chosen_ece = 0.0;  // ECE of the selected map (raw ECE when method is none)
};

struct ModelMixtureReport {
    double p = 0.0;    // first cross moment of the mixing sample
    double pi2 = 0.0;  // second cross moment
    double rho = 0.0;  // implied default correlation
    BetaParams beta;   // method-of-moments beta fit
    double beta_p = 0.0;
    double beta_rho = 0.0;
    std::size_t kl_d = 0;  // portfolio size at which KL was evaluated
    double kl = 0.0;       // nonparametric || beta-binomial
    KsResult ks;
};

struct ModelReport {
    std::string tag;
    ModelMetricsReport metrics;
    ModelCalibrationReport calibration;
    ModelMixtureReport mixture;
};

struct VarEntry {
    std::string model_tag;
    CountDistribution::Source source = CountDistribution::Source::beta_binomial;
    std::size_t d = 0;
    double alpha = 0.0;
    std::size_t var_count = 0;
    double var_loss = 0.0;
};

struct RunReport {
    RunConfig config;
    std::size_t n_rows_total = 0, n_train = 0, n_test = 0;
    std::size_t n_calibration = 0, n_validation = 0;
    double train_positive_rate = 0.0, test_positive_rate = 0.0;
    std::vector<ModelReport> models;  // in pipeline order: lr, rf, ab, knn
    std::vector<VarEntry> var_table;

    const ModelReport& model(const std::string& tag) const {
        for (const auto& m : models)
            if (m.tag == tag) return m;
        throw std::out_of_range("RunReport: no model with tag '" + tag + "'");
    }

    const VarEntry* find_var(const std::string& tag, CountDistribution::Source source,
                             std::size_t d, double alpha) const {
        for (const auto& e : var_table)
            if (e.model_tag == tag && e.source == source && e.d == d && e.alpha == alpha)
                return &e;
        return nullptr;
    }

    const VarEntry& var(const std::string& tag, CountDistribution::Source source, std::size_t d,
                        double alpha) const {
        const VarEntry* e = find_var(tag, source, d, alpha);
        if (e == nullptr) throw std::out_of_range("RunReport: no matching VaR entry");
        return *e;
    }
};

// ---------------------------------------------------------------------------
// Machine-readable key-value report. One key per line, fixed emission order,
// doubles in %.17g: two runs with the same config produce byte-identical
// files.
// ---------------------------------------------------------------------------

inline void write_report_kv(std::ostream& out, const RunReport& r) {
    const auto put = [&](const std::string& key, const std::string& value) {
        out << key << ' ' << value << "\n";
    };
    const auto putd = [&](const std::string& key, double v) { put(key, detail::fmt_double(v)); };
    const auto putu = [&](const std::string& key, std::size_t v) {
        put(key, std::to_string(v));
    };

    out << "bernmix-report 1\n";
    put("config.data_path", r.config.data_path);
    putd("config.split.train_fraction", r.config.split.train_fraction);
    putd("config.split.calibration_fraction", r.config.split.calibration_fraction);
    putu("config.split.seed", r.config.split.seed);
    putu("config.split.stratified", r.config.split.stratified ? 1 : 0);
    putd("config.logistic.ridge_lambda", r.config.logistic.ridge_lambda);
    putd("config.logistic.tol", r.config.logistic.tol);
    putu("config.logistic.max_iter", r.config.logistic.max_iter);
    putu("config.knn.k", r.config.knn.k);
    putu("config.forest.n_trees", r.config.forest.n_trees);
    putu("config.forest.max_depth", r.config.forest.max_depth);
    putu("config.forest.min_leaf", r.config.forest.min_leaf);
    putu("config.forest.m_try", r.config.forest.m_try);
    putu("config.adaboost.n_rounds", r.config.adaboost.n_rounds);
    putu("config.ece_bins", r.config.ece_bins);
    putd("config.decision_threshold", r.config.decision_threshold);
    for (std::size_t i = 0; i < r.config.portfolio_sizes.size(); ++i)
        putu("config.portfolio_sizes." + std::to_string(i), r.config.portfolio_sizes[i]);
    for (std::size_t i = 0; i < r.config.alphas.size(); ++i)
        putd("config.alphas." + std::to_string(i), r.config.alphas[i]);
    putu("config.nonparametric_max_d", r.config.nonparametric_max_d);

    putu("rows.total", r.n_rows_total);
    putu("rows.train", r.n_train);
    putu("rows.test", r.n_test);
    putu("rows.calibration", r.n_calibration);
    putu("rows.validation", r.n_validation);
    putd("rows.train_positive_rate", r.train_positive_rate);
    putd("rows.test_positive_rate", r.test_positive_rate);

    for (const auto& m : r.models) {
        const std::string base = "model." + m.tag + ".";
        putu(base + "confusion.tp", m.metrics.confusion.tp);
        putu(base + "confusion.fp", m.metrics.confusion.fp);
        putu(base + "confusion.tn", m.metrics.confusion.tn);
        putu(base + "confusion.fn", m.metrics.confusion.fn);
        putd(base + "precision", m.metrics.precision_pos.value);
        putu(base + "precision.defined", m.metrics.precision_pos.defined ? 1 : 0);
        putd(base + "recall", m.metrics.recall_pos.value);
        putu(base + "recall.defined", m.metrics.recall_pos.defined ? 1 : 0);
        putd(base + "f1", m.metrics.f1_pos.value);
        putu(base + "f1.defined", m.metrics.f1_pos.defined ? 1 : 0);
        putd(base + "weighted_precision", m.metrics.weighted.precision);
        putd(base + "weighted_recall", m.metrics.weighted.recall);
        putd(base + "weighted_f1", m.metrics.weighted.f1);
        putd(base + "auc", m.metrics.auc);
        put(base + "calibration.method", to_string(m.calibration.method));
        putd(base + "calibration.platt_ece", m.calibration.platt_ece);
        putd(base + "calibration.isotonic_ece", m.calibration.isotonic_ece);
        putd(base + "calibration.chosen_ece", m.calibration.chosen_ece);
        putd(base + "mixture.p", m.mixture.p);
        putd(base + "mixture.pi2", m.mixture.pi2);
        putd(base + "mixture.rho", m.mixture.rho);
        putd(base + "mixture.beta_a", m.mixture.beta.a);
        putd(base + "mixture.beta_b", m.mixture.beta.b);
        putd(base + "mixture.beta_p", m.mixture.beta_p);
        putd(base + "mixture.beta_rho", m.mixture.beta_rho);
        putu(base + "mixture.kl_d", m.mixture.kl_d);
        putd(base + "mixture.kl", m.mixture.kl);
        putd(base + "mixture.ks_statistic", m.mixture.ks.statistic);
        putd(base + "mixture.ks_p_value", m.mixture.ks.p_value);
    }

    for (const auto& e : r.var_table) {
        std::string key = "var." + e.model_tag + "." + to_string(e.source) + ".d" +
                          std::to_string(e.d) + ".alpha" + detail::fmt_short(e.alpha);
        putu(key + ".count", e.var_count);
        putd(key + ".loss", e.var_loss);
    }
}

// ---------------------------------------------------------------------------
// Human-readable aligned tables
// ---------------------------------------------------------------------------

inline void write_report_text(std::ostream& out, const RunReport& r) {
    const auto line = [&](char c) { out << std::string(72, c) << "\n"; };
    out << std::left;

    line('=');
    out << "Joint default risk report\n";
    line('=');
    out << "data file          " << r.config.data_path << "\n";
    out << "rows               " << r.n_rows_total << " total, " << r.n_train << " train, "
        << r.n_test << " test\n";
    out << "calibration rows   " << r.n_calibration << " fit, " << r.n_validation
        << " validation\n";
    out << "default rate       " << detail::fmt_short(r.train_positive_rate) << " train, "
        << detail::fmt_short(r.test_positive_rate) << " test\n";
    out << "master seed        " << r.config.split.seed << "\n\n";

    out << "Classification metrics (held-out test rows, threshold "
        << detail::fmt_short(r.config.decision_threshold) << ")\n";
    line('-');
    out << std::setw(8) << "model" << std::setw(12) << "precision" << std::setw(12) << "recall"
        << std::setw(12) << "f1" << std::setw(12) << "auc" << "\n";
    for (const auto& m : r.models) {
        out << std::setw(8) << m.tag << std::setw(12)
            << detail::fmt_short(m.metrics.precision_pos.value) << std::setw(12)
            << detail::fmt_short(m.metrics.recall_pos.value) << std::setw(12)
            << detail::fmt_short(m.metrics.f1_pos.value) << std::setw(12)
            << detail::fmt_short(m.metrics.auc) << "\n";
    }
    out << "\nCalibration (selected by validation ECE; lr stays raw)\n";
    line('-');
    out << std::setw(8) << "model" << std::setw(12) << "method" << std::setw(14) << "platt_ece"
        << std::setw(14) << "isotonic_ece" << std::setw(14) << "chosen_ece" << "\n";
    for (const auto& m : r.models) {
        out << std::setw(8) << m.tag << std::setw(12) << to_string(m.calibration.method)
            << std::setw(14) << detail::fmt_short(m.calibration.platt_ece) << std::setw(14)
            << detail::fmt_short(m.calibration.isotonic_ece) << std::setw(14)
            << detail::fmt_short(m.calibration.chosen_ece) << "\n";
    }
    out << "\nMixing-sample moments and beta fit\n";
    line('-');
    out << std::setw(8) << "model" << std::setw(11) << "p" << std::setw(11) << "pi2"
        << std::setw(11) << "rho" << std::setw(11) << "a" << std::setw(11) << "b" << std::setw(11)
        << "kl" << std::setw(12) << "ks_stat" << std::setw(12) << "ks_p" << "\n";
    for (const auto& m : r.models) {
        out << std::setw(8) << m.tag << std::setw(11) << detail::fmt_short(m.mixture.p)
            << std::setw(11) << detail::fmt_short(m.mixture.pi2) << std::setw(11)
            << detail::fmt_short(m.mixture.rho) << std::setw(11)
            << detail::fmt_short(m.mixture.beta.a) << std::setw(11)
            << detail::fmt_short(m.mixture.beta.b) << std::setw(11)
            << detail::fmt_short(m.mixture.kl) << std::setw(12)
            << detail::fmt_short(m.mixture.ks.statistic) << std::setw(12)
            << detail::fmt_short(m.mixture.ks.p_value) << "\n";
    }
    out << "\nValue at risk\n";
    line('-');
    out << std::setw(8) << "model" << std::setw(10) << "source" << std::setw(8) << "d"
        << std::setw(8) << "alpha" << std::setw(12) << "var_count" << std::setw(12) << "var_loss"
        << "\n";
    for (const auto& e : r.var_table) {
        out << std::setw(8) << e.model_tag << std::setw(10) << to_string(e.source) << std::setw(8)
            << e.d << std::setw(8) << detail::fmt_short(e.alpha) << std::setw(12) << e.var_count
            << std::setw(12) << detail::fmt_short(e.var_loss) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Qualitative orderings between the linear baseline and the ML models
// ---------------------------------------------------------------------------

struct Comparison {
    std::string name;
    double lhs = 0.0, rhs = 0.0;
    char relation = '=';  // '<', '=', '>'
};

struct ComparisonSummary {
    std::string best_kl_model;  // ML model with the smallest KL distance
    std::vector<Comparison> entries;
};

namespace detail {

inline char relation_of(double lhs, double rhs) {
    if (lhs < rhs) return '<';
    if (lhs > rhs) return '>';
    return '=';
}

}  // namespace detail

// The orderings the report asserts qualitatively: dispersion (rho),
// discrimination (AUC) and marginal rate per model against the linear
// baseline; large-portfolio VaR of each ML model against the baseline; and
// the parametric-vs-nonparametric VaR gap per model on the small portfolio.
inline ComparisonSummary compare_models(const RunReport& r) {
    ComparisonSummary summary;
    const ModelReport& lr = r.model("lr");

    double best_kl = std::numeric_limits<double>::infinity();
    for (const auto& m : r.models) {
        if (m.tag == "lr") continue;
        if (m.mixture.kl < best_kl) {
            best_kl = m.mixture.kl;
            summary.best_kl_model = m.tag;
        }
    }

    for (const auto& m : r.models) {
        if (m.tag == "lr") continue;
        summary.entries.push_back({"rho." + m.tag + "_vs_lr", m.mixture.rho, lr.mixture.rho,
                                   detail::relation_of(m.mixture.rho, lr.mixture.rho)});
        summary.entries.push_back({"auc." + m.tag + "_vs_lr", m.metrics.auc, lr.metrics.auc,
                                   detail::relation_of(m.metrics.auc, lr.metrics.auc)});
        summary.entries.push_back({"p.lr_vs_" + m.tag, lr.mixture.p, m.mixture.p,
                                   detail::relation_of(lr.mixture.p, m.mixture.p)});
    }

    if (!r.config.portfolio_sizes.empty()) {
        const std::size_t d_large = *std::max_element(r.config.portfolio_sizes.begin(),
                                                      r.config.portfolio_sizes.end());
        const std::size_t d_small = *std::min_element(r.config.portfolio_sizes.begin(),
                                                      r.config.portfolio_sizes.end());
        for (const auto& m : r.models) {
            if (m.tag == "lr") continue;
            for (const double alpha : r.config.alphas) {
                const VarEntry* ml =
                    r.find_var(m.tag, CountDistribution::Source::beta_binomial, d_large, alpha);
                const VarEntry* base =
                    r.find_var("lr", CountDistribution::Source::beta_binomial, d_large, alpha);
                if (ml == nullptr || base == nullptr) continue;  // degenerate fit: no beta row
                summary.entries.push_back(
                    {"var." + m.tag + "_vs_lr.beta.d" + std::to_string(d_large) + ".alpha" +
                         detail::fmt_short(alpha),
                     static_cast<double>(ml->var_count), static_cast<double>(base->var_count),
                     detail::relation_of(static_cast<double>(ml->var_count),
                                         static_cast<double>(base->var_count))});
            }
        }
        if (d_small <= r.config.nonparametric_max_d) {
            for (const auto& m : r.models) {
                for (const double alpha : r.config.alphas) {
                    const VarEntry* beta =
                        r.find_var(m.tag, CountDistribution::Source::beta_binomial, d_small, alpha);
                    const VarEntry* nonpar =
                        r.find_var(m.tag, CountDistribution::Source::nonparametric, d_small, alpha);
                    if (beta == nullptr || nonpar == nullptr) continue;
                    summary.entries.push_back(
                        {"var." + m.tag + ".beta_vs_nonparam.d" + std::to_string(d_small) +
                             ".alpha" + detail::fmt_short(alpha),
                         static_cast<double>(beta->var_count),
                         static_cast<double>(nonpar->var_count),
                         detail::relation_of(static_cast<double>(beta->var_count),
                                             static_cast<double>(nonpar->var_count))});
                }
            }
        }
    }
    return summary;
}

inline void write_comparisons(std::ostream& out, const ComparisonSummary& s) {
    out << "best_kl_model " << s.best_kl_model << "\n";
    for (const auto& c : s.entries) {
        out << c.name << ' ' << detail::fmt_double(c.lhs) << ' ' << c.relation << ' '
            << detail::fmt_double(c.rhs) << "\n";
    }
}

// ---------------------------------------------------------------------------
// CSV artifacts
// ---------------------------------------------------------------------------

// "k,probability" rows over the full support, probabilities in %.17g.
inline void export_pmf(const CountDistribution& dist, const std::filesystem::path& path) {
    if (path.empty()) throw std::invalid_argument("export_pmf: empty path");
    if (dist.pmf.size() != dist.d + 1)
        throw std::invalid_argument("export_pmf: malformed distribution");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_pmf: cannot write " + path.string());
    out << "k,probability\n";
    for (std::size_t k = 0; k <= dist.d; ++k)
        out << k << ',' << detail::fmt_double(dist.pmf[k]) << "\n";
    if (!out) throw std::runtime_error("export_pmf: failed while writing " + path.string());
}

inline void export_mixing_sample(const MixingSample& sample, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_mixing_sample: cannot write " + path.string());
    out << "q\n";
    for (const double v : sample.q) out << detail::fmt_double(v) << "\n";
    if (!out)
        throw std::runtime_error("export_mixing_sample: failed while writing " + path.string());
}

inline std::vector<double> load_mixing_sample(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mixing sample: " + path.string());
    std::string header;
    if (!std::getline(in, header) || header != "q")
        throw std::runtime_error("mixing sample file has an unexpected header: " + path.string());
    std::vector<double> q;
    double v = 0.0;
    while (in >> v) q.push_back(v);
    if (q.empty()) throw std::runtime_error("mixing sample file is empty: " + path.string());
    return q;
}

// Square matrix with a leading name column and name header row.
inline void export_named_matrix(const std::vector<std::string>& names,
                                const std::vector<double>& values,
                                const std::filesystem::path& path) {
    const std::size_t m = names.size();
    if (values.size() != m * m)
        throw std::invalid_argument("export_named_matrix: size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_named_matrix: cannot write " + path.string());
    out << "name";
    for (const auto& n : names) out << ',' << n;
    out << "\n";
    for (std::size_t i = 0; i < m; ++i) {
        out << names[i];
        for (std::size_t j = 0; j < m; ++j) out << ',' << detail::fmt_double(values[i * m + j]);
        out << "\n";
    }
    if (!out)
        throw std::runtime_error("export_named_matrix: failed while writing " + path.string());
}

}  // namespace bernmix
