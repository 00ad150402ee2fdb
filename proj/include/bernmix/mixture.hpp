#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bernmix/special_functions.hpp"

namespace bernmix {

// ---------------------------------------------------------------------------
// Moments of the mixing variable
// ---------------------------------------------------------------------------

// pi[k-1] holds the k-th raw moment E[Q^k] of the mixing variable,
// estimated from a sample of individual default probabilities.
struct MomentVector {
    std::vector<double> pi;
    std::size_t n_source = 0;

    double operator[](std::size_t k) const {  // 1-based: moment order k
        if (k == 0) return 1.0;
        if (k > pi.size()) throw std::out_of_range("MomentVector: order exceeds stored moments");
        return pi[k - 1];
    }
    std::size_t max_order() const { return pi.size(); }
};

inline MomentVector sample_moments(std::span<const double> q, std::size_t max_order) {
    if (q.empty()) throw std::invalid_argument("sample_moments: empty sample");
    if (max_order == 0) throw std::invalid_argument("sample_moments: order must be positive");
    for (const double v : q)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("sample_moments: value outside [0,1]");
    MomentVector m;
    m.n_source = q.size();
    m.pi.assign(max_order, 0.0);
    std::vector<double> power(q.begin(), q.end());
    for (std::size_t k = 1; k <= max_order; ++k) {
        double sum = 0.0;
        for (double& p : power) sum += p;
        m.pi[k - 1] = sum / static_cast<double>(q.size());
        if (k < max_order)
            for (std::size_t i = 0; i < power.size(); ++i) power[i] *= q[i];
    }
    return m;
}

// Pairwise default correlation implied by the first two moments:
// rho = (pi2 - p^2) / (p (1 - p)).
inline double default_correlation(double p, double pi2) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("default_correlation: p must lie strictly inside (0,1)");
    if (pi2 < p * p || pi2 > p)
        throw std::invalid_argument("default_correlation: pi2 must lie in [p^2, p]");
    return (pi2 - p * p) / (p * (1.0 - p));
}

// ---------------------------------------------------------------------------
// Count distribution of the number of defaults
// ---------------------------------------------------------------------------

struct CountDistribution {
    enum class Source { nonparametric, moments, beta_binomial };

    std::size_t d = 0;  // portfolio size; support is {0, ..., d}
    Source source = Source::nonparametric;
    std::vector<double> pmf;  // size d + 1, sums to 1
};

inline const char* to_string(CountDistribution::Source s) {
    switch (s) {
        case CountDistribution::Source::nonparametric: return "nonparam";
        case CountDistribution::Source::moments: return "moments";
        case CountDistribution::Source::beta_binomial: return "beta";
    }
    throw std::logic_error("to_string: unknown pmf source");
}

namespace detail {

// Clamp tiny negatives, verify the mass, renormalize to exactly one.
inline void finalize_pmf(std::vector<double>& pmf, double negative_tol, double sum_tol,
                         const char* who) {
    for (double& v : pmf) {
        if (v < 0.0) {
            if (v < -negative_tol)
                throw std::runtime_error(std::string(who) +
                                         ": probability mass below -tolerance (cancellation)");
            v = 0.0;
        }
    }
    double sum = 0.0;
    for (const double v : pmf) sum += v;
    if (std::fabs(sum - 1.0) > sum_tol)
        throw std::runtime_error(std::string(who) + ": probability mass does not sum to one");
    for (double& v : pmf) v /= sum;
}

}  // namespace detail

// Non-parametric route: average the conditional binomial pmf over the
// mixing sample,
//   P(S = k) = (1/n) sum_i C(d,k) q_i^k (1-q_i)^(d-k),
// with every term computed in log space so it stays finite for any d.
inline CountDistribution empirical_count_pmf(std::span<const double> q, std::size_t d) {
    if (q.empty()) throw std::invalid_argument("empirical_count_pmf: empty sample");
    if (d == 0) throw std::invalid_argument("empirical_count_pmf: d must be positive");
    for (const double v : q)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("empirical_count_pmf: value outside [0,1]");

    std::vector<double> log_choose(d + 1);
    for (std::size_t k = 0; k <= d; ++k)
        log_choose[k] = log_binomial(static_cast<double>(d), static_cast<double>(k));

    CountDistribution dist;
    dist.d = d;
    dist.source = CountDistribution::Source::nonparametric;
    dist.pmf.assign(d + 1, 0.0);

    std::size_t n_zero = 0, n_one = 0;
    for (const double qi : q) {
        if (qi == 0.0) {
            ++n_zero;  // degenerate obligor: never defaults
            continue;
        }
        if (qi == 1.0) {
            ++n_one;  // degenerate obligor: always defaults
            continue;
        }
        const double lq = std::log(qi);
        const double l1q = std::log1p(-qi);
        double k_lq = 0.0;
        for (std::size_t k = 0; k <= d; ++k) {
            dist.pmf[k] += std::exp(log_choose[k] + k_lq + static_cast<double>(d - k) * l1q);
            k_lq += lq;
        }
    }
    dist.pmf[0] += static_cast<double>(n_zero);
    dist.pmf[d] += static_cast<double>(n_one);
    for (double& v : dist.pmf) v /= static_cast<double>(q.size());

    detail::finalize_pmf(dist.pmf, 1e-12, 1e-10, "empirical_count_pmf");
    return dist;
}

// Moments route: express the pmf through the cross moments alone,
//   P(S = k) = sum_{i=0}^{d-k} (-1)^i  d! / (i! k! (d-k-i)!)  pi_{k+i}.
// The alternating sum is subject to catastrophic cancellation as d grows
// (the coefficients reach ~5e12 by d = 30), so the portfolio size is capped
// at 30 and the accumulation runs compensated in extended precision. For
// larger portfolios use the non-parametric route, which is algebraically
// identical when the moments come from the same sample.
inline CountDistribution count_pmf_from_moments(const MomentVector& moments, std::size_t d) {
    constexpr std::size_t cancellation_cap = 30;
    if (d == 0) throw std::invalid_argument("count_pmf_from_moments: d must be positive");
    if (d > cancellation_cap)
        throw std::invalid_argument(
            "count_pmf_from_moments: d exceeds the cancellation-safe cap of 30; "
            "use empirical_count_pmf for large portfolios");
    if (moments.max_order() < d)
        throw std::invalid_argument("count_pmf_from_moments: needs moments up to order d");

    CountDistribution dist;
    dist.d = d;
    dist.source = CountDistribution::Source::moments;
    dist.pmf.assign(d + 1, 0.0);

    // exact binomial table (all entries < 2^53, so exact in double)
    std::vector<std::vector<long double>> choose(d + 1, std::vector<long double>(d + 1, 0.0L));
    for (std::size_t n = 0; n <= d; ++n) {
        choose[n][0] = 1.0L;
        for (std::size_t k = 1; k <= n; ++k)
            choose[n][k] = choose[n - 1][k - 1] + (k <= n - 1 ? choose[n - 1][k] : 0.0L);
    }

    for (std::size_t k = 0; k <= d; ++k) {
        // Kahan-compensated alternating sum in long double
        long double acc = 0.0L, comp = 0.0L;
        for (std::size_t i = 0; i + k <= d; ++i) {
            const long double coeff = choose[d][k] * choose[d - k][i];
            const long double moment =
                (k + i == 0) ? 1.0L : static_cast<long double>(moments[k + i]);
            long double term = coeff * moment;
            if (i % 2 == 1) term = -term;
            const long double y = term - comp;
            const long double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        dist.pmf[k] = static_cast<double>(acc);
    }

    detail::finalize_pmf(dist.pmf, 1e-6, 1e-6, "count_pmf_from_moments");
    return dist;
}

// ---------------------------------------------------------------------------
// Beta mixing distribution and the beta-binomial count law
// ---------------------------------------------------------------------------

struct BetaParams {
    double a = 0.0;
    double b = 0.0;

    double mean() const { return a / (a + b); }
    double correlation() const { return 1.0 / (a + b + 1.0); }
    double cdf(double x) const { return regularized_incomplete_beta(a, b, x); }
};

// k-th raw moment of Beta(a, b): prod_{j=0}^{k-1} (a+j) / (a+b+j).
inline double beta_moment(const BetaParams& params, std::size_t k) {
    if (!(params.a > 0.0 && params.b > 0.0))
        throw std::invalid_argument("beta_moment: parameters must be positive");
    double m = 1.0;
    for (std::size_t j = 0; j < k; ++j)
        m *= (params.a + static_cast<double>(j)) / (params.a + params.b + static_cast<double>(j));
    return m;
}

// Method of moments on (p, rho): a+b = 1/rho - 1, a = p (a+b).
inline BetaParams beta_fit_from_correlation(double p, double rho) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("beta_fit: p must lie strictly inside (0,1)");
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument(
            "beta_fit: correlation must lie strictly inside (0,1); degenerate mixing "
            "samples admit no beta fit");
    const double ab = 1.0 / rho - 1.0;
    return BetaParams{p * ab, (1.0 - p) * ab};
}

// Method of moments on the first two cross moments (p, pi2).
inline BetaParams beta_fit_moments(double p, double pi2) {
    return beta_fit_from_correlation(p, default_correlation(p, pi2));
}

// Beta-binomial pmf: P(S = k) = C(d,k) B(a+k, b+d-k) / B(a,b), evaluated
// through log-gamma so it is stable for d in the thousands.
inline CountDistribution beta_binomial_pmf(const BetaParams& params, std::size_t d) {
    if (!(params.a > 0.0 && params.b > 0.0))
        throw std::invalid_argument("beta_binomial_pmf: parameters must be positive");
    if (d == 0) throw std::invalid_argument("beta_binomial_pmf: d must be positive");
    CountDistribution dist;
    dist.d = d;
    dist.source = CountDistribution::Source::beta_binomial;
    dist.pmf.assign(d + 1, 0.0);
    const double lb = log_beta(params.a, params.b);
    const auto dd = static_cast<double>(d);
    for (std::size_t k = 0; k <= d; ++k) {
        const auto kk = static_cast<double>(k);
        dist.pmf[k] =
            std::exp(log_binomial(dd, kk) + log_beta(params.a + kk, params.b + dd - kk) - lb);
    }
    detail::finalize_pmf(dist.pmf, 1e-12, 1e-10, "beta_binomial_pmf");
    return dist;
}

// ---------------------------------------------------------------------------
// Fit diagnostics
// ---------------------------------------------------------------------------

// Kullback-Leibler divergence D(P || Q) over a common support. Terms with
// P = 0 contribute nothing; any point with Q = 0 < P makes the divergence
// infinite, which is reported as +inf rather than an error.
inline double kl_divergence(const CountDistribution& p, const CountDistribution& q) {
    if (p.d != q.d) throw std::invalid_argument("kl_divergence: support mismatch");
    double kl = 0.0;
    for (std::size_t k = 0; k <= p.d; ++k) {
        if (p.pmf[k] == 0.0) continue;
        if (q.pmf[k] == 0.0) return std::numeric_limits<double>::infinity();
        kl += p.pmf[k] * std::log(p.pmf[k] / q.pmf[k]);
    }
    return kl;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

// One-sample Kolmogorov-Smirnov test of the mixing sample against the
// fitted beta law. D_n compares the empirical CDF from both sides at every
// sample point; the p-value uses the asymptotic Kolmogorov distribution of
// sqrt(n) D_n.
inline KsResult ks_test(std::span<const double> sample, const BetaParams& params) {
    if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double d_stat = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = params.cdf(x[i]);
        const double above = (static_cast<double>(i) + 1.0) / n - f;
        const double below = f - static_cast<double>(i) / n;
        d_stat = std::max({d_stat, above, below});
    }
    KsResult r;
    r.statistic = d_stat;
    r.p_value = kolmogorov_survival(std::sqrt(n) * d_stat);
    return r;
}

// ---------------------------------------------------------------------------
// Risk measures
// ---------------------------------------------------------------------------

inline double distribution_mean(const CountDistribution& dist) {
    double m = 0.0;
    for (std::size_t k = 0; k <= dist.d; ++k) m += static_cast<double>(k) * dist.pmf[k];
    return m;
}

inline double distribution_variance(const CountDistribution& dist) {
    const double m = distribution_mean(dist);
    double v = 0.0;
    for (std::size_t k = 0; k <= dist.d; ++k) {
        const double c = static_cast<double>(k) - m;
        v += c * c * dist.pmf[k];
    }
    return v;
}

// Value at risk of the default count: the generalized inverse CDF, i.e. the
// smallest k whose cumulative probability reaches alpha.
inline std::size_t var_alpha(const CountDistribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("var_alpha: alpha must lie strictly inside (0,1)");
    double cum = 0.0;
    for (std::size_t k = 0; k <= dist.d; ++k) {
        cum += dist.pmf[k];
        if (cum >= alpha) return k;
    }
    return dist.d;  // mass rounded a hair short of one
}

// The default fraction L = S / d: same probabilities on rescaled support.
struct LossDistribution {
    std::size_t d = 0;
    std::vector<double> support;  // k / d
    std::vector<double> pmf;
};

inline LossDistribution loss_fraction(const CountDistribution& dist) {
    LossDistribution loss;
    loss.d = dist.d;
    loss.pmf = dist.pmf;
    loss.support.resize(dist.d + 1);
    for (std::size_t k = 0; k <= dist.d; ++k)
        loss.support[k] = static_cast<double>(k) / static_cast<double>(dist.d);
    return loss;
}

// VaR of the loss fraction coincides with VaR of the count divided by d.
inline double var_alpha_loss(const CountDistribution& dist, double alpha) {
    return static_cast<double>(var_alpha(dist, alpha)) / static_cast<double>(dist.d);
}

}  // namespace bernmix
