#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "bernmix/dataset.hpp"
#include "bernmix/special_functions.hpp"

namespace bernmix {

namespace detail {

// Dense symmetric positive-definite solve via Cholesky, for the small
// (m+1) x (m+1) systems of the Newton step. Returns false if the matrix is
// not numerically positive definite.
inline bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                           std::vector<double>& x) {
    // factor A = L L^T in place (lower triangle)
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    // forward solve L z = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    // back solve L^T x = z
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
        x[ii] = s / a[ii * n + ii];
    }
    return true;
}

}  // namespace detail

// Ridge-penalized logistic regression. The coefficient vector stores the
// intercept first; the ridge penalty applies to the slopes only, so the
// fitted training mean of the predictions matches the observed default rate.
struct LogisticModel {
    std::vector<double> beta;  // size n_features + 1, intercept first
    double ridge_lambda = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double gradient_sup_norm = std::numeric_limits<double>::infinity();

    std::size_t n_features() const {
        return beta.empty() ? 0 : beta.size() - 1;
    }

    double decision(std::span<const double> x) const {
        if (x.size() + 1 != beta.size())
            throw std::invalid_argument("LogisticModel: feature count mismatch");
        double z = beta[0];
        for (std::size_t j = 0; j < x.size(); ++j) z += beta[j + 1] * x[j];
        return z;
    }

    double predict(std::span<const double> x) const { return sigmoid(decision(x)); }
};

// Newton / iteratively-reweighted least squares. Convergence is declared on
// the per-row scaled gradient sup-norm; a step-halving guard keeps the
// penalized log-likelihood monotone.
inline LogisticModel logistic_fit(const LabeledSample& train, double ridge_lambda = 1e-6,
                                  double tol = 1e-8, std::size_t max_iter = 100) {
    if (train.n_rows == 0) throw std::invalid_argument("logistic_fit: empty sample");
    if (!(ridge_lambda >= 0.0)) throw std::invalid_argument("logistic_fit: negative ridge");
    for (const double v : train.features)
        if (!std::isfinite(v)) throw std::invalid_argument("logistic_fit: non-finite feature");

    const std::size_t n = train.n_rows;
    const std::size_t p = train.n_features + 1;

    LogisticModel model;
    model.beta.assign(p, 0.0);
    model.ridge_lambda = ridge_lambda;

    std::vector<double> q(n), g(p), h(p * p), step(p), candidate(p);

    const auto penalized_ll = [&](const std::vector<double>& beta) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = train.row(i);
            double z = beta[0];
            for (std::size_t j = 0; j < x.size(); ++j) z += beta[j + 1] * x[j];
            ll += train.labels[i] * z - log1pexp(z);
        }
        double pen = 0.0;
        for (std::size_t j = 1; j < p; ++j) pen += beta[j] * beta[j];
        return ll - 0.5 * ridge_lambda * pen;
    };

    double ll = penalized_ll(model.beta);

    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        // gradient and Hessian of the penalized log-likelihood
        std::fill(g.begin(), g.end(), 0.0);
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = train.row(i);
            q[i] = sigmoid(model.decision(x));
            const double r = train.labels[i] - q[i];
            const double w = q[i] * (1.0 - q[i]);
            g[0] += r;
            h[0] += w;
            for (std::size_t j = 0; j < x.size(); ++j) {
                g[j + 1] += r * x[j];
                h[(j + 1) * p] += w * x[j];
                for (std::size_t k = 0; k <= j; ++k)
                    h[(j + 1) * p + (k + 1)] += w * x[j] * x[k];
            }
        }
        for (std::size_t j = 1; j < p; ++j) {
            g[j] -= ridge_lambda * model.beta[j];
            h[j * p + j] += ridge_lambda;
        }
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j + 1; k < p; ++k) h[j * p + k] = h[k * p + j];

        double sup = 0.0;
        for (const double v : g) sup = std::max(sup, std::fabs(v));
        model.gradient_sup_norm = sup / static_cast<double>(n);
        model.iterations = iter - 1;
        if (model.gradient_sup_norm <= tol) {
            model.converged = true;
            return model;
        }

        // Newton direction, with diagonal jitter if W degenerates
        double trace = 0.0;
        for (std::size_t j = 0; j < p; ++j) trace += h[j * p + j];
        double jitter = 0.0;
        bool solved = false;
        for (int attempt = 0; attempt < 12 && !solved; ++attempt) {
            std::vector<double> hj = h;
            if (jitter > 0.0)
                for (std::size_t j = 0; j < p; ++j) hj[j * p + j] += jitter;
            solved = detail::cholesky_solve(std::move(hj), g, p, step);
            jitter = jitter == 0.0 ? 1e-12 * std::max(trace, 1.0) : jitter * 10.0;
        }
        if (!solved) {
            model.converged = false;
            return model;  // Hessian numerically singular beyond repair
        }

        // step halving: accept the first candidate that does not decrease
        // the penalized log-likelihood
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving) {
            for (std::size_t j = 0; j < p; ++j)
                candidate[j] = model.beta[j] + scale * step[j];
            const double cand_ll = penalized_ll(candidate);
            if (std::isfinite(cand_ll) && cand_ll >= ll - 1e-12) {
                model.beta = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            model.converged = false;
            return model;
        }
        double beta_sup = 0.0;
        for (const double b : model.beta) beta_sup = std::max(beta_sup, std::fabs(b));
        if (beta_sup > 1e8) {
            model.converged = false;  // drifting to infinity (separable data)
            model.iterations = iter;
            return model;
        }
    }
    model.iterations = max_iter;
    model.converged = false;
    return model;
}

}  // namespace bernmix
