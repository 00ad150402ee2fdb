#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bernmix {

// Numerically safe logistic function and its log-partition softplus.
inline double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double log1pexp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

inline double log_binomial(double n, double k) {
    if (k < 0.0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Continued fraction for the regularized incomplete beta, evaluated with
// the modified Lentz algorithm. Converges fast for x < (a+1)/(a+b+2).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 3e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace detail

// I_x(a, b): regularized incomplete beta function, i.e. the CDF of the
// Beta(a, b) distribution at x.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("regularized_incomplete_beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double beta_cdf(double x, double a, double b) {
    return regularized_incomplete_beta(a, b, x);
}

// Survival function Q(x) = P(K > x) of the Kolmogorov distribution, the
// asymptotic law of sqrt(n) * D_n under the null. Two complementary series
// are used: the theta-function form for small x (where the alternating
// series converges slowly) and the alternating series otherwise.
inline double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        // Q(x) = 1 - (sqrt(2*pi)/x) * sum_{j>=1} exp(-(2j-1)^2 pi^2 / (8 x^2))
        const double t = std::exp(-1.23370055013616983 / (x * x));  // pi^2/8
        const double t2 = t * t;
        const double t8 = t2 * t2 * t2 * t2;
        // terms are t^{(2j-1)^2}: t, t^9, t^25, t^49
        const double series = t * (1.0 + t8 * (1.0 + t8 * t8 * (1.0 + t8 * t8 * t8)));
        const double cdf = 2.506628274631000502 / x * series;  // sqrt(2*pi)
        return 1.0 - cdf;
    }
    // Q(x) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2)
    const double v = -2.0 * x * x;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(v * j * j);
        sum += sign * term;
        if (term < 1e-18) break;
        sign = -sign;
    }
    const double q = 2.0 * sum;
    if (q < 0.0) return 0.0;
    if (q > 1.0) return 1.0;
    return q;
}

}  // namespace bernmix
