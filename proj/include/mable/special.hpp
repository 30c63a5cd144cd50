#ifndef MABLE_SPECIAL_HPP
#define MABLE_SPECIAL_HPP

#include <cmath>
#include <limits>

#include "mable/error.hpp"

namespace mable {

/// log C(n, k) through the log-gamma function.
inline double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

namespace detail {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
inline double incomplete_beta_fraction(double a, double b, double x) {
    constexpr int max_iter = 20000;
    constexpr double eps = 1e-15;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int k = 1; k <= max_iter; ++k) {
        const double k2 = 2.0 * k;
        double aa = k * (b - k) * x / ((qam + k2) * (a + k2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + k) * (qab + k) * x / ((a + k2) * (qap + k2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
    detail::require(a > 0.0 && b > 0.0, "incomplete_beta: shape parameters must be positive");
    detail::require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::incomplete_beta_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::incomplete_beta_fraction(b, a, 1.0 - x) / b;
}

}  // namespace mable

#endif  // MABLE_SPECIAL_HPP
