#ifndef MABLE_COMPARATORS_HPP
#define MABLE_COMPARATORS_HPP

// Competing density estimators: one-sample parametric MLEs, the Gaussian
// kernel estimator with R's nrd0 bandwidth, and the kernel smoother of the
// empirical-likelihood weights under the density ratio model.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mable/error.hpp"
#include "mable/regressor.hpp"

namespace mable {

enum class ParametricFamily { normal, exponential };

struct ParametricMle {
    ParametricFamily family = ParametricFamily::normal;
    double location = 0.0;   // normal mean; unused for the exponential
    double scale = 1.0;      // normal standard deviation or exponential mean

    double density(double x) const {
        if (family == ParametricFamily::normal) {
            const double z = (x - location) / scale;
            return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
        }
        return x < 0.0 ? 0.0 : std::exp(-x / scale) / scale;
    }
};

inline ParametricMle parametric_mle(std::span<const double> x, ParametricFamily family) {
    const double n = static_cast<double>(x.size());
    const double mean = x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / n;
    if (family == ParametricFamily::normal) {
        if (x.size() < 2) throw DataError("normal MLE needs at least two observations");
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        if (!(sd > 0.0)) throw DataError("normal MLE: sample has zero variance");
        return {family, mean, sd};
    }
    if (x.empty()) throw DataError("exponential MLE needs at least one observation");
    for (double v : x)
        if (!(v > 0.0)) throw DataError("exponential MLE requires positive data");
    return {family, 0.0, mean};
}

struct KernelEstimate {
    std::vector<double> grid;
    double bandwidth = 0.0;
    std::vector<double> weights;   // one per observation, summing to one
    std::vector<double> values;
};

namespace detail {

// Sample quantile, R type 7 (linear interpolation of order statistics).
inline double quantile7(std::vector<double> sorted, double prob) {
    std::sort(sorted.begin(), sorted.end());
    const double h = (sorted.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

inline std::vector<double> kernel_smooth(std::span<const double> points,
                                         std::span<const double> weights,
                                         std::span<const double> grid, double h) {
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double z = (grid[g] - points[i]) / h;
            total += weights[i] * std::exp(-0.5 * z * z);
        }
        out[g] = norm * total;
    }
    return out;
}

}  // namespace detail

/// R's bw.nrd0: 0.9 min(sd, IQR/1.34) n^(-1/5) with its fallbacks.
inline double bandwidth_nrd0(std::span<const double> x) {
    if (x.size() < 2) throw DataError("nrd0 bandwidth needs at least two observations");
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double hi = std::sqrt(ss / (n - 1.0));
    const std::vector<double> copy(x.begin(), x.end());
    const double iqr = detail::quantile7(copy, 0.75) - detail::quantile7(copy, 0.25);
    double lo = std::min(hi, iqr / 1.34);
    if (!(lo > 0.0)) lo = hi;
    if (!(lo > 0.0)) lo = std::fabs(x[0]);
    if (!(lo > 0.0)) lo = 1.0;
    return 0.9 * lo * std::pow(n, -0.2);
}

/// Bandwidth given explicitly, or chosen by nrd0 when absent.
struct BandwidthRule {
    std::optional<double> fixed;

    double operator()(std::span<const double> x) const {
        if (fixed) {
            detail::require(*fixed > 0.0, "bandwidth must be positive");
            return *fixed;
        }
        return bandwidth_nrd0(x);
    }
};

inline KernelEstimate kde_one_sample(std::span<const double> x, std::span<const double> grid,
                                     BandwidthRule rule = {}) {
    if (x.size() < 2) throw DataError("kernel density estimate needs at least two observations");
    KernelEstimate est;
    est.grid.assign(grid.begin(), grid.end());
    est.bandwidth = rule(x);
    if (!(est.bandwidth > 0.0) || !std::isfinite(est.bandwidth))
        throw DataError("kernel bandwidth is degenerate");
    est.weights.assign(x.size(), 1.0 / x.size());
    est.values = detail::kernel_smooth(x, est.weights, grid, est.bandwidth);
    return est;
}

/// Empirical-likelihood weights q_i = 1/(n0 + n1 exp{alpha' r~(z_i)}), normalized.
inline std::vector<double> el_weights(std::span<const double> y0, std::span<const double> y1,
                                      const RegressorSpec& spec, const TiltCoefficients& alpha) {
    detail::check_alpha_size(spec, alpha);
    const double n0 = static_cast<double>(y0.size()), n1 = static_cast<double>(y1.size());
    std::vector<double> q;
    q.reserve(y0.size() + y1.size());
    auto add = [&](double z) {
        const double s = alpha.vector().dot(spec.tilde(z));
        detail::check_tilt_exponent(s);
        q.push_back(1.0 / (n0 + n1 * std::exp(s)));
    };
    for (double z : y0) add(z);
    for (double z : y1) add(z);
    const double total = std::accumulate(q.begin(), q.end(), 0.0);
    for (double& v : q) v /= total;
    return q;
}

/// (f~_0S, f~_1S): kernel smooths of the EL point masses on the pooled sample.
inline std::pair<KernelEstimate, KernelEstimate> kde_semiparametric(
    std::span<const double> y0, std::span<const double> y1, const RegressorSpec& spec,
    const TiltCoefficients& alpha, std::span<const double> grid, double h) {
    detail::require(h > 0.0, "bandwidth must be positive");
    if (y0.empty() || y1.empty()) throw DataError("semiparametric kernel estimate needs both groups");
    const auto q = el_weights(y0, y1, spec, alpha);
    std::vector<double> z(y0.begin(), y0.end());
    z.insert(z.end(), y1.begin(), y1.end());
    std::vector<double> q1(q.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        q1[i] = q[i] * std::exp(alpha.vector().dot(spec.tilde(z[i])));

    KernelEstimate f0{{grid.begin(), grid.end()}, h, q, {}};
    KernelEstimate f1{{grid.begin(), grid.end()}, h, q1, {}};
    f0.values = detail::kernel_smooth(z, f0.weights, grid, h);
    f1.values = detail::kernel_smooth(z, f1.weights, grid, h);
    return {std::move(f0), std::move(f1)};
}

}  // namespace mable

#endif  // MABLE_COMPARATORS_HPP
