#ifndef MABLE_QUADRATURE_HPP
#define MABLE_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mable/error.hpp"

namespace mable {

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> nodes(n), weights(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double step = p0 / dp;
            z -= step;
            if (std::fabs(step) < 1e-16) break;
        }
        // Recompute the derivative at the polished root.
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {nodes, weights};
}

}  // namespace detail

/// Composite Gauss-Legendre rule on [0, 1] with equal panels.
class QuadratureRule {
public:
    static constexpr int default_nodes_per_panel = 16;

    QuadratureRule(int panels, int nodes_per_panel = default_nodes_per_panel)
        : panels_(panels), per_panel_(nodes_per_panel) {
        detail::require(panels >= 1, "quadrature: need at least one panel");
        detail::require(nodes_per_panel >= 1 && nodes_per_panel <= 64,
                        "quadrature: nodes per panel must lie in [1, 64]");
        const auto [ref_nodes, ref_weights] = detail::gauss_legendre(per_panel_);
        const double h = 1.0 / panels_;
        nodes_.reserve(size());
        weights_.reserve(size());
        for (int k = 0; k < panels_; ++k) {
            const double lo = k * h;
            for (int i = 0; i < per_panel_; ++i) {
                nodes_.push_back(lo + 0.5 * h * (ref_nodes[i] + 1.0));
                weights_.push_back(0.5 * h * ref_weights[i]);
            }
        }
        verify();
    }

    /// Panel count used for a degree-m basis with a d-dimensional regressor.
    static QuadratureRule for_model(int m, int d) {
        return QuadratureRule(std::max(4, (m + d + 7) / 8));
    }

    QuadratureRule refined() const { return QuadratureRule(2 * panels_, per_panel_); }

    int panels() const noexcept { return panels_; }
    int nodes_per_panel() const noexcept { return per_panel_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(panels_) * per_panel_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Integral over [lo, hi] with the rule mapped affinely onto that interval.
    template <class F>
    double integrate(F&& f, double lo = 0.0, double hi = 1.0) const {
        const double len = hi - lo;
        double total = 0.0;
        for (std::size_t q = 0; q < nodes_.size(); ++q)
            total += weights_[q] * f(lo + len * nodes_[q]);
        return len * total;
    }

private:
    // Positive weights summing to one, exact on monomials up to degree 2n - 1.
    void verify() const {
        double total = 0.0;
        for (double w : weights_) {
            if (!(w > 0.0)) throw NumericError("quadrature: non-positive weight");
            total += w;
        }
        if (std::fabs(total - 1.0) > 1e-14)
            throw NumericError("quadrature: weights do not sum to one");
        const int order = 2 * per_panel_ - 1;
        for (int k : {order / 2, order}) {
            double approx = 0.0;
            for (std::size_t q = 0; q < nodes_.size(); ++q)
                approx += weights_[q] * std::pow(nodes_[q], k);
            if (std::fabs(approx - 1.0 / (k + 1.0)) > 1e-13)
                throw NumericError("quadrature: rule is not exact for degree " + std::to_string(k));
        }
    }

    int panels_;
    int per_panel_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace mable

#endif  // MABLE_QUADRATURE_HPP
