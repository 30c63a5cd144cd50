#ifndef MABLE_BERNSTEIN_HPP
#define MABLE_BERNSTEIN_HPP

// Beta-density basis on [0, 1] and Bernstein mixtures built from it.
//
// beta_{mj}(x) = (m + 1) C(m, j) x^j (1 - x)^(m - j) is the Beta(j + 1, m - j + 1)
// density, so sum_j beta_{mj}(x) = m + 1 and every mixture with simplex weights
// is a probability density on [0, 1].

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mable/error.hpp"
#include "mable/special.hpp"

namespace mable {

inline constexpr int max_degree = 512;

/// Polynomial degree m of a Bernstein model; m + 1 basis functions.
class Degree {
public:
    explicit Degree(int m) : m_(m) {
        detail::require(m >= 0 && m <= max_degree,
                        "degree must lie in [0, " + std::to_string(max_degree) + "], got " +
                            std::to_string(m));
    }

    int value() const noexcept { return m_; }
    int basis_size() const noexcept { return m_ + 1; }

    friend bool operator==(Degree, Degree) = default;

private:
    int m_;
};

/// Mixing proportions p on the simplex S_m.
class MixtureWeights {
public:
    static constexpr double simplex_tolerance = 1e-12;

    explicit MixtureWeights(std::vector<double> p) : p_(std::move(p)) {
        detail::require(!p_.empty() && p_.size() <= max_degree + 1u,
                        "mixture weights need between 1 and 513 entries");
        double total = 0.0;
        for (double v : p_) {
            detail::require(std::isfinite(v) && v >= 0.0, "mixture weights must be non-negative");
            total += v;
        }
        detail::require(std::fabs(total - 1.0) <= simplex_tolerance,
                        "mixture weights must sum to one");
    }

    static MixtureWeights uniform(Degree m) {
        return MixtureWeights(std::vector<double>(m.basis_size(), 1.0 / m.basis_size()));
    }

    Degree degree() const { return Degree(static_cast<int>(p_.size()) - 1); }
    std::span<const double> values() const noexcept { return p_; }
    double operator[](std::size_t j) const { return p_[j]; }
    std::size_t size() const noexcept { return p_.size(); }

private:
    std::vector<double> p_;
};

/// Density values on an ascending grid in [0, 1].
struct GridDensity {
    std::vector<double> xs;
    std::vector<double> values;

    double trapezoid_integral() const {
        double total = 0.0;
        for (std::size_t i = 1; i < xs.size(); ++i)
            total += 0.5 * (values[i] + values[i - 1]) * (xs[i] - xs[i - 1]);
        return total;
    }
};

namespace detail {

inline void check_unit(double x, const char* who) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError(std::string(who) + ": x = " + std::to_string(x) + " lies outside [0, 1]");
}

inline int degree_of(std::span<const double> p) {
    require(!p.empty() && p.size() <= max_degree + 1u, "coefficient vector has invalid length");
    return static_cast<int>(p.size()) - 1;
}

}  // namespace detail

inline double beta_basis(Degree m, int j, double x) {
    const int mm = m.value();
    detail::require(j >= 0 && j <= mm, "beta_basis: index " + std::to_string(j) +
                                           " out of range for degree " + std::to_string(mm));
    detail::check_unit(x, "beta_basis");
    if (x == 0.0) return j == 0 ? mm + 1.0 : 0.0;
    if (x == 1.0) return j == mm ? mm + 1.0 : 0.0;
    const double log_value = std::log(mm + 1.0) + log_binomial(mm, j) + j * std::log(x) +
                             (mm - j) * std::log1p(-x);
    return std::exp(log_value);
}

/// All m + 1 basis values at x, written into `out`.
inline void basis_row(int m, double x, std::span<double> out) {
    detail::check_unit(x, "basis_row");
    if (x == 0.0 || x == 1.0) {
        std::fill(out.begin(), out.end(), 0.0);
        out[x == 0.0 ? 0 : m] = m + 1.0;
        return;
    }
    const double lx = std::log(x);
    const double l1x = std::log1p(-x);
    const double lead = std::log(m + 1.0);
    for (int j = 0; j <= m; ++j)
        out[j] = std::exp(lead + log_binomial(m, j) + j * lx + (m - j) * l1x);
}

inline std::vector<double> basis_row(int m, double x) {
    std::vector<double> out(m + 1);
    basis_row(m, x, out);
    return out;
}

/// f_m(x; p) = sum_j p_j beta_mj(x) for any coefficient vector p of length m + 1.
inline double mixture_density(std::span<const double> p, double x) {
    const int m = detail::degree_of(p);
    detail::check_unit(x, "mixture_density");
    const auto row = basis_row(m, x);
    return std::inner_product(p.begin(), p.end(), row.begin(), 0.0);
}

inline double mixture_density(const MixtureWeights& p, double x) {
    return mixture_density(p.values(), x);
}

/// sum_j p_j I_x(j + 1, m - j + 1); the alpha = 0 distribution function.
inline double mixture_cdf_untilted(std::span<const double> p, double x) {
    const int m = detail::degree_of(p);
    detail::check_unit(x, "mixture_cdf_untilted");
    if (x == 0.0) return 0.0;
    double total = 0.0;
    for (int j = 0; j <= m; ++j)
        if (p[j] != 0.0) total += p[j] * incomplete_beta(j + 1.0, m - j + 1.0, x);
    return total;
}

inline double mixture_cdf_untilted(const MixtureWeights& p, double x) {
    return mixture_cdf_untilted(p.values(), x);
}

/// Degree elevation: coefficients at degree m + 1 defining the same function.
inline std::vector<double> elevate(std::span<const double> p) {
    const int m = detail::degree_of(p);
    detail::require(m < max_degree, "elevate: degree cap reached");
    std::vector<double> q(m + 2);
    const double denom = m + 2.0;
    q[0] = (m + 1.0) * p[0] / denom;
    q[m + 1] = (m + 1.0) * p[m] / denom;
    for (int j = 1; j <= m; ++j) q[j] = (j * p[j - 1] + (m - j + 1.0) * p[j]) / denom;
    return q;
}

inline MixtureWeights elevate(const MixtureWeights& p) {
    auto q = elevate(p.values());
    // Elevation is a convex combination; only rounding can move the sum.
    const double total = std::accumulate(q.begin(), q.end(), 0.0);
    for (double& v : q) v /= total;
    return MixtureWeights(std::move(q));
}

}  // namespace mable

#endif  // MABLE_BERNSTEIN_HPP
