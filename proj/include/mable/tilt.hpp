#ifndef MABLE_TILT_HPP
#define MABLE_TILT_HPP

// Integrals of the tilted beta basis:
//   w_mj(alpha)   = int_0^1 beta_mj(u) exp{alpha' r~(y(u))} du
//   dw_mj(alpha)  = int_0^1 r~ beta_mj(u) exp{...} du
//   ddw_mj(alpha) = int_0^1 r~ r~' beta_mj(u) exp{...} du
// with y(u) = a + (b - a) u, and the tilted density / distribution function.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "mable/bernstein.hpp"
#include "mable/quadrature.hpp"
#include "mable/regressor.hpp"

namespace mable {

struct TiltedWeightTable {
    TiltCoefficients alpha;
    Eigen::VectorXd w;                  // m + 1
    Eigen::MatrixXd dw;                 // (m + 1) x (d + 1)
    std::vector<Eigen::MatrixXd> ddw;   // m + 1 symmetric (d + 1) x (d + 1)

    int degree() const noexcept { return static_cast<int>(w.size()) - 1; }
};

inline constexpr double quadrature_refinement_tolerance = 1e-9;

/// Basis and regressor values cached on the nodes of one quadrature rule, for
/// a fixed degree and regressor.  Evaluating a table at a new alpha then costs
/// one exponential per node and a small matrix product.
class TiltIntegrator {
public:
    TiltIntegrator(int m, const RegressorSpec& spec, QuadratureRule rule)
        : m_(m), dim_(spec.size()), spec_(spec), rule_(std::move(rule)) {
        detail::require(m >= 0 && m <= max_degree, "tilt integrator: invalid degree");
        const auto nq = static_cast<Eigen::Index>(rule_.size());
        basis_.resize(nq, m + 1);
        regressor_.resize(nq, dim_);
        std::vector<double> row(m + 1);
        for (Eigen::Index q = 0; q < nq; ++q) {
            const double u = rule_.nodes()[q];
            basis_row(m, u, row);
            for (int j = 0; j <= m; ++j) basis_(q, j) = row[j] * rule_.weights()[q];
            regressor_.row(q) = spec.tilde_unit(u).transpose();
        }
        for (int i = 0; i < dim_; ++i)
            for (int k = i; k < dim_; ++k) pairs_.emplace_back(i, k);
    }

    int degree() const noexcept { return m_; }
    const QuadratureRule& rule() const noexcept { return rule_; }
    const RegressorSpec& spec() const noexcept { return spec_; }

    /// w_mj(alpha) only.
    Eigen::VectorXd weights(const TiltCoefficients& alpha) const {
        return basis_.transpose() * node_tilts(alpha);
    }

    /// Full table without the refinement check.
    TiltedWeightTable table(const TiltCoefficients& alpha) const {
        const Eigen::VectorXd e = node_tilts(alpha);
        const auto np = static_cast<Eigen::Index>(pairs_.size());
        Eigen::MatrixXd integrand(e.size(), np);
        for (Eigen::Index c = 0; c < np; ++c) {
            const auto [i, k] = pairs_[c];
            integrand.col(c) = e.cwiseProduct(regressor_.col(i)).cwiseProduct(regressor_.col(k));
        }
        const Eigen::MatrixXd moments = basis_.transpose() * integrand;  // (m+1) x pairs

        TiltedWeightTable t{alpha, Eigen::VectorXd(m_ + 1), Eigen::MatrixXd(m_ + 1, dim_), {}};
        t.ddw.assign(m_ + 1, Eigen::MatrixXd(dim_, dim_));
        for (Eigen::Index c = 0; c < np; ++c) {
            const auto [i, k] = pairs_[c];
            for (int j = 0; j <= m_; ++j) {
                t.ddw[j](i, k) = moments(j, c);
                t.ddw[j](k, i) = moments(j, c);
            }
        }
        for (int j = 0; j <= m_; ++j) {
            t.dw.row(j) = t.ddw[j].row(0);
            t.w[j] = t.ddw[j](0, 0);
        }
        return t;
    }

    /// Largest |alpha' r~| over the nodes.
    double max_exponent(const TiltCoefficients& alpha) const {
        detail::check_alpha_size(spec_, alpha);
        return (regressor_ * alpha.vector()).cwiseAbs().maxCoeff();
    }

    /// Largest |r~_i r~_k| over the nodes for each component pair (i, k).
    double regressor_scale(int i, int k) const {
        return regressor_.col(i).cwiseProduct(regressor_.col(k)).cwiseAbs().maxCoeff();
    }

private:
    Eigen::VectorXd node_tilts(const TiltCoefficients& alpha) const {
        detail::check_alpha_size(spec_, alpha);
        Eigen::VectorXd s = regressor_ * alpha.vector();
        for (Eigen::Index q = 0; q < s.size(); ++q) {
            detail::check_tilt_exponent(s[q]);
            s[q] = std::exp(s[q]);
        }
        return s;
    }

    int m_;
    int dim_;
    RegressorSpec spec_;
    QuadratureRule rule_;
    Eigen::MatrixXd basis_;      // nodes x (m+1), quadrature weight folded in
    Eigen::MatrixXd regressor_;  // nodes x (d+1)
    std::vector<std::pair<int, int>> pairs_;
};

namespace detail {

// Refinement check: both tables must agree entrywise to 1e-9 relative to the
// size of w_j times the magnitude of the regressor product.
inline void check_refinement(const TiltIntegrator& coarse, const TiltedWeightTable& a,
                             const TiltedWeightTable& b) {
    const int dim = static_cast<int>(a.dw.cols());
    for (int j = 0; j <= a.degree(); ++j) {
        for (int i = 0; i < dim; ++i) {
            for (int k = i; k < dim; ++k) {
                const double scale =
                    std::max(std::fabs(a.ddw[j](i, k)), a.w[j] * coarse.regressor_scale(i, k));
                const double diff = std::fabs(a.ddw[j](i, k) - b.ddw[j](i, k));
                if (diff > quadrature_refinement_tolerance * scale) {
                    std::ostringstream os;
                    os << "quadrature refinement disagreement " << diff / scale << " at j = " << j
                       << " exceeds " << quadrature_refinement_tolerance;
                    throw NumericError(os.str());
                }
            }
        }
    }
}

}  // namespace detail

/// Table computed on `integrator`'s rule, verified against the refined rule.
inline TiltedWeightTable checked_table(const TiltIntegrator& integrator,
                                       const TiltIntegrator& refined,
                                       const TiltCoefficients& alpha) {
    auto coarse = integrator.table(alpha);
    detail::check_refinement(integrator, coarse, refined.table(alpha));
    return coarse;
}

inline TiltedWeightTable weight_table(Degree m, const RegressorSpec& spec,
                                      const TiltCoefficients& alpha, const QuadratureRule& rule) {
    const TiltIntegrator base(m.value(), spec, rule);
    const TiltIntegrator fine(m.value(), spec, rule.refined());
    return checked_table(base, fine, alpha);
}

inline TiltedWeightTable weight_table(Degree m, const RegressorSpec& spec,
                                      const TiltCoefficients& alpha) {
    return weight_table(m, spec, alpha, QuadratureRule::for_model(m.value(), spec.dimension()));
}

/// f_m(u; p) exp{alpha' r~(y(u))}.
inline double tilted_density(std::span<const double> p, const RegressorSpec& spec,
                             const TiltCoefficients& alpha, double u) {
    const double base = mixture_density(p, u);
    return base * tilt_at(spec, alpha, u);
}

/// B_mj(x; alpha) for all j, by Gauss-Legendre on [0, x].
inline std::vector<double> tilted_basis_cdf(int m, const RegressorSpec& spec,
                                            const TiltCoefficients& alpha, double x) {
    detail::check_unit(x, "tilted_basis_cdf");
    detail::check_alpha_size(spec, alpha);
    std::vector<double> out(m + 1, 0.0);
    if (x == 0.0) return out;
    const QuadratureRule rule = QuadratureRule::for_model(m, spec.dimension());
    auto integrate = [&](const QuadratureRule& r) {
        std::vector<double> acc(m + 1, 0.0), row(m + 1);
        for (std::size_t q = 0; q < r.size(); ++q) {
            const double u = x * r.nodes()[q];
            const double s = alpha.vector().dot(spec.tilde_unit(u));
            detail::check_tilt_exponent(s);
            const double factor = x * r.weights()[q] * std::exp(s);
            basis_row(m, u, row);
            for (int j = 0; j <= m; ++j) acc[j] += factor * row[j];
        }
        return acc;
    };
    out = integrate(rule);
    const auto fine = integrate(rule.refined());
    for (int j = 0; j <= m; ++j) {
        const double scale = std::max(std::fabs(fine[j]), 1e-300);
        if (std::fabs(out[j] - fine[j]) > quadrature_refinement_tolerance * std::max(scale, 1e-12))
            throw NumericError("tilted_basis_cdf: quadrature refinement disagreement");
    }
    return fine;
}

/// F_m(x; alpha, p) = sum_j p_j B_mj(x; alpha).
inline double tilted_cdf(std::span<const double> p, const RegressorSpec& spec,
                         const TiltCoefficients& alpha, double x) {
    const int m = detail::degree_of(p);
    const auto b = tilted_basis_cdf(m, spec, alpha, x);
    double total = 0.0;
    for (int j = 0; j <= m; ++j) total += p[j] * b[j];
    return total;
}

namespace detail {

inline double check_original(const RegressorSpec& spec, double y, int group) {
    require(group == 0 || group == 1, "group must be 0 or 1");
    if (!spec.support().contains(y)) {
        std::ostringstream os;
        os << "y = " << y << " lies outside the support [" << spec.support().lower() << ", "
           << spec.support().upper() << "]";
        throw DomainError(os.str());
    }
    return std::clamp(spec.support().to_unit(y), 0.0, 1.0);
}

}  // namespace detail

/// f_i(y) = f_m((y - a)/(b - a); i alpha, p) / (b - a).
inline double density_original_scale(std::span<const double> p, const RegressorSpec& spec,
                                     const TiltCoefficients& alpha, double y, int group) {
    const double u = detail::check_original(spec, y, group);
    return tilted_density(p, spec, alpha.scaled(group), u) / spec.support().width();
}

/// F_i(y) = F_m((y - a)/(b - a); i alpha, p).
inline double cdf_original_scale(std::span<const double> p, const RegressorSpec& spec,
                                 const TiltCoefficients& alpha, double y, int group) {
    const double u = detail::check_original(spec, y, group);
    return tilted_cdf(p, spec, alpha.scaled(group), u);
}

}  // namespace mable

#endif  // MABLE_TILT_HPP
