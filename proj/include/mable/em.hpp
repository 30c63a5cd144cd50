#ifndef MABLE_EM_HPP
#define MABLE_EM_HPP

// Maximum approximate Bernstein likelihood estimation of (alpha, p) for a
// fixed degree m: the EM iteration with an inner Newton solve for alpha, and
// the profile fit of p at a frozen alpha with a Lagrange multiplier.

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mable/bernstein.hpp"
#include "mable/data.hpp"
#include "mable/error.hpp"
#include "mable/logistic.hpp"
#include "mable/quadrature.hpp"
#include "mable/regressor.hpp"
#include "mable/tilt.hpp"

namespace mable {

struct EmConfig {
    double eps1 = 1e-7;                 // Newton tolerance on |delta alpha|
    std::optional<double> eps2;         // log-likelihood increment; default 1e-7 n
    int max_newton = 100;               // N1
    int max_em = 500;                   // N2
    bool vanish_left = false;           // p_0 = 0
    bool vanish_right = false;          // p_m = 0
    bool warm_start_newton = false;     // start Newton at alpha^(s) instead of alpha~

    void validate() const {
        detail::require(eps1 > 0.0, "eps1 must be positive");
        detail::require(!eps2 || *eps2 > 0.0, "eps2 must be positive");
        detail::require(max_newton >= 1 && max_em >= 1, "iteration caps must be at least one");
    }

    double loglik_tolerance(int n) const { return eps2 ? *eps2 : 1e-7 * n; }
};

struct FitResult {
    int m = 0;
    TiltCoefficients alpha_hat;
    TiltCoefficients alpha_tilde;        // starting MELE
    std::vector<double> p_hat;
    double loglik = 0.0;
    std::vector<double> loglik_trace;    // one entry per outer iteration, starting at s = 0
    bool newton_converged = false;       // last inner solve
    bool em_converged = false;
    int em_iterations = 0;
    double constraint_residual = 0.0;    // |sum_j p_j w_mj(alpha_hat) - 1|
};

struct NewtonResult {
    TiltCoefficients alpha;
    bool converged = false;
    int iterations = 0;
};

struct ProfileFit {
    std::vector<double> p;
    double loglik = 0.0;
    double lambda = 0.0;
    double psi_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Quantities that depend only on (m, data, regressor, quadrature rule) and are
/// reused across the iterations of one fit.
class FitContext {
public:
    FitContext(Degree m, const TwoSampleData& data, const RegressorSpec& spec,
               const QuadratureRule& rule)
        : m_(m.value()),
          n0_(data.n0()),
          n1_(data.n1()),
          pooled_(data.pooled()),
          spec_(spec),
          integrator_(m.value(), spec, rule),
          refined_(m.value(), spec, rule.refined()) {
        basis_.resize(data.n(), m_ + 1);
        std::vector<double> row(m_ + 1);
        for (int i = 0; i < data.n(); ++i) {
            basis_row(m_, pooled_[i], row);
            for (int j = 0; j <= m_; ++j) basis_(i, j) = row[j];
        }
        case_sum_ = Eigen::VectorXd::Zero(spec.size());
        for (double x : data.x1()) case_sum_ += spec.tilde_unit(x);
    }

    FitContext(Degree m, const TwoSampleData& data, const RegressorSpec& spec)
        : FitContext(m, data, spec, QuadratureRule::for_model(m.value(), spec.dimension())) {}

    int degree() const noexcept { return m_; }
    int n0() const noexcept { return n0_; }
    int n1() const noexcept { return n1_; }
    int n() const noexcept { return n0_ + n1_; }
    const RegressorSpec& spec() const noexcept { return spec_; }
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }
    const Eigen::VectorXd& case_regressor_sum() const noexcept { return case_sum_; }
    const TiltIntegrator& integrator() const noexcept { return integrator_; }

    TiltedWeightTable table(const TiltCoefficients& alpha) const { return integrator_.table(alpha); }
    TiltedWeightTable checked(const TiltCoefficients& alpha) const {
        return checked_table(integrator_, refined_, alpha);
    }

    /// f_m(z_i; p) for every pooled observation; errors on a vanishing density.
    Eigen::VectorXd densities(std::span<const double> p) const {
        detail::require(static_cast<int>(p.size()) == m_ + 1, "weight vector has wrong length");
        const Eigen::VectorXd f =
            basis_ * Eigen::Map<const Eigen::VectorXd>(p.data(), m_ + 1);
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            if (!(f[i] >= 1e-300)) {
                std::ostringstream os;
                os << "mixture density vanishes at data point z = " << pooled_[i]
                   << " (observation " << i + 1 << "); the weights are too sparse";
                throw NumericError(os.str());
            }
        }
        return f;
    }

private:
    int m_;
    int n0_;
    int n1_;
    std::vector<double> pooled_;
    RegressorSpec spec_;
    TiltIntegrator integrator_;
    TiltIntegrator refined_;
    Eigen::MatrixXd basis_;
    Eigen::VectorXd case_sum_;
};

/// l_m(alpha, p) = sum_i log f_m(z_i; p) + alpha' sum_j r~(x_1j).
inline double loglik(const FitContext& ctx, std::span<const double> p,
                     const TiltCoefficients& alpha) {
    detail::check_alpha_size(ctx.spec(), alpha);
    const Eigen::VectorXd f = ctx.densities(p);
    return f.array().log().sum() + alpha.vector().dot(ctx.case_regressor_sum());
}

inline double loglik(Degree m, std::span<const double> p, const TiltCoefficients& alpha,
                     const TwoSampleData& data, const RegressorSpec& spec) {
    return loglik(FitContext(m, data, spec), p, alpha);
}

/// T_k = sum over pooled z of p_k beta_mk(z) / f_m(z; p).
inline Eigen::VectorXd responsibilities(const FitContext& ctx, std::span<const double> p) {
    const Eigen::VectorXd f = ctx.densities(p);
    const Eigen::VectorXd s = ctx.basis().transpose() * f.cwiseInverse();
    return Eigen::Map<const Eigen::VectorXd>(p.data(), ctx.degree() + 1).cwiseProduct(s);
}

inline Eigen::VectorXd responsibilities(Degree m, std::span<const double> p,
                                        const TwoSampleData& data, const RegressorSpec& spec) {
    return responsibilities(FitContext(m, data, spec), p);
}

/// H_s(alpha) = sum_j r~(x_1j) - n1 sum_k T_k dw_k / (n0 + n1 w_k).
inline Eigen::VectorXd tilt_score(const FitContext& ctx, const Eigen::VectorXd& t,
                                  const TiltedWeightTable& table) {
    const double n0 = ctx.n0(), n1 = ctx.n1();
    Eigen::VectorXd h = ctx.case_regressor_sum();
    for (Eigen::Index k = 0; k < t.size(); ++k)
        h -= n1 * t[k] / (n0 + n1 * table.w[k]) * table.dw.row(k).transpose();
    return h;
}

/// J_s(alpha), the alpha-Jacobian of H_s.
inline Eigen::MatrixXd tilt_jacobian(const FitContext& ctx, const Eigen::VectorXd& t,
                                     const TiltedWeightTable& table) {
    const double n0 = ctx.n0(), n1 = ctx.n1();
    const auto dim = table.dw.cols();
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        const double denom = n0 + n1 * table.w[k];
        const Eigen::VectorXd dw = table.dw.row(k).transpose();
        j -= n1 * t[k] * (denom * table.ddw[k] - n1 * dw * dw.transpose()) / (denom * denom);
    }
    return j;
}

/// Newton-Raphson for H_s(alpha) = 0 at fixed responsibilities T.
inline NewtonResult newton_alpha(const FitContext& ctx, const Eigen::VectorXd& t,
                                 const TiltCoefficients& start, double eps1, int max_iter) {
    constexpr int max_halvings = 20;
    NewtonResult result{start, false, 0};
    Eigen::VectorXd alpha = start.vector();
    for (int iter = 0; iter <= max_iter; ++iter) {
        const auto table = ctx.table(TiltCoefficients(alpha));
        const Eigen::VectorXd h = tilt_score(ctx, t, table);
        const Eigen::MatrixXd jac = tilt_jacobian(ctx, t, table);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        lu.setThreshold(1e-13);
        if (!lu.isInvertible() || !h.allFinite())
            throw NumericError("singular Jacobian in the Newton step for alpha");
        Eigen::VectorXd step = lu.solve(h);

        // Halve the step while the trial point overflows the tilt guard.
        Eigen::VectorXd trial = alpha - step;
        int halvings = 0;
        while (true) {
            bool ok = trial.allFinite() &&
                      ctx.integrator().max_exponent(TiltCoefficients(trial)) <= max_tilt_exponent;
            if (ok) break;
            if (++halvings > max_halvings)
                throw NumericError("Newton step for alpha overflows the tilt after 20 halvings");
            step *= 0.5;
            trial = alpha - step;
        }
        alpha = trial;
        result.iterations = iter + 1;
        if (step.norm() < eps1) {
            result.converged = true;
            break;
        }
    }
    result.alpha = TiltCoefficients(alpha);
    return result;
}

/// p_k = T_k / (n0 + n1 w_mk(alpha)); deliberately not renormalized.
inline std::vector<double> update_p(const Eigen::VectorXd& t, const Eigen::VectorXd& w, int n0,
                                    int n1) {
    std::vector<double> p(t.size());
    for (Eigen::Index k = 0; k < t.size(); ++k) p[k] = t[k] / (n0 + n1 * w[k]);
    return p;
}

/// Initial weights: uniform, with p_0 and/or p_m zeroed under vanishing constraints.
inline std::vector<double> initial_weights(int m, bool vanish_left, bool vanish_right) {
    std::vector<double> p(m + 1, 1.0);
    if (vanish_left) p[0] = 0.0;
    if (vanish_right) p[m] = 0.0;
    const double mass = std::accumulate(p.begin(), p.end(), 0.0);
    if (mass <= 0.0) throw DomainError("vanishing-boundary constraints leave no free weight");
    for (double& v : p) v /= mass;
    return p;
}

/// alpha with alpha_0 shifted so that sum_j p_j w_mj(alpha) = 1.
inline TiltCoefficients feasible_intercept(const FitContext& ctx, std::span<const double> p,
                                           const TiltCoefficients& alpha) {
    const Eigen::VectorXd w = ctx.integrator().weights(alpha);
    const double mass = Eigen::Map<const Eigen::VectorXd>(p.data(), ctx.degree() + 1).dot(w);
    if (!(mass > 0.0)) throw NumericError("initial weights carry no tilted mass");
    Eigen::VectorXd shifted = alpha.vector();
    shifted[0] -= std::log(mass);
    return TiltCoefficients(std::move(shifted));
}

struct EmStart {
    std::optional<TiltCoefficients> alpha_tilde;   // MELE; fitted when absent
    std::optional<std::vector<double>> p0;         // initial weights; uniform when absent
    std::optional<TiltCoefficients> alpha0;        // feasible partner of p0 for l^(0)
};

inline FitResult em_fit(const FitContext& ctx, const TwoSampleData& data, const EmConfig& config,
                        const EmStart& start = {}) {
    config.validate();
    const int m = ctx.degree();
    const TiltCoefficients alpha_tilde =
        start.alpha_tilde ? *start.alpha_tilde : mele_logistic(data, ctx.spec());
    std::vector<double> p = start.p0 ? *start.p0
                                     : initial_weights(m, config.vanish_left, config.vanish_right);
    detail::require(static_cast<int>(p.size()) == m + 1, "initial weights have wrong length");
    const double eps2 = config.loglik_tolerance(ctx.n());

    FitResult fit;
    fit.m = m;
    fit.alpha_tilde = alpha_tilde;
    // (alpha~, p^(0)) generally violates the constraint; shift the intercept by
    // -log sum_j p_j w_mj(alpha~) to start from a feasible point.
    TiltCoefficients alpha = start.alpha0 ? *start.alpha0 : feasible_intercept(ctx, p, alpha_tilde);
    double ll = loglik(ctx, p, alpha);
    fit.loglik_trace.push_back(ll);
    for (int s = 1; s <= config.max_em; ++s) {
        const Eigen::VectorXd t = responsibilities(ctx, p);
        const auto newton = newton_alpha(ctx, t, config.warm_start_newton ? alpha : alpha_tilde,
                                         config.eps1, config.max_newton);
        fit.newton_converged = newton.converged;
        alpha = newton.alpha;
        const auto table = ctx.checked(alpha);
        p = update_p(t, table.w, ctx.n0(), ctx.n1());
        const double next = loglik(ctx, p, alpha);
        fit.loglik_trace.push_back(next);
        fit.em_iterations = s;
        const double gain = next - ll;
        ll = next;
        if (gain < eps2) {
            fit.em_converged = true;
            break;
        }
    }
    fit.alpha_hat = alpha;
    fit.p_hat = std::move(p);
    fit.loglik = ll;
    const Eigen::VectorXd w = ctx.integrator().weights(alpha);
    fit.constraint_residual =
        std::fabs(Eigen::Map<const Eigen::VectorXd>(fit.p_hat.data(), m + 1).dot(w) - 1.0);
    return fit;
}

inline FitResult em_fit(Degree m, const TwoSampleData& data, const RegressorSpec& spec,
                        const EmConfig& config = {}, const EmStart& start = {}) {
    return em_fit(FitContext(m, data, spec), data, config, start);
}

namespace detail {

struct LambdaSolution {
    double lambda;
    double psi;
};

// Root of psi(lambda) = sum_k T_k (w_k - 1) / (n + lambda (w_k - 1)) by Newton,
// starting at lambda0, halving steps that leave the feasible interval.
inline LambdaSolution solve_lambda(const Eigen::VectorXd& t, const Eigen::VectorXd& w, double n,
                                   double lambda0) {
    constexpr int max_iter = 200;
    constexpr int max_halvings = 30;
    auto feasible = [&](double lambda) {
        for (Eigen::Index k = 0; k < t.size(); ++k)
            if (t[k] > 0.0 && !(n + lambda * (w[k] - 1.0) > 0.0)) return false;
        return true;
    };
    auto psi_and_slope = [&](double lambda) {
        double psi = 0.0, slope = 0.0;
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            if (t[k] == 0.0) continue;
            const double c = w[k] - 1.0;
            const double denom = n + lambda * c;
            psi += t[k] * c / denom;
            slope -= t[k] * c * c / (denom * denom);
        }
        return std::pair{psi, slope};
    };

    double lambda = lambda0;
    if (!feasible(lambda)) {
        lambda = 0.0;  // always feasible: every denominator equals n
    }
    auto [psi, slope] = psi_and_slope(lambda);
    for (int iter = 0; iter < max_iter; ++iter) {
        if (std::fabs(psi) <= 1e-14 || slope == 0.0) break;
        double step = psi / slope;
        double trial = lambda - step;
        int halvings = 0;
        while (!feasible(trial)) {
            if (++halvings > max_halvings)
                throw NumericError("Lagrange multiplier Newton step stays infeasible after 30 halvings");
            step *= 0.5;
            trial = lambda - step;
        }
        lambda = trial;
        std::tie(psi, slope) = psi_and_slope(lambda);
        if (std::fabs(step) <= 1e-13 * (1.0 + std::fabs(lambda))) break;
    }
    return {lambda, psi};
}

}  // namespace detail

/// Maximize l_m(alpha~, p) over p subject to sum_j p_j w_mj(alpha~) = 1.
inline ProfileFit profile_p_fit(const FitContext& ctx, const TiltCoefficients& alpha_tilde,
                                const EmConfig& config,
                                std::optional<std::vector<double>> p0 = std::nullopt) {
    config.validate();
    const int m = ctx.degree();
    const double n = ctx.n();
    const Eigen::VectorXd w = ctx.checked(alpha_tilde).w;
    const bool flat = (w.array() - 1.0).abs().maxCoeff() <= 1e-14;
    const double eps2 = config.loglik_tolerance(ctx.n());

    ProfileFit fit;
    fit.p = p0 ? *p0 : initial_weights(m, config.vanish_left, config.vanish_right);
    // Uniform starting weights need not satisfy the constraint at alpha~, so the
    // first update is always taken; supplied weights are assumed feasible.
    double ll = p0 ? loglik(ctx, fit.p, alpha_tilde) : -std::numeric_limits<double>::infinity();
    for (int s = 1; s <= config.max_em; ++s) {
        const Eigen::VectorXd t = responsibilities(ctx, fit.p);
        double lambda = 0.0;
        if (!flat) {
            const auto sol = detail::solve_lambda(t, w, n, ctx.n1());
            lambda = sol.lambda;
            fit.psi_residual = sol.psi;
        }
        for (int k = 0; k <= m; ++k) fit.p[k] = t[k] / (n + lambda * (w[k] - 1.0));
        fit.lambda = lambda;
        const double next = loglik(ctx, fit.p, alpha_tilde);
        fit.iterations = s;
        const double gain = next - ll;
        ll = next;
        if (gain < eps2) {
            fit.converged = true;
            break;
        }
    }
    fit.loglik = ll;
    return fit;
}

inline ProfileFit profile_p_fit(Degree m, const TwoSampleData& data, const RegressorSpec& spec,
                                const TiltCoefficients& alpha_tilde, const EmConfig& config = {}) {
    return profile_p_fit(FitContext(m, data, spec), alpha_tilde, config);
}

}  // namespace mable

#endif  // MABLE_EM_HPP
