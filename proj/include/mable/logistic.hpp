#ifndef MABLE_LOGISTIC_HPP
#define MABLE_LOGISTIC_HPP

// Maximum empirical likelihood estimate of the tilt through the equivalent
// prospective logistic regression of group membership on r~(y).

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "mable/data.hpp"
#include "mable/error.hpp"
#include "mable/regressor.hpp"

namespace mable {

struct LogisticFit {
    Eigen::VectorXd coefficients;  // prospective (alpha*) scale
    double gradient_norm = 0.0;
    int iterations = 0;
};

inline constexpr double separation_bound = 50.0;

namespace detail {

inline double logistic_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& d,
                              const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // log(1 + e^eta) without overflow.
        const double soft = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i]))
                                       : std::log1p(std::exp(eta[i]));
        ll += d[i] * eta[i] - soft;
    }
    return ll;
}

}  // namespace detail

/// Newton-Raphson fit of P(D = 1 | y) = logistic(beta' r~(y)) on the pooled sample.
inline LogisticFit logistic_regression(const TwoSampleData& data, const RegressorSpec& spec) {
    const int n = data.n();
    const int p = spec.size();
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        const bool is_case = i >= data.n0();
        const double u = is_case ? data.x1()[i - data.n0()] : data.x0()[i];
        x.row(i) = spec.tilde_unit(u).transpose();
        d[i] = is_case ? 1.0 : 0.0;
    }

    // Column scaling keeps the Newton system well conditioned for raw powers of y.
    Eigen::VectorXd scale = x.cwiseAbs().colwise().maxCoeff().transpose();
    for (int k = 0; k < p; ++k)
        if (scale[k] == 0.0) scale[k] = 1.0;
    const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-12);
    if (qr.rank() < p)
        throw DataError("logistic regression design matrix is rank deficient");

    constexpr double gradient_tolerance = 1e-8;
    constexpr int max_iter = 100;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double ll = detail::logistic_loglik(xs, d, beta);
    LogisticFit fit;
    for (int iter = 1; iter <= max_iter; ++iter) {
        const Eigen::VectorXd eta = xs * beta;
        Eigen::VectorXd pi(n), wgt(n);
        for (int i = 0; i < n; ++i) {
            pi[i] = 1.0 / (1.0 + std::exp(-eta[i]));
            wgt[i] = pi[i] * (1.0 - pi[i]);
        }
        const Eigen::VectorXd grad = xs.transpose() * (d - pi);
        const Eigen::VectorXd grad_original = scale.cwiseInverse().asDiagonal() * grad;
        fit.gradient_norm = grad_original.lpNorm<Eigen::Infinity>();
        fit.iterations = iter;
        if (fit.gradient_norm <= gradient_tolerance) break;

        const Eigen::MatrixXd info = xs.transpose() * wgt.asDiagonal() * xs;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw NumericError("logistic regression information matrix is singular");
        Eigen::VectorXd step = ldlt.solve(grad);

        // Step halving keeps the log-likelihood nondecreasing.
        double trial_ll = detail::logistic_loglik(xs, d, beta + step);
        int halvings = 0;
        while (!(trial_ll >= ll - 1e-12) && halvings < 40) {
            step *= 0.5;
            trial_ll = detail::logistic_loglik(xs, d, beta + step);
            ++halvings;
        }
        beta += step;
        ll = trial_ll;
        if ((beta.cwiseQuotient(scale)).lpNorm<Eigen::Infinity>() > separation_bound)
            throw NumericError("logistic regression diverges: groups appear separated");
    }
    fit.coefficients = beta.cwiseQuotient(scale);
    if (fit.gradient_norm > 1e-6) {
        std::ostringstream os;
        os << "logistic regression did not converge (gradient norm " << fit.gradient_norm << ")";
        throw NumericError(os.str());
    }
    return fit;
}

/// alpha~ = alpha* with the intercept shifted by log(n0/n1).
inline TiltCoefficients mele_logistic(const TwoSampleData& data, const RegressorSpec& spec) {
    Eigen::VectorXd alpha = logistic_regression(data, spec).coefficients;
    alpha[0] += std::log(static_cast<double>(data.n0()) / data.n1());
    return TiltCoefficients(std::move(alpha));
}

}  // namespace mable

#endif  // MABLE_LOGISTIC_HPP
