#ifndef MABLE_REGRESSOR_HPP
#define MABLE_REGRESSOR_HPP

#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mable/error.hpp"

namespace mable {

/// Truncation interval [a, b] in original data units.
class Support {
public:
    Support(double a, double b) : a_(a), b_(b) {
        detail::require(std::isfinite(a) && std::isfinite(b) && b > a,
                        "support requires finite a < b");
    }

    double lower() const noexcept { return a_; }
    double upper() const noexcept { return b_; }
    double width() const noexcept { return b_ - a_; }
    double to_unit(double y) const noexcept { return (y - a_) / (b_ - a_); }
    double from_unit(double u) const noexcept { return a_ + (b_ - a_) * u; }
    bool contains(double y) const noexcept { return y >= a_ && y <= b_; }

private:
    double a_;
    double b_;
};

/// The regressor r(y) with intercept, r~(y) = (1, r(y)), together with the
/// support used to map data onto [0, 1].  r is evaluated in original units.
class RegressorSpec {
public:
    using Basis = std::function<double(double)>;

    /// r(y) = (y, y^2, ..., y^d).
    static RegressorSpec polynomial(int d, Support support) {
        detail::require(d >= 1 && d <= 12, "regressor degree must lie in [1, 12]");
        return RegressorSpec(d, {}, support);
    }

    /// r(y) = (g_1(y), ..., g_d(y)) for caller-supplied functions.
    static RegressorSpec custom(std::vector<Basis> functions, Support support) {
        detail::require(!functions.empty(), "custom regressor needs at least one function");
        RegressorSpec spec(0, std::move(functions), support);
        spec.check_independent();
        return spec;
    }

    int dimension() const noexcept {
        return custom_.empty() ? poly_degree_ : static_cast<int>(custom_.size());
    }
    int size() const noexcept { return dimension() + 1; }
    bool is_polynomial() const noexcept { return custom_.empty(); }
    const Support& support() const noexcept { return support_; }

    /// r~(y) at an original-scale point y.
    void evaluate(double y, std::span<double> out) const {
        out[0] = 1.0;
        if (custom_.empty()) {
            double power = 1.0;
            for (int k = 1; k <= poly_degree_; ++k) {
                power *= y;
                out[k] = power;
            }
        } else {
            for (std::size_t k = 0; k < custom_.size(); ++k) out[k + 1] = custom_[k](y);
        }
    }

    Eigen::VectorXd tilde(double y) const {
        Eigen::VectorXd out(size());
        evaluate(y, {out.data(), static_cast<std::size_t>(out.size())});
        return out;
    }

    /// r~(a + (b - a) u) for a point u of the unit interval.
    Eigen::VectorXd tilde_unit(double u) const { return tilde(support_.from_unit(u)); }

private:
    RegressorSpec(int d, std::vector<Basis> custom, Support support)
        : poly_degree_(d), custom_(std::move(custom)), support_(support) {}

    // Components of r~ must be linearly independent on [a, b].
    void check_independent() const {
        constexpr int grid = 257;
        Eigen::MatrixXd design(grid, size());
        for (int i = 0; i < grid; ++i)
            design.row(i) = tilde_unit(static_cast<double>(i) / (grid - 1)).transpose();
        for (int i = 0; i < design.size(); ++i)
            if (!std::isfinite(design.data()[i]))
                throw DomainError("custom regressor is not finite on the support");
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < size())
            throw DomainError("regressor components (with intercept) are linearly dependent");
    }

    int poly_degree_;
    std::vector<Basis> custom_;
    Support support_;
};

/// Tilt coefficients alpha = (alpha_0, alpha_1, ..., alpha_d) multiplying r~.
class TiltCoefficients {
public:
    TiltCoefficients() = default;
    explicit TiltCoefficients(Eigen::VectorXd alpha) : alpha_(std::move(alpha)) {
        for (Eigen::Index i = 0; i < alpha_.size(); ++i)
            detail::require(std::isfinite(alpha_[i]), "tilt coefficients must be finite");
    }
    TiltCoefficients(std::initializer_list<double> values)
        : TiltCoefficients(Eigen::Map<const Eigen::VectorXd>(values.begin(),
                                                             static_cast<Eigen::Index>(values.size()))) {}

    static TiltCoefficients zero(int size) { return TiltCoefficients(Eigen::VectorXd::Zero(size)); }

    const Eigen::VectorXd& vector() const noexcept { return alpha_; }
    double operator[](Eigen::Index i) const { return alpha_[i]; }
    Eigen::Index size() const noexcept { return alpha_.size(); }
    bool is_zero() const { return alpha_.isZero(0.0); }

    TiltCoefficients scaled(double factor) const { return TiltCoefficients(alpha_ * factor); }

private:
    Eigen::VectorXd alpha_;
};

inline constexpr double max_tilt_exponent = 700.0;

namespace detail {

inline void check_tilt_exponent(double s) {
    if (!std::isfinite(s) || std::fabs(s) > max_tilt_exponent) {
        std::ostringstream os;
        os << "tilt exponent alpha'r(y) = " << s << " exceeds the overflow guard "
           << max_tilt_exponent;
        throw NumericError(os.str());
    }
}

inline void check_alpha_size(const RegressorSpec& spec, const TiltCoefficients& alpha) {
    require(alpha.size() == spec.size(), "tilt coefficient length " + std::to_string(alpha.size()) +
                                             " does not match regressor size " +
                                             std::to_string(spec.size()));
}

}  // namespace detail

/// exp{alpha' r~(a + (b - a) u)}.
inline double tilt_at(const RegressorSpec& spec, const TiltCoefficients& alpha, double u) {
    detail::check_alpha_size(spec, alpha);
    if (!(u >= 0.0 && u <= 1.0))
        throw DomainError("tilt_at: u = " + std::to_string(u) + " lies outside [0, 1]");
    const double s = alpha.vector().dot(spec.tilde_unit(u));
    detail::check_tilt_exponent(s);
    return std::exp(s);
}

}  // namespace mable

#endif  // MABLE_REGRESSOR_HPP
