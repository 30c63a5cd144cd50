#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mable/em.hpp"
#include "mable/tilt.hpp"
#include "support.hpp"

using namespace mable;
using testing_support::unit_spec;

TEST(QuadratureRule, WeightsAndExactness) {
    const QuadratureRule rule(4);
    EXPECT_EQ(rule.size(), 64u);
    double total = 0.0;
    for (double w : rule.weights()) {
        EXPECT_GT(w, 0.0);
        total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
    // Each 16-point panel is exact through degree 31.
    EXPECT_NEAR(rule.integrate([](double x) { return std::pow(x, 31); }), 1.0 / 32.0, 1e-14);
    EXPECT_NEAR(rule.integrate([](double x) { return std::exp(x); }, 1.0, 2.0), std::exp(2.0) - std::exp(1.0),
                1e-13);
    EXPECT_THROW(QuadratureRule(0), DomainError);
}

TEST(QuadratureRule, PanelRule) {
    EXPECT_EQ(QuadratureRule::for_model(3, 1).panels(), 4);
    EXPECT_EQ(QuadratureRule::for_model(40, 1).panels(), 6);
    EXPECT_EQ(QuadratureRule::for_model(3, 1).refined().panels(), 8);
}

TEST(RegressorSpec, Validation) {
    EXPECT_THROW(RegressorSpec::polynomial(0, Support(0, 1)), DomainError);
    EXPECT_THROW(Support(1.0, 1.0), DomainError);
    EXPECT_THROW(RegressorSpec::custom({[](double y) { return y; }, [](double y) { return 2 * y; }},
                                       Support(0, 1)),
                 DomainError);
    const auto spec = RegressorSpec::custom({[](double y) { return std::log(y); }}, Support(1, 5));
    EXPECT_EQ(spec.size(), 2);
    EXPECT_NEAR(spec.tilde(std::exp(1.0))[1], 1.0, 1e-15);
}

TEST(TiltAt, Values) {
    EXPECT_EQ(tilt_at(unit_spec(2), TiltCoefficients::zero(3), 0.3), 1.0);
    EXPECT_NEAR(tilt_at(unit_spec(), {0.0, 1.0}, 0.5), std::exp(0.5), 1e-15);
    const auto chd = testing_support::chd_spec();
    EXPECT_NEAR(tilt_at(chd, {-5.0276, 0.11092}, 0.0), std::exp(-5.0276 + 0.11092 * 20), 1e-15);
}

TEST(TiltAt, OverflowNamesExponent) {
    try {
        tilt_at(unit_spec(), {800.0, 0.0}, 0.5);
        FAIL() << "expected overflow";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("800"), std::string::npos) << e.what();
    }
}

TEST(WeightTable, ZeroTiltGivesOnes) {
    for (int m : {0, 4, 30}) {
        const auto t = weight_table(Degree(m), unit_spec(2), TiltCoefficients::zero(3));
        for (int j = 0; j <= m; ++j) EXPECT_NEAR(t.w[j], 1.0, 1e-12);
    }
}

TEST(WeightTable, ClosedFormDegreeOne) {
    const auto t = weight_table(Degree(1), unit_spec(), {0.0, 1.0});
    EXPECT_NEAR(t.w[0], 2.0 * (std::numbers::e - 2.0), 1e-13);
    EXPECT_NEAR(t.w[1], 2.0, 1e-13);
}

TEST(WeightTable, RefinementStableOnChd) {
    const auto spec = testing_support::chd_spec();
    const TiltCoefficients alpha{-5.0276, 0.11092};
    const auto a = weight_table(Degree(3), spec, alpha, QuadratureRule(4));
    const auto b = weight_table(Degree(3), spec, alpha, QuadratureRule(8));
    for (int j = 0; j <= 3; ++j) EXPECT_NEAR(a.w[j], b.w[j], 1e-9 * b.w[j]);
}

TEST(WeightTable, Invariants) {
    const RegressorSpec spec = RegressorSpec::polynomial(2, Support(-1.0, 2.0));
    const TiltCoefficients alpha{0.3, -0.8, 0.4};
    const auto t = weight_table(Degree(7), spec, alpha);
    for (int j = 0; j <= 7; ++j) {
        EXPECT_GT(t.w[j], 0.0);
        EXPECT_NEAR(t.dw(j, 0), t.w[j], 1e-10 * t.w[j]);
        EXPECT_NEAR(t.ddw[j](0, 0), t.w[j], 1e-10 * t.w[j]);
        for (int i = 0; i < 3; ++i) {
            EXPECT_NEAR(t.ddw[j](0, i), t.dw(j, i), 1e-10 * std::fabs(t.w[j]));
            for (int k = 0; k < 3; ++k) EXPECT_EQ(t.ddw[j](i, k), t.ddw[j](k, i));
        }
    }
}

TEST(WeightTable, DerivativesMatchFiniteDifferences) {
    const RegressorSpec spec = RegressorSpec::polynomial(2, Support(-1.0, 2.0));
    const Eigen::Vector3d alpha(0.3, -0.8, 0.4);
    const double h = 1e-5;
    const int m = 6;
    const auto t = weight_table(Degree(m), spec, TiltCoefficients(alpha));
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d up = alpha, down = alpha;
        up[i] += h;
        down[i] -= h;
        const auto tu = weight_table(Degree(m), spec, TiltCoefficients(up));
        const auto td = weight_table(Degree(m), spec, TiltCoefficients(down));
        for (int j = 0; j <= m; ++j) {
            const double fd = (tu.w[j] - td.w[j]) / (2 * h);
            EXPECT_NEAR(t.dw(j, i), fd, 1e-5 * std::max(1.0, std::fabs(fd)));
            for (int k = 0; k < 3; ++k) {
                const double fd2 = (tu.dw(j, k) - td.dw(j, k)) / (2 * h);
                EXPECT_NEAR(t.ddw[j](k, i), fd2, 1e-5 * std::max(1.0, std::fabs(fd2)));
            }
        }
    }
}

TEST(WeightTable, NodeDoublingWithinTolerance) {
    // |alpha' r~| <= 20 on the support.
    const RegressorSpec spec = RegressorSpec::polynomial(1, Support(0.0, 10.0));
    for (int m : {2, 10, 40}) {
        const TiltCoefficients alpha{-10.0, 2.0};
        const auto a = weight_table(Degree(m), spec, alpha);
        const auto b = weight_table(Degree(m), spec, alpha, QuadratureRule::for_model(m, 1).refined());
        for (int j = 0; j <= m; ++j) EXPECT_NEAR(a.w[j], b.w[j], 1e-9 * b.w[j]) << m << "," << j;
    }
}

TEST(TiltedDensity, Reductions) {
    Engine rng = substream(21, 0);
    const auto p = testing_support::random_simplex(6, rng);
    EXPECT_DOUBLE_EQ(tilted_density(p, unit_spec(), TiltCoefficients::zero(2), 0.4), mixture_density(p, 0.4));
    const auto uniform = MixtureWeights::uniform(Degree(4));
    EXPECT_NEAR(tilted_density(uniform.values(), unit_spec(), {0.0, 1.0}, 0.5), std::exp(0.5), 1e-13);
    const RegressorSpec spec = RegressorSpec::polynomial(2, Support(-1.0, 3.0));
    const TiltCoefficients alpha{0.2, 0.5, -0.3};
    const double u = 0.37, y = -1.0 + 4.0 * u;
    double want = 0.0;
    for (int j = 0; j <= 5; ++j) want += p[j] * beta_basis(Degree(5), j, u);
    want *= std::exp(0.2 + 0.5 * y - 0.3 * y * y);
    EXPECT_NEAR(tilted_density(p, spec, alpha, u), want, 1e-12 * want);
}

TEST(TiltedCdf, Reductions) {
    Engine rng = substream(22, 0);
    const auto p = testing_support::random_simplex(5, rng);
    for (double x : {0.1, 0.5, 0.9})
        EXPECT_NEAR(tilted_cdf(p, unit_spec(), TiltCoefficients::zero(2), x), mixture_cdf_untilted(p, x), 1e-12);
    EXPECT_EQ(tilted_cdf(p, unit_spec(), {0.1, 1.0}, 0.0), 0.0);
    const TiltCoefficients alpha{0.1, 1.0};
    const auto t = weight_table(Degree(4), unit_spec(), alpha);
    double mass = 0.0;
    for (int j = 0; j <= 4; ++j) mass += p[j] * t.w[j];
    EXPECT_NEAR(tilted_cdf(p, unit_spec(), alpha, 1.0), mass, 1e-12);
    double prev = 0.0;
    for (int g = 0; g <= 50; ++g) {
        const double v = tilted_cdf(p, unit_spec(), alpha, g / 50.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(OriginalScale, UniformBaseline) {
    const auto spec = testing_support::chd_spec();
    const auto u = MixtureWeights::uniform(Degree(3));
    for (double y : {20.0, 33.3, 70.0})
        EXPECT_NEAR(density_original_scale(u.values(), spec, {-1.0, 0.02}, y, 0), 1.0 / 50.0, 1e-15);
    EXPECT_THROW(density_original_scale(u.values(), spec, {0.0, 0.0}, 71.0, 0), DomainError);
    EXPECT_THROW(density_original_scale(u.values(), spec, {0.0, 0.0}, 30.0, 2), DomainError);
    EXPECT_NEAR(cdf_original_scale(u.values(), spec, {0.0, 0.0}, 45.0, 0), 0.5, 1e-12);
}

TEST(OriginalScale, UnitSupportReduces) {
    const std::vector<double> p{0.1, 0.6, 0.3};
    const TiltCoefficients alpha{-0.2, 0.7};
    EXPECT_NEAR(density_original_scale(p, unit_spec(), alpha, 0.4, 1), tilted_density(p, unit_spec(), alpha, 0.4),
                1e-15);
    EXPECT_NEAR(density_original_scale(p, unit_spec(), alpha, 0.4, 0), mixture_density(p, 0.4), 1e-15);
}

TEST(OriginalScale, FittedDensitiesIntegrateToOne) {
    const auto data = testing_support::chd_data();
    const auto spec = testing_support::chd_spec();
    const auto fit = em_fit(Degree(3), data, spec);
    const QuadratureRule rule(16);
    for (int g = 0; g < 2; ++g) {
        const double mass = rule.integrate(
            [&](double y) { return density_original_scale(fit.p_hat, spec, fit.alpha_hat, y, g); }, 20.0, 70.0);
        EXPECT_NEAR(mass, 1.0, 1e-6) << "group " << g;
        EXPECT_NEAR(cdf_original_scale(fit.p_hat, spec, fit.alpha_hat, 70.0, g), 1.0, 1e-6);
        EXPECT_EQ(cdf_original_scale(fit.p_hat, spec, fit.alpha_hat, 20.0, g), 0.0);
    }
}
