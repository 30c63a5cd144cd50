#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "mable/bernstein.hpp"
#include "mable/special.hpp"
#include "support.hpp"

using namespace mable;

namespace {

// P(Bin(n, x) >= k) by direct summation of binomial terms.
double binomial_tail(int n, int k, double x) {
    double total = 0.0;
    for (int i = k; i <= n; ++i) {
        long double c = 1.0L;
        for (int t = 1; t <= i; ++t) c = c * (n - i + t) / t;
        total += static_cast<double>(c * std::pow(static_cast<long double>(x), i) *
                                     std::pow(1.0L - x, n - i));
    }
    return total;
}

// (m+1) C(m,j) x^j (1-x)^(m-j) by an iterative product in long double.
double basis_by_product(int m, int j, double x) {
    long double c = m + 1;
    for (int t = 1; t <= j; ++t) c = c * (m - j + t) / t;
    return static_cast<double>(c * std::pow(static_cast<long double>(x), j) *
                               std::pow(1.0L - x, m - j));
}

double simpson(auto f, double lo, double hi, int intervals) {
    const double h = (hi - lo) / intervals;
    double s = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST(IncompleteBeta, MatchesBinomialTail) {
    for (int m : {0, 1, 3, 10, 40}) {
        for (int j = 0; j <= m; ++j) {
            for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) {
                EXPECT_NEAR(incomplete_beta(j + 1, m - j + 1, x), binomial_tail(m + 1, j + 1, x), 1e-12)
                    << "m=" << m << " j=" << j << " x=" << x;
            }
        }
    }
}

TEST(IncompleteBeta, Endpoints) {
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
    EXPECT_THROW(incomplete_beta(2.0, 3.0, 1.5), DomainError);
}

TEST(LogBinomial, SmallExact) {
    EXPECT_NEAR(std::exp(log_binomial(10, 3)), 120.0, 1e-9);
    EXPECT_NEAR(std::exp(log_binomial(20, 10)), 184756.0, 1e-6);
}

TEST(BetaBasis, Endpoints) {
    EXPECT_DOUBLE_EQ(beta_basis(Degree(3), 0, 0.0), 4.0);
    EXPECT_EQ(beta_basis(Degree(3), 3, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(beta_basis(Degree(3), 3, 1.0), 4.0);
}

TEST(BetaBasis, MatchesProductFormula) {
    for (auto [m, j, x] : {std::tuple{50, 25, 0.5}, {50, 3, 0.1}, {12, 7, 0.63}, {200, 100, 0.5}}) {
        const double want = basis_by_product(m, j, x);
        EXPECT_NEAR(beta_basis(Degree(m), j, x), want, 1e-10 * want) << m << "," << j;
    }
}

TEST(BetaBasis, DomainErrors) {
    EXPECT_THROW(beta_basis(Degree(3), 4, 0.5), DomainError);
    EXPECT_THROW(beta_basis(Degree(3), -1, 0.5), DomainError);
    EXPECT_THROW(beta_basis(Degree(3), 1, 1.01), DomainError);
    EXPECT_THROW(beta_basis(Degree(3), 1, -0.01), DomainError);
    EXPECT_THROW(Degree(513), DomainError);
    EXPECT_THROW(Degree(-1), DomainError);
    EXPECT_NO_THROW(Degree(512));
}

TEST(BetaBasis, PartitionOfUnity) {
    for (int m : {0, 1, 5, 50, 200, 512}) {
        for (int g = 0; g <= 50; ++g) {
            const double x = g / 50.0;
            const auto row = basis_row(m, x);
            const double total = std::accumulate(row.begin(), row.end(), 0.0) / (m + 1);
            EXPECT_NEAR(total, 1.0, 1e-10) << "m=" << m << " x=" << x;
        }
    }
}

TEST(MixtureWeights, Validation) {
    EXPECT_THROW(MixtureWeights({0.5, 0.6}), DomainError);
    EXPECT_THROW(MixtureWeights({1.2, -0.2}), DomainError);
    EXPECT_THROW(MixtureWeights({}), DomainError);
    EXPECT_NO_THROW(MixtureWeights({0.25, 0.75}));
    const auto u = MixtureWeights::uniform(Degree(4));
    EXPECT_EQ(u.values().size(), 5u);
}

TEST(MixtureDensity, UniformIsOne) {
    for (int m : {0, 3, 17}) {
        const auto p = MixtureWeights::uniform(Degree(m));
        for (double x : {0.0, 0.13, 0.5, 0.99, 1.0}) EXPECT_NEAR(mixture_density(p, x), 1.0, 1e-12);
    }
}

TEST(MixtureDensity, SingleComponent) { EXPECT_DOUBLE_EQ(mixture_density(MixtureWeights({1.0, 0.0}), 0.25), 1.5); }

TEST(MixtureDensity, MatchesTermSum) {
    Engine rng = substream(11, 0);
    const auto p = testing_support::random_simplex(6, rng);
    double want = 0.0;
    for (int j = 0; j <= 5; ++j) want += p[j] * basis_by_product(5, j, 0.3);
    EXPECT_NEAR(mixture_density(p, 0.3), want, 1e-12);
}

TEST(MixtureCdf, KnownValues) {
    EXPECT_NEAR(mixture_cdf_untilted(MixtureWeights::uniform(Degree(2)), 0.5), 0.5, 1e-14);
    Engine rng = substream(12, 0);
    const auto p = testing_support::random_simplex(8, rng);
    EXPECT_NEAR(mixture_cdf_untilted(p, 1.0), 1.0, 1e-14);
    EXPECT_EQ(mixture_cdf_untilted(p, 0.0), 0.0);
}

TEST(MixtureCdf, MatchesIntegratedDensity) {
    const std::vector<double> p{0.5, 0.5, 0.0, 0.0};
    const double want = simpson([&](double x) { return mixture_density(p, x); }, 0.0, 0.4, 2000);
    EXPECT_NEAR(mixture_cdf_untilted(p, 0.4), want, 1e-8);
}

TEST(MixtureCdf, Nondecreasing) {
    Engine rng = substream(13, 0);
    const auto p = testing_support::random_simplex(12, rng);
    double prev = 0.0;
    for (int g = 0; g <= 500; ++g) {
        const double v = mixture_cdf_untilted(p, g / 500.0);
        EXPECT_GE(v, prev - 1e-15);
        prev = v;
    }
}

TEST(Elevate, ExplicitFormula) {
    const auto q = elevate(std::vector<double>{1.0, 0.0});
    ASSERT_EQ(q.size(), 3u);
    EXPECT_NEAR(q[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(q[1], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(q[2], 0.0, 1e-15);
}

TEST(Elevate, UniformStaysUniform) {
    const auto q = elevate(MixtureWeights::uniform(Degree(6)));
    for (double v : q.values()) EXPECT_NEAR(v, 1.0 / 8.0, 1e-15);
}

TEST(Elevate, PreservesDensityAndSimplex) {
    Engine rng = substream(14, 0);
    for (int rep = 0; rep < 10; ++rep) {
        const auto p = testing_support::random_simplex(5, rng);
        const auto q = elevate(p);
        EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-12);
        for (double v : q) EXPECT_GE(v, 0.0);
        double worst = 0.0;
        for (int g = 0; g <= 1000; ++g) {
            const double x = g / 1000.0;
            worst = std::max(worst, std::fabs(mixture_density(q, x) - mixture_density(p, x)));
        }
        EXPECT_LE(worst, 1e-10);
    }
}

TEST(GridDensity, TrapezoidOfUniformMixture) {
    GridDensity g;
    for (int i = 0; i <= 200; ++i) {
        g.xs.push_back(i / 200.0);
        g.values.push_back(mixture_density(std::vector<double>{0.2, 0.3, 0.5}, i / 200.0));
    }
    EXPECT_NEAR(g.trapezoid_integral(), 1.0, 1e-4);
}
