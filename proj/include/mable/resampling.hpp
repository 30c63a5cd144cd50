#ifndef MABLE_RESAMPLING_HPP
#define MABLE_RESAMPLING_HPP

// Drawing from fitted tilted Bernstein mixtures and parametric-bootstrap
// standard errors of the tilt estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "mable/bernstein.hpp"
#include "mable/data.hpp"
#include "mable/em.hpp"
#include "mable/logistic.hpp"
#include "mable/parallel.hpp"
#include "mable/quadrature.hpp"
#include "mable/random.hpp"
#include "mable/regressor.hpp"
#include "mable/tilt.hpp"

namespace mable {

/// (p, alpha) at a fixed degree together with the regressor they refer to.
struct FittedModel {
    RegressorSpec spec;
    std::vector<double> p;
    TiltCoefficients alpha;

    int degree() const { return static_cast<int>(p.size()) - 1; }
};

inline constexpr double sampler_constraint_tolerance = 1e-4;

/// Sampler for group i of a fitted model: pick component j with probability
/// p_j w_mj(i alpha), then invert that tilted beta's distribution function,
/// tabulated on a uniform grid and interpolated linearly.
class FittedSampler {
public:
    static constexpr int coarse_grid = 2048;
    static constexpr int fine_grid = 8192;

    FittedSampler(const FittedModel& model, int group) : group_(group) {
        detail::require(group == 0 || group == 1, "group must be 0 or 1");
        const int m = model.degree();
        const TiltCoefficients tilt = model.alpha.scaled(group);
        const TiltIntegrator integrator(m, model.spec, QuadratureRule::for_model(m, model.spec.dimension()));
        const Eigen::VectorXd w = integrator.weights(tilt);

        double mass = 0.0;
        for (int j = 0; j <= m; ++j) mass += model.p[j] * w[j];
        if (std::fabs(mass - 1.0) > sampler_constraint_tolerance) {
            std::ostringstream os;
            os << "fitted group-" << group << " mixture has total mass " << mass
               << "; the constraint is violated beyond " << sampler_constraint_tolerance;
            throw NumericError(os.str());
        }

        double running = 0.0;
        for (int j = 0; j <= m; ++j) {
            if (!(model.p[j] > 0.0)) continue;
            running += model.p[j] * w[j] / mass;
            components_.push_back(j);
            component_cdf_.push_back(running);
            tables_.push_back(component_table(model.spec, tilt, m, j));
        }
        if (components_.empty()) throw NumericError("fitted model has no positive weights");
        component_cdf_.back() = 1.0;
    }

    int group() const noexcept { return group_; }

    /// Probability of each basis component, p_j w_mj(i alpha) normalized.
    std::vector<std::pair<int, double>> component_probabilities() const {
        std::vector<std::pair<int, double>> out;
        double prev = 0.0;
        for (std::size_t c = 0; c < components_.size(); ++c) {
            out.emplace_back(components_[c], component_cdf_[c] - prev);
            prev = component_cdf_[c];
        }
        return out;
    }

    std::size_t grid_size(int component) const {
        for (std::size_t c = 0; c < components_.size(); ++c)
            if (components_[c] == component) return tables_[c].size();
        return 0;
    }

    double draw(Engine& rng) const {
        const double pick = uniform01(rng);
        const auto c = static_cast<std::size_t>(
            std::upper_bound(component_cdf_.begin(), component_cdf_.end(), pick) -
            component_cdf_.begin());
        const auto& cdf = tables_[std::min(c, tables_.size() - 1)];
        const double v = uniform01(rng);
        const auto hi = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), v) - cdf.begin());
        if (hi == 0) return 0.0;
        if (hi >= cdf.size()) return 1.0;
        const std::size_t lo = hi - 1;
        const double h = 1.0 / (cdf.size() - 1);
        const double span = cdf[hi] - cdf[lo];
        const double frac = span > 0.0 ? (v - cdf[lo]) / span : 0.0;
        return std::clamp((lo + frac) * h, 0.0, 1.0);
    }

    std::vector<double> sample(std::size_t n, Engine& rng) const {
        std::vector<double> out(n);
        for (auto& x : out) x = draw(rng);
        return out;
    }

private:
    // Cumulative distribution of beta_mj(u) exp{alpha' r~} on a uniform grid,
    // normalized to end at one.
    static std::vector<double> component_table(const RegressorSpec& spec,
                                               const TiltCoefficients& tilt, int m, int j) {
        auto density = [&](double u) {
            return beta_basis(Degree(m), j, u) * tilt_at(spec, tilt, u);
        };
        int grid = coarse_grid;
        {
            double peak = 0.0, jump = 0.0, prev = density(0.0);
            for (int k = 1; k < coarse_grid; ++k) {
                const double cur = density(static_cast<double>(k) / (coarse_grid - 1));
                peak = std::max(peak, cur);
                jump = std::max(jump, std::fabs(cur - prev));
                prev = cur;
            }
            if (jump > 0.01 * peak) grid = fine_grid;
        }
        const QuadratureRule cell_rule(1, 8);
        std::vector<double> cdf(grid, 0.0);
        const double h = 1.0 / (grid - 1);
        for (int k = 1; k < grid; ++k) {
            const double lo = (k - 1) * h;
            cdf[k] = cdf[k - 1] + cell_rule.integrate(density, lo, std::min(1.0, lo + h));
        }
        const double total = cdf.back();
        if (!(total > 0.0)) throw NumericError("tilted beta component has zero mass");
        for (double& v : cdf) v /= total;
        cdf.back() = 1.0;
        return cdf;
    }

    int group_;
    std::vector<int> components_;
    std::vector<double> component_cdf_;
    std::vector<std::vector<double>> tables_;
};

/// n draws on [0, 1] from group i of a fitted model.
inline std::vector<double> sample(const FittedModel& model, int group, std::size_t n,
                                  std::uint64_t seed) {
    const FittedSampler sampler(model, group);
    Engine rng = substream(seed, 0);
    return sampler.sample(n, rng);
}

struct BootstrapReport {
    int replicates = 0;                          // B
    std::vector<Eigen::VectorXd> alpha_star;     // successful replicates, by index
    Eigen::VectorXd se;
    int failures = 0;
};

inline constexpr double max_bootstrap_failure_rate = 0.05;

/// Failure accounting and componentwise sample standard deviations over the
/// successful replicates, in replicate order.
inline BootstrapReport summarize_replicates(std::vector<std::optional<Eigen::VectorXd>> results) {
    BootstrapReport report;
    report.replicates = static_cast<int>(results.size());
    for (auto& r : results) {
        if (r) report.alpha_star.push_back(std::move(*r));
        else ++report.failures;
    }
    if (report.failures > max_bootstrap_failure_rate * report.replicates) {
        std::ostringstream os;
        os << report.failures << " of " << report.replicates
           << " bootstrap replicates failed (more than 5%)";
        throw NumericError(os.str());
    }
    const auto ok = report.alpha_star.size();
    if (ok < 2) throw NumericError("fewer than two successful bootstrap replicates");
    const auto dim = report.alpha_star.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& a : report.alpha_star) mean += a;
    mean /= static_cast<double>(ok);
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(dim);
    for (const auto& a : report.alpha_star) ss += (a - mean).cwiseAbs2();
    report.se = (ss / static_cast<double>(ok - 1)).cwiseSqrt();
    return report;
}

/// Parametric bootstrap at a fixed degree: redraw both samples from the fitted
/// densities, refit (MELE then EM), and take componentwise standard deviations.
inline BootstrapReport bootstrap_se(const FittedModel& model, int n0, int n1, int replicates,
                                    const EmConfig& config, std::uint64_t seed,
                                    unsigned threads = 1) {
    detail::require(replicates >= 2, "bootstrap needs at least two replicates");
    detail::require(n0 >= 1 && n1 >= 1, "bootstrap sample sizes must be positive");
    const FittedSampler sampler0(model, 0);
    const FittedSampler sampler1(model, 1);
    const int m = model.degree();

    std::vector<std::optional<Eigen::VectorXd>> results(replicates);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t b) {
        Engine rng = substream(seed, b);
        auto x0 = sampler0.sample(n0, rng);
        auto x1 = sampler1.sample(n1, rng);
        try {
            const TwoSampleData data(std::move(x0), std::move(x1));
            const auto fit = em_fit(Degree(m), data, model.spec, config);
            results[b] = fit.alpha_hat.vector();
        } catch (const Error&) {
            results[b].reset();
        }
    });

    return summarize_replicates(std::move(results));
}

}  // namespace mable

#endif  // MABLE_RESAMPLING_HPP
