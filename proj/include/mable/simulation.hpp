#ifndef MABLE_SIMULATION_HPP
#define MABLE_SIMULATION_HPP

// Monte Carlo comparison of the Bernstein estimator against parametric and
// kernel competitors for the normal-shift and exponential-scale models.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mable/comparators.hpp"
#include "mable/data.hpp"
#include "mable/em.hpp"
#include "mable/logistic.hpp"
#include "mable/parallel.hpp"
#include "mable/random.hpp"
#include "mable/regressor.hpp"
#include "mable/selection.hpp"
#include "mable/tilt.hpp"

namespace mable {

enum class SimModel { normal, exponential };

inline const char* to_string(SimModel m) { return m == SimModel::normal ? "normal" : "exponential"; }

inline SimModel parse_sim_model(const std::string& s) {
    if (s == "normal") return SimModel::normal;
    if (s == "exponential") return SimModel::exponential;
    throw DomainError("model must be 'normal' or 'exponential', got '" + s + "'");
}

struct SimScenario {
    SimModel model = SimModel::normal;
    double mu = 1.0;            // normal shift or exponential mean of the case group
    int n0 = 50;
    int n1 = 50;
    int runs = 200;
    std::uint64_t seed = 1;
    std::optional<SweepMode> mode;                  // default: full (normal), profile (exponential)
    std::optional<CandidateDegrees> candidates;     // default: 5..35 (normal), 2..15 (exponential)
    int grid_intervals = 512;                       // N
    EmConfig config;
    unsigned threads = 1;

    void validate() const {
        detail::require(runs >= 1, "runs must be at least one");
        detail::require(n0 >= 2 && n1 >= 2, "sample sizes must be at least two");
        detail::require(grid_intervals >= 1, "grid size must be positive");
        if (model == SimModel::exponential) detail::require(mu > 0.0, "exponential mean must be positive");
        detail::require(std::isfinite(mu), "mu must be finite");
    }

    SweepMode sweep_mode() const {
        return mode ? *mode : (model == SimModel::normal ? SweepMode::full : SweepMode::profile);
    }

    CandidateDegrees candidate_degrees() const {
        if (candidates) return *candidates;
        return model == SimModel::normal ? CandidateDegrees{5, 30} : CandidateDegrees{2, 13};
    }

    Support support() const {
        if (model == SimModel::normal) return {std::min(-4.0, mu - 4.0), std::max(4.0, mu + 4.0)};
        return {0.0, 5.0 * mu};
    }

    RegressorSpec regressor() const { return RegressorSpec::polynomial(1, support()); }

    /// Tilt of the untruncated model: f1 = f0 exp{alpha0 + alpha1 y}.
    TiltCoefficients true_alpha() const {
        if (model == SimModel::normal) return {-mu * mu / 2.0, mu};
        return {-std::log(mu), 1.0 - 1.0 / mu};
    }

    /// Untruncated density of group i.
    double raw_density(int group, double y) const {
        if (model == SimModel::normal) {
            const double z = y - (group == 0 ? 0.0 : mu);
            return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        }
        const double mean = group == 0 ? 1.0 : mu;
        return y < 0.0 ? 0.0 : std::exp(-y / mean) / mean;
    }

    double raw_cdf(int group, double y) const {
        if (model == SimModel::normal) {
            const double z = y - (group == 0 ? 0.0 : mu);
            return 0.5 * std::erfc(-z / std::numbers::sqrt2);
        }
        const double mean = group == 0 ? 1.0 : mu;
        return y <= 0.0 ? 0.0 : -std::expm1(-y / mean);
    }

    /// Density of group i truncated to the support, the scoring target.
    double true_density(int group, double y) const {
        const Support s = support();
        if (!s.contains(y)) return 0.0;
        return raw_density(group, y) / (raw_cdf(group, s.upper()) - raw_cdf(group, s.lower()));
    }
};

struct SimSample {
    std::vector<double> y0;   // original scale
    std::vector<double> y1;
    TwoSampleData data;       // transformed to [0, 1]
};

/// Samples for one run, drawn from the distributions truncated to the support.
inline SimSample generate(const SimScenario& sc, int run) {
    sc.validate();
    Engine rng = substream(sc.seed, static_cast<std::uint64_t>(run));
    const Support s = sc.support();
    auto draw = [&](int group, int n) {
        std::vector<double> y;
        y.reserve(n);
        std::normal_distribution<double> normal(group == 0 ? 0.0 : sc.mu, 1.0);
        std::exponential_distribution<double> expo(1.0 / (group == 0 ? 1.0 : sc.mu));
        while (static_cast<int>(y.size()) < n) {
            const double v = sc.model == SimModel::normal ? normal(rng) : expo(rng);
            if (s.contains(v)) y.push_back(v);
        }
        return y;
    };
    auto y0 = draw(0, sc.n0);
    auto y1 = draw(1, sc.n1);
    auto data = TwoSampleData::from_original(y0, y1, s);
    return {std::move(y0), std::move(y1), std::move(data)};
}

/// Grid t_j = a + j (b - a)/N, j = 0..N.
inline std::vector<double> scoring_grid(const Support& s, int intervals) {
    std::vector<double> t(intervals + 1);
    for (int j = 0; j <= intervals; ++j) t[j] = s.lower() + j * s.width() / intervals;
    t.back() = s.upper();
    return t;
}

/// mise = N^-1 sum_{j=1..N} mse_j over a pointwise curve of length N + 1.
inline double grid_average(std::span<const double> pointwise) {
    double total = 0.0;
    for (std::size_t j = 1; j < pointwise.size(); ++j) total += pointwise[j];
    return total / static_cast<double>(pointwise.size() - 1);
}

inline constexpr int estimator_count = 4;
inline const char* estimator_name(int e) {
    static const char* names[estimator_count] = {"parametric", "mable", "kernel_semiparametric",
                                                 "kernel_one_sample"};
    return names[e];
}

/// Density curves of each estimator for both groups on the scoring grid.
struct RunEstimates {
    std::vector<double> curves[estimator_count][2];
    Eigen::VectorXd alpha_hat;     // original orientation: f1 = f0 exp{alpha' r~}
    Eigen::VectorXd alpha_tilde;
    int degree = 0;
};

/// Squared errors of one run against the truth.
struct RunScore {
    std::vector<double> sq_err[estimator_count][2];
    Eigen::VectorXd alpha_hat_sq;
    Eigen::VectorXd alpha_tilde_sq;
    int degree = 0;
};

inline RunScore score_run(const RunEstimates& est, const SimScenario& sc,
                          std::span<const double> grid) {
    RunScore score;
    for (int e = 0; e < estimator_count; ++e) {
        for (int g = 0; g < 2; ++g) {
            const auto& curve = est.curves[e][g];
            detail::require(curve.size() == grid.size(), "estimate does not match the scoring grid");
            auto& out = score.sq_err[e][g];
            out.resize(grid.size());
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const double diff = curve[j] - sc.true_density(g, grid[j]);
                out[j] = diff * diff;
            }
        }
    }
    const Eigen::VectorXd truth = sc.true_alpha().vector();
    score.alpha_hat_sq = (est.alpha_hat - truth).cwiseAbs2();
    score.alpha_tilde_sq = (est.alpha_tilde - truth).cwiseAbs2();
    score.degree = est.degree;
    return score;
}

/// Fits every estimator to one generated sample.
inline RunEstimates estimate_run(const SimScenario& sc, const SimSample& sample,
                                 std::span<const double> grid) {
    const RegressorSpec spec = sc.regressor();
    PipelineOptions opts;
    opts.candidates = sc.candidate_degrees();
    opts.mode = sc.sweep_mode();
    opts.config = sc.config;
    const PipelineResult res = fit_two_sample(sample.data, spec, opts);
    const bool swapped = res.baseline.swapped;

    RunEstimates est;
    est.degree = res.fit.m;
    est.alpha_hat = swapped ? Eigen::VectorXd(-res.fit.alpha_hat.vector())
                            : res.fit.alpha_hat.vector();
    const TiltCoefficients alpha_tilde = mele_logistic(sample.data, spec);
    est.alpha_tilde = alpha_tilde.vector();

    const ParametricFamily family =
        sc.model == SimModel::normal ? ParametricFamily::normal : ParametricFamily::exponential;
    const std::vector<double>* ys[2] = {&sample.y0, &sample.y1};
    std::vector<double> h(2);
    for (int g = 0; g < 2; ++g) {
        const auto mle = parametric_mle(*ys[g], family);
        auto& curve = est.curves[0][g];
        curve.resize(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) curve[j] = mle.density(grid[j]);

        auto& bern = est.curves[1][g];
        bern.resize(grid.size());
        const int oriented = swapped ? 1 - g : g;
        for (std::size_t j = 0; j < grid.size(); ++j)
            bern[j] = density_original_scale(res.fit.p_hat, spec, res.fit.alpha_hat, grid[j], oriented);

        const auto kde = kde_one_sample(*ys[g], grid);
        h[g] = kde.bandwidth;
        est.curves[3][g] = kde.values;
    }
    // Both semiparametric curves reuse the one-sample nrd0 bandwidth of their group.
    est.curves[2][0] = kde_semiparametric(sample.y0, sample.y1, spec, alpha_tilde, grid, h[0]).first.values;
    est.curves[2][1] = kde_semiparametric(sample.y0, sample.y1, spec, alpha_tilde, grid, h[1]).second.values;
    return est;
}

struct EstimatorMetrics {
    std::string name;
    std::vector<double> pmse[2];   // pointwise mean squared error per group
    double mise[2] = {0.0, 0.0};
};

struct MetricTable {
    SimModel model = SimModel::normal;
    double mu = 0.0;
    int n0 = 0, n1 = 0;
    SweepMode mode = SweepMode::full;
    int runs_requested = 0;
    int runs_ok = 0;
    int failures = 0;
    double mean_degree = 0.0;
    double sd_degree = 0.0;
    Eigen::VectorXd mse_alpha_hat;
    Eigen::VectorXd mse_alpha_tilde;
    std::vector<double> grid;
    std::vector<EstimatorMetrics> estimators;
    std::vector<std::string> failure_messages;

    const EstimatorMetrics& estimator(const std::string& name) const {
        for (const auto& e : estimators)
            if (e.name == name) return e;
        throw DomainError("unknown estimator '" + name + "'");
    }
};

inline constexpr double max_run_failure_rate = 0.02;

inline MetricTable run_monte_carlo(const SimScenario& sc) {
    sc.validate();
    const auto grid = scoring_grid(sc.support(), sc.grid_intervals);
    struct Slot {
        std::optional<RunScore> score;
        std::string error;
    };
    std::vector<Slot> slots(sc.runs);
    parallel_for(static_cast<std::size_t>(sc.runs), sc.threads, [&](std::size_t r) {
        try {
            const auto sample = generate(sc, static_cast<int>(r));
            slots[r].score = score_run(estimate_run(sc, sample, grid), sc, grid);
        } catch (const Error& e) {
            slots[r].error = e.what();
        }
    });

    MetricTable table;
    table.model = sc.model;
    table.mu = sc.mu;
    table.n0 = sc.n0;
    table.n1 = sc.n1;
    table.mode = sc.sweep_mode();
    table.runs_requested = sc.runs;
    table.grid = grid;
    table.mse_alpha_hat = Eigen::VectorXd::Zero(2);
    table.mse_alpha_tilde = Eigen::VectorXd::Zero(2);
    for (int e = 0; e < estimator_count; ++e) {
        EstimatorMetrics m;
        m.name = estimator_name(e);
        m.pmse[0].assign(grid.size(), 0.0);
        m.pmse[1].assign(grid.size(), 0.0);
        table.estimators.push_back(std::move(m));
    }
    std::vector<double> degrees;
    for (int r = 0; r < sc.runs; ++r) {
        const auto& slot = slots[r];
        if (!slot.score) {
            ++table.failures;
            table.failure_messages.push_back("run " + std::to_string(r) + ": " + slot.error);
            continue;
        }
        const RunScore& s = *slot.score;
        degrees.push_back(s.degree);
        table.mse_alpha_hat += s.alpha_hat_sq;
        table.mse_alpha_tilde += s.alpha_tilde_sq;
        for (int e = 0; e < estimator_count; ++e)
            for (int g = 0; g < 2; ++g)
                for (std::size_t j = 0; j < grid.size(); ++j)
                    table.estimators[e].pmse[g][j] += s.sq_err[e][g][j];
    }
    table.runs_ok = static_cast<int>(degrees.size());
    if (table.failures > max_run_failure_rate * sc.runs || table.runs_ok == 0) {
        std::ostringstream os;
        os << table.failures << " of " << sc.runs << " Monte Carlo runs failed (limit 2%)";
        if (!table.failure_messages.empty()) os << "; first: " << table.failure_messages.front();
        throw NumericError(os.str());
    }
    const double runs = table.runs_ok;
    table.mse_alpha_hat /= runs;
    table.mse_alpha_tilde /= runs;
    for (auto& m : table.estimators) {
        for (int g = 0; g < 2; ++g) {
            for (double& v : m.pmse[g]) v /= runs;
            m.mise[g] = grid_average(m.pmse[g]);
        }
    }
    double mean = 0.0;
    for (double d : degrees) mean += d;
    mean /= runs;
    double ss = 0.0;
    for (double d : degrees) ss += (d - mean) * (d - mean);
    table.mean_degree = mean;
    table.sd_degree = degrees.size() > 1 ? std::sqrt(ss / (runs - 1.0)) : 0.0;
    return table;
}

/// One header line and one row: mse x 10^2, mise x 10^4.
inline void write_metric_csv(std::ostream& os, const MetricTable& t) {
    os << "model,mu,n0,n1,mode,runs,failures,E_m,sd_m,"
          "mse100_alpha_hat_0,mse100_alpha_hat_1,mse100_alpha_tilde_0,mse100_alpha_tilde_1";
    for (const auto& e : t.estimators) os << ",mise10000_f0_" << e.name;
    for (const auto& e : t.estimators) os << ",mise10000_f1_" << e.name;
    os << "\n";
    os << std::setprecision(10) << to_string(t.model) << ',' << t.mu << ',' << t.n0 << ','
       << t.n1 << ',' << to_string(t.mode) << ',' << t.runs_ok << ',' << t.failures << ','
       << t.mean_degree << ',' << t.sd_degree << ',' << 100 * t.mse_alpha_hat[0] << ','
       << 100 * t.mse_alpha_hat[1] << ',' << 100 * t.mse_alpha_tilde[0] << ','
       << 100 * t.mse_alpha_tilde[1];
    for (int g = 0; g < 2; ++g)
        for (const auto& e : t.estimators) os << ',' << 1e4 * e.mise[g];
    os << "\n";
}

/// Pointwise MSE curves (plot data): t, then one column per estimator and group.
inline void write_pmse_csv(std::ostream& os, const MetricTable& t) {
    os << "t";
    for (int g = 0; g < 2; ++g)
        for (const auto& e : t.estimators) os << ",pmse_f" << g << '_' << e.name;
    os << "\n" << std::setprecision(10);
    for (std::size_t j = 0; j < t.grid.size(); ++j) {
        os << t.grid[j];
        for (int g = 0; g < 2; ++g)
            for (const auto& e : t.estimators) os << ',' << e.pmse[g][j];
        os << "\n";
    }
}

/// Aligned text row in the column order mu, E(m), sd(m), mse x 10^2 of
/// alpha_hat_0, alpha_hat_1, alpha_tilde_0, alpha_tilde_1, mise x 10^4 of the
/// parametric, Bernstein, semiparametric kernel and one-sample kernel f0.
inline void write_metric_text(std::ostream& os, const MetricTable& t) {
    os << "# " << to_string(t.model) << " model, n0 = " << t.n0 << ", n1 = " << t.n1 << ", "
       << t.runs_ok << " runs (" << t.failures << " failed), degree mode " << to_string(t.mode)
       << "\n";
    os << std::setw(6) << "mu" << std::setw(8) << "E(m)" << std::setw(8) << "sd(m)"
       << std::setw(9) << "a0_hat" << std::setw(9) << "a1_hat" << std::setw(9) << "a0_mele"
       << std::setw(9) << "a1_mele" << std::setw(9) << "f0P" << std::setw(9) << "f0"
       << std::setw(9) << "f0S" << std::setw(9) << "f0N" << "\n";
    os << std::fixed << std::setprecision(2) << std::setw(6) << t.mu << std::setw(8)
       << t.mean_degree << std::setw(8) << t.sd_degree << std::setw(9) << 100 * t.mse_alpha_hat[0]
       << std::setw(9) << 100 * t.mse_alpha_hat[1] << std::setw(9) << 100 * t.mse_alpha_tilde[0]
       << std::setw(9) << 100 * t.mse_alpha_tilde[1];
    for (const auto& e : t.estimators) os << std::setw(9) << 1e4 * e.mise[0];
    os << "\n";
    os.unsetf(std::ios::floatfield);
}

}  // namespace mable

#endif  // MABLE_SIMULATION_HPP
