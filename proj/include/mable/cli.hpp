#ifndef MABLE_CLI_HPP
#define MABLE_CLI_HPP

// Command implementations behind the `mable` executable. Each command takes a
// RunConfig and returns its artifact; file output goes through write_atomic.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "mable/report.hpp"
#include "mable/resampling.hpp"
#include "mable/selection.hpp"
#include "mable/simulation.hpp"

namespace mable {

struct RunConfig {
    std::filesystem::path input;
    std::optional<std::filesystem::path> output;
    std::optional<std::pair<double, double>> support;
    double margin = 0.0;
    int regressor_degree = 1;
    std::optional<CandidateDegrees> candidates;
    std::optional<int> fixed_degree;
    SweepMode mode = SweepMode::full;
    EmConfig em;
    int bootstrap = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// "M0:MK" to candidate degrees M0..MK.
inline CandidateDegrees parse_degree_range(const std::string& text) {
    const auto colon = text.find(':');
    auto fail = [&] { return DomainError("degree range must look like M0:MK, got '" + text + "'"); };
    if (colon == std::string::npos) throw fail();
    int lo = 0, hi = 0;
    try {
        std::size_t a = 0, b = 0;
        lo = std::stoi(text.substr(0, colon), &a);
        hi = std::stoi(text.substr(colon + 1), &b);
        if (a != colon || b != text.size() - colon - 1) throw fail();
    } catch (const std::logic_error&) {
        throw fail();
    }
    detail::require(hi > lo, "degree range needs MK > M0");
    CandidateDegrees c{lo, hi - lo};
    c.validate();
    return c;
}

inline Support resolve_support(const RunConfig& cfg, const TwoSampleCsv& raw) {
    if (cfg.support) return {cfg.support->first, cfg.support->second};
    return raw.default_support(cfg.margin);
}

inline FitReport cmd_fit(const RunConfig& cfg) {
    const TwoSampleCsv raw = read_two_sample_csv(cfg.input);
    const Support support = resolve_support(cfg, raw);
    const RegressorSpec spec = RegressorSpec::polynomial(cfg.regressor_degree, support);
    const TwoSampleData data = TwoSampleData::from_original(raw.y0, raw.y1, support);
    PipelineOptions opts;
    opts.fixed_degree = cfg.fixed_degree;
    opts.candidates = cfg.candidates;
    opts.mode = cfg.mode;
    opts.config = cfg.em;
    return make_report(fit_two_sample(data, spec, opts), spec, cfg.regressor_degree);
}

/// Fit, then parametric-bootstrap standard errors at the fitted degree.
inline FitReport cmd_bootstrap(const RunConfig& cfg) {
    FitReport report = cmd_fit(cfg);
    const int n0 = report.swapped ? report.n1 : report.n0;
    const int n1 = report.swapped ? report.n0 : report.n1;
    const auto boot = bootstrap_se(report.model(), n0, n1, cfg.bootstrap, cfg.em, cfg.seed, cfg.threads);
    report.alpha_se = detail::to_std(boot.se);
    report.bootstrap = BootstrapSummary{boot.replicates, boot.failures, cfg.seed};
    return report;
}

/// CSV of x, f0, f1, F0, F1 at x_j = a + j (b - a)/N, j = 0..N, in the input labeling.
inline std::string cmd_density(const FitReport& report, int intervals = 512) {
    detail::require(intervals >= 1, "grid size must be positive");
    const FittedModel model = report.model();
    const Support s = report.support();
    const int g0 = report.fitted_group(0);
    const int g1 = report.fitted_group(1);
    std::ostringstream os;
    os << "x,f0,f1,F0,F1\n" << std::setprecision(12);
    for (int j = 0; j <= intervals; ++j) {
        const double x = j == intervals ? s.upper() : s.lower() + j * s.width() / intervals;
        os << x << ',' << density_original_scale(model.p, model.spec, model.alpha, x, g0) << ','
           << density_original_scale(model.p, model.spec, model.alpha, x, g1) << ','
           << cdf_original_scale(model.p, model.spec, model.alpha, x, g0) << ','
           << cdf_original_scale(model.p, model.spec, model.alpha, x, g1) << '\n';
    }
    return os.str();
}

/// A `value,group` CSV drawn from the fitted densities, in the input labeling.
inline std::string cmd_sample(const FitReport& report, int n0, int n1, std::uint64_t seed) {
    detail::require(n0 >= 1 && n1 >= 1, "sample sizes must be positive");
    const FittedModel model = report.model();
    const Support s = report.support();
    std::ostringstream os;
    os << "value,group\n" << std::setprecision(17);
    const int sizes[2] = {n0, n1};
    for (int g = 0; g < 2; ++g) {
        const FittedSampler sampler(model, report.fitted_group(g));
        Engine rng = substream(seed, static_cast<std::uint64_t>(g));
        const auto x = sampler.sample(static_cast<std::size_t>(sizes[g]), rng);
        for (double u : x) os << s.from_unit(u) << ',' << g << '\n';
    }
    return os.str();
}

struct SimulateOutputs {
    std::string csv;
    std::string text;
    std::string pmse;
};

inline SimulateOutputs cmd_simulate(const SimScenario& scenario) {
    const MetricTable table = run_monte_carlo(scenario);
    std::ostringstream csv, text, pmse;
    write_metric_csv(csv, table);
    write_metric_text(text, table);
    write_pmse_csv(pmse, table);
    return {csv.str(), text.str(), pmse.str()};
}

}  // namespace mable

#endif  // MABLE_CLI_HPP
