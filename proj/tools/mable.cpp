#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mable/cli.hpp"

namespace {

void emit(const std::optional<std::filesystem::path>& path, const std::string& text) {
    if (path) mable::write_atomic(*path, text);
    else std::cout << text;
}

void add_fit_options(CLI::App& cmd, mable::RunConfig& cfg, std::string& degrees,
                     std::vector<double>& support, std::string& mode, std::string& vanish,
                     double& eps2) {
    cmd.add_option("input", cfg.input, "CSV with header value,group")->required();
    cmd.add_option("-o,--output", cfg.output, "report path (default: stdout)");
    cmd.add_option("--support", support, "support endpoints A B")->expected(2);
    cmd.add_option("--margin", cfg.margin, "widen the default pooled-range support by this fraction");
    cmd.add_option("-d,--regressor-degree", cfg.regressor_degree, "polynomial tilt degree");
    cmd.add_option("--degrees", degrees, "candidate Bernstein degrees M0:MK");
    cmd.add_option("--degree", cfg.fixed_degree, "fixed Bernstein degree (skips selection)");
    cmd.add_option("--mode", mode, "degree selection: full or profile");
    cmd.add_option("--eps1", cfg.em.eps1, "Newton tolerance");
    cmd.add_option("--eps2", eps2, "EM log-likelihood tolerance (default 1e-7 n)");
    cmd.add_option("--max-newton", cfg.em.max_newton, "Newton iteration cap");
    cmd.add_option("--max-em", cfg.em.max_em, "EM iteration cap");
    cmd.add_option("--vanish", vanish, "force p_0 and/or p_m to zero: left, right or both");
}

void finish_fit_options(mable::RunConfig& cfg, const std::string& degrees,
                        const std::vector<double>& support, const std::string& mode,
                        const std::string& vanish, double eps2) {
    if (!degrees.empty()) cfg.candidates = mable::parse_degree_range(degrees);
    if (support.size() == 2) cfg.support = std::make_pair(support[0], support[1]);
    cfg.mode = mable::parse_sweep_mode(mode);
    if (eps2 > 0.0) cfg.em.eps2 = eps2;
    if (!vanish.empty()) {
        if (vanish != "left" && vanish != "right" && vanish != "both")
            throw mable::DomainError("--vanish must be left, right or both");
        cfg.em.vanish_left = vanish != "right";
        cfg.em.vanish_right = vanish != "left";
    }
    cfg.em.validate();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bernstein polynomial estimation in the two-sample density ratio model"};
    app.require_subcommand(1);

    mable::RunConfig cfg;
    std::string degrees, mode = "full", vanish;
    std::vector<double> support;
    double eps2 = 0.0;

    auto* fit = app.add_subcommand("fit", "select the degree and fit both densities");
    add_fit_options(*fit, cfg, degrees, support, mode, vanish, eps2);

    auto* boot = app.add_subcommand("bootstrap", "fit, then parametric-bootstrap standard errors");
    add_fit_options(*boot, cfg, degrees, support, mode, vanish, eps2);
    boot->add_option("--bootstrap,-B", cfg.bootstrap, "replicates");
    boot->add_option("--seed", cfg.seed, "random seed");
    boot->add_option("--threads", cfg.threads, "worker threads");

    std::filesystem::path report_path;
    std::optional<std::filesystem::path> out_path;
    int grid = 512;
    auto* density = app.add_subcommand("density", "density and distribution grid from a fit report");
    density->add_option("report", report_path, "fit report")->required();
    density->add_option("--grid", grid, "number of grid intervals");
    density->add_option("-o,--output", out_path, "CSV path (default: stdout)");

    int n0 = 0, n1 = 0;
    std::uint64_t sample_seed = 1;
    auto* samp = app.add_subcommand("sample", "draw a value,group CSV from a fit report");
    samp->add_option("report", report_path, "fit report")->required();
    samp->add_option("--n0", n0, "control sample size (default: as fitted)");
    samp->add_option("--n1", n1, "case sample size (default: as fitted)");
    samp->add_option("--seed", sample_seed, "random seed");
    samp->add_option("-o,--output", out_path, "CSV path (default: stdout)");

    mable::SimScenario sc;
    std::string model = "normal", sim_mode, sim_degrees, pmse_path, text_path;
    int sim_n = 50;
    bool full_runs = false;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo comparison of density estimators");
    sim->add_option("--model", model, "normal or exponential");
    sim->add_option("--mu", sc.mu, "normal shift or exponential mean of the case group");
    sim->add_option("-n", sim_n, "per-group sample size");
    sim->add_option("--runs", sc.runs, "Monte Carlo runs");
    sim->add_flag("--full", full_runs, "1000 runs");
    sim->add_option("--seed", sc.seed, "random seed");
    sim->add_option("--threads", sc.threads, "worker threads");
    sim->add_option("--mode", sim_mode, "degree selection (default: full for normal, profile for exponential)");
    sim->add_option("--degrees", sim_degrees, "candidate degrees M0:MK");
    sim->add_option("-o,--output", out_path, "metric CSV path (default: stdout)");
    sim->add_option("--table", text_path, "aligned text table path");
    sim->add_option("--pmse", pmse_path, "pointwise MSE CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*fit || *boot) {
            finish_fit_options(cfg, degrees, support, mode, vanish, eps2);
            const auto report = *fit ? mable::cmd_fit(cfg) : mable::cmd_bootstrap(cfg);
            emit(cfg.output, mable::dump_report(report));
        } else if (*density) {
            emit(out_path, mable::cmd_density(mable::read_report(report_path), grid));
        } else if (*samp) {
            const auto report = mable::read_report(report_path);
            emit(out_path, mable::cmd_sample(report, n0 > 0 ? n0 : report.n0, n1 > 0 ? n1 : report.n1,
                                             sample_seed));
        } else if (*sim) {
            sc.model = mable::parse_sim_model(model);
            sc.n0 = sc.n1 = sim_n;
            if (full_runs) sc.runs = 1000;
            if (!sim_mode.empty()) sc.mode = mable::parse_sweep_mode(sim_mode);
            if (!sim_degrees.empty()) sc.candidates = mable::parse_degree_range(sim_degrees);
            const auto out = mable::cmd_simulate(sc);
            emit(out_path, out.csv);
            if (!text_path.empty()) mable::write_atomic(text_path, out.text);
            else if (out_path) std::cout << out.text;
            if (!pmse_path.empty()) mable::write_atomic(pmse_path, out.pmse);
        }
    } catch (const mable::Error& e) {
        std::cerr << "mable: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "mable: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
