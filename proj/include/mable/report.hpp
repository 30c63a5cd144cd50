#ifndef MABLE_REPORT_HPP
#define MABLE_REPORT_HPP

// File formats: `value,group` CSV input, the JSON fit report, atomic writes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "mable/error.hpp"
#include "mable/regressor.hpp"
#include "mable/resampling.hpp"
#include "mable/selection.hpp"

namespace mable {

struct TwoSampleCsv {
    std::vector<double> y0;
    std::vector<double> y1;

    /// Pooled range [min z, max z] widened by `margin` times its width on each side.
    Support default_support(double margin = 0.0) const {
        detail::require(margin >= 0.0, "margin must be non-negative");
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto* y : {&y0, &y1})
            for (double v : *y) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        if (!(hi > lo)) throw DataError("pooled sample has no spread; pass --support explicitly");
        const double pad = margin * (hi - lo);
        return {lo - pad, hi + pad};
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_number(const std::string& field, std::size_t line, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != field.size() || !std::isfinite(v)) {
        throw DataError("line " + std::to_string(line) + ": " + what + " '" + field +
                        "' is not a finite number");
    }
    return v;
}

}  // namespace detail

inline TwoSampleCsv parse_two_sample_csv(std::istream& in) {
    TwoSampleCsv out;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
        if (line.empty()) continue;
        if (!header) {
            std::string compact;
            for (char c : line)
                if (c != ' ' && c != '\t') compact.push_back(c);
            if (compact != "value,group")
                throw DataError("line " + std::to_string(line_no) + ": expected header 'value,group'");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw DataError("line " + std::to_string(line_no) + ": expected two fields");
        const double value = detail::parse_number(detail::trim(line.substr(0, comma)), line_no, "value");
        const std::string g = detail::trim(line.substr(comma + 1));
        if (g == "0") out.y0.push_back(value);
        else if (g == "1") out.y1.push_back(value);
        else
            throw DataError("line " + std::to_string(line_no) + ": group '" + g + "' must be 0 or 1");
    }
    if (!header) throw DataError("input is empty; expected header 'value,group'");
    if (out.y0.empty()) throw DataError("group 0 (control) is empty");
    if (out.y1.empty()) throw DataError("group 1 (case) is empty");
    return out;
}

inline TwoSampleCsv read_two_sample_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read input file '" + path.string() + "'");
    return parse_two_sample_csv(in);
}

/// Write to a sibling temporary file, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot write output file '" + path.string() + "'");
        out << contents;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw DomainError("failed while writing '" + path.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw DomainError("cannot move output into place at '" + path.string() + "': " + ec.message());
    }
}

inline constexpr int report_schema_version = 1;

struct SweepTrace {
    SweepMode mode = SweepMode::full;
    std::vector<int> degrees;
    std::vector<double> logliks;
    std::vector<double> lr;
    int selected = 0;
    std::vector<int> nestedness_violations;

    friend bool operator==(const SweepTrace&, const SweepTrace&) = default;
};

struct BootstrapSummary {
    int replicates = 0;
    int failures = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const BootstrapSummary&, const BootstrapSummary&) = default;
};

/// Everything needed to reconstruct both fitted densities.
/// `alpha` and `p` describe the fitted orientation (group 0 is the baseline);
/// `alpha_original` is the tilt in the input labeling, f1 = f0 exp{alpha' r~}.
struct FitReport {
    int schema_version = report_schema_version;
    double support_lower = 0.0;
    double support_upper = 1.0;
    int regressor_degree = 1;
    int n0 = 0;
    int n1 = 0;
    bool swapped = false;
    int m_b0 = 0;
    int m_b1 = 0;
    int m = 0;
    std::vector<double> alpha;
    std::vector<double> alpha_original;
    std::vector<double> alpha_tilde;   // input labeling
    std::optional<std::vector<double>> alpha_se;
    std::vector<double> p;
    double loglik = 0.0;
    double constraint_residual = 0.0;
    int em_iterations = 0;
    bool em_converged = false;
    std::optional<SweepTrace> sweep;
    std::optional<BootstrapSummary> bootstrap;

    friend bool operator==(const FitReport&, const FitReport&) = default;

    Support support() const { return {support_lower, support_upper}; }
    RegressorSpec regressor() const { return RegressorSpec::polynomial(regressor_degree, support()); }

    FittedModel model() const {
        return {regressor(), p, TiltCoefficients(Eigen::Map<const Eigen::VectorXd>(
                                    alpha.data(), static_cast<Eigen::Index>(alpha.size())))};
    }

    /// Group label inside the fitted model for an input-labeled group.
    int fitted_group(int group) const { return swapped ? 1 - group : group; }
};

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

inline FitReport make_report(const PipelineResult& res, const RegressorSpec& spec, int regressor_degree) {
    FitReport r;
    r.support_lower = spec.support().lower();
    r.support_upper = spec.support().upper();
    r.regressor_degree = regressor_degree;
    const bool sw = res.baseline.swapped;
    r.swapped = sw;
    r.n0 = sw ? res.data.n1() : res.data.n0();
    r.n1 = sw ? res.data.n0() : res.data.n1();
    r.m_b0 = res.baseline.m_b0;
    r.m_b1 = res.baseline.m_b1;
    r.m = res.fit.m;
    r.alpha = detail::to_std(res.fit.alpha_hat.vector());
    r.alpha_original = detail::to_std(sw ? Eigen::VectorXd(-res.fit.alpha_hat.vector())
                                         : res.fit.alpha_hat.vector());
    r.alpha_tilde = detail::to_std(sw ? Eigen::VectorXd(-res.alpha_tilde.vector())
                                      : res.alpha_tilde.vector());
    r.p = res.fit.p_hat;
    r.loglik = res.fit.loglik;
    r.constraint_residual = res.fit.constraint_residual;
    r.em_iterations = res.fit.em_iterations;
    r.em_converged = res.fit.em_converged;
    if (res.sweep) {
        const auto& s = *res.sweep;
        r.sweep = SweepTrace{s.mode, s.degrees, s.logliks, s.lr, s.selected, s.nestedness_violations};
    }
    return r;
}

inline nlohmann::ordered_json to_json(const FitReport& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = r.schema_version;
    j["support"] = {r.support_lower, r.support_upper};
    j["regressor_degree"] = r.regressor_degree;
    j["n0"] = r.n0;
    j["n1"] = r.n1;
    j["swapped"] = r.swapped;
    j["degree_bounds"] = {{"m_b0", r.m_b0}, {"m_b1", r.m_b1}};
    j["m"] = r.m;
    j["alpha"] = r.alpha;
    j["alpha_original"] = r.alpha_original;
    j["alpha_tilde"] = r.alpha_tilde;
    j["alpha_se"] = r.alpha_se ? nlohmann::ordered_json(*r.alpha_se) : nlohmann::ordered_json(nullptr);
    j["p"] = r.p;
    j["loglik"] = r.loglik;
    j["constraint_residual"] = r.constraint_residual;
    j["em_iterations"] = r.em_iterations;
    j["em_converged"] = r.em_converged;
    if (r.sweep) {
        j["sweep"] = {{"mode", to_string(r.sweep->mode)},
                      {"degrees", r.sweep->degrees},
                      {"logliks", r.sweep->logliks},
                      {"lr", r.sweep->lr},
                      {"selected", r.sweep->selected},
                      {"nestedness_violations", r.sweep->nestedness_violations}};
    } else {
        j["sweep"] = nullptr;
    }
    if (r.bootstrap) {
        j["bootstrap"] = {{"replicates", r.bootstrap->replicates},
                          {"failures", r.bootstrap->failures},
                          {"seed", r.bootstrap->seed}};
    } else {
        j["bootstrap"] = nullptr;
    }
    return j;
}

inline std::string dump_report(const FitReport& r) { return to_json(r).dump(2) + "\n"; }

inline FitReport report_from_json(const nlohmann::json& j) {
    try {
        FitReport r;
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != report_schema_version)
            throw DataError("unsupported report schema version " + std::to_string(r.schema_version));
        const auto support = j.at("support").get<std::vector<double>>();
        if (support.size() != 2) throw DataError("report support must have two entries");
        r.support_lower = support[0];
        r.support_upper = support[1];
        r.regressor_degree = j.at("regressor_degree").get<int>();
        r.n0 = j.at("n0").get<int>();
        r.n1 = j.at("n1").get<int>();
        r.swapped = j.at("swapped").get<bool>();
        r.m_b0 = j.at("degree_bounds").at("m_b0").get<int>();
        r.m_b1 = j.at("degree_bounds").at("m_b1").get<int>();
        r.m = j.at("m").get<int>();
        r.alpha = j.at("alpha").get<std::vector<double>>();
        r.alpha_original = j.at("alpha_original").get<std::vector<double>>();
        r.alpha_tilde = j.at("alpha_tilde").get<std::vector<double>>();
        if (!j.at("alpha_se").is_null()) r.alpha_se = j.at("alpha_se").get<std::vector<double>>();
        r.p = j.at("p").get<std::vector<double>>();
        r.loglik = j.at("loglik").get<double>();
        r.constraint_residual = j.at("constraint_residual").get<double>();
        r.em_iterations = j.at("em_iterations").get<int>();
        r.em_converged = j.at("em_converged").get<bool>();
        if (const auto& s = j.at("sweep"); !s.is_null()) {
            SweepTrace t;
            t.mode = parse_sweep_mode(s.at("mode").get<std::string>());
            t.degrees = s.at("degrees").get<std::vector<int>>();
            t.logliks = s.at("logliks").get<std::vector<double>>();
            t.lr = s.at("lr").get<std::vector<double>>();
            t.selected = s.at("selected").get<int>();
            t.nestedness_violations = s.at("nestedness_violations").get<std::vector<int>>();
            r.sweep = std::move(t);
        }
        if (const auto& b = j.at("bootstrap"); !b.is_null()) {
            r.bootstrap = BootstrapSummary{b.at("replicates").get<int>(), b.at("failures").get<int>(),
                                           b.at("seed").get<std::uint64_t>()};
        }
        // Structural checks so a corrupt report fails here rather than deep in a fit.
        const Degree m(r.m);
        const RegressorSpec spec = r.regressor();
        if (static_cast<int>(r.p.size()) != m.basis_size())
            throw DataError("report has " + std::to_string(r.p.size()) + " weights for degree " +
                            std::to_string(r.m));
        double total = 0.0;
        for (double v : r.p) {
            if (!(std::isfinite(v) && v >= 0.0)) throw DataError("report weights must be non-negative");
            total += v;
        }
        if (std::fabs(total - 1.0) > 1e-6) throw DataError("report weights do not sum to one");
        for (const auto* a : {&r.alpha, &r.alpha_original, &r.alpha_tilde})
            if (static_cast<int>(a->size()) != spec.size())
                throw DataError("report tilt vectors must have " + std::to_string(spec.size()) + " entries");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("corrupt fit report: ") + e.what());
    } catch (const DomainError& e) {
        throw DataError(std::string("corrupt fit report: ") + e.what());
    }
}

inline FitReport parse_report(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("corrupt fit report: ") + e.what());
    }
    return report_from_json(j);
}

inline FitReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read report '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_report(ss.str());
}

}  // namespace mable

#endif  // MABLE_REPORT_HPP
