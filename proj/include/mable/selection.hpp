#ifndef MABLE_SELECTION_HPP
#define MABLE_SELECTION_HPP

// Choice of baseline and model degree: the moment-based lower bound for m,
// case/control switching, and change-point selection over a sweep of
// consecutive candidate degrees.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mable/bernstein.hpp"
#include "mable/data.hpp"
#include "mable/em.hpp"
#include "mable/error.hpp"
#include "mable/logistic.hpp"

namespace mable {

/// max{ceil(xbar (1 - xbar) / s^2 - 3), 1} for a sample on [0, 1].
inline int degree_lower_bound(std::span<const double> x) {
    if (x.size() < 2) throw DataError("degree lower bound needs at least two observations");
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double var = ss / (n - 1.0);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi || !(var > 0.0)) throw DataError("sample has zero variance; the degree bound is undefined");
    const double bound = std::ceil(mean * (1.0 - mean) / var - 3.0);
    return bound < 1.0 ? 1 : static_cast<int>(std::min<double>(bound, max_degree));
}

struct BaselineChoice {
    bool swapped = false;
    int m_b = 1;     // min(m_b0, m_b1)
    int m_b0 = 1;    // bound from the control sample
    int m_b1 = 1;    // bound from the case sample
};

struct OrientedData {
    BaselineChoice choice;
    TwoSampleData data;   // group 0 is the baseline
};

/// Uses the case sample as baseline when its degree bound is smaller.
inline OrientedData choose_baseline(const TwoSampleData& data) {
    BaselineChoice c;
    c.m_b0 = degree_lower_bound(data.x0());
    c.m_b1 = degree_lower_bound(data.x1());
    c.m_b = std::min(c.m_b0, c.m_b1);
    c.swapped = c.m_b1 < c.m_b0;
    return {c, c.swapped ? data.swapped() : data};
}

enum class SweepMode { full, profile };

inline const char* to_string(SweepMode mode) { return mode == SweepMode::full ? "full" : "profile"; }

inline SweepMode parse_sweep_mode(const std::string& s) {
    if (s == "full") return SweepMode::full;
    if (s == "profile") return SweepMode::profile;
    throw DomainError("mode must be 'full' or 'profile', got '" + s + "'");
}

/// Consecutive candidate degrees m0, m0 + 1, ..., m0 + k.
struct CandidateDegrees {
    int m0 = 1;
    int k = 25;

    void validate() const {
        detail::require(m0 >= 1, "the first candidate degree must be at least one");
        detail::require(k >= 2, "need at least three candidate degrees (k >= 2)");
        detail::require(m0 + k <= max_degree, "candidate degrees exceed the degree cap");
    }

    static CandidateDegrees around_bound(int m_b) { return {std::max(1, m_b - 5), 25}; }
};

struct DegreeFit {
    int m = 0;
    bool ok = false;
    std::string diagnostic;
    double loglik = 0.0;
    bool converged = false;
    std::optional<FitResult> full;       // full mode
    std::optional<ProfileFit> profile;   // profile mode
};

struct DegreeSweep {
    SweepMode mode = SweepMode::full;
    int m0 = 0;                          // first usable degree
    int k = 0;                           // usable degrees minus one
    std::vector<int> degrees;            // m0 .. m0 + k
    std::vector<double> logliks;         // l_{m0} .. l_{m0+k}
    std::vector<double> lr;              // LR(1) .. LR(k)
    int selected = 0;
    std::vector<int> nestedness_violations;
    std::vector<DegreeFit> fits;         // every attempted degree, usable or not
    TiltCoefficients alpha_tilde;

    const DegreeFit& fit_at(int m) const {
        for (const auto& f : fits)
            if (f.m == m) return f;
        throw DomainError("degree " + std::to_string(m) + " is not part of the sweep");
    }
};

inline constexpr double nestedness_tolerance = 1e-6;

/// LR(tau), tau = 1..k, for a nondecreasing sequence l_0..l_k; LR(k) = 0.
inline std::vector<double> change_point_statistics(std::span<const double> ell) {
    detail::require(ell.size() >= 3, "change-point statistic needs at least three values");
    const int k = static_cast<int>(ell.size()) - 1;
    constexpr double floor = 1e-12;
    auto term = [&](double diff, int len) { return len * std::log(std::max(diff, floor) / len); };
    std::vector<double> lr(k, 0.0);
    const double total = term(ell[k] - ell[0], k);
    for (int tau = 1; tau < k; ++tau)
        lr[tau - 1] = total - term(ell[tau] - ell[0], tau) - term(ell[k] - ell[tau], k - tau);
    return lr;
}

/// argmax_tau LR(tau), ties to the smallest tau.
inline int change_point(std::span<const double> ell) {
    const auto lr = change_point_statistics(ell);
    int best = 1;
    for (int tau = 2; tau <= static_cast<int>(lr.size()); ++tau)
        if (lr[tau - 1] > lr[best - 1]) best = tau;
    return best;
}

/// Fits every candidate degree and picks m0 + tau by the change-point rule.
/// Each degree after the first starts from the elevated estimate of the
/// previous degree, which keeps the sequence of maximized log-likelihoods
/// nondecreasing.
inline DegreeSweep select_degree(const TwoSampleData& data, const RegressorSpec& spec,
                                 CandidateDegrees candidates, SweepMode mode,
                                 const EmConfig& config = {},
                                 std::optional<TiltCoefficients> alpha_tilde = std::nullopt) {
    candidates.validate();
    config.validate();
    DegreeSweep sweep;
    sweep.mode = mode;
    sweep.alpha_tilde = alpha_tilde ? *alpha_tilde : mele_logistic(data, spec);

    std::optional<std::vector<double>> previous_p;
    std::optional<TiltCoefficients> previous_alpha;
    for (int m = candidates.m0; m <= candidates.m0 + candidates.k; ++m) {
        DegreeFit df;
        df.m = m;
        try {
            const FitContext ctx(Degree(m), data, spec);
            std::optional<std::vector<double>> p0;
            if (previous_p) p0 = elevate(*previous_p);
            if (mode == SweepMode::full) {
                EmStart start{sweep.alpha_tilde, p0, p0 ? previous_alpha : std::nullopt};
                auto fit = em_fit(ctx, data, config, start);
                df.loglik = fit.loglik;
                df.converged = fit.em_converged;
                previous_p = fit.p_hat;
                previous_alpha = fit.alpha_hat;
                df.full = std::move(fit);
            } else {
                auto fit = profile_p_fit(ctx, sweep.alpha_tilde, config, p0);
                df.loglik = fit.loglik;
                df.converged = fit.converged;
                previous_p = fit.p;
                df.profile = std::move(fit);
            }
            df.ok = std::isfinite(df.loglik);
            if (!df.ok) df.diagnostic = "non-finite log-likelihood";
        } catch (const Error& e) {
            df.ok = false;
            df.diagnostic = e.what();
            previous_p.reset();
            previous_alpha.reset();
        }
        sweep.fits.push_back(std::move(df));
    }

    // Failed degrees may only be trimmed from the ends of the candidate range.
    std::size_t first = 0, last = sweep.fits.size();
    while (first < last && !sweep.fits[first].ok) ++first;
    while (last > first && !sweep.fits[last - 1].ok) --last;
    for (std::size_t i = first; i < last; ++i) {
        if (!sweep.fits[i].ok)
            throw NumericError("degree sweep has an interior failure at m = " +
                               std::to_string(sweep.fits[i].m) + ": " + sweep.fits[i].diagnostic);
    }
    if (last - first < 3)
        throw NumericError("degree sweep produced fewer than three usable degrees");

    for (std::size_t i = first; i < last; ++i) {
        sweep.degrees.push_back(sweep.fits[i].m);
        sweep.logliks.push_back(sweep.fits[i].loglik);
        if (i > first && sweep.fits[i].loglik < sweep.fits[i - 1].loglik - nestedness_tolerance)
            sweep.nestedness_violations.push_back(sweep.fits[i].m);
    }
    sweep.m0 = sweep.degrees.front();
    sweep.k = static_cast<int>(sweep.degrees.size()) - 1;
    sweep.lr = change_point_statistics(sweep.logliks);
    sweep.selected = sweep.m0 + change_point(sweep.logliks);
    return sweep;
}

struct PipelineOptions {
    std::optional<int> fixed_degree;
    std::optional<CandidateDegrees> candidates;   // default: around the lower bound
    SweepMode mode = SweepMode::full;
    EmConfig config;
    bool allow_swap = true;
};

/// Baseline choice, degree selection and the final fit at the chosen degree.
struct PipelineResult {
    BaselineChoice baseline;
    TwoSampleData data;                 // oriented: group 0 is the baseline
    TiltCoefficients alpha_tilde;
    std::optional<DegreeSweep> sweep;
    FitResult fit;
};

inline PipelineResult fit_two_sample(const TwoSampleData& raw, const RegressorSpec& spec,
                                     const PipelineOptions& options = {}) {
    OrientedData oriented = choose_baseline(raw);
    if (!options.allow_swap && oriented.choice.swapped) {
        oriented.choice.swapped = false;
        oriented.data = raw;
    }
    const TwoSampleData& data = oriented.data;
    const TiltCoefficients alpha_tilde = mele_logistic(data, spec);

    if (options.fixed_degree) {
        FitResult fit = em_fit(Degree(*options.fixed_degree), data, spec, options.config,
                               EmStart{alpha_tilde, std::nullopt, std::nullopt});
        return {oriented.choice, data, alpha_tilde, std::nullopt, std::move(fit)};
    }

    const CandidateDegrees candidates =
        options.candidates ? *options.candidates
                           : CandidateDegrees::around_bound(oriented.choice.m_b);
    DegreeSweep sweep = select_degree(data, spec, candidates, options.mode, options.config,
                                      alpha_tilde);
    FitResult fit;
    if (options.mode == SweepMode::full) {
        fit = *sweep.fit_at(sweep.selected).full;
    } else {
        fit = em_fit(Degree(sweep.selected), data, spec, options.config,
                     EmStart{alpha_tilde, std::nullopt, std::nullopt});
    }
    return {oriented.choice, data, alpha_tilde, std::move(sweep), std::move(fit)};
}

}  // namespace mable

#endif  // MABLE_SELECTION_HPP
