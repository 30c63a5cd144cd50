#ifndef MABLE_TEST_SUPPORT_HPP
#define MABLE_TEST_SUPPORT_HPP

#include <random>
#include <string>
#include <vector>

#include "mable/data.hpp"
#include "mable/random.hpp"
#include "mable/regressor.hpp"
#include "mable/report.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(MABLE_TEST_DATA) + "/" + name; }

inline mable::TwoSampleCsv chd_raw() { return mable::read_two_sample_csv(data_path("chd.csv")); }

inline mable::Support chd_support() { return {20.0, 70.0}; }

inline mable::RegressorSpec chd_spec() { return mable::RegressorSpec::polynomial(1, chd_support()); }

inline mable::TwoSampleData chd_data() {
    const auto raw = chd_raw();
    return mable::TwoSampleData::from_original(raw.y0, raw.y1, chd_support());
}

inline mable::RegressorSpec unit_spec(int d = 1) {
    return mable::RegressorSpec::polynomial(d, mable::Support(0.0, 1.0));
}

inline std::vector<double> uniform_sample(std::size_t n, mable::Engine& rng) {
    std::vector<double> x(n);
    for (auto& v : x) v = mable::uniform01(rng);
    return x;
}

inline std::vector<double> random_simplex(int size, mable::Engine& rng) {
    std::vector<double> p(size);
    double total = 0.0;
    std::exponential_distribution<double> e(1.0);
    for (auto& v : p) total += (v = e(rng));
    for (auto& v : p) v /= total;
    return p;
}

/// Beta(a, b) draw with integer shapes via order statistics of uniforms.
inline double beta_integer(int a, int b, mable::Engine& rng) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(rng), y = gb(rng);
    return x / (x + y);
}

/// Draws from the degree-m Bernstein mixture with weights p.
inline std::vector<double> bernstein_sample(const std::vector<double>& p, std::size_t n,
                                            mable::Engine& rng) {
    const int m = static_cast<int>(p.size()) - 1;
    std::discrete_distribution<int> pick(p.begin(), p.end());
    std::vector<double> x(n);
    for (auto& v : x) {
        const int j = pick(rng);
        v = beta_integer(j + 1, m - j + 1, rng);
    }
    return x;
}

}  // namespace testing_support

#endif
