#ifndef MABLE_DATA_HPP
#define MABLE_DATA_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "mable/error.hpp"
#include "mable/regressor.hpp"

namespace mable {

/// Control (group 0) and case (group 1) samples mapped onto [0, 1].
class TwoSampleData {
public:
    TwoSampleData(std::vector<double> x0, std::vector<double> x1)
        : x0_(std::move(x0)), x1_(std::move(x1)) {
        if (x0_.empty()) throw DataError("group 0 (control) is empty");
        if (x1_.empty()) throw DataError("group 1 (case) is empty");
        check_unit(x0_, 0);
        check_unit(x1_, 1);
    }

    /// Transform original-scale samples with (y - a)/(b - a).
    static TwoSampleData from_original(std::span<const double> y0, std::span<const double> y1,
                                       const Support& support) {
        return TwoSampleData(to_unit(y0, support, 0), to_unit(y1, support, 1));
    }

    std::span<const double> x0() const noexcept { return x0_; }
    std::span<const double> x1() const noexcept { return x1_; }
    std::span<const double> group(int i) const { return i == 0 ? x0() : x1(); }
    int n0() const noexcept { return static_cast<int>(x0_.size()); }
    int n1() const noexcept { return static_cast<int>(x1_.size()); }
    int n() const noexcept { return n0() + n1(); }

    /// z = (x0, x1).
    std::vector<double> pooled() const {
        std::vector<double> z(x0_);
        z.insert(z.end(), x1_.begin(), x1_.end());
        return z;
    }

    /// Case and control exchanged.
    TwoSampleData swapped() const { return TwoSampleData(x1_, x0_); }

    friend bool operator==(const TwoSampleData&, const TwoSampleData&) = default;

private:
    static void check_unit(const std::vector<double>& x, int group) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
                std::ostringstream os;
                os << "group " << group << " value #" << i + 1 << " (" << x[i]
                   << ") lies outside [0, 1] after transformation";
                throw DataError(os.str());
            }
        }
    }

    static std::vector<double> to_unit(std::span<const double> y, const Support& s, int group) {
        std::vector<double> x;
        x.reserve(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!s.contains(y[i])) {
                std::ostringstream os;
                os << "group " << group << " value " << y[i] << " lies outside the support ["
                   << s.lower() << ", " << s.upper() << "]";
                throw DataError(os.str());
            }
            x.push_back(std::clamp(s.to_unit(y[i]), 0.0, 1.0));
        }
        return x;
    }

    std::vector<double> x0_;
    std::vector<double> x1_;
};

}  // namespace mable

#endif  // MABLE_DATA_HPP
