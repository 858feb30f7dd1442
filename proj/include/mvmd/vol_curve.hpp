#ifndef MVMD_VOL_CURVE_HPP
#define MVMD_VOL_CURVE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mvmd/errors.hpp"

namespace mvmd {

/// Global bounds every volatility level must respect.
struct VolBounds {
    double lo = 1e-10;
    double hi = 10.0;
};

/// Piecewise-constant deterministic volatility sigma(t).
///
/// values[i] applies on [breakpoints[i], breakpoints[i+1]); the last value
/// extends to +infinity. The first breakpoint is always 0.
class VolCurve {
public:
    VolCurve() : VolCurve(0.2) {}

    explicit VolCurve(double constant, VolBounds bounds = {})
        : VolCurve(std::vector<double>{0.0}, std::vector<double>{constant}, bounds) {}

    VolCurve(std::vector<double> breakpoints, std::vector<double> values, VolBounds bounds = {})
        : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
        if (breakpoints_.empty() || breakpoints_.size() != values_.size())
            throw ValidationError("vol curve needs one value per breakpoint");
        if (breakpoints_.front() != 0.0)
            throw ValidationError("vol curve must start at t = 0");
        for (std::size_t i = 1; i < breakpoints_.size(); ++i)
            if (!(breakpoints_[i] > breakpoints_[i - 1]))
                throw ValidationError("vol curve breakpoints must be strictly increasing");
        for (double v : values_)
            if (!(v >= bounds.lo && v <= bounds.hi))
                throw ValidationError("vol level " + std::to_string(v) + " outside [" +
                                      std::to_string(bounds.lo) + ", " + std::to_string(bounds.hi) + "]");
    }

    double operator()(double t) const {
        const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        const auto idx = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
        return values_[idx];
    }

    bool is_constant() const { return std::all_of(values_.begin(), values_.end(), [&](double v) { return v == values_.front(); }); }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }

    friend bool operator==(const VolCurve&, const VolCurve&) = default;

    /// Exact integral of a(s) * b(s) over [0, t].
    static double integrated_product(const VolCurve& a, const VolCurve& b, double t) {
        if (t < 0.0) throw DomainError("integration horizon must be non-negative");
        std::vector<double> knots;
        knots.reserve(a.breakpoints_.size() + b.breakpoints_.size() + 1);
        for (double s : a.breakpoints_) if (s < t) knots.push_back(s);
        for (double s : b.breakpoints_) if (s < t) knots.push_back(s);
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
        knots.push_back(t);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < knots.size(); ++i)
            total += a(knots[i]) * b(knots[i]) * (knots[i + 1] - knots[i]);
        return total;
    }

private:
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

/// Integral of sigma^2 over [0, t]; the squared total volatility V(t)^2.
inline double integrated_variance(const VolCurve& vol, double t) {
    if (t < 0.0) throw DomainError("integrated_variance: t must be non-negative");
    return VolCurve::integrated_product(vol, vol, t);
}

}  // namespace mvmd

#endif  // MVMD_VOL_CURVE_HPP
