#ifndef MVMD_MIXTURE_UNIVARIATE_HPP
#define MVMD_MIXTURE_UNIVARIATE_HPP

// Univariate lognormal-mixture dynamics: a single asset whose marginal law at
// every time is a fixed convex combination of lognormal densities, driven by
// the local volatility that reproduces that mixture.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mvmd/errors.hpp"
#include "mvmd/normal.hpp"
#include "mvmd/parallel.hpp"
#include "mvmd/random.hpp"
#include "mvmd/vol_curve.hpp"

namespace mvmd {

struct MixtureComponent {
    double weight = 1.0;
    VolCurve vol;

    friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

/// One asset: spot, drift and N weighted lognormal components.
class AssetMixture {
public:
    AssetMixture(double spot, double drift, std::vector<MixtureComponent> components)
        : spot_(spot), drift_(drift), components_(std::move(components)) {
        if (!(spot_ > 0.0) || !std::isfinite(spot_)) throw ValidationError("asset spot must be positive");
        if (!std::isfinite(drift_)) throw ValidationError("asset drift must be finite");
        if (components_.empty()) throw ValidationError("asset needs at least one mixture component");
        double total = 0.0;
        for (const auto& c : components_) {
            if (!(c.weight >= 0.0)) throw ValidationError("mixture weights must be non-negative");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ValidationError("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
    }

    /// Convenience constructor for constant component volatilities.
    AssetMixture(double spot, double drift, const std::vector<double>& weights, const std::vector<double>& vols)
        : AssetMixture(spot, drift, make_components(weights, vols)) {}

    double spot() const { return spot_; }
    double drift() const { return drift_; }
    std::size_t size() const { return components_.size(); }
    const MixtureComponent& component(std::size_t k) const { return components_.at(k); }
    const std::vector<MixtureComponent>& components() const { return components_; }

    AssetMixture with_spot(double spot) const { return AssetMixture(spot, drift_, components_); }

    friend bool operator==(const AssetMixture&, const AssetMixture&) = default;

private:
    static std::vector<MixtureComponent> make_components(const std::vector<double>& weights,
                                                         const std::vector<double>& vols) {
        if (weights.size() != vols.size()) throw ValidationError("weights and vols differ in length");
        std::vector<MixtureComponent> out;
        out.reserve(weights.size());
        for (std::size_t k = 0; k < weights.size(); ++k) out.push_back({weights[k], VolCurve(vols[k])});
        return out;
    }

    double spot_;
    double drift_;
    std::vector<MixtureComponent> components_;
};

namespace detail {

struct LogNormalParams {
    double log_mean;
    double log_sd;
};

inline LogNormalParams component_law(const AssetMixture& asset, std::size_t k, double t) {
    if (!(t > 0.0)) throw DomainError("lognormal component is a point mass at t = 0");
    const double var = integrated_variance(asset.component(k).vol, t);
    return {std::log(asset.spot()) + asset.drift() * t - 0.5 * var, std::sqrt(var)};
}

}  // namespace detail

/// log of the k-th component density at x > 0.
inline double component_log_pdf(const AssetMixture& asset, std::size_t k, double t, double x) {
    const auto law = detail::component_law(asset, k, t);
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    const double z = (std::log(x) - law.log_mean) / law.log_sd;
    return norm_log_pdf(z) - std::log(x) - std::log(law.log_sd);
}

inline double component_pdf(const AssetMixture& asset, std::size_t k, double t, double x) {
    return std::exp(component_log_pdf(asset, k, t, x));
}

inline double component_cdf(const AssetMixture& asset, std::size_t k, double t, double x) {
    const auto law = detail::component_law(asset, k, t);
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    return norm_cdf((std::log(x) - law.log_mean) / law.log_sd);
}

inline double mixture_pdf(const AssetMixture& asset, double t, double x) {
    double p = 0.0;
    for (std::size_t k = 0; k < asset.size(); ++k)
        if (asset.component(k).weight > 0.0) p += asset.component(k).weight * component_pdf(asset, k, t, x);
    return p;
}

inline double mixture_cdf(const AssetMixture& asset, double t, double x) {
    double f = 0.0;
    for (std::size_t k = 0; k < asset.size(); ++k)
        if (asset.component(k).weight > 0.0) f += asset.component(k).weight * component_cdf(asset, k, t, x);
    return std::min(f, 1.0);
}

/// Quantile of the mixture law of S(t).
///
/// The root is bracketed by the smallest and largest component quantiles,
/// bisected in log-price until the bracket spans at most 1e-12 in probability,
/// then polished with three Newton steps kept inside the bracket.
inline double inverse_cdf(const AssetMixture& asset, double t, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_cdf: probability must lie in (0, 1)");
    const double z = norm_inv(u);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < asset.size(); ++k) {
        if (asset.component(k).weight <= 0.0) continue;
        const auto law = detail::component_law(asset, k, t);
        lo = std::min(lo, law.log_mean + law.log_sd * z);
        hi = std::max(hi, law.log_mean + law.log_sd * z);
    }
    lo -= 1e-12 * (1.0 + std::abs(lo));
    hi += 1e-12 * (1.0 + std::abs(hi));
    for (int it = 0; it < 200; ++it) {
        const double f_lo = mixture_cdf(asset, t, std::exp(lo));
        const double f_hi = mixture_cdf(asset, t, std::exp(hi));
        if (f_hi - f_lo <= 1e-12 || hi - lo <= 1e-15 * (1.0 + std::abs(lo))) break;
        const double mid = 0.5 * (lo + hi);
        if (mixture_cdf(asset, t, std::exp(mid)) < u) lo = mid;
        else hi = mid;
    }
    const double x_lo = std::exp(lo);
    const double x_hi = std::exp(hi);
    double x = std::exp(0.5 * (lo + hi));
    for (int it = 0; it < 3; ++it) {
        const double dens = mixture_pdf(asset, t, x);
        if (!(dens > 0.0)) break;
        const double step = (mixture_cdf(asset, t, x) - u) / dens;
        x = std::clamp(x - step, x_lo, x_hi);
    }
    return x;
}

/// The mixture law of S(t) at one fixed t > 0, with per-component constants
/// precomputed for repeated evaluation in simulation loops.
class MixtureSlice {
public:
    MixtureSlice(const AssetMixture& asset, double t) {
        if (!(t > 0.0)) throw DomainError("mixture slice requires t > 0");
        for (std::size_t k = 0; k < asset.size(); ++k) {
            const auto& c = asset.component(k);
            if (c.weight <= 0.0) continue;
            const auto law = detail::component_law(asset, k, t);
            const double s = c.vol(t);
            terms_.push_back({std::log(c.weight) - std::log(law.log_sd), law.log_mean, 1.0 / law.log_sd, s * s});
        }
    }

    /// nu(t, x)^2: posterior-weighted average of sigma_k(t)^2.
    double local_variance(double x) const { return local_variance_at_log(std::log(x)); }

    double local_variance_at_log(double log_x) const {
        double top = -std::numeric_limits<double>::infinity();
        double num = 0.0;
        double den = 0.0;
        for (const auto& term : terms_) {
            const double z = (log_x - term.log_mean) * term.inv_sd;
            const double l = term.log_scale - 0.5 * z * z;
            double w = 1.0;
            if (l > top) {
                const double rescale = std::exp(top - l);
                num *= rescale;
                den *= rescale;
                top = l;
            } else {
                w = std::exp(l - top);
            }
            num += w * term.sigma_sq;
            den += w;
        }
        return num / den;
    }

private:
    struct Term {
        double log_scale;  // log(lambda_k / V_k)
        double log_mean;
        double inv_sd;
        double sigma_sq;   // sigma_k(t)^2
    };
    std::vector<Term> terms_;
};

/// Local volatility nu(t, x) reproducing the mixture marginals.
///
/// nu^2 is the posterior-weighted average of sigma_k(t)^2, with posterior
/// weights lambda_k p_k(x) normalised in log space; when every density
/// underflows the dominant-tail component still carries the weight.
inline double local_vol(const AssetMixture& asset, double t, double x) {
    if (!(t > 0.0)) throw DomainError("local_vol requires t > 0");
    if (!(x > 0.0)) throw DomainError("local_vol requires x > 0");
    return std::sqrt(MixtureSlice(asset, t).local_variance(x));
}

/// Limit of local_vol(t, S(0)) as t -> 0+, used for the first Euler step
/// where every path still sits at the spot.
inline double local_vol_at_start(const AssetMixture& asset) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& c : asset.components()) {
        if (c.weight <= 0.0) continue;
        const double s = c.vol(0.0);
        num += c.weight * s;
        den += c.weight / s;
    }
    return std::sqrt(num / den);
}

/// E[S(t)^m] of the mixture law, in closed form.
inline double mixture_moment(const AssetMixture& asset, double t, int m) {
    double total = 0.0;
    for (std::size_t k = 0; k < asset.size(); ++k) {
        const double var = integrated_variance(asset.component(k).vol, t);
        const double log_mean = std::log(asset.spot()) + asset.drift() * t - 0.5 * var;
        total += asset.component(k).weight * std::exp(m * log_mean + 0.5 * m * m * var);
    }
    return total;
}

/// Log-Euler simulation of dS = mu S dt + nu(t, S) S dW; returns S(T) per path.
///
/// Path p draws its normals from RandomStream(seed, p), so output is
/// bitwise identical for any worker count.
inline std::vector<double> simulate_md_euler(const AssetMixture& asset, double maturity, std::size_t steps,
                                             std::size_t paths, std::uint64_t seed,
                                             unsigned workers = default_workers()) {
    if (!(maturity > 0.0)) throw DomainError("simulate_md_euler: maturity must be positive");
    if (steps == 0 || paths == 0) throw DomainError("simulate_md_euler: steps and paths must be >= 1");
    const double dt = maturity / static_cast<double>(steps);
    const double sqrt_dt = std::sqrt(dt);
    const double var0 = std::pow(local_vol_at_start(asset), 2);
    std::vector<MixtureSlice> slices;
    slices.reserve(steps);
    for (std::size_t step = 1; step < steps; ++step) slices.emplace_back(asset, static_cast<double>(step) * dt);
    std::vector<double> out(paths);
    parallel_for(paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            RandomStream rng(seed, p);
            double log_s = std::log(asset.spot());
            for (std::size_t step = 0; step < steps; ++step) {
                const double var = step == 0 ? var0 : slices[step - 1].local_variance_at_log(log_s);
                log_s += (asset.drift() - 0.5 * var) * dt + std::sqrt(var) * sqrt_dt * rng.normal();
            }
            out[p] = std::exp(log_s);
        }
    });
    return out;
}

}  // namespace mvmd

#endif  // MVMD_MIXTURE_UNIVARIATE_HPP
