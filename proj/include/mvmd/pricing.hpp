#ifndef MVMD_PRICING_HPP
#define MVMD_PRICING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvmd/errors.hpp"
#include "mvmd/linalg.hpp"
#include "mvmd/mixture_multivariate.hpp"
#include "mvmd/normal.hpp"
#include "mvmd/parallel.hpp"
#include "mvmd/random.hpp"

namespace mvmd {

enum class BasketKind { arithmetic, geometric };

inline std::string to_string(BasketKind kind) { return kind == BasketKind::arithmetic ? "arithmetic" : "geometric"; }

/// European option on a basket: payoff [omega (B_T - K)]^+ discounted at rate.
struct BasketSpec {
    std::vector<double> weights;
    BasketKind kind = BasketKind::arithmetic;
    double strike = 0.0;
    double maturity = 1.0;
    int omega = 1;  // +1 call, -1 put
    double rate = 0.0;

    void validate(std::size_t assets) const {
        if (weights.size() != assets)
            throw ValidationError("basket has " + std::to_string(weights.size()) + " weights for " +
                                  std::to_string(assets) + " assets");
        if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; }))
            throw ValidationError("basket needs at least one nonzero weight");
        if (kind == BasketKind::geometric &&
            std::any_of(weights.begin(), weights.end(), [](double w) { return !(w > 0.0); }))
            throw ValidationError("geometric basket weights must be positive");
        if (!(strike >= 0.0)) throw ValidationError("strike must be non-negative");
        if (!(maturity > 0.0)) throw ValidationError("maturity must be positive");
        if (omega != 1 && omega != -1) throw ValidationError("omega must be +1 (call) or -1 (put)");
        if (!std::isfinite(rate)) throw ValidationError("rate must be finite");
    }

    double basket(std::span<const double> x) const {
        if (kind == BasketKind::arithmetic) {
            double b = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) b += weights[i] * x[i];
            return b;
        }
        double total_w = 0.0;
        double log_b = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            log_b += weights[i] * std::log(x[i]);
            total_w += weights[i];
        }
        return std::exp(log_b / total_w);
    }

    double payoff(std::span<const double> x) const { return std::max(omega * (basket(x) - strike), 0.0); }

    double discount() const { return std::exp(-rate * maturity); }
};

enum class PriceMethod { closed_form, semi_analytic, single_step_mc, pathwise_mc };

inline std::string to_string(PriceMethod m) {
    switch (m) {
        case PriceMethod::closed_form: return "closed-form";
        case PriceMethod::semi_analytic: return "semi-analytic";
        case PriceMethod::single_step_mc: return "single-step-mc";
        case PriceMethod::pathwise_mc: return "pathwise-mc";
    }
    return "unknown";
}

struct PriceEstimate {
    double price = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    PriceMethod method = PriceMethod::closed_form;
};

/// Sample mean and standard error (sample stdev / sqrt(M)) of per-sample
/// discounted payoffs. Summation order is fixed, hence reproducible.
inline PriceEstimate summarize(std::span<const double> values, PriceMethod method) {
    if (values.empty()) throw DomainError("cannot estimate a price from an empty sample");
    const double m = static_cast<double>(values.size());
    const double mean = pairwise_sum(values) / m;
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - mean) * (values[i] - mean);
    const double var = values.size() > 1 ? pairwise_sum(dev) / (m - 1.0) : 0.0;
    return {mean, std::sqrt(var / m), values.size(), method};
}

/// Undiscounted Black price on a lognormal with the given forward and total vol.
inline double black_forward(double forward, double strike, double total_vol, int omega) {
    if (strike < 0.0) throw DomainError("strike must be non-negative");
    if (strike == 0.0) return omega == 1 ? forward : 0.0;
    if (total_vol <= 0.0) return std::max(omega * (forward - strike), 0.0);
    const double d1 = (std::log(forward / strike) + 0.5 * total_vol * total_vol) / total_vol;
    const double d2 = d1 - total_vol;
    return omega * (forward * norm_cdf(omega * d1) - strike * norm_cdf(omega * d2));
}

/// Black-Scholes price with total volatility V(T) = sqrt(int_0^T sigma^2).
inline double black_scholes(double spot, double strike, double total_vol, double rate, double maturity, int omega) {
    if (!(spot > 0.0)) throw DomainError("spot must be positive");
    if (!(maturity > 0.0)) throw DomainError("maturity must be positive");
    if (total_vol < 0.0) throw DomainError("total volatility must be non-negative");
    const double df = std::exp(-rate * maturity);
    return df * black_forward(spot / df, strike, total_vol, omega);
}

/// Exchange option on x2 - x1 (zero strike), independent of the rate.
inline double margrabe(double x1, double x2, double sigma1, double sigma2, double rho, double maturity, int omega) {
    if (!(x1 > 0.0 && x2 > 0.0)) throw DomainError("margrabe: prices must be positive");
    if (!(maturity > 0.0)) throw DomainError("margrabe: maturity must be positive");
    const double var = std::max(0.0, sigma1 * sigma1 - 2.0 * rho * sigma1 * sigma2 + sigma2 * sigma2);
    const double s = std::sqrt(var * maturity);
    if (s == 0.0) return std::max(omega * (x2 - x1), 0.0);
    const double d1 = std::log(x2 / x1) / s + 0.5 * s;
    const double d0 = std::log(x2 / x1) / s - 0.5 * s;
    return omega * (x2 * norm_cdf(omega * d1) - x1 * norm_cdf(omega * d0));
}

/// Zero-strike call on the weighted geometric average (x1^w1 x2^w2)^(1/(w1+w2)).
inline double geometric_pair_k0(double x1, double x2, double sigma1, double sigma2, double rho, double w1, double w2,
                                double rate, double maturity) {
    if (!(x1 > 0.0 && x2 > 0.0)) throw DomainError("geometric_pair_k0: prices must be positive");
    if (!(w1 > 0.0 && w2 > 0.0)) throw DomainError("geometric_pair_k0: weights must be positive");
    const double inv_w = 1.0 / (w1 + w2);
    const double drift = ((rate - 0.5 * sigma1 * sigma1) * w1 + (rate - 0.5 * sigma2 * sigma2) * w2) * inv_w * maturity;
    const double gamma_sq =
        (sigma1 * sigma1 * w1 * w1 + sigma2 * sigma2 * w2 * w2 + 2.0 * rho * sigma1 * sigma2 * w1 * w2) * inv_w *
        inv_w * maturity;
    return std::exp(-rate * maturity) * std::pow(x1, inv_w * w1) * std::pow(x2, inv_w * w2) *
           std::exp(drift + 0.5 * gamma_sq);
}

/// Exact price of a geometric basket on one component tuple: the weighted
/// geometric average of jointly lognormal prices is itself lognormal.
inline double geometric_component_price(const MultiAssetModel& model, const ComponentTuple& tuple,
                                        const BasketSpec& spec) {
    spec.validate(model.size());
    if (spec.kind != BasketKind::geometric) throw DomainError("geometric_component_price needs a geometric basket");
    const Matrix xi = integrated_covariance(model, tuple, spec.maturity);
    const std::size_t n = model.size();
    Vector w(n);
    double total_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w(i) = spec.weights[i];
        total_w += spec.weights[i];
    }
    w /= total_w;
    double log_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = model.asset(i);
        log_mean += w(i) * (std::log(a.spot()) + a.drift() * spec.maturity - 0.5 * xi(i, i));
    }
    const double var = std::max(0.0, w.dot(xi * w));
    const double forward = std::exp(log_mean + 0.5 * var);
    return spec.discount() * black_forward(forward, spec.strike, std::sqrt(var), spec.omega);
}

/// Geometric-basket price as the exact convex combination of tuple prices.
inline PriceEstimate price_geometric_mvmd(const MultiAssetModel& model, const BasketSpec& spec, double kappa = 0.0) {
    double price = 0.0;
    for (const auto& tuple : truncate(model, kappa)) price += tuple.weight * geometric_component_price(model, tuple, spec);
    return {price, 0.0, 0, PriceMethod::closed_form};
}

struct McOptions {
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 1;
    unsigned workers = default_workers();
};

namespace detail {

/// Per-sample discounted payoffs of the mixture, one column per spot scaling.
///
/// Sample m draws one standard normal vector from RandomStream(seed, m) and
/// maps it through every tuple's factor (common random numbers). A scaling s
/// multiplies the terminal prices, which equals re-pricing with spots s * S(0).
inline std::vector<std::vector<double>> single_step_payoffs(const MultiAssetModel& model, const TupleSet& tuples,
                                                            const BasketSpec& spec, const McOptions& opts,
                                                            const std::vector<Vector>& scalings) {
    spec.validate(model.size());
    if (opts.samples == 0) throw DomainError("sample count must be positive");
    const auto n = static_cast<Eigen::Index>(model.size());
    std::vector<ComponentLaw> laws;
    laws.reserve(tuples.size());
    for (const auto& t : tuples) laws.emplace_back(model, t, spec.maturity);
    const double df = spec.discount();
    std::vector<std::vector<double>> out(scalings.size(), std::vector<double>(opts.samples));
    parallel_for(opts.samples, opts.workers, [&](std::size_t begin, std::size_t end) {
        Vector z(n);
        Vector x(n);
        Vector scaled(n);
        std::vector<double> acc(scalings.size());
        for (std::size_t m = begin; m < end; ++m) {
            RandomStream rng(opts.seed, m);
            for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t k = 0; k < laws.size(); ++k) {
                x.noalias() = laws[k].factor() * z;
                x = (x + laws[k].log_mean()).array().exp();
                for (std::size_t s = 0; s < scalings.size(); ++s) {
                    scaled = x.cwiseProduct(scalings[s]);
                    acc[s] += tuples[k].weight * spec.payoff({scaled.data(), static_cast<std::size_t>(n)});
                }
            }
            for (std::size_t s = 0; s < scalings.size(); ++s) out[s][m] = df * acc[s];
        }
    });
    return out;
}

inline PriceEstimate single_step_price(const MultiAssetModel& model, const TupleSet& tuples, const BasketSpec& spec,
                                       const McOptions& opts, PriceMethod method) {
    const std::vector<Vector> unit{Vector::Ones(static_cast<Eigen::Index>(model.size()))};
    const auto payoffs = single_step_payoffs(model, tuples, spec, opts, unit);
    return summarize(payoffs.front(), method);
}

}  // namespace detail

/// Theta for one tuple: single-step Monte Carlo over its multivariate
/// lognormal law at maturity (no time discretisation).
inline PriceEstimate component_arithmetic_price(const MultiAssetModel& model, const ComponentTuple& tuple,
                                                const BasketSpec& spec, const McOptions& opts = {}) {
    if (spec.kind != BasketKind::arithmetic) throw DomainError("component_arithmetic_price needs an arithmetic basket");
    ComponentTuple unit = tuple;
    unit.weight = 1.0;
    return detail::single_step_price(model, TupleSet({unit}), spec, opts, PriceMethod::single_step_mc);
}

/// Mixture price sum_k w_k Theta_k over the kappa-truncated tuple set.
///
/// Every tuple sees the same normal draws, so the reported standard error is
/// that of the per-sample combined payoff, which accounts for the positive
/// correlation between tuple estimates.
inline PriceEstimate price_arithmetic_mvmd(const MultiAssetModel& model, const BasketSpec& spec, double kappa = 0.0,
                                           const McOptions& opts = {}) {
    if (spec.kind != BasketKind::arithmetic) throw DomainError("price_arithmetic_mvmd needs an arithmetic basket");
    return detail::single_step_price(model, truncate(model, kappa), spec, opts, PriceMethod::semi_analytic);
}

/// Same single-step mixture estimator for any basket kind (used to price
/// geometric baskets by simulation alongside their closed form).
inline PriceEstimate price_mvmd_single_step(const MultiAssetModel& model, const BasketSpec& spec, double kappa = 0.0,
                                            const McOptions& opts = {}) {
    return detail::single_step_price(model, truncate(model, kappa), spec, opts, PriceMethod::semi_analytic);
}

struct Greeks {
    Vector delta;
    Matrix gamma;
};

namespace detail {

/// Bump stencil for central differences: index 0 is the base point, then
/// +/- bumps per asset, then the four corners per asset pair.
inline std::vector<Vector> greek_stencil(const MultiAssetModel& model, std::span<const double> bumps) {
    const auto n = static_cast<Eigen::Index>(model.size());
    std::vector<Vector> pts;
    pts.push_back(Vector::Ones(n));
    auto scale = [&](Eigen::Index i, double sign) { return 1.0 + sign * bumps[i] / model.asset(i).spot(); };
    for (Eigen::Index i = 0; i < n; ++i)
        for (double sign : {1.0, -1.0}) {
            Vector v = Vector::Ones(n);
            v(i) = scale(i, sign);
            pts.push_back(v);
        }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            for (double si : {1.0, -1.0})
                for (double sj : {1.0, -1.0}) {
                    Vector v = Vector::Ones(n);
                    v(i) = scale(i, si);
                    v(j) = scale(j, sj);
                    pts.push_back(v);
                }
    return pts;
}

inline Greeks greeks_from_stencil(std::span<const double> p, std::span<const double> bumps) {
    const auto n = static_cast<Eigen::Index>(bumps.size());
    Greeks g{Vector::Zero(n), Matrix::Zero(n, n)};
    const double base = p[0];
    for (Eigen::Index i = 0; i < n; ++i) {
        const double up = p[1 + 2 * i];
        const double down = p[2 + 2 * i];
        g.delta(i) = (up - down) / (2.0 * bumps[i]);
        g.gamma(i, i) = (up - 2.0 * base + down) / (bumps[i] * bumps[i]);
    }
    std::size_t idx = 1 + 2 * static_cast<std::size_t>(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double pp = p[idx], pm = p[idx + 1], mp = p[idx + 2], mm = p[idx + 3];
            idx += 4;
            g.gamma(i, j) = g.gamma(j, i) = (pp - pm - mp + mm) / (4.0 * bumps[i] * bumps[j]);
        }
    return g;
}

inline void check_bumps(const MultiAssetModel& model, std::span<const double> bumps) {
    if (bumps.size() != model.size()) throw DomainError("one bump size per asset is required");
    for (std::size_t i = 0; i < bumps.size(); ++i)
        if (!(bumps[i] > 0.0) || !(bumps[i] < model.asset(i).spot())) throw DomainError("bump sizes must lie in (0, spot)");
}

inline std::vector<double> stencil_prices(const MultiAssetModel& model, const TupleSet& tuples, const BasketSpec& spec,
                                          const McOptions& opts, const std::vector<Vector>& stencil) {
    std::vector<double> prices;
    if (spec.kind == BasketKind::geometric) {
        for (const auto& s : stencil) {
            auto bumped = model;
            for (std::size_t i = 0; i < model.size(); ++i)
                bumped = bumped.with_spot(i, model.asset(i).spot() * s(static_cast<Eigen::Index>(i)));
            double p = 0.0;
            for (const auto& t : tuples) p += t.weight * geometric_component_price(bumped, t, spec);
            prices.push_back(p);
        }
        return prices;
    }
    for (const auto& col : single_step_payoffs(model, tuples, spec, opts, stencil))
        prices.push_back(pairwise_sum(col) / static_cast<double>(col.size()));
    return prices;
}

}  // namespace detail

/// Finite-difference delta and gamma of one tuple's price (weight ignored).
inline Greeks component_greeks(const MultiAssetModel& model, const ComponentTuple& tuple, const BasketSpec& spec,
                               std::span<const double> bumps, const McOptions& opts = {}) {
    detail::check_bumps(model, bumps);
    ComponentTuple unit = tuple;
    unit.weight = 1.0;
    const auto stencil = detail::greek_stencil(model, bumps);
    const auto p = detail::stencil_prices(model, TupleSet({unit}), spec, opts, stencil);
    return detail::greeks_from_stencil(p, bumps);
}

/// Mixture delta and gamma: the weighted sum of tuple greeks, each obtained by
/// central differences with common random numbers (arithmetic) or from the
/// exact closed form (geometric).
inline Greeks greeks_mvmd(const MultiAssetModel& model, const BasketSpec& spec, std::span<const double> bumps,
                          double kappa = 0.0, const McOptions& opts = {}) {
    detail::check_bumps(model, bumps);
    const auto n = static_cast<Eigen::Index>(model.size());
    Greeks total{Vector::Zero(n), Matrix::Zero(n, n)};
    for (const auto& tuple : truncate(model, kappa)) {
        const auto g = component_greeks(model, tuple, spec, bumps, opts);
        total.delta += tuple.weight * g.delta;
        total.gamma += tuple.weight * g.gamma;
    }
    return total;
}

}  // namespace mvmd

#endif  // MVMD_PRICING_HPP
