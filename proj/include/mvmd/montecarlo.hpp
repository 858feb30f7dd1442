#ifndef MVMD_MONTECARLO_HPP
#define MVMD_MONTECARLO_HPP

// Terminal-law samplers for the three multi-asset models:
//   scmd-euler     path-wise log-Euler under per-asset local vols, correlated shocks
//   mvmd-terminal  exact single-step draw from the multivariate mixture law
//   muvm-terminal  per-asset random volatility scenario, then correlated GBM
// Path p always draws from RandomStream(seed, p) (or seed, p/2 for antithetic
// pairs), so every sample is reproducible independently of the worker count.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvmd/errors.hpp"
#include "mvmd/mixture_multivariate.hpp"
#include "mvmd/parallel.hpp"
#include "mvmd/pricing.hpp"
#include "mvmd/random.hpp"

namespace mvmd {

enum class Scheme { scmd_euler, mvmd_terminal, muvm_terminal };

inline std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::scmd_euler: return "scmd-euler";
        case Scheme::mvmd_terminal: return "mvmd-terminal";
        case Scheme::muvm_terminal: return "muvm-terminal";
    }
    return "unknown";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "scmd-euler") return Scheme::scmd_euler;
    if (s == "mvmd-terminal") return Scheme::mvmd_terminal;
    if (s == "muvm-terminal") return Scheme::muvm_terminal;
    throw ValidationError("unknown scheme '" + s + "'");
}

/// Euler steps per year used when none is given.
inline constexpr std::size_t kStepsPerYear = 360;

struct SimulationConfig {
    std::size_t paths = 100'000;
    std::size_t steps = kStepsPerYear;  // ignored by the single-step schemes
    double maturity = 1.0;
    std::uint64_t seed = 42;
    Scheme scheme = Scheme::mvmd_terminal;
    double kappa = 0.0;       // mvmd-terminal only
    bool antithetic = false;  // pairs (2q, 2q+1) share draws with opposite sign
    unsigned workers = default_workers();

    void validate() const {
        if (paths == 0) throw ValidationError("paths must be >= 1");
        if (scheme == Scheme::scmd_euler && steps == 0) throw ValidationError("steps must be >= 1 for scmd-euler");
        if (!(maturity > 0.0)) throw ValidationError("maturity must be positive");
        if (antithetic && paths % 2 != 0) throw ValidationError("antithetic sampling needs an even path count");
    }
};

/// paths x n matrix of terminal prices (row-major) plus provenance.
class TerminalSample {
public:
    TerminalSample(std::size_t paths, std::size_t dim, Scheme scheme, std::uint64_t seed, bool antithetic)
        : paths_(paths), dim_(dim), data_(paths * dim), scheme_(scheme), seed_(seed), antithetic_(antithetic) {}

    std::size_t paths() const { return paths_; }
    std::size_t dim() const { return dim_; }
    Scheme scheme() const { return scheme_; }
    std::uint64_t seed() const { return seed_; }
    bool antithetic() const { return antithetic_; }

    double operator()(std::size_t p, std::size_t i) const { return data_[p * dim_ + i]; }
    double& operator()(std::size_t p, std::size_t i) { return data_[p * dim_ + i]; }
    std::span<const double> row(std::size_t p) const { return {data_.data() + p * dim_, dim_}; }
    std::span<double> row(std::size_t p) { return {data_.data() + p * dim_, dim_}; }
    const std::vector<double>& data() const { return data_; }

    std::vector<double> column(std::size_t i) const {
        std::vector<double> out(paths_);
        for (std::size_t p = 0; p < paths_; ++p) out[p] = (*this)(p, i);
        return out;
    }

    friend bool operator==(const TerminalSample&, const TerminalSample&) = default;

private:
    std::size_t paths_;
    std::size_t dim_;
    std::vector<double> data_;
    Scheme scheme_;
    std::uint64_t seed_;
    bool antithetic_;
};

namespace detail {

/// Stream index and sign for path p under optional antithetic pairing.
struct PathDraw {
    std::uint64_t stream;
    double sign;
};

inline PathDraw path_draw(std::size_t p, bool antithetic) {
    if (!antithetic) return {p, 1.0};
    return {p / 2, (p % 2 == 0) ? 1.0 : -1.0};
}

}  // namespace detail

/// Path-wise simulation of the simply correlated model.
///
/// Each asset follows its own local volatility nu_i(t, S_i); the Brownian
/// increments are correlated through R, so the per-step covariance is
/// nu_i nu_j rho_ij. Local vols are frozen at the left end of each step, and
/// the first step uses the small-time limit at the spot.
inline TerminalSample simulate_scmd(const MultiAssetModel& model, const SimulationConfig& config) {
    config.validate();
    const std::size_t n = model.size();
    const std::size_t steps = config.steps;
    const double dt = config.maturity / static_cast<double>(steps);
    const double sqrt_dt = std::sqrt(dt);

    std::vector<double> var0(n);
    std::vector<std::vector<MixtureSlice>> slices(n);
    for (std::size_t i = 0; i < n; ++i) {
        var0[i] = std::pow(local_vol_at_start(model.asset(i)), 2);
        slices[i].reserve(steps);
        for (std::size_t s = 1; s < steps; ++s) slices[i].emplace_back(model.asset(i), static_cast<double>(s) * dt);
    }
    const Matrix& b = model.corr().factor();
    std::vector<double> chol(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            chol[i * n + j] = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

    TerminalSample out(config.paths, n, Scheme::scmd_euler, config.seed, config.antithetic);
    parallel_for(config.paths, config.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> z(n), log_s(n);
        for (std::size_t p = begin; p < end; ++p) {
            const auto draw = detail::path_draw(p, config.antithetic);
            RandomStream rng(config.seed, draw.stream);
            for (std::size_t i = 0; i < n; ++i) log_s[i] = std::log(model.asset(i).spot());
            for (std::size_t s = 0; s < steps; ++s) {
                for (std::size_t i = 0; i < n; ++i) z[i] = draw.sign * rng.normal();
                for (std::size_t i = 0; i < n; ++i) {
                    double shock = 0.0;
                    for (std::size_t j = 0; j <= i; ++j) shock += chol[i * n + j] * z[j];
                    const double var = s == 0 ? var0[i] : slices[i][s - 1].local_variance_at_log(log_s[i]);
                    log_s[i] += (model.asset(i).drift() - 0.5 * var) * dt + std::sqrt(var) * sqrt_dt * shock;
                }
            }
            auto row = out.row(p);
            for (std::size_t i = 0; i < n; ++i) row[i] = std::exp(log_s[i]);
        }
    });
    return out;
}

/// Exact draw from the (kappa-truncated) multivariate mixture law at T: pick a
/// tuple with its renormalised weight, then a multivariate lognormal.
inline TerminalSample sample_mvmd_terminal(const MultiAssetModel& model, double maturity, std::size_t paths,
                                           std::uint64_t seed, double kappa = 0.0, bool antithetic = false,
                                           unsigned workers = default_workers()) {
    SimulationConfig cfg{paths, 1, maturity, seed, Scheme::mvmd_terminal, kappa, antithetic, workers};
    cfg.validate();
    const auto tuples = truncate(model, kappa);
    std::vector<ComponentLaw> laws;
    std::vector<double> cumulative;
    double acc = 0.0;
    for (const auto& t : tuples) {
        laws.emplace_back(model, t, maturity);
        acc += t.weight;
        cumulative.push_back(acc);
    }
    const auto n = static_cast<Eigen::Index>(model.size());
    TerminalSample out(paths, model.size(), Scheme::mvmd_terminal, seed, antithetic);
    parallel_for(paths, workers, [&](std::size_t begin, std::size_t end) {
        Vector z(n), x(n);
        for (std::size_t p = begin; p < end; ++p) {
            const auto draw = detail::path_draw(p, antithetic);
            RandomStream rng(seed, draw.stream);
            const double u = rng.uniform() * acc;
            std::size_t k = 0;
            while (k + 1 < cumulative.size() && u > cumulative[k]) ++k;
            for (Eigen::Index i = 0; i < n; ++i) z(i) = draw.sign * rng.normal();
            x.noalias() = laws[k].factor() * z;
            auto row = out.row(p);
            for (Eigen::Index i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = std::exp(laws[k].log_mean()(i) + x(i));
        }
    });
    return out;
}

/// Multivariate uncertain volatility model at T: every asset independently
/// draws one of its volatility curves with probability lambda_i^k, then all
/// assets follow correlated geometric Brownian motions. The terminal law is
/// sampled directly, so no early-time regularisation window is involved.
inline TerminalSample sample_muvm_terminal(const MultiAssetModel& model, double maturity, std::size_t paths,
                                           std::uint64_t seed, bool antithetic = false,
                                           unsigned workers = default_workers()) {
    SimulationConfig cfg{paths, 1, maturity, seed, Scheme::muvm_terminal, 0.0, antithetic, workers};
    cfg.validate();
    const std::size_t n = model.size();
    // Per asset: cumulative scenario probabilities.
    std::vector<std::vector<double>> cumulative(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const auto& c : model.asset(i).components()) cumulative[i].push_back(acc += c.weight);
    }
    // One law per tuple of the full grid, indexed in lexicographic order.
    std::vector<ComponentLaw> laws;
    std::vector<std::size_t> radix(n, 1);
    for (std::size_t i = n; i-- > 1;) radix[i - 1] = radix[i] * model.asset(i).size();
    for_each_tuple(model, -1.0, [&](const ComponentTuple& t) { laws.emplace_back(model, t, maturity); });

    TerminalSample out(paths, n, Scheme::muvm_terminal, seed, antithetic);
    parallel_for(paths, workers, [&](std::size_t begin, std::size_t end) {
        Vector z(static_cast<Eigen::Index>(n)), x(static_cast<Eigen::Index>(n));
        for (std::size_t p = begin; p < end; ++p) {
            const auto draw = detail::path_draw(p, antithetic);
            RandomStream rng(seed, draw.stream);
            std::size_t flat = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double u = rng.uniform() * cumulative[i].back();
                std::size_t k = 0;
                while (k + 1 < cumulative[i].size() && u > cumulative[i][k]) ++k;
                flat += k * radix[i];
            }
            for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = draw.sign * rng.normal();
            const auto& law = laws[flat];
            x.noalias() = law.factor() * z;
            auto row = out.row(p);
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                row[i] = std::exp(law.log_mean()(ii) + x(ii));
            }
        }
    });
    return out;
}

/// Dispatches on config.scheme.
inline TerminalSample simulate(const MultiAssetModel& model, const SimulationConfig& config) {
    switch (config.scheme) {
        case Scheme::scmd_euler: return simulate_scmd(model, config);
        case Scheme::mvmd_terminal:
            return sample_mvmd_terminal(model, config.maturity, config.paths, config.seed, config.kappa,
                                        config.antithetic, config.workers);
        case Scheme::muvm_terminal:
            return sample_muvm_terminal(model, config.maturity, config.paths, config.seed, config.antithetic,
                                        config.workers);
    }
    throw ValidationError("unknown scheme");
}

using Payoff = std::function<double(std::span<const double>)>;

/// Discounted sample mean and standard error of payoff(S(T)). Antithetic
/// pairs are averaged before the standard error is taken.
inline PriceEstimate estimate(const TerminalSample& samples, const Payoff& payoff, double rate, double maturity) {
    if (samples.paths() == 0) throw DomainError("cannot estimate from an empty sample");
    const double df = std::exp(-rate * maturity);
    const auto method = samples.scheme() == Scheme::scmd_euler ? PriceMethod::pathwise_mc : PriceMethod::single_step_mc;
    std::vector<double> values;
    if (samples.antithetic()) {
        values.resize(samples.paths() / 2);
        for (std::size_t q = 0; q < values.size(); ++q)
            values[q] = 0.5 * df * (payoff(samples.row(2 * q)) + payoff(samples.row(2 * q + 1)));
    } else {
        values.resize(samples.paths());
        for (std::size_t p = 0; p < values.size(); ++p) values[p] = df * payoff(samples.row(p));
    }
    auto est = summarize(values, method);
    est.samples = samples.paths();
    return est;
}

inline PriceEstimate estimate(const TerminalSample& samples, const BasketSpec& spec) {
    spec.validate(samples.dim());
    return estimate(samples, [&spec](std::span<const double> x) { return spec.payoff(x); }, spec.rate, spec.maturity);
}

}  // namespace mvmd

#endif  // MVMD_MONTECARLO_HPP
