#ifndef MVMD_DEPENDENCE_HPP
#define MVMD_DEPENDENCE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "mvmd/errors.hpp"
#include "mvmd/linalg.hpp"
#include "mvmd/mixture_multivariate.hpp"
#include "mvmd/montecarlo.hpp"
#include "mvmd/normal.hpp"
#include "mvmd/random.hpp"

namespace mvmd {

namespace detail {

/// Nodes and weights of the 20-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre20 {
    std::array<double, 20> nodes{};
    std::array<double, 20> weights{};

    GaussLegendre20() {
        constexpr int n = 20;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

inline const GaussLegendre20& gauss_legendre20() {
    static const GaussLegendre20 rule;
    return rule;
}

/// P(X > h, Y > k) for standard bivariate normals with correlation r
/// (Drezner-Wesolowsky as refined by Genz, with the |r| > 0.925 expansion).
inline double bivariate_upper(double h, double k, double r) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto& gl = gauss_legendre20();
    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = 0.5 * (h * h + k * k);
        const double asr = std::asin(r);
        for (int i = 0; i < 20; ++i) {
            const double sn = std::sin(0.5 * asr * (gl.nodes[i] + 1.0));
            bvn += gl.weights[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * two_pi) + norm_cdf(-h) * norm_cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-0.5 * (bs / as + hk)) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-0.5 * hk) * std::sqrt(two_pi) * norm_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a *= 0.5;
        for (int i = 0; i < 20; ++i) {
            const double xs = std::pow(a * (gl.nodes[i] + 1.0), 2);
            const double rs = std::sqrt(1.0 - xs);
            const double asr = -0.5 * (bs / xs + hk);
            if (asr > -100.0)
                bvn += a * gl.weights[i] * std::exp(asr) *
                       (std::exp(-hk * xs / (2.0 * std::pow(1.0 + rs, 2))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / two_pi;
    }
    if (r > 0.0) return bvn + norm_cdf(-std::max(h, k));
    return -bvn + std::max(0.0, norm_cdf(-h) - norm_cdf(-k));
}

}  // namespace detail

/// P(X <= a, Y <= b) for standard normals with correlation rho.
inline double bivariate_normal_cdf(double a, double b, double rho) {
    if (std::isnan(a) || std::isnan(b) || std::isnan(rho)) throw DomainError("bivariate_normal_cdf: NaN input");
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("bivariate_normal_cdf: correlation outside [-1, 1]");
    if (a == -std::numeric_limits<double>::infinity() || b == -std::numeric_limits<double>::infinity()) return 0.0;
    if (std::isinf(a)) return norm_cdf(b);
    if (std::isinf(b)) return norm_cdf(a);
    if (rho == 1.0) return norm_cdf(std::min(a, b));
    if (rho == -1.0) return std::max(0.0, norm_cdf(a) + norm_cdf(b) - 1.0);
    return std::clamp(detail::bivariate_upper(-a, -b, rho), 0.0, 1.0);
}

struct MvnResult {
    double value = 0.0;
    double error = 0.0;  // ~3 standard errors of the randomised estimate; 0 when exact
};

/// Largest dimension accepted by multivariate_normal_cdf.
inline constexpr std::size_t kMaxMvnDimension = 6;

/// Phi_M(z) for a correlation matrix M, n <= 6.
///
/// Coordinates at +infinity are marginalised out first. Up to two remaining
/// dimensions are evaluated exactly; beyond that, Genz's separation of
/// variables is integrated with a randomised Richtmyer lattice until the error
/// estimate falls below abs_tol.
inline MvnResult multivariate_normal_cdf(std::span<const double> z, const Matrix& m, double abs_tol = 1e-6,
                                         std::uint64_t seed = 20240229) {
    const std::size_t n_all = z.size();
    if (static_cast<std::size_t>(m.rows()) != n_all || static_cast<std::size_t>(m.cols()) != n_all)
        throw DomainError("multivariate_normal_cdf: matrix dimension mismatch");
    if (n_all > kMaxMvnDimension) throw UnsupportedError("multivariate_normal_cdf supports at most 6 dimensions");
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < n_all; ++i) {
        if (std::isnan(z[i])) throw DomainError("multivariate_normal_cdf: NaN input");
        if (z[i] == -std::numeric_limits<double>::infinity()) return {0.0, 0.0};
        if (z[i] != std::numeric_limits<double>::infinity()) keep.push_back(static_cast<Eigen::Index>(i));
    }
    const auto n = static_cast<Eigen::Index>(keep.size());
    if (n == 0) return {1.0, 0.0};
    if (n == 1) return {norm_cdf(z[keep[0]]), 0.0};
    if (n == 2) return {bivariate_normal_cdf(z[keep[0]], z[keep[1]], std::clamp(m(keep[0], keep[1]), -1.0, 1.0)), 0.0};

    Matrix sub(n, n);
    Vector b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b(i) = z[keep[i]];
        for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = m(keep[i], keep[j]);
    }
    const Matrix l = psd_cholesky(sub);

    static constexpr std::array<double, 5> primes{2.0, 3.0, 5.0, 7.0, 11.0};
    constexpr int shifts = 12;
    std::vector<double> gen(static_cast<std::size_t>(n - 1));
    for (std::size_t j = 0; j < gen.size(); ++j) gen[j] = std::fmod(std::sqrt(primes[j]), 1.0);

    auto integrand = [&](std::span<const double> w) {
        std::array<double, kMaxMvnDimension> y{};
        double prob = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < i; ++j) s += l(i, j) * y[static_cast<std::size_t>(j)];
            double e;
            if (l(i, i) > 0.0) e = norm_cdf((b(i) - s) / l(i, i));
            else e = s <= b(i) ? 1.0 : 0.0;
            prob *= e;
            if (prob == 0.0) return 0.0;
            if (i + 1 < n) {
                const double u = std::clamp(w[static_cast<std::size_t>(i)] * e, 1e-300, 1.0 - 1e-16);
                y[static_cast<std::size_t>(i)] = l(i, i) > 0.0 ? norm_inv(u) : 0.0;
            }
        }
        return prob;
    };

    RandomStream rng(seed, 0);
    std::vector<std::array<double, kMaxMvnDimension>> offsets(shifts);
    for (auto& o : offsets)
        for (auto& v : o) v = rng.uniform();

    MvnResult result;
    std::vector<double> w(static_cast<std::size_t>(n - 1));
    for (std::size_t points = 1024; points <= (std::size_t{1} << 21); points *= 2) {
        double sum = 0.0, sum_sq = 0.0;
        for (int s = 0; s < shifts; ++s) {
            double acc = 0.0;
            for (std::size_t k = 1; k <= points; ++k) {
                for (std::size_t j = 0; j < w.size(); ++j) {
                    const double frac = std::fmod(static_cast<double>(k) * gen[j] + offsets[s][j], 1.0);
                    w[j] = std::abs(2.0 * frac - 1.0);
                }
                acc += integrand(w);
            }
            const double mean = acc / static_cast<double>(points);
            sum += mean;
            sum_sq += mean * mean;
        }
        const double mean = sum / shifts;
        const double var = std::max(0.0, (sum_sq / shifts - mean * mean) * shifts / (shifts - 1.0));
        result = {mean, 3.0 * std::sqrt(var / shifts)};
        if (result.error <= abs_tol) break;
    }
    if (result.error > abs_tol) throw NumericalError("multivariate_normal_cdf did not reach the requested accuracy");
    result.value = std::clamp(result.value, 0.0, 1.0);
    return result;
}

/// Everything the two-asset, two-component Kendall tau formula needs.
///
/// Component pairs are ordered (1,1), (1,2), (2,1), (2,2) in (asset-1,
/// asset-2) component indices; X is log S_1(T), Y is log S_2(T).
struct TauParams {
    std::array<double, 4> alpha{};
    std::array<double, 4> mu_x{};
    std::array<double, 4> mu_y{};
    std::array<double, 4> sigma_x{};
    std::array<double, 4> sigma_y{};
    double rho = 0.0;

    double m_x(int i, int j) const { return (mu_x[i] - mu_x[j]) / std::hypot(sigma_x[i], sigma_x[j]); }
    double m_y(int i, int j) const { return (mu_y[i] - mu_y[j]) / std::hypot(sigma_y[i], sigma_y[j]); }
    double rho_ij(int i, int j) const {
        return (rho * sigma_x[i] * sigma_y[i] + rho * sigma_x[j] * sigma_y[j]) /
               (std::hypot(sigma_x[i], sigma_x[j]) * std::hypot(sigma_y[i], sigma_y[j]));
    }

    void validate() const {
        if (std::abs(std::accumulate(alpha.begin(), alpha.end(), 0.0) - 1.0) > 1e-12)
            throw ValidationError("tau weights must sum to 1");
        for (int i = 0; i < 4; ++i)
            if (!(sigma_x[i] > 0.0 && sigma_y[i] > 0.0)) throw ValidationError("tau log-volatilities must be positive");
        if (!(rho >= -1.0 && rho <= 1.0)) throw ValidationError("tau correlation outside [-1, 1]");
    }
};

/// Builds the closed-form tau inputs from a two-asset model. An asset with a
/// single component is treated as two identical components, the second with
/// weight 0, which reduces the formula to the Gaussian case.
inline TauParams tau_params(const MultiAssetModel& model, double maturity) {
    if (model.size() != 2) throw UnsupportedError("closed-form Kendall tau needs exactly two assets");
    for (const auto& a : model.assets()) {
        if (a.size() > 2) throw UnsupportedError("closed-form Kendall tau needs at most two mixture components per asset");
        for (const auto& c : a.components())
            if (!c.vol.is_constant()) throw UnsupportedError("closed-form Kendall tau needs constant volatilities");
    }
    if (!(maturity > 0.0)) throw DomainError("maturity must be positive");
    auto component = [](const AssetMixture& a, std::size_t k) {
        const auto& c = a.component(std::min(k, a.size() - 1));
        return std::pair{k < a.size() ? c.weight : 0.0, c.vol(0.0)};
    };
    const auto& a1 = model.asset(0);
    const auto& a2 = model.asset(1);
    TauParams p;
    p.rho = model.corr()(0, 1);
    const double sqrt_t = std::sqrt(maturity);
    for (int i = 0; i < 4; ++i) {
        const auto [l1, s1] = component(a1, static_cast<std::size_t>(i / 2));
        const auto [l2, s2] = component(a2, static_cast<std::size_t>(i % 2));
        p.alpha[i] = l1 * l2;
        p.mu_x[i] = std::log(a1.spot()) + (a1.drift() - 0.5 * s1 * s1) * maturity;
        p.mu_y[i] = std::log(a2.spot()) + (a2.drift() - 0.5 * s2 * s2) * maturity;
        p.sigma_x[i] = s1 * sqrt_t;
        p.sigma_y[i] = s2 * sqrt_t;
    }
    return p;
}

/// Closed-form Kendall tau of (S_1(T), S_2(T)) for the two-component mixture.
/// The bivariate normal terms are standardised CDFs evaluated at m_X, m_Y.
inline double kendall_tau(const TauParams& p) {
    p.validate();
    double sum_sq = 0.0;
    for (double a : p.alpha) sum_sq += a * a;
    double tau = 2.0 / std::numbers::pi * sum_sq * std::asin(p.rho) + sum_sq - 1.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double mx = p.m_x(i, j);
            const double my = p.m_y(i, j);
            const double r = std::clamp(p.rho_ij(i, j), -1.0, 1.0);
            tau += 4.0 * p.alpha[i] * p.alpha[j] * (bivariate_normal_cdf(mx, my, r) + bivariate_normal_cdf(-mx, -my, r));
        }
    return std::clamp(tau, -1.0, 1.0);
}

inline double kendall_tau_mvmd(const MultiAssetModel& model, double maturity) {
    return kendall_tau(tau_params(model, maturity));
}

namespace detail {

/// Number of inversions in v, counted by merge sort (v is sorted on return).
inline std::uint64_t count_inversions(std::vector<double>& v) {
    std::vector<double> buf(v.size());
    std::uint64_t swaps = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, v.size());
            const std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    swaps += mid - i;
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
        }
        v.swap(buf);
    }
    return swaps;
}

inline std::uint64_t tied_pairs(std::span<const double> sorted) {
    std::uint64_t ties = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    return ties;
}

}  // namespace detail

/// Sample Kendall tau (concordant minus discordant over all pairs) in
/// O(M log M). Pairs tied in either coordinate contribute zero.
inline double kendall_tau_empirical(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DomainError("kendall_tau_empirical: samples differ in length");
    const std::size_t m = xs.size();
    if (m < 2) throw DomainError("kendall_tau_empirical needs at least two pairs");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
    });
    std::vector<double> x_sorted(m), y_by_x(m);
    for (std::size_t i = 0; i < m; ++i) {
        x_sorted[i] = xs[order[i]];
        y_by_x[i] = ys[order[i]];
    }
    const std::uint64_t ties_x = detail::tied_pairs(x_sorted);
    std::uint64_t ties_xy = 0;
    for (std::size_t i = 0, run = 1; i + 1 <= m; ++i) {
        if (i + 1 < m && x_sorted[i + 1] == x_sorted[i] && y_by_x[i + 1] == y_by_x[i]) {
            ++run;
        } else {
            ties_xy += run * (run - 1) / 2;
            run = 1;
        }
    }
    const std::uint64_t discordant = detail::count_inversions(y_by_x);
    const std::uint64_t ties_y = detail::tied_pairs(y_by_x);
    const double total = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
    const double concordant_minus_discordant =
        total - static_cast<double>(ties_x) - static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
        2.0 * static_cast<double>(discordant);
    return concordant_minus_discordant / total;
}

/// Copula of S(t) under the mixture model:
/// C(u) = sum_k w_k Phi_{M_k}(h_1^k(F_1^{-1}(u_1)), ..., h_n^k(F_n^{-1}(u_n))).
inline double copula_value(const MultiAssetModel& model, double t, std::span<const double> u, double kappa = 0.0) {
    if (u.size() != model.size()) throw DomainError("copula_value: u has wrong dimension");
    if (!(t > 0.0)) throw DomainError("copula_value requires t > 0");
    const std::size_t n = model.size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(u[i] >= 0.0 && u[i] <= 1.0)) throw DomainError("copula_value: u must lie in [0, 1]");
        if (u[i] == 0.0) return 0.0;
        x[i] = u[i] == 1.0 ? std::numeric_limits<double>::infinity() : inverse_cdf(model.asset(i), t, u[i]);
    }
    double c = 0.0;
    std::vector<double> zs(n);
    for (const auto& tuple : truncate(model, kappa)) {
        const Matrix xi = integrated_covariance(model, tuple, t);
        const auto form = correlation_form(xi);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isinf(x[i])) {
                zs[i] = x[i];
                continue;
            }
            const auto& a = model.asset(i);
            const double v = form.sd(static_cast<Eigen::Index>(i));
            zs[i] = (std::log(x[i] / a.spot()) - a.drift() * t + 0.5 * v * v) / v;
        }
        c += tuple.weight * multivariate_normal_cdf(zs, form.corr).value;
    }
    return std::clamp(c, 0.0, 1.0);
}

/// Rank-based empirical copula of a terminal sample.
class EmpiricalCopula {
public:
    explicit EmpiricalCopula(const TerminalSample& sample) : paths_(sample.paths()), dim_(sample.dim()) {
        if (paths_ == 0) throw DomainError("empirical copula of an empty sample");
        ranks_.resize(paths_ * dim_);
        std::vector<std::size_t> order(paths_);
        for (std::size_t i = 0; i < dim_; ++i) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return sample(a, i) < sample(b, i); });
            for (std::size_t r = 0; r < paths_; ++r) ranks_[order[r] * dim_ + i] = r + 1;
        }
    }

    /// Fraction of samples whose normalised ranks are all <= u.
    double operator()(std::span<const double> u) const {
        if (u.size() != dim_) throw DomainError("empirical copula: u has wrong dimension");
        std::size_t count = 0;
        for (std::size_t p = 0; p < paths_; ++p) {
            bool inside = true;
            for (std::size_t i = 0; i < dim_ && inside; ++i)
                inside = static_cast<double>(ranks_[p * dim_ + i]) <= u[i] * static_cast<double>(paths_);
            count += inside;
        }
        return static_cast<double>(count) / static_cast<double>(paths_);
    }

private:
    std::size_t paths_;
    std::size_t dim_;
    std::vector<std::size_t> ranks_;
};

}  // namespace mvmd

#endif  // MVMD_DEPENDENCE_HPP
