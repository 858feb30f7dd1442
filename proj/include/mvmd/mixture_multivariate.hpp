#ifndef MVMD_MIXTURE_MULTIVARIATE_HPP
#define MVMD_MIXTURE_MULTIVARIATE_HPP

// Multivariate mixture dynamics. Every choice of one lognormal component per
// asset (a component tuple) defines a multivariate lognormal law; the joint
// law of the basket is their convex combination with product weights, and
// the state-dependent diffusion matrix is the matching posterior average of
// the per-tuple instantaneous covariances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvmd/errors.hpp"
#include "mvmd/linalg.hpp"
#include "mvmd/mixture_univariate.hpp"

namespace mvmd {

/// Symmetric, unit-diagonal, positive semi-definite correlation matrix R.
class CorrelationMatrix {
public:
    CorrelationMatrix() : CorrelationMatrix(Matrix::Identity(1, 1)) {}

    explicit CorrelationMatrix(Matrix m) : m_(std::move(m)) {
        const Eigen::Index n = m_.rows();
        if (n == 0 || m_.cols() != n) throw ValidationError("correlation matrix must be square and non-empty");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(m_(i, i) - 1.0) > 1e-12) throw ValidationError("correlation matrix needs a unit diagonal");
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!std::isfinite(m_(i, j)) || std::abs(m_(i, j)) > 1.0 + 1e-12)
                    throw ValidationError("correlation entries must lie in [-1, 1]");
                if (std::abs(m_(i, j) - m_(j, i)) > 1e-12) throw ValidationError("correlation matrix must be symmetric");
            }
        }
        m_ = 0.5 * (m_ + m_.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m_);
        if (eig.eigenvalues().minCoeff() < -1e-12)
            throw ValidationError("correlation matrix is not positive semi-definite");
        if (eig.eigenvalues().minCoeff() < 0.0) {
            // Clip rounding noise and restore the unit diagonal.
            Matrix clipped = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                             eig.eigenvectors().transpose();
            const Vector d = clipped.diagonal().cwiseSqrt().cwiseInverse();
            m_ = d.asDiagonal() * clipped * d.asDiagonal();
            m_.diagonal().setOnes();
        }
        m_.diagonal().setOnes();
        factor_ = psd_cholesky(m_);
    }

    /// Two-asset matrix [[1, rho], [rho, 1]].
    static CorrelationMatrix pair(double rho) {
        Matrix m(2, 2);
        m << 1.0, rho, rho, 1.0;
        return CorrelationMatrix(m);
    }

    std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
    double operator()(std::size_t i, std::size_t j) const { return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
    const Matrix& matrix() const { return m_; }
    /// Lower-triangular B with B B^T = R (rank-revealing for |rho| = 1).
    const Matrix& factor() const { return factor_; }

    friend bool operator==(const CorrelationMatrix& a, const CorrelationMatrix& b) { return a.m_ == b.m_; }

private:
    Matrix m_;
    Matrix factor_;
};

class MultiAssetModel {
public:
    MultiAssetModel(std::vector<AssetMixture> assets, CorrelationMatrix corr)
        : assets_(std::move(assets)), corr_(std::move(corr)) {
        if (assets_.empty()) throw ValidationError("model needs at least one asset");
        if (corr_.size() != assets_.size())
            throw ValidationError("correlation dimension " + std::to_string(corr_.size()) +
                                  " does not match asset count " + std::to_string(assets_.size()));
    }

    std::size_t size() const { return assets_.size(); }
    const AssetMixture& asset(std::size_t i) const { return assets_.at(i); }
    const std::vector<AssetMixture>& assets() const { return assets_; }
    const CorrelationMatrix& corr() const { return corr_; }

    MultiAssetModel with_spot(std::size_t i, double spot) const {
        auto assets = assets_;
        assets.at(i) = assets.at(i).with_spot(spot);
        return MultiAssetModel(std::move(assets), corr_);
    }

    friend bool operator==(const MultiAssetModel&, const MultiAssetModel&) = default;

private:
    std::vector<AssetMixture> assets_;
    CorrelationMatrix corr_;
};

/// One multivariate component (k_1, ..., k_n) and its (possibly renormalised)
/// product weight.
struct ComponentTuple {
    std::vector<std::size_t> indices;
    double weight = 1.0;
};

/// Visits every tuple whose raw product weight exceeds kappa, in lexicographic
/// order, without materialising the full N^n grid. Branches are pruned as soon
/// as the partial product drops to kappa, since further factors are <= 1.
inline void for_each_tuple(const MultiAssetModel& model, double kappa,
                           const std::function<void(const ComponentTuple&)>& visit) {
    const std::size_t n = model.size();
    ComponentTuple current{std::vector<std::size_t>(n, 0), 1.0};
    std::function<void(std::size_t, double)> descend = [&](std::size_t depth, double partial) {
        if (depth == n) {
            current.weight = partial;
            visit(current);
            return;
        }
        const auto& asset = model.asset(depth);
        for (std::size_t k = 0; k < asset.size(); ++k) {
            const double next = partial * asset.component(k).weight;
            if (!(next > kappa)) continue;
            current.indices[depth] = k;
            descend(depth + 1, next);
        }
    };
    descend(0, 1.0);
}

/// Immutable set of component tuples with weights summing to one.
class TupleSet {
public:
    explicit TupleSet(std::vector<ComponentTuple> tuples) : tuples_(std::move(tuples)) {}

    std::size_t size() const { return tuples_.size(); }
    const ComponentTuple& operator[](std::size_t i) const { return tuples_[i]; }
    auto begin() const { return tuples_.begin(); }
    auto end() const { return tuples_.end(); }

private:
    std::vector<ComponentTuple> tuples_;
};

/// Keeps tuples with product weight strictly above kappa and renormalises the
/// survivors to unit total weight. kappa = 0 returns the full tensor product.
inline TupleSet truncate(const MultiAssetModel& model, double kappa) {
    if (!(kappa >= 0.0 && kappa < 1.0)) throw DomainError("cutoff must lie in [0, 1)");
    std::vector<ComponentTuple> kept;
    for_each_tuple(model, kappa, [&](const ComponentTuple& t) { kept.push_back(t); });
    if (kept.empty()) throw DomainError("cutoff removed all components");
    if (kappa > 0.0) {
        double mass = 0.0;
        for (const auto& t : kept) mass += t.weight;
        for (auto& t : kept) t.weight /= mass;
    }
    return TupleSet(std::move(kept));
}

inline TupleSet full_tuple_set(const MultiAssetModel& model) { return truncate(model, 0.0); }

/// Xi_ij(t) = rho_ij * integral_0^t sigma_i^{k_i}(s) sigma_j^{k_j}(s) ds.
inline Matrix integrated_covariance(const MultiAssetModel& model, const ComponentTuple& tuple, double t) {
    if (!(t > 0.0)) throw DomainError("integrated_covariance requires t > 0");
    const std::size_t n = model.size();
    if (tuple.indices.size() != n) throw DomainError("tuple length does not match model dimension");
    Matrix xi(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const auto& vi = model.asset(i).component(tuple.indices[i]).vol;
            const auto& vj = model.asset(j).component(tuple.indices[j]).vol;
            const double v = model.corr()(i, j) * VolCurve::integrated_product(vi, vj, t);
            xi(i, j) = v;
            xi(j, i) = v;
        }
    return xi;
}

/// Instantaneous covariance V(t) of a tuple: [sigma_i^{k_i}(t) rho_ij sigma_j^{k_j}(t)].
inline Matrix instantaneous_covariance(const MultiAssetModel& model, const ComponentTuple& tuple, double t) {
    const std::size_t n = model.size();
    Vector s(n);
    for (std::size_t i = 0; i < n; ++i) s(i) = model.asset(i).component(tuple.indices[i]).vol(t);
    return s.asDiagonal() * model.corr().matrix() * s.asDiagonal();
}

/// Multivariate lognormal law of one component tuple at a fixed time.
class ComponentLaw {
public:
    static constexpr double kSingularTolerance = 1e-10;

    ComponentLaw(const MultiAssetModel& model, const ComponentTuple& tuple, double t)
        : indices_(tuple.indices), covariance_(integrated_covariance(model, tuple, t)) {
        const std::size_t n = model.size();
        log_mean_.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            log_mean_(i) = std::log(model.asset(i).spot()) + model.asset(i).drift() * t - 0.5 * covariance_(i, i);
        const auto form = correlation_form(covariance_);
        correlation_ = form.corr;
        factor_ = form.sd.asDiagonal() * psd_cholesky(form.corr);
        singular_ = form.sd.minCoeff() <= 0.0 || min_eigenvalue(form.corr) < kSingularTolerance;
        if (!singular_) {
            Eigen::LLT<Matrix> llt(covariance_);
            inverse_ = llt.solve(Matrix::Identity(n, n));
            log_det_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        }
    }

    const Matrix& covariance() const { return covariance_; }
    /// Correlation matrix of the Gaussian log-prices (the copula matrix M).
    const Matrix& correlation() const { return correlation_; }
    /// L with L L^T = Xi, rank-deficient when Xi is singular.
    const Matrix& factor() const { return factor_; }
    const Vector& log_mean() const { return log_mean_; }
    bool singular() const { return singular_; }

    double log_pdf(std::span<const double> x) const {
        if (singular_) throw SingularCovarianceError(indices_);
        const Eigen::Index n = log_mean_.size();
        Vector dev(n);
        double log_jacobian = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(x[i] > 0.0)) return -std::numeric_limits<double>::infinity();
            dev(i) = std::log(x[i]) - log_mean_(i);
            log_jacobian += std::log(x[i]);
        }
        const double quad = dev.dot(inverse_ * dev);
        return -0.5 * quad - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_ -
               log_jacobian;
    }

private:
    std::vector<std::size_t> indices_;
    Matrix covariance_;
    Matrix correlation_;
    Matrix factor_;
    Matrix inverse_;
    Vector log_mean_;
    double log_det_ = 0.0;
    bool singular_ = false;
};

inline double component_mvln_pdf(const MultiAssetModel& model, const ComponentTuple& tuple, double t,
                                 std::span<const double> x) {
    if (x.size() != model.size()) throw DomainError("price vector length does not match model dimension");
    return std::exp(ComponentLaw(model, tuple, t).log_pdf(x));
}

namespace detail {

/// Posterior weights w_k p_k(x) / sum_j w_j p_j(x), computed in log space.
inline std::vector<double> posterior_weights(const MultiAssetModel& model, const TupleSet& tuples, double t,
                                             std::span<const double> x, double* log_density = nullptr) {
    std::vector<double> logs(tuples.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tuples.size(); ++k) {
        logs[k] = std::log(tuples[k].weight) + ComponentLaw(model, tuples[k], t).log_pdf(x);
        top = std::max(top, logs[k]);
    }
    double total = 0.0;
    for (auto& l : logs) {
        l = std::isinf(top) ? 1.0 : std::exp(l - top);
        total += l;
    }
    for (auto& l : logs) l /= total;
    if (log_density) *log_density = top + std::log(total);
    return logs;
}

}  // namespace detail

/// Joint density of S(t) under the (possibly truncated) tuple set.
inline double mixture_pdf(const MultiAssetModel& model, const TupleSet& tuples, double t, std::span<const double> x) {
    if (x.size() != model.size()) throw DomainError("price vector length does not match model dimension");
    double log_density = 0.0;
    detail::posterior_weights(model, tuples, t, x, &log_density);
    return std::exp(log_density);
}

inline double mixture_pdf(const MultiAssetModel& model, double t, std::span<const double> x) {
    return mixture_pdf(model, full_tuple_set(model), t, x);
}

/// C C^T(t, x): posterior-weighted average of the tuple covariances V(t).
inline Matrix mvmd_diffusion_squared(const MultiAssetModel& model, const TupleSet& tuples, double t,
                                     std::span<const double> x) {
    if (!(t > 0.0)) throw DomainError("mvmd_diffusion_squared requires t > 0");
    if (x.size() != model.size()) throw DomainError("price vector length does not match model dimension");
    const auto post = detail::posterior_weights(model, tuples, t, x);
    const auto n = static_cast<Eigen::Index>(model.size());
    Matrix out = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < tuples.size(); ++k) out += post[k] * instantaneous_covariance(model, tuples[k], t);
    return out;
}

inline Matrix mvmd_diffusion_squared(const MultiAssetModel& model, double t, std::span<const double> x) {
    return mvmd_diffusion_squared(model, full_tuple_set(model), t, x);
}

/// Instantaneous covariance of the simply correlated model:
/// nu_i(t, x_i) nu_j(t, x_j) rho_ij.
inline Matrix scmd_covariance(const MultiAssetModel& model, double t, std::span<const double> x) {
    if (x.size() != model.size()) throw DomainError("price vector length does not match model dimension");
    const std::size_t n = model.size();
    Vector nu(n);
    for (std::size_t i = 0; i < n; ++i) nu(i) = local_vol(model.asset(i), t, x[i]);
    return nu.asDiagonal() * model.corr().matrix() * nu.asDiagonal();
}

/// E[S_i(t)^m] accumulated over the tuple expansion of the joint law.
inline double mixture_moment(const MultiAssetModel& model, std::size_t i, double t, int m) {
    double total = 0.0;
    for_each_tuple(model, 0.0, [&](const ComponentTuple& tuple) {
        const Matrix xi = integrated_covariance(model, tuple, t);
        const double log_mean = std::log(model.asset(i).spot()) + model.asset(i).drift() * t - 0.5 * xi(i, i);
        total += tuple.weight * std::exp(m * log_mean + 0.5 * m * m * xi(i, i));
    });
    return total;
}

/// Volume of {kappa < x_1 ... x_n <= 1} in the unit cube, by the recursion
/// V_n = V_{n-1} + (-1)^n / (n-1)! * kappa * ln(kappa)^(n-1), V_0 = 1.
/// kappa = 0 gives 1 for every n (continuity).
inline double volume_estimate(double kappa, int n) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw DomainError("cutoff must lie in [0, 1]");
    if (n < 0) throw DomainError("dimension must be non-negative");
    if (kappa == 0.0) return 1.0;
    const double log_kappa = std::log(kappa);
    double volume = 1.0;
    double power = 1.0;      // ln(kappa)^(m-1)
    double factorial = 1.0;  // (m-1)!
    for (int m = 1; m <= n; ++m) {
        if (m > 1) {
            power *= log_kappa;
            factorial *= m - 1;
        }
        volume += ((m % 2 == 0) ? 1.0 : -1.0) / factorial * kappa * power;
    }
    return volume;
}

/// Expected number of retained tuples when each asset has weight density rho_density.
inline double density_count(double kappa, int n, double rho_density) {
    return volume_estimate(kappa, n) * std::pow(rho_density, n);
}

}  // namespace mvmd

#endif  // MVMD_MIXTURE_MULTIVARIATE_HPP
