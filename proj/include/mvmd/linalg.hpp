#ifndef MVMD_LINALG_HPP
#define MVMD_LINALG_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "mvmd/errors.hpp"

namespace mvmd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lower-triangular L with L L^T = a for positive semi-definite a.
///
/// Unpivoted Cholesky that zeroes a column whenever its pivot falls below
/// tol * max|a_ii|, so rank-deficient inputs (perfect correlation, zero
/// variance) factor cleanly. Throws if a pivot is clearly negative.
inline Matrix psd_cholesky(const Matrix& a, double tol = 1e-12) {
    const Eigen::Index n = a.rows();
    Matrix l = Matrix::Zero(n, n);
    const double scale = std::max(1e-300, a.diagonal().cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j) - l.row(j).head(j).squaredNorm();
        if (d < -1e3 * tol * scale) throw NumericalError("matrix is not positive semi-definite");
        if (d <= tol * scale) continue;
        const double pivot = std::sqrt(d);
        l(j, j) = pivot;
        for (Eigen::Index i = j + 1; i < n; ++i)
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / pivot;
    }
    return l;
}

inline double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

/// Splits a covariance matrix into standard deviations and a correlation
/// matrix. Zero-variance coordinates get a unit diagonal and no correlation.
struct CorrelationForm {
    Vector sd;
    Matrix corr;
};

inline CorrelationForm correlation_form(const Matrix& cov) {
    const Eigen::Index n = cov.rows();
    CorrelationForm out{cov.diagonal().cwiseMax(0.0).cwiseSqrt(), Matrix::Identity(n, n)};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && out.sd(i) > 0.0 && out.sd(j) > 0.0)
                out.corr(i, j) = std::clamp(cov(i, j) / (out.sd(i) * out.sd(j)), -1.0, 1.0);
    return out;
}

}  // namespace mvmd

#endif  // MVMD_LINALG_HPP
