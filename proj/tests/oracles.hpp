#pragma once

// Test-only reference implementations, deliberately independent of the
// library code paths they check: explicit normal equations instead of QR,
// textbook formulas instead of shared helpers.

#include <Eigen/Dense>

namespace oracle {

inline Eigen::VectorXd ols_coefficients(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
    return (X.transpose() * X).inverse() * (X.transpose() * y);
}

inline double ols_rss(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
    return (y - X * ols_coefficients(y, X)).squaredNorm();
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(X.cols()) = X;
    return out;
}

// Nested-model F statistic computed from two independent OLS solves.
inline double nested_f(const Eigen::VectorXd& y, const Eigen::MatrixXd& restricted,
                       const Eigen::MatrixXd& unrestricted, int n_restrictions) {
    const double rss_r = ols_rss(y, restricted);
    const double rss_u = ols_rss(y, unrestricted);
    const double df2 = static_cast<double>(y.size() - unrestricted.cols());
    return ((rss_r - rss_u) / n_restrictions) / (rss_u / df2);
}

}  // namespace oracle
