#include "vevo/econometrics.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "vevo/common.hpp"
#include "vevo/stats.hpp"

namespace vevo {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

OLSResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, bool add_intercept) {
    const Eigen::Index n = y.size();
    if (X.rows() != n) throw ValidationError("ols: y and X row counts differ");

    Eigen::MatrixXd design;
    if (add_intercept) {
        design.resize(n, X.cols() + 1);
        design.col(0).setOnes();
        design.rightCols(X.cols()) = X;
    } else {
        design = X;
    }
    const Eigen::Index k = design.cols();
    if (n <= k) throw InsufficientDataError("ols: need more observations than regressors");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) throw ValidationError("ols: design matrix is rank deficient");

    OLSResult res;
    res.n = static_cast<int>(n);
    res.k = static_cast<int>(k);
    res.coefficients = qr.solve(y);
    res.residuals = y - design * res.coefficients;
    res.rss = res.residuals.squaredNorm();
    res.tss = add_intercept ? (y.array() - y.mean()).square().sum() : y.squaredNorm();
    res.r_squared = res.tss > 0.0 ? 1.0 - res.rss / res.tss : 1.0;

    const double dof = static_cast<double>(n - k);
    const double sigma2 = res.rss / dof;
    const Eigen::MatrixXd xtx_inv =
        (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    res.std_errors.resize(k);
    res.t_values.resize(k);
    res.t_pvalues.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        res.std_errors[j] = std::sqrt(std::max(sigma2 * xtx_inv(j, j), 0.0));
        res.t_values[j] = res.std_errors[j] > 0.0 ? res.coefficients[j] / res.std_errors[j] : kNaN;
        res.t_pvalues[j] = std::isnan(res.t_values[j])
                               ? kNaN
                               : stats::student_t_pvalue(res.t_values[j], dof);
    }

    // overall F: all slope coefficients zero (all coefficients when no intercept)
    const double restrictions = static_cast<double>(add_intercept ? k - 1 : k);
    if (restrictions >= 1.0 && res.rss > 0.0) {
        res.f_statistic = ((res.tss - res.rss) / restrictions) / (res.rss / dof);
        res.f_pvalue = stats::f_pvalue(res.f_statistic, restrictions, dof);
    } else {
        res.f_statistic = kNaN;
        res.f_pvalue = kNaN;
    }
    return res;
}

namespace {

// MacKinnon (2010) response-surface 5% critical value, constant specification.
double adf_critical_5pct(int n_obs) {
    const double t = static_cast<double>(n_obs);
    return -2.86154 - 2.8903 / t - 4.234 / (t * t) - 40.04 / (t * t * t);
}

struct AdfRegression {
    double statistic = 0.0;
    double rss = 0.0;
    double delta_ss = 0.0;  // total sum of squares of the regressand
    int n_obs = 0;
};

// Dickey-Fuller regression: dy_t on [1, y_{t-1}, dy_{t-1}..dy_{t-p}],
// using observations t = start..N-1 (indices into y).
AdfRegression adf_regression(const Eigen::VectorXd& y, int p, int start) {
    const int n = static_cast<int>(y.size());
    const int rows = n - start;
    Eigen::VectorXd dy(rows);
    Eigen::MatrixXd X(rows, 1 + p);
    for (int t = start; t < n; ++t) {
        const int r = t - start;
        dy[r] = y[t] - y[t - 1];
        X(r, 0) = y[t - 1];
        for (int j = 1; j <= p; ++j) X(r, j) = y[t - j] - y[t - j - 1];
    }
    OLSResult fit = ols(dy, X, true);
    AdfRegression out;
    out.rss = fit.rss;
    out.n_obs = fit.n;
    out.delta_ss = dy.squaredNorm();
    // deterministic perfect fit leaves no evidence against the unit root
    out.statistic = fit.rss <= 1e-20 * std::max(out.delta_ss, 1e-300) ? 0.0 : fit.t_values[1];
    return out;
}

}  // namespace

ADFResult adf_test(const Eigen::VectorXd& series, int max_lag) {
    if (max_lag < 0) throw ValidationError("adf_test: max_lag must be >= 0");
    const int n = static_cast<int>(series.size());
    if (n <= max_lag + 10) throw InsufficientDataError("adf_test: series too short for max_lag");
    if ((series.array() == series[0]).all()) throw ValidationError("adf_test: constant series");

    // lag choice by AIC on the common sample implied by max_lag; candidates
    // whose design degenerates (constant differences make the lagged-delta
    // columns collinear with the intercept) are skipped
    int best_lag = -1;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int p = 0; p <= max_lag; ++p) {
        try {
            const AdfRegression reg = adf_regression(series, p, max_lag + 1);
            const double n_eff = static_cast<double>(reg.n_obs);
            const double aic = n_eff * std::log(std::max(reg.rss, 1e-300) / n_eff) + 2.0 * (p + 2);
            if (aic < best_aic) {
                best_aic = aic;
                best_lag = p;
            }
        } catch (const ValidationError&) {
        }
    }
    if (best_lag < 0) throw ValidationError("adf_test: every candidate regression is degenerate");

    const AdfRegression final_reg = adf_regression(series, best_lag, best_lag + 1);
    ADFResult out;
    out.statistic = final_reg.statistic;
    out.selected_lag = best_lag;
    out.n_obs = final_reg.n_obs;
    out.critical_value_5pct = adf_critical_5pct(final_reg.n_obs);
    out.reject_unit_root_at_5pct = out.statistic < out.critical_value_5pct;
    return out;
}

namespace {

struct VarEquations {
    OLSResult v_eq, z_eq;
    int n_obs = 0;
};

// Equation-wise OLS of the VAR(lag) using observations t = start..N-1.
VarEquations var_equations(const Eigen::VectorXd& v, const Eigen::VectorXd& z, int lag, int start) {
    const int n = static_cast<int>(v.size());
    const int rows = n - start;
    Eigen::MatrixXd X(rows, 2 * lag);
    Eigen::VectorXd yv(rows), yz(rows);
    for (int t = start; t < n; ++t) {
        const int r = t - start;
        yv[r] = v[t];
        yz[r] = z[t];
        for (int j = 1; j <= lag; ++j) {
            X(r, j - 1) = v[t - j];
            X(r, lag + j - 1) = z[t - j];
        }
    }
    VarEquations out;
    out.v_eq = ols(yv, X, true);
    out.z_eq = ols(yz, X, true);
    out.n_obs = rows;
    return out;
}

}  // namespace

VARModel var_fit_aic(const Eigen::VectorXd& v, const Eigen::VectorXd& z, int max_lag) {
    if (max_lag < 1) throw ValidationError("var_fit_aic: max_lag must be >= 1");
    if (v.size() != z.size()) throw ValidationError("var_fit_aic: series lengths differ");
    const int n = static_cast<int>(v.size());
    if (n <= 2 * max_lag + 10) throw InsufficientDataError("var_fit_aic: sample too short for max_lag");

    int best_lag = 1;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int lag = 1; lag <= max_lag; ++lag) {
        const VarEquations eq = var_equations(v, z, lag, max_lag);
        const double n_eff = static_cast<double>(eq.n_obs);
        Eigen::Matrix2d cov;
        cov(0, 0) = eq.v_eq.residuals.squaredNorm() / n_eff;
        cov(1, 1) = eq.z_eq.residuals.squaredNorm() / n_eff;
        cov(0, 1) = cov(1, 0) = eq.v_eq.residuals.dot(eq.z_eq.residuals) / n_eff;
        const double det = cov.determinant();
        const double aic =
            n_eff * std::log(std::max(det, 1e-300)) + 2.0 * (2.0 * (1.0 + 2.0 * lag));
        if (aic < best_aic) {
            best_aic = aic;
            best_lag = lag;
        }
    }

    const VarEquations eq = var_equations(v, z, best_lag, best_lag);
    VARModel model;
    model.lag = best_lag;
    model.aic = best_aic;
    model.n_obs = eq.n_obs;
    model.intercept_v = eq.v_eq.coefficients[0];
    model.intercept_z = eq.z_eq.coefficients[0];
    model.v_on_v = eq.v_eq.coefficients.segment(1, best_lag);
    model.z_on_v = eq.v_eq.coefficients.segment(1 + best_lag, best_lag);
    model.v_on_z = eq.z_eq.coefficients.segment(1, best_lag);
    model.z_on_z = eq.z_eq.coefficients.segment(1 + best_lag, best_lag);
    model.resid_v = eq.v_eq.residuals;
    model.resid_z = eq.z_eq.residuals;
    model.v = v;
    model.z = z;
    return model;
}

GrangerResult granger_test(const VARModel& model, GrangerDirection direction) {
    if (model.lag < 1 || model.v.size() == 0)
        throw ValidationError("granger_test: model has no fitted equations");
    const int n = static_cast<int>(model.v.size());
    const int lag = model.lag;
    const int rows = n - lag;

    const bool test_z_block = direction == GrangerDirection::volume_to_volatility;
    const Eigen::VectorXd& target = test_z_block ? model.v : model.z;
    const Eigen::VectorXd& kept = test_z_block ? model.v : model.z;
    const double rss_u =
        (test_z_block ? model.resid_v : model.resid_z).squaredNorm();

    // restricted model drops the tested block, keeping own lags
    Eigen::MatrixXd X(rows, lag);
    Eigen::VectorXd y(rows);
    for (int t = lag; t < n; ++t) {
        const int r = t - lag;
        y[r] = target[t];
        for (int j = 1; j <= lag; ++j) X(r, j - 1) = kept[t - j];
    }
    OLSResult restricted = ols(y, X, true);
    const double rss_r = restricted.rss;

    const double df2 = static_cast<double>(rows - 2 * lag - 1);
    if (df2 < 1.0) throw InsufficientDataError("granger_test: no residual degrees of freedom");
    if (rss_u <= 0.0) throw NumericalError("granger_test: degenerate unrestricted fit (zero RSS)");

    GrangerResult out;
    out.lag = lag;
    out.n_obs = rows;
    out.f_statistic = ((rss_r - rss_u) / lag) / (rss_u / df2);
    out.p_value = stats::f_pvalue(out.f_statistic, lag, df2);
    return out;
}

DetrendResult detrend_volume(const Eigen::VectorXd& z, const std::vector<int>& session_pos,
                             const std::vector<int>& session_id) {
    const Eigen::Index n = z.size();
    if (session_pos.size() != static_cast<std::size_t>(n) ||
        session_id.size() != static_cast<std::size_t>(n))
        throw ValidationError("detrend_volume: tag lengths differ from series length");
    if (n == 0) throw InsufficientDataError("detrend_volume: empty series");

    int n_sessions = 0;
    for (int id : session_id) {
        if (id < 0) throw ValidationError("detrend_volume: negative session id");
        n_sessions = std::max(n_sessions, id + 1);
    }

    DetrendResult out;
    out.coefficients.setConstant(n_sessions, 3, kNaN);
    out.residual.resize(n);

    for (int s = 0; s < n_sessions; ++s) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < n; ++i)
            if (session_id[static_cast<std::size_t>(i)] == s) idx.push_back(i);
        if (idx.empty()) continue;
        if (idx.size() < 4)
            throw InsufficientDataError("detrend_volume: session " + std::to_string(s) +
                                        " has fewer than 4 observations");
        Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), 2);
        Eigen::VectorXd ys(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const double pos = static_cast<double>(session_pos[static_cast<std::size_t>(idx[r])]);
            X(static_cast<Eigen::Index>(r), 0) = pos;
            X(static_cast<Eigen::Index>(r), 1) = pos * pos;
            ys[static_cast<Eigen::Index>(r)] = z[idx[r]];
        }
        OLSResult fit = ols(ys, X, true);
        out.coefficients.row(s) = fit.coefficients.transpose();
        for (std::size_t r = 0; r < idx.size(); ++r)
            out.residual[idx[r]] = fit.residuals[static_cast<Eigen::Index>(r)];
    }
    return out;
}

namespace {

// CSS innovations: u(t) = phi(t) - c0 - sum ar_i phi(t-i) - sum ma_j u(t-j),
// with u fixed at zero for t < p. Returns the full-length innovation series.
Eigen::VectorXd css_innovations(const Eigen::VectorXd& phi, int p, int q,
                                const Eigen::VectorXd& params) {
    const Eigen::Index n = phi.size();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    const double c0 = params[0];
    for (Eigen::Index t = p; t < n; ++t) {
        double pred = c0;
        for (int i = 1; i <= p; ++i) pred += params[i] * phi[t - i];
        for (int j = 1; j <= q; ++j)
            if (t - j >= p) pred += params[p + j] * u[t - j];
        u[t] = phi[t] - pred;
    }
    return u;
}

bool roots_inside_unit_circle(const Eigen::VectorXd& first_row) {
    const Eigen::Index m = first_row.size();
    if (m == 0) return true;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    companion.row(0) = first_row.transpose();
    if (m > 1) companion.block(1, 0, m - 1, m - 1).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return solver.eigenvalues().array().abs().maxCoeff() < 1.0 - 1e-9;
}

}  // namespace

ArmaFit arma_fit(const Eigen::VectorXd& phi, int p, int q, const LMSettings& settings) {
    if (p < 0 || q < 0 || p + q < 1) throw ValidationError("arma_fit: need p, q >= 0 and p + q >= 1");
    const Eigen::Index n = phi.size();
    if (n <= 10 * (p + q + 1))
        throw InsufficientDataError("arma_fit: series too short for ARMA(" + std::to_string(p) + "," +
                                    std::to_string(q) + ")");

    // AR-only least squares as the starting point; MA terms start at zero.
    // A degenerate design (near-constant phi) falls back to the flat start.
    Eigen::VectorXd start = Eigen::VectorXd::Zero(1 + p + q);
    start[0] = phi.mean();
    if (p > 0) {
        const Eigen::Index rows = n - p;
        Eigen::MatrixXd X(rows, p);
        Eigen::VectorXd y(rows);
        for (Eigen::Index t = p; t < n; ++t) {
            y[t - p] = phi[t];
            for (int i = 1; i <= p; ++i) X(t - p, i - 1) = phi[t - i];
        }
        try {
            OLSResult ar_fit = ols(y, X, true);
            start.head(1 + p) = ar_fit.coefficients;
        } catch (const ValidationError&) {
        }
    }

    const Eigen::Index n_css = n - p;
    auto residuals = [&phi, p, q, n_css](const Eigen::VectorXd& params) {
        return Eigen::VectorXd(css_innovations(phi, p, q, params).tail(n_css));
    };

    Eigen::VectorXd lower = Eigen::VectorXd::Constant(1 + p + q, -10.0);
    Eigen::VectorXd upper = Eigen::VectorXd::Constant(1 + p + q, 10.0);
    const double c0_span = 10.0 * std::max(1.0, phi.array().abs().maxCoeff());
    lower[0] = -c0_span;
    upper[0] = c0_span;
    start = start.cwiseMax(lower).cwiseMin(upper);

    FitResult fit = lm_fit_residuals(residuals, start, lower, upper, settings);

    ArmaFit out;
    out.p = p;
    out.q = q;
    out.c0 = fit.params[0];
    out.ar = fit.params.segment(1, p);
    out.ma = fit.params.segment(1 + p, q);
    out.innovations = css_innovations(phi, p, q, fit.params);
    out.fitted = phi - out.innovations;  // exact split by construction
    out.css = fit.rss;
    out.converged = fit.converged;
    out.stationary = roots_inside_unit_circle(out.ar);
    out.invertible = roots_inside_unit_circle(-out.ma);
    return out;
}

ArmaFit arma_fit_aic(const Eigen::VectorXd& phi, int max_p, int max_q, const LMSettings& settings) {
    if (max_p < 0 || max_q < 0 || max_p + max_q < 1)
        throw ValidationError("arma_fit_aic: need non-negative caps with max_p + max_q >= 1");
    const double n = static_cast<double>(phi.size());

    bool have_best = false;
    ArmaFit best;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int p = 0; p <= max_p; ++p) {
        for (int q = 0; q <= max_q; ++q) {
            if (p + q < 1 || n <= 10.0 * (p + q + 1)) continue;
            ArmaFit fit = arma_fit(phi, p, q, settings);
            const double n_css = static_cast<double>(phi.size() - p);
            const double aic =
                n_css * std::log(std::max(fit.css, 1e-300) / n_css) + 2.0 * (p + q + 1);
            if (!have_best || aic < best_aic) {
                best = std::move(fit);
                best_aic = aic;
                have_best = true;
            }
        }
    }
    if (!have_best)
        throw InsufficientDataError("arma_fit_aic: sample too short for every candidate order");
    return best;
}

VolumeDecomposition decompose_volume(const Eigen::VectorXd& z, const std::vector<int>& positions,
                                     const std::vector<int>& session_id, const ArmaOrder& order,
                                     const LMSettings& settings) {
    VolumeDecomposition out;
    out.detrend = detrend_volume(z, positions, session_id);
    out.detrended = out.detrend.residual;
    out.arma = order.aic_select ? arma_fit_aic(out.detrended, order.p, order.q, settings)
                                : arma_fit(out.detrended, order.p, order.q, settings);
    out.informed = out.arma.innovations;
    out.uninformed = out.arma.fitted;
    return out;
}

VolumeDecomposition mdh_decompose(const MarketSeries& series, const ArmaOrder& order,
                                  const LMSettings& settings) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < series.rows(); ++i)
        if (series.has_log_volume(i)) rows.push_back(i);
    if (rows.empty()) throw InsufficientDataError("mdh_decompose: no positive-volume rows");

    Eigen::VectorXd z(static_cast<Eigen::Index>(rows.size()));
    std::vector<int> positions(rows.size()), sessions(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        z[static_cast<Eigen::Index>(r)] = series.log_volume[rows[r]];
        positions[r] = series.session_pos[static_cast<std::size_t>(rows[r])];
        sessions[r] = series.session[static_cast<std::size_t>(rows[r])];
    }
    VolumeDecomposition out = decompose_volume(z, positions, sessions, order, settings);
    out.rows = std::move(rows);
    return out;
}

OLSResult vv_regression(const Eigen::VectorXd& v, const Eigen::VectorXd& zi,
                        const Eigen::VectorXd& zu) {
    const Eigen::Index n = v.size();
    if (zi.size() != n || zu.size() != n) throw ValidationError("vv_regression: lengths differ");
    if (n < 10) throw InsufficientDataError("vv_regression: need at least 10 observations");

    const double si = (zi.array() - zi.mean()).matrix().norm();
    const double su = (zu.array() - zu.mean()).matrix().norm();
    bool collinear = si == 0.0 || su == 0.0;
    if (!collinear) {
        const double corr = ((zi.array() - zi.mean()) * (zu.array() - zu.mean())).sum() / (si * su);
        collinear = std::fabs(corr) > 0.999;
    }

    Eigen::MatrixXd X(n, 2);
    X.col(0) = zi;
    X.col(1) = zu;
    OLSResult res;
    try {
        res = ols(v, X, true);
    } catch (const ValidationError&) {
        // exactly collinear regressors: report the informed-only regression
        // with the uninformed coefficient undefined rather than failing
        Eigen::MatrixXd informed_only(n, 1);
        informed_only.col(0) = zi;
        res = ols(v, informed_only, true);
        res.coefficients.conservativeResize(3);
        res.std_errors.conservativeResize(3);
        res.t_values.conservativeResize(3);
        res.t_pvalues.conservativeResize(3);
        res.coefficients[2] = res.std_errors[2] = res.t_values[2] = res.t_pvalues[2] = kNaN;
        res.k = 3;
        collinear = true;
    }
    res.collinear_flagged = collinear;
    return res;
}

StageBattery run_stage_battery(const Eigen::VectorXd& v, const Eigen::VectorXd& z, int max_var_lag,
                               const ArmaOrder& arma_order, const LMSettings& settings) {
    if (v.size() != z.size()) throw ValidationError("run_stage_battery: series lengths differ");
    StageBattery out;
    out.n = static_cast<int>(v.size());
    const int n = out.n;

    const int adf_cap = std::min(max_var_lag, n - 11);
    if (adf_cap >= 0) {
        try {
            out.adf_volatility = adf_test(v, adf_cap);
            out.adf_volume = adf_test(z, adf_cap);
        } catch (const ValidationError& e) {
            out.skipped.push_back(std::string("adf: ") + e.what());
        }
    } else {
        out.skipped.push_back("adf: insufficient sample");
    }

    const int var_cap = std::min(max_var_lag, (n - 11) / 2);
    if (var_cap >= 1) {
        try {
            VARModel model = var_fit_aic(v, z, var_cap);
            out.var_lag = model.lag;
            out.granger_volume_to_volatility =
                granger_test(model, GrangerDirection::volume_to_volatility);
            out.granger_volatility_to_volume =
                granger_test(model, GrangerDirection::volatility_to_volume);
        } catch (const NumericalError& e) {
            out.skipped.push_back(std::string("granger: ") + e.what());
        }
    } else {
        out.skipped.push_back("granger: insufficient sample");
    }

    bool mdh_ok = false;
    if (n >= 10) {
        try {
            std::vector<int> positions(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i + 1;
            const std::vector<int> single_session(static_cast<std::size_t>(n), 0);
            VolumeDecomposition dec =
                decompose_volume(z, positions, single_session, arma_order, settings);
            out.volume_volatility = vv_regression(v, dec.informed, dec.uninformed);
            mdh_ok = true;
        } catch (const InsufficientDataError&) {
        }
    }
    if (!mdh_ok) out.skipped.push_back("mdh: insufficient sample");

    return out;
}

}  // namespace vevo
