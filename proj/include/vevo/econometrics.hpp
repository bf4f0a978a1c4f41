#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "vevo/fitting.hpp"
#include "vevo/market_data.hpp"

namespace vevo {

struct OLSResult {
    Eigen::VectorXd coefficients;  // intercept first when add_intercept
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_values;
    Eigen::VectorXd t_pvalues;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double tss = 0.0;          // centered when an intercept is present
    double r_squared = 0.0;
    double f_statistic = 0.0;  // overall regression F
    double f_pvalue = 1.0;
    int n = 0;
    int k = 0;  // regressor count including the intercept
    bool collinear_flagged = false;
};

/// Least squares of y on X (column-pivoted QR). Throws on rank deficiency
/// or n <= k. Inference uses exact t / F distributions.
OLSResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, bool add_intercept);

struct ADFResult {
    double statistic = 0.0;
    bool reject_unit_root_at_5pct = false;
    int selected_lag = 0;
    double critical_value_5pct = 0.0;
    int n_obs = 0;  // observations in the final regression
};

/// Augmented Dickey-Fuller test, constant-only specification. The lag count
/// of the delta terms is chosen by AIC on a common sample up to max_lag; the
/// 5% decision uses the MacKinnon response-surface critical value.
ADFResult adf_test(const Eigen::VectorXd& series, int max_lag);

/// Bivariate VAR on (v, z) with equal lag order in both equations.
struct VARModel {
    int lag = 0;
    double intercept_v = 0.0, intercept_z = 0.0;
    Eigen::VectorXd v_on_v;  // own lags in the v equation
    Eigen::VectorXd z_on_v;  // z lags in the v equation (the lead-lag block)
    Eigen::VectorXd v_on_z;  // v lags in the z equation
    Eigen::VectorXd z_on_z;
    Eigen::VectorXd resid_v, resid_z;
    double aic = 0.0;
    int n_obs = 0;
    Eigen::VectorXd v, z;  // data retained for restricted refits
};

/// Fits the VAR for each lag 1..max_lag by equation-wise OLS on a common
/// sample, selects the lag minimizing n*ln(det(residual covariance)) + 2*k,
/// then refits at that lag on the maximal sample.
VARModel var_fit_aic(const Eigen::VectorXd& v, const Eigen::VectorXd& z, int max_lag);

enum class GrangerDirection {
    volume_to_volatility,  // null: z lags have zero coefficients in the v equation
    volatility_to_volume,  // null: v lags have zero coefficients in the z equation
};

struct GrangerResult {
    double f_statistic = 0.0;
    double p_value = 1.0;
    int lag = 0;
    int n_obs = 0;
};

GrangerResult granger_test(const VARModel& model, GrangerDirection direction);

struct DetrendResult {
    Eigen::MatrixXd coefficients;  // one row (a0, a1, a2) per session id
    Eigen::VectorXd residual;      // detrended series in input order
};

/// Quadratic intraday detrending: OLS of z on (1, pos, pos^2) independently
/// per session id; the residual is the detrended volume.
DetrendResult detrend_volume(const Eigen::VectorXd& z, const std::vector<int>& session_pos,
                             const std::vector<int>& session_id);

struct ArmaFit {
    int p = 0, q = 0;
    double c0 = 0.0;
    Eigen::VectorXd ar;           // coefficients on lagged phi
    Eigen::VectorXd ma;           // coefficients on lagged innovations
    Eigen::VectorXd innovations;  // zero over the pre-sample ramp
    Eigen::VectorXd fitted;       // one-step-ahead predictions; phi = fitted + innovations
    double css = 0.0;
    bool converged = false;
    bool stationary = true;   // AR roots outside the unit circle
    bool invertible = true;   // MA roots outside the unit circle
};

/// ARMA(p, q) by conditional sum of squares: innovations before the p-th
/// observation are fixed at zero, the AR-only OLS fit seeds the optimizer,
/// and the CSS objective is minimized with the Levenberg-Marquardt engine.
ArmaFit arma_fit(const Eigen::VectorXd& phi, int p, int q, const LMSettings& settings = {});

/// ARMA orders chosen by n*ln(css/n) + 2*(p+q+1) over p <= max_p, q <= max_q,
/// p + q >= 1, skipping orders the sample is too short for.
ArmaFit arma_fit_aic(const Eigen::VectorXd& phi, int max_p, int max_q,
                     const LMSettings& settings = {});

struct VolumeDecomposition {
    DetrendResult detrend;
    ArmaFit arma;
    Eigen::VectorXd detrended;   // phi
    Eigen::VectorXd informed;    // Z_i = phi - fitted (the innovations)
    Eigen::VectorXd uninformed;  // Z_u = fitted
    std::vector<Eigen::Index> rows;  // series rows used (positive volume only)
};

struct ArmaOrder {
    bool aic_select = true;
    int p = 2, q = 2;  // caps when aic_select, exact orders otherwise
};

/// Volume decomposition pipeline: per-session quadratic detrend of log-volume
/// followed by the ARMA split. Z_i + Z_u = phi holds exactly at every point.
VolumeDecomposition mdh_decompose(const MarketSeries& series, const ArmaOrder& order,
                                  const LMSettings& settings = {});

/// Same pipeline on a bare vector (used for event-aligned curves, where the
/// lag axis is a single session).
VolumeDecomposition decompose_volume(const Eigen::VectorXd& z, const std::vector<int>& positions,
                                     const std::vector<int>& session_id, const ArmaOrder& order,
                                     const LMSettings& settings = {});

/// Volatility on informed/uninformed volume: V = b0 + b_i Z_i + b_u Z_u + e.
OLSResult vv_regression(const Eigen::VectorXd& v, const Eigen::VectorXd& zi,
                        const Eigen::VectorXd& zu);

/// One stage of the two-stage assumption battery, run on the event-aligned
/// curves. Each piece is attempted independently and skipped with a reason
/// when the stage sample is too short for it.
struct StageBattery {
    int n = 0;
    std::optional<ADFResult> adf_volatility, adf_volume;
    std::optional<GrangerResult> granger_volume_to_volatility, granger_volatility_to_volume;
    int var_lag = 0;
    std::optional<OLSResult> volume_volatility;  // Eq-style regression on Z_i, Z_u
    std::vector<std::string> skipped;            // "<test>: insufficient sample" markers
};

StageBattery run_stage_battery(const Eigen::VectorXd& v, const Eigen::VectorXd& z, int max_var_lag,
                               const ArmaOrder& arma_order, const LMSettings& settings);

}  // namespace vevo
