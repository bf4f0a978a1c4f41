#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "vevo/events.hpp"
#include "vevo/ve_model.hpp"

namespace vevo {

struct LMSettings {
    int max_iterations = 400;
    // RSS values here are ~1e-17 on noiseless curves, so the gradient cut
    // must sit near the double floor; the step tolerance is the usual stopper.
    double gradient_tolerance = 1e-14;  // on the projected gradient of the RSS
    double step_tolerance = 1e-14;      // relative step size
    double initial_damping = 1e-3;
    double damping_up = 10.0;    // multiplier after a rejected step, > 1
    double damping_down = 0.1;   // multiplier after an accepted step, < 1
    enum class Jacobian { analytic, central_difference };
    Jacobian jacobian = Jacobian::analytic;
    double fd_step = 1e-6;
};

/// A scalar curve t -> value with parameter vector p. `gradient` returns
/// d value / d p at one abscissa; leave it empty to force finite differences.
struct CurveModel {
    std::function<double(double, const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> gradient;
};

struct FitResult {
    Eigen::VectorXd params;
    double rss = 0.0;
    int n_points = 0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    bool degenerate = false;             // a parameter finished pinned at a bound
    std::vector<double> rss_history;     // RSS after each accepted step, starting value first
};

/// Levenberg-Marquardt least squares with box bounds enforced by projection.
/// Deterministic; accepted steps never increase the RSS. Stops on the
/// projected-gradient or step tolerance; hitting max_iterations returns the
/// best point found with converged = false.
FitResult lm_fit(const CurveModel& model, const Eigen::VectorXd& init, const Eigen::VectorXd& lower,
                 const Eigen::VectorXd& upper, const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                 const LMSettings& settings);

/// Same engine on a raw residual vector r(p); the Jacobian always comes from
/// central differences on r. Used where residuals are recursive rather than
/// pointwise (the ARMA conditional sum of squares).
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
FitResult lm_fit_residuals(const ResidualFn& residuals, const Eigen::VectorXd& init,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const LMSettings& settings);

/// p = (rho, b): omega + rho * t^-b.
CurveModel power_law_model(double omega);
/// p = (rho, b, c): omega + rho * exp(b * t^(1-c) / (c-1)), c > 1.
CurveModel stretched_exp_model(double omega);
/// p = (a, theta): omega + exp(a - theta * t).
CurveModel exp_decay_model(double omega);

struct VEFit {
    VEParams params;
    double rss = 0.0;
    std::array<double, 2> stage_rss{0.0, 0.0};
    int n_points = 0;
    bool converged = false;
    int iterations = 0;
    bool degenerate = false;  // a decay rate finished pinned at its lower bound
    std::vector<std::pair<int, double>> grid_rss;  // total RSS per evaluated t_w candidate
};

/// Candidate boundary grid {0} united with [max(3, lo), hi].
std::vector<int> t_w_grid(int lo, int hi);

/// Two-stage fit protocol: for every candidate t_w, fit the stretched
/// exponential on t in [1, t_w] and the power law on t in (t_w, T], both
/// against fixed omega; keep the candidate with the smallest total RSS
/// (ties break to the smaller t_w). Candidates need >= 3 stage-1 and >= 6
/// stage-2 points; each stage runs a small multi-start. t_w = 0 fits the
/// pure power law.
VEFit fit_two_stage(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                    const std::vector<int>& t_w_candidates, double omega,
                    const LMSettings& settings);
VEFit fit_two_stage(const ResponseCurve& curve, const std::vector<int>& t_w_candidates,
                    double omega, const LMSettings& settings);

struct HestonFit {
    HestonFitParams params;
    double rss = 0.0;
    int n_points = 0;
    bool converged = false;
    int iterations = 0;
    bool degenerate = false;  // theta finished pinned at its lower bound
};

/// Fits omega + exp(a - theta t) with omega held fixed. When every point
/// exceeds omega the start comes from the closed-form log-linear regression
/// of ln(y - omega) on t; otherwise plain LM from a default start.
HestonFit fit_heston(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double omega,
                     const LMSettings& settings);
HestonFit fit_heston(const ResponseCurve& curve, double omega, const LMSettings& settings);

struct ModelScore {
    std::string label;
    double rss = 0.0;
    int n_points = 0;
};

/// Stable ascending ranking by RSS. All entries must describe fits of the
/// same data (equal n_points).
std::vector<ModelScore> model_compare(std::vector<ModelScore> fits);

/// Curve points usable for fitting: lags with n_contributing > 0 and a
/// finite mean. Returns (t, y) with t starting at 1.
std::pair<Eigen::VectorXd, Eigen::VectorXd> usable_curve_points(const ResponseCurve& curve);

}  // namespace vevo
