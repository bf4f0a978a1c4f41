#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

namespace vevo {

/// Two-stage volatility-evolution parameters. Stage 1 (t <= t_w) decays as a
/// stretched exponential with exponent c1 > 1; stage 2 (t > t_w) is a power
/// law (c = 1). t_w = 0 means stage 1 is absent and the whole curve is the
/// power law. Stages carry independent (rho, b); no continuity is enforced
/// at t_w.
struct VEParams {
    int t_w = 0;
    double rho1 = 0.0;
    double b1 = 0.0;
    double c1 = 0.0;
    double rho2 = 0.0;
    double b2 = 0.0;
    double omega = 0.0;
};

/// Linear-response decay kernel:
///   K(t) = exp(b * t^(1-c) / (c-1))  for c > 1,
///   K(t) = t^(-b)                    for c = 1.
/// Strictly decreasing in t for b > 0; K -> 1 (c > 1) or 0 (c = 1) as t -> inf.
template <class Scalar>
Scalar response_function(Scalar b, Scalar c, Scalar t) {
    if (c > Scalar(1)) return std::exp(b * std::pow(t, Scalar(1) - c) / (c - Scalar(1)));
    return std::pow(t, -b);
}

/// Mean volatility at lag t > 0: omega + rho * K(t) with the stage picked by t_w.
double ve_mean(const VEParams& params, double t);
Eigen::ArrayXd ve_mean(const VEParams& params, const Eigen::ArrayXd& t);

/// Exponential-relaxation baseline: omega + exp(a - theta * t).
struct HestonFitParams {
    double a = 0.0;
    double theta = 0.0;
    double omega = 0.0;
};

double heston_mean(const HestonFitParams& params, double t);
Eigen::ArrayXd heston_mean(const HestonFitParams& params, const Eigen::ArrayXd& t);

/// Euler-Maruyama configuration for dV = -(b/t^c)(V - omega) dt + sigma_v dW
/// with an impulse of size rho at t = 0. dt is snapped to 1/round(1/dt) so
/// integer minutes fall exactly on the step grid.
struct SDEConfig {
    double rho = 0.0;
    double b = 0.0;
    double c = 1.0;
    double omega = 0.0;
    double sigma_v = 0.0;
    double dt = 1e-2;
    double t_end = 100.0;
    int n_paths = 1;
    std::uint64_t seed = 0;
};

/// Paths sampled at integer minutes 1..floor(t_end); paths(p, m-1) = V_p(m).
struct SimulationResult {
    Eigen::VectorXd minutes;
    Eigen::MatrixXd paths;

    Eigen::VectorXd ensemble_mean() const;
    /// Standard error of the ensemble mean per minute.
    Eigen::VectorXd ensemble_stderr() const;
};

/// Simulates the impulse response. The drift is singular at t = 0, so the
/// state is placed on the exact response at the first sampled minute,
/// V(1) = omega + rho * K(1), and stepped forward from there. Each step
/// applies the drift rate integrated exactly across the step (the state
/// update remains first order), adds sigma_v * sqrt(dt) * N(0,1) and clips
/// at zero (full truncation). Paths use counter-based streams keyed by
/// (seed, path), so results do not depend on generation order.
SimulationResult simulate(const SDEConfig& config);

}  // namespace vevo
