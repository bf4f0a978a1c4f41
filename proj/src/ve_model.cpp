#include "vevo/ve_model.hpp"

#include <cmath>

#include "vevo/common.hpp"
#include "vevo/rng.hpp"

namespace vevo {

double ve_mean(const VEParams& params, double t) {
    if (!(t > 0.0)) throw ValidationError("ve_mean: t must be positive");
    if (params.t_w > 0 && t <= static_cast<double>(params.t_w)) {
        if (!(params.c1 > 1.0))
            throw ValidationError("ve_mean: stage 1 requires c1 > 1 when t_w > 0");
        return params.omega + params.rho1 * response_function(params.b1, params.c1, t);
    }
    return params.omega + params.rho2 * std::pow(t, -params.b2);
}

Eigen::ArrayXd ve_mean(const VEParams& params, const Eigen::ArrayXd& t) {
    Eigen::ArrayXd out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = ve_mean(params, t[i]);
    return out;
}

double heston_mean(const HestonFitParams& params, double t) {
    return params.omega + std::exp(params.a - params.theta * t);
}

Eigen::ArrayXd heston_mean(const HestonFitParams& params, const Eigen::ArrayXd& t) {
    return params.omega + (params.a - params.theta * t).exp();
}

Eigen::VectorXd SimulationResult::ensemble_mean() const { return paths.colwise().mean(); }

Eigen::VectorXd SimulationResult::ensemble_stderr() const {
    const double n = static_cast<double>(paths.rows());
    Eigen::VectorXd mean = paths.colwise().mean();
    Eigen::VectorXd out(paths.cols());
    for (Eigen::Index j = 0; j < paths.cols(); ++j) {
        const double ss = (paths.col(j).array() - mean[j]).square().sum();
        out[j] = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

SimulationResult simulate(const SDEConfig& config) {
    if (!std::isfinite(config.rho) || !std::isfinite(config.b) || !std::isfinite(config.c) ||
        !std::isfinite(config.omega) || !std::isfinite(config.sigma_v) || !std::isfinite(config.dt) ||
        !std::isfinite(config.t_end))
        throw ValidationError("simulate: non-finite parameter");
    if (!(config.dt > 0.0) || config.dt >= 1.0)
        throw ValidationError("simulate: dt must lie in (0, 1) to sample integer minutes");
    if (config.sigma_v < 0.0) throw ValidationError("simulate: sigma_v must be non-negative");
    if (config.n_paths < 1) throw ValidationError("simulate: n_paths must be positive");
    if (!(config.c >= 1.0)) throw ValidationError("simulate: c must be >= 1");
    if (config.t_end < 1.0) throw ValidationError("simulate: t_end must cover at least minute 1");

    const int steps_per_minute = static_cast<int>(std::lround(1.0 / config.dt));
    const double dt = 1.0 / steps_per_minute;
    const double sqrt_dt = std::sqrt(dt);
    const int n_minutes = static_cast<int>(std::floor(config.t_end));
    const double v_start = config.omega + config.rho * response_function(config.b, config.c, 1.0);

    // Per-step drift decrement: the rate b/t^c integrated exactly across the
    // step. The state update stays first order (Euler-Maruyama), but the
    // coefficient quadrature does not add its own O(dt) lag, which matters
    // near t = 1 where the rate moves fastest. Shared across paths.
    const int total_steps = (n_minutes - 1) * steps_per_minute;
    Eigen::VectorXd decrement(std::max(total_steps, 0));
    for (int j = 0; j < total_steps; ++j) {
        const double t0 = 1.0 + static_cast<double>(j) * dt;
        const double t1 = 1.0 + static_cast<double>(j + 1) * dt;
        decrement[j] = config.c == 1.0 ? config.b * std::log(t1 / t0)
                                       : config.b * (std::pow(t1, 1.0 - config.c) -
                                                     std::pow(t0, 1.0 - config.c)) /
                                             (1.0 - config.c);
    }

    SimulationResult result;
    result.minutes = Eigen::VectorXd::LinSpaced(n_minutes, 1.0, static_cast<double>(n_minutes));
    result.paths.resize(config.n_paths, n_minutes);

    for (int p = 0; p < config.n_paths; ++p) {
        CounterRng rng(config.seed, static_cast<std::uint64_t>(p));
        double v = v_start;
        result.paths(p, 0) = v;
        int j = 0;
        for (int m = 1; m < n_minutes; ++m) {
            if (config.sigma_v > 0.0) {
                for (int step = 0; step < steps_per_minute; ++step, ++j) {
                    v -= decrement[j] * (v - config.omega);
                    v += config.sigma_v * sqrt_dt * rng.next_normal();
                    if (v < 0.0) v = 0.0;  // full truncation
                }
            } else {
                for (int step = 0; step < steps_per_minute; ++step, ++j) {
                    v -= decrement[j] * (v - config.omega);
                    if (v < 0.0) v = 0.0;
                }
            }
            if (!std::isfinite(v))
                throw NumericalError("simulate: path " + std::to_string(p) +
                                     " became non-finite near minute " + std::to_string(m + 1));
            result.paths(p, m) = v;
        }
    }
    return result;
}

}  // namespace vevo
