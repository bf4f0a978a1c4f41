#include "vevo/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "vevo/common.hpp"

namespace vevo {

namespace {

constexpr double kRhoLo = 1e-12, kRhoHi = 1.0;
constexpr double kBLo = 1e-8, kBHi = 10.0;
constexpr double kCLo = 1.0 + 1e-6, kCHi = 10.0;

Eigen::VectorXd clamp(const Eigen::VectorXd& p, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return p.cwiseMax(lo).cwiseMin(hi);
}

// Gradient of the RSS projected onto the feasible box: components pushing
// outside an active bound are zeroed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd pg = grad;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double span = std::max(1.0, hi[j] - lo[j]);
        const double edge = 1e-12 * span;
        if (p[j] <= lo[j] + edge && grad[j] > 0.0) pg[j] = 0.0;
        if (p[j] >= hi[j] - edge && grad[j] < 0.0) pg[j] = 0.0;
    }
    return pg;
}

std::string params_to_string(const Eigen::VectorXd& p) {
    std::string out = "(";
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(p[i]);
    }
    return out + ")";
}

// Residual evaluator (false on non-finite output) and Jacobian of the
// residual vector w.r.t. the parameters.
struct LMProblem {
    std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&)> residuals;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
    Eigen::Index n = 0;
};

FitResult lm_core(const LMProblem& problem, const Eigen::VectorXd& init, const Eigen::VectorXd& lower,
                  const Eigen::VectorXd& upper, const LMSettings& settings) {
    const Eigen::Index n = problem.n, k = init.size();
    if (n < k) throw InsufficientDataError("lm_fit: need at least as many points as parameters");
    if (lower.size() != k || upper.size() != k) throw ValidationError("lm_fit: bound sizes differ");
    if (((init.array() < lower.array()) || (init.array() > upper.array())).any())
        throw ValidationError("lm_fit: initial point outside bounds");

    FitResult result;
    result.n_points = static_cast<int>(n);
    Eigen::VectorXd p = init;
    Eigen::VectorXd r(n);
    if (!problem.residuals(p, r))
        throw NumericalError("lm_fit: model non-finite at initial parameters " + params_to_string(p));
    double rss = r.squaredNorm();
    result.rss_history.push_back(rss);

    double damping = settings.initial_damping;
    Eigen::VectorXd r_trial(n);
    bool done = false;

    for (int iter = 0; iter < settings.max_iterations && !done; ++iter) {
        result.iterations = iter + 1;
        const Eigen::MatrixXd J = problem.jacobian(p);  // d residual / d p
        const Eigen::MatrixXd jtj = J.transpose() * J;
        const Eigen::VectorXd jtr = -(J.transpose() * r);  // Gauss-Newton right-hand side
        const Eigen::VectorXd grad = -2.0 * jtr;           // d RSS / d p
        const Eigen::VectorXd pg = projected_gradient(grad, p, lower, upper);
        result.gradient_norm = pg.lpNorm<Eigen::Infinity>();
        if (result.gradient_norm <= settings.gradient_tolerance) {
            result.converged = true;
            break;
        }

        bool accepted = false;
        while (!accepted && !done) {
            Eigen::MatrixXd damped = jtj;
            for (Eigen::Index j = 0; j < k; ++j)
                damped(j, j) += damping * std::max(jtj(j, j), 1e-300);
            const Eigen::VectorXd step = damped.ldlt().solve(jtr);
            const Eigen::VectorXd trial = clamp(p + step, lower, upper);
            const bool finite = problem.residuals(trial, r_trial);
            const double rss_trial =
                finite ? r_trial.squaredNorm() : std::numeric_limits<double>::infinity();
            if (finite && rss_trial <= rss) {
                const double step_size = (trial - p).norm();
                p = trial;
                r = r_trial;
                rss = rss_trial;
                result.rss_history.push_back(rss);
                damping = std::max(damping * settings.damping_down, 1e-14);
                accepted = true;
                if (step_size <= settings.step_tolerance * (p.norm() + settings.step_tolerance)) {
                    result.converged = true;
                    done = true;
                }
            } else {
                damping *= settings.damping_up;
                if (damping > 1e14) {
                    // no downhill step at any damping; settle for the current point
                    if (!finite && result.rss_history.size() == 1)
                        throw NumericalError("lm_fit: model non-finite near " + params_to_string(p));
                    result.converged = result.gradient_norm <= std::sqrt(settings.gradient_tolerance);
                    done = true;
                }
            }
        }
    }

    result.params = p;
    result.rss = rss;
    const double pin = 1e-9;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double span = std::max(1.0, upper[j] - lower[j]);
        if (p[j] <= lower[j] + pin * span || p[j] >= upper[j] - pin * span) result.degenerate = true;
    }
    return result;
}

}  // namespace

FitResult lm_fit(const CurveModel& model, const Eigen::VectorXd& init, const Eigen::VectorXd& lower,
                 const Eigen::VectorXd& upper, const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                 const LMSettings& settings) {
    if (y.size() != t.size()) throw ValidationError("lm_fit: t and y lengths differ");

    LMProblem problem;
    problem.n = t.size();
    problem.residuals = [&model, &t, &y](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double f = model.value(t[i], p);
            if (!std::isfinite(f)) return false;
            r[i] = y[i] - f;
        }
        return true;
    };
    const bool analytic = settings.jacobian == LMSettings::Jacobian::analytic && model.gradient;
    problem.jacobian = [&model, &t, analytic, &settings](const Eigen::VectorXd& p) {
        const Eigen::Index n = t.size(), k = p.size();
        Eigen::MatrixXd J(n, k);
        if (analytic) {
            // d residual / d p = -d model / d p
            for (Eigen::Index i = 0; i < n; ++i) J.row(i) = -model.gradient(t[i], p);
            return J;
        }
        for (Eigen::Index j = 0; j < k; ++j) {
            const double h = settings.fd_step * std::max(1.0, std::fabs(p[j]));
            Eigen::VectorXd lo_p = p, hi_p = p;
            lo_p[j] -= h;
            hi_p[j] += h;
            for (Eigen::Index i = 0; i < n; ++i)
                J(i, j) = -(model.value(t[i], hi_p) - model.value(t[i], lo_p)) / (2.0 * h);
        }
        return J;
    };
    return lm_core(problem, init, lower, upper, settings);
}

FitResult lm_fit_residuals(const ResidualFn& residuals, const Eigen::VectorXd& init,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const LMSettings& settings) {
    const Eigen::Index n = residuals(init).size();

    LMProblem problem;
    problem.n = n;
    problem.residuals = [&residuals, n](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        r = residuals(p);
        if (r.size() != n) throw ValidationError("lm_fit_residuals: residual size changed");
        return r.allFinite();
    };
    problem.jacobian = [&residuals, &settings](const Eigen::VectorXd& p) {
        Eigen::MatrixXd J;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            const double h = settings.fd_step * std::max(1.0, std::fabs(p[j]));
            Eigen::VectorXd lo_p = p, hi_p = p;
            lo_p[j] -= h;
            hi_p[j] += h;
            const Eigen::VectorXd diff = (residuals(hi_p) - residuals(lo_p)) / (2.0 * h);
            if (J.size() == 0) J.resize(diff.size(), p.size());
            J.col(j) = diff;
        }
        return J;
    };
    return lm_core(problem, init, lower, upper, settings);
}

CurveModel power_law_model(double omega) {
    CurveModel m;
    m.value = [omega](double t, const Eigen::VectorXd& p) {
        return omega + p[0] * std::pow(t, -p[1]);
    };
    m.gradient = [](double t, const Eigen::VectorXd& p) {
        const double decay = std::pow(t, -p[1]);
        Eigen::VectorXd g(2);
        g[0] = decay;
        g[1] = -p[0] * std::log(t) * decay;
        return g;
    };
    return m;
}

CurveModel stretched_exp_model(double omega) {
    CurveModel m;
    m.value = [omega](double t, const Eigen::VectorXd& p) {
        return omega + p[0] * std::exp(p[1] * std::pow(t, 1.0 - p[2]) / (p[2] - 1.0));
    };
    m.gradient = [](double t, const Eigen::VectorXd& p) {
        const double w = std::pow(t, 1.0 - p[2]);
        const double g_exp = p[1] * w / (p[2] - 1.0);
        const double e = std::exp(g_exp);
        Eigen::VectorXd g(3);
        g[0] = e;
        g[1] = p[0] * e * w / (p[2] - 1.0);
        g[2] = -p[0] * e * g_exp * (std::log(t) + 1.0 / (p[2] - 1.0));
        return g;
    };
    return m;
}

CurveModel exp_decay_model(double omega) {
    CurveModel m;
    m.value = [omega](double t, const Eigen::VectorXd& p) {
        return omega + std::exp(p[0] - p[1] * t);
    };
    m.gradient = [](double t, const Eigen::VectorXd& p) {
        const double e = std::exp(p[0] - p[1] * t);
        Eigen::VectorXd g(2);
        g[0] = e;
        g[1] = -t * e;
        return g;
    };
    return m;
}

namespace {

// Runs lm_fit from each start, keeping the best RSS; earlier starts win ties.
FitResult multi_start(const CurveModel& model, const std::vector<Eigen::VectorXd>& starts,
                      const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const Eigen::VectorXd& t,
                      const Eigen::VectorXd& y, const LMSettings& settings) {
    FitResult best;
    bool have_best = false;
    std::string last_error = "no starts";
    for (const auto& start : starts) {
        try {
            FitResult fit = lm_fit(model, clamp(start, lo, hi), lo, hi, t, y, settings);
            if (!have_best || fit.rss < best.rss) {
                best = std::move(fit);
                have_best = true;
            }
        } catch (const NumericalError& e) {
            last_error = e.what();
        }
    }
    if (!have_best) throw NumericalError("multi-start fit failed: " + last_error);
    return best;
}

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

Eigen::VectorXd vec3(double a, double b, double c) {
    Eigen::VectorXd v(3);
    v << a, b, c;
    return v;
}

}  // namespace

std::vector<int> t_w_grid(int lo, int hi) {
    if (lo < 0 || hi < lo) throw ValidationError("t_w_grid: need 0 <= lo <= hi");
    std::vector<int> grid;
    if (lo == 0) grid.push_back(0);
    for (int w = std::max(3, lo); w <= hi; ++w) grid.push_back(w);
    return grid;
}

VEFit fit_two_stage(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                    const std::vector<int>& t_w_candidates, double omega,
                    const LMSettings& settings) {
    if (t.size() != y.size()) throw ValidationError("fit_two_stage: t and y lengths differ");
    if (t.size() < 6) throw InsufficientDataError("fit_two_stage: need at least 6 curve points");

    const CurveModel power = power_law_model(omega);
    const CurveModel stretched = stretched_exp_model(omega);
    const Eigen::VectorXd power_lo = vec2(kRhoLo, kBLo), power_hi = vec2(kRhoHi, kBHi);
    const Eigen::VectorXd str_lo = vec3(kRhoLo, kBLo, kCLo), str_hi = vec3(kRhoHi, kBHi, kCHi);

    VEFit best;
    bool have_best = false;
    std::vector<std::pair<int, double>> grid;
    std::string last_error = "no usable t_w candidate";
    // RSS improvements below the double-precision floor of the data are ties;
    // ties keep the earlier (smaller) boundary. A 3-point stage 1 can
    // interpolate any curve exactly, so exact-zero RSS values must not oust
    // the t_w = 0 fit of a pure power law.
    const double y_scale = y.cwiseAbs().maxCoeff();
    const double tie_epsilon =
        static_cast<double>(y.size()) * (1e-12 * y_scale) * (1e-12 * y_scale);

    for (int w : t_w_candidates) {
        if (w != 0 && w < 3) continue;
        // split the sample at the candidate boundary
        std::vector<double> t1, y1, t2, y2;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            if (t[i] <= static_cast<double>(w)) {
                t1.push_back(t[i]);
                y1.push_back(y[i]);
            } else {
                t2.push_back(t[i]);
                y2.push_back(y[i]);
            }
        }
        if (w > 0 && t1.size() < 3) continue;
        if (t2.size() < 6) continue;

        try {
            VEFit candidate;
            candidate.params.t_w = w;
            candidate.params.omega = omega;
            candidate.n_points = static_cast<int>(t.size());
            candidate.converged = true;

            if (w > 0) {
                const Eigen::Map<const Eigen::VectorXd> t1v(t1.data(), static_cast<Eigen::Index>(t1.size()));
                const Eigen::Map<const Eigen::VectorXd> y1v(y1.data(), static_cast<Eigen::Index>(y1.size()));
                const double rho_start = std::clamp(y1[0] - omega, kRhoLo, kRhoHi);
                const std::vector<Eigen::VectorXd> starts = {
                    vec3(rho_start, 0.05, 1.5), vec3(rho_start, 0.05, 2.5),
                    vec3(rho_start, 0.5, 1.5), vec3(rho_start, 0.5, 2.5),
                    vec3(kRhoLo, kBLo, kCLo),  // nominal zero start projected into bounds
                };
                FitResult s1 = multi_start(stretched, starts, str_lo, str_hi, t1v, y1v, settings);
                candidate.params.rho1 = s1.params[0];
                candidate.params.b1 = s1.params[1];
                candidate.params.c1 = s1.params[2];
                candidate.stage_rss[0] = s1.rss;
                candidate.converged = candidate.converged && s1.converged;
                candidate.iterations += s1.iterations;
                candidate.degenerate = candidate.degenerate || s1.degenerate;
            }

            const Eigen::Map<const Eigen::VectorXd> t2v(t2.data(), static_cast<Eigen::Index>(t2.size()));
            const Eigen::Map<const Eigen::VectorXd> y2v(y2.data(), static_cast<Eigen::Index>(y2.size()));
            const double rho2_start = std::clamp(y2[0] - omega, kRhoLo, kRhoHi);
            const std::vector<Eigen::VectorXd> starts2 = {
                vec2(rho2_start, 0.05), vec2(rho2_start, 0.5), vec2(kRhoLo, kBLo)};
            FitResult s2 = multi_start(power, starts2, power_lo, power_hi, t2v, y2v, settings);
            candidate.params.rho2 = s2.params[0];
            candidate.params.b2 = s2.params[1];
            candidate.stage_rss[1] = s2.rss;
            candidate.converged = candidate.converged && s2.converged;
            candidate.iterations += s2.iterations;
            candidate.degenerate = candidate.degenerate || s2.degenerate;

            candidate.rss = candidate.stage_rss[0] + candidate.stage_rss[1];
            grid.emplace_back(w, candidate.rss);
            if (!have_best || candidate.rss + tie_epsilon < best.rss) {
                best = std::move(candidate);
                have_best = true;
            }
        } catch (const NumericalError& e) {
            last_error = e.what();
        }
    }
    if (!have_best) throw NumericalError("fit_two_stage: no candidate converged: " + last_error);
    best.grid_rss = std::move(grid);
    return best;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> usable_curve_points(const ResponseCurve& curve) {
    std::vector<double> t, y;
    for (int lag = 1; lag <= curve.horizon; ++lag) {
        if (curve.n_contributing[lag - 1] <= 0) continue;
        const double v = curve.mean_volatility[lag - 1];
        if (!std::isfinite(v)) continue;
        t.push_back(static_cast<double>(lag));
        y.push_back(v);
    }
    Eigen::VectorXd tv = Eigen::Map<Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
    Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return {tv, yv};
}

VEFit fit_two_stage(const ResponseCurve& curve, const std::vector<int>& t_w_candidates, double omega,
                    const LMSettings& settings) {
    auto [t, y] = usable_curve_points(curve);
    return fit_two_stage(t, y, t_w_candidates, omega, settings);
}

HestonFit fit_heston(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double omega,
                     const LMSettings& settings) {
    if (t.size() != y.size()) throw ValidationError("fit_heston: t and y lengths differ");
    if (t.size() < 2) throw InsufficientDataError("fit_heston: need at least 2 points");

    const Eigen::VectorXd lo = vec2(-60.0, 1e-8);
    const Eigen::VectorXd hi = vec2(20.0, 100.0);

    // closed-form log-linear start, ln(y - omega) = a - theta t, using the
    // points strictly above omega (far tails round to exactly omega in
    // double); anything else falls back to plain LM from a default start
    Eigen::VectorXd start = vec2(std::log(std::max(y.mean() - omega, 1e-10)), 0.1);
    std::vector<double> tp, lp;
    for (Eigen::Index i = 0; i < t.size(); ++i)
        if (y[i] > omega) {
            tp.push_back(t[i]);
            lp.push_back(std::log(y[i] - omega));
        }
    if (tp.size() >= 3) {
        const Eigen::Map<Eigen::VectorXd> tv(tp.data(), static_cast<Eigen::Index>(tp.size()));
        const Eigen::Map<Eigen::VectorXd> lv(lp.data(), static_cast<Eigen::Index>(lp.size()));
        const double mt = tv.mean(), ml = lv.mean();
        const double var = (tv.array() - mt).square().sum();
        if (var > 0.0) {
            const double slope = ((tv.array() - mt) * (lv.array() - ml)).sum() / var;
            start = vec2(ml - slope * mt, -slope);
        }
    }

    FitResult fit = lm_fit(exp_decay_model(omega), clamp(start, lo, hi), lo, hi, t, y, settings);
    HestonFit out;
    out.params = {fit.params[0], fit.params[1], omega};
    out.rss = fit.rss;
    out.n_points = fit.n_points;
    out.converged = fit.converged;
    out.iterations = fit.iterations;
    out.degenerate = fit.params[1] <= 2e-8;
    return out;
}

HestonFit fit_heston(const ResponseCurve& curve, double omega, const LMSettings& settings) {
    auto [t, y] = usable_curve_points(curve);
    return fit_heston(t, y, omega, settings);
}

std::vector<ModelScore> model_compare(std::vector<ModelScore> fits) {
    if (fits.empty()) return fits;
    for (const auto& f : fits)
        if (f.n_points != fits.front().n_points)
            throw ValidationError("model_compare: fits cover different data lengths");
    std::stable_sort(fits.begin(), fits.end(),
                     [](const ModelScore& a, const ModelScore& b) { return a.rss < b.rss; });
    return fits;
}

}  // namespace vevo
