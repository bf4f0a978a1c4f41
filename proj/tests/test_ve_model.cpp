#include <doctest.h>

#include <cmath>

#include "vevo/common.hpp"
#include "vevo/rng.hpp"
#include "vevo/ve_model.hpp"

using namespace vevo;

namespace {

// Table-style two-stage parameter set used across the suite.
VEParams table_s2() { return {13, 0.89e-3, 0.41, 2.81, 1.06e-3, 0.05, 0.0}; }

}  // namespace

TEST_CASE("ve_mean evaluates both stages") {
    VEParams p = table_s2();

    // stage 2 at t = 100: 1.06e-3 * 100^-0.05, hand evaluation
    CHECK(ve_mean(p, 100.0) == doctest::Approx(1.06e-3 * std::pow(100.0, -0.05)).epsilon(1e-15));
    CHECK(ve_mean(p, 100.0) == doctest::Approx(8.420e-4).epsilon(5e-4));

    // stage 1 at t = 1: 0.89e-3 * exp(0.41/1.81)
    CHECK(ve_mean(p, 1.0) == doctest::Approx(0.89e-3 * std::exp(0.41 / 1.81)).epsilon(1e-15));
    CHECK(ve_mean(p, 1.0) == doctest::Approx(1.116e-3).epsilon(5e-4));

    // zero reversion limit: flat at rho in each stage
    VEParams flat{5, 2e-3, 0.0, 2.0, 3e-3, 0.0, 0.0};
    for (double t : {1.0, 3.0, 5.0}) CHECK(ve_mean(flat, t) == doctest::Approx(2e-3).epsilon(1e-15));
    for (double t : {6.0, 50.0, 500.0}) CHECK(ve_mean(flat, t) == doctest::Approx(3e-3).epsilon(1e-15));

    CHECK_THROWS_AS(ve_mean(p, 0.0), ValidationError);
    VEParams bad = p;
    bad.c1 = 1.0;
    CHECK_THROWS_AS(ve_mean(bad, 5.0), ValidationError);
}

TEST_CASE("omega shifts the solution uniformly") {
    VEParams p = table_s2();
    VEParams shifted = p;
    shifted.omega = 0.0011;
    for (double t : {1.0, 7.0, 13.0, 14.0, 90.0})
        CHECK(ve_mean(shifted, t) == doctest::Approx(ve_mean(p, t) + 0.0011).epsilon(1e-15));
}

TEST_CASE("response function branches and limits") {
    CHECK(response_function(0.7, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(response_function(0.41, 2.81, 1e6) == doctest::Approx(1.0).epsilon(1e-6));

    // strict monotone decrease on both branches
    CounterRng rng(11, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const double b = 0.05 + 0.9 * rng.next_unit();
        const double c = 1.0 + 2.5 * rng.next_unit() * (trial % 2);  // half the trials at c = 1
        double prev = response_function(b, std::max(c, 1.0), 0.5);
        for (double t : {1.0, 2.0, 5.0, 17.0, 80.0, 400.0}) {
            const double k = response_function(b, std::max(c, 1.0), t);
            CHECK(k < prev);
            prev = k;
        }
    }
}

TEST_CASE("ve_mean with omega = 0 factors through the response function") {
    CounterRng rng(12, 0);
    for (int trial = 0; trial < 50; ++trial) {
        VEParams p;
        p.t_w = 5 + static_cast<int>(10 * rng.next_unit());
        p.rho1 = 1e-4 + 2e-3 * rng.next_unit();
        p.b1 = 0.1 + rng.next_unit();
        p.c1 = 1.2 + 2.0 * rng.next_unit();
        p.rho2 = 1e-4 + 2e-3 * rng.next_unit();
        p.b2 = 0.02 + 0.3 * rng.next_unit();
        for (double t : {1.0, 2.5, 5.0, 30.0, 200.0}) {
            const bool stage1 = t <= p.t_w;
            const double expected = stage1 ? p.rho1 * response_function(p.b1, p.c1, t)
                                           : p.rho2 * response_function(p.b2, 1.0, t);
            CHECK(ve_mean(p, t) == doctest::Approx(expected).epsilon(1e-14));
        }
    }
}

TEST_CASE("heston mean values and log-linearity") {
    HestonFitParams p{-8.2537, 0.3506, 0.0011};
    CHECK(heston_mean(p, 0.0) == doctest::Approx(0.0011 + std::exp(-8.2537)).epsilon(1e-15));
    CHECK(heston_mean(p, 1.0) == doctest::Approx(1.283e-3).epsilon(1e-3));
    CHECK(heston_mean(p, 1e7) == doctest::Approx(0.0011).epsilon(1e-12));

    // larger t drowns exp(a - theta t) under omega and the subtraction loses digits
    for (double t : {0.0, 1.0, 5.0, 15.0})
        CHECK(std::log(heston_mean(p, t) - p.omega) == doctest::Approx(p.a - p.theta * t).epsilon(1e-9));
}

TEST_CASE("noiseless simulation tracks the closed form at O(dt)") {
    SDEConfig cfg;
    cfg.rho = 1.06e-3;
    cfg.b = 0.05;
    cfg.c = 1.0;
    cfg.sigma_v = 0.0;
    cfg.dt = 1e-3;
    cfg.t_end = 100.0;
    cfg.n_paths = 1;

    const SimulationResult sim = simulate(cfg);
    REQUIRE(sim.paths.cols() == 100);
    double max_rel = 0.0;
    for (int m = 1; m <= 100; ++m) {
        const double exact = cfg.rho * std::pow(static_cast<double>(m), -cfg.b);
        max_rel = std::max(max_rel, std::fabs(sim.paths(0, m - 1) - exact) / exact);
    }
    CHECK(max_rel < 1e-3);

    // halving dt halves the error
    cfg.dt = 5e-4;
    const SimulationResult fine = simulate(cfg);
    double max_rel_fine = 0.0;
    for (int m = 1; m <= 100; ++m) {
        const double exact = cfg.rho * std::pow(static_cast<double>(m), -cfg.b);
        max_rel_fine = std::max(max_rel_fine, std::fabs(fine.paths(0, m - 1) - exact) / exact);
    }
    CHECK(max_rel_fine / max_rel > 0.4);
    CHECK(max_rel_fine / max_rel < 0.6);
}

TEST_CASE("noiseless stage-1 regime matches the stretched exponential") {
    SDEConfig cfg;
    cfg.rho = 0.89e-3;
    cfg.b = 0.41;
    cfg.c = 2.81;
    cfg.sigma_v = 0.0;
    cfg.dt = 1e-3;
    cfg.t_end = 50.0;
    const SimulationResult sim = simulate(cfg);
    for (int m = 1; m <= 50; ++m) {
        const double exact = cfg.rho * response_function(cfg.b, cfg.c, static_cast<double>(m));
        CHECK(sim.paths(0, m - 1) == doctest::Approx(exact).epsilon(1e-4));
    }
}

TEST_CASE("zero impulse and zero noise stay at zero") {
    SDEConfig cfg;
    cfg.rho = 0.0;
    cfg.b = 0.3;
    cfg.c = 1.0;
    cfg.sigma_v = 0.0;
    cfg.dt = 0.01;
    cfg.t_end = 20.0;
    const SimulationResult sim = simulate(cfg);
    CHECK(sim.paths.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulation validates its configuration") {
    SDEConfig cfg;
    cfg.dt = 1.0;
    CHECK_THROWS_AS(simulate(cfg), ValidationError);
    cfg.dt = 0.01;
    cfg.rho = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(simulate(cfg), ValidationError);
    cfg.rho = 1e-3;
    cfg.n_paths = 0;
    CHECK_THROWS_AS(simulate(cfg), ValidationError);
    cfg.n_paths = 1;
    cfg.t_end = 0.5;
    CHECK_THROWS_AS(simulate(cfg), ValidationError);
}

TEST_CASE("paths are reproducible and schedule-independent") {
    SDEConfig cfg;
    cfg.rho = 2e-3;
    cfg.b = 0.1;
    cfg.c = 1.0;
    cfg.sigma_v = 1e-4;
    cfg.dt = 0.02;
    cfg.t_end = 30.0;
    cfg.seed = 77;
    cfg.n_paths = 3;
    const SimulationResult a = simulate(cfg);
    const SimulationResult b = simulate(cfg);
    CHECK((a.paths - b.paths).cwiseAbs().maxCoeff() == 0.0);

    // path p depends only on (seed, p), not on how many paths run
    cfg.n_paths = 7;
    const SimulationResult c = simulate(cfg);
    CHECK((c.paths.topRows(3) - a.paths).cwiseAbs().maxCoeff() == 0.0);

    cfg.seed = 78;
    const SimulationResult d = simulate(cfg);
    CHECK((d.paths.topRows(3) - a.paths).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("paths never go negative") {
    SDEConfig cfg;
    cfg.rho = 1e-4;
    cfg.b = 0.2;
    cfg.c = 1.0;
    cfg.sigma_v = 5e-4;  // noise dominates the level
    cfg.dt = 0.05;
    cfg.t_end = 50.0;
    cfg.n_paths = 20;
    cfg.seed = 5;
    const SimulationResult sim = simulate(cfg);
    CHECK(sim.paths.minCoeff() >= 0.0);
    CHECK((sim.paths.array() == 0.0).any());  // the clip actually engages
}

TEST_CASE("small ensemble mean stays near the closed form") {
    SDEConfig cfg;
    cfg.rho = 5.3e-3;
    cfg.b = 0.05;
    cfg.c = 1.0;
    cfg.sigma_v = 1e-4;
    cfg.dt = 0.02;
    cfg.t_end = 20.0;
    cfg.n_paths = 2000;
    cfg.seed = 31;
    const SimulationResult sim = simulate(cfg);
    const Eigen::VectorXd mean = sim.ensemble_mean();
    const Eigen::VectorXd se = sim.ensemble_stderr();
    for (int m = 2; m <= 20; ++m) {
        const double exact = cfg.rho * std::pow(static_cast<double>(m), -cfg.b);
        CHECK(std::fabs(mean[m - 1] - exact) < 4.0 * se[m - 1]);
    }
}
