#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vevo/common.hpp"
#include "vevo/econometrics.hpp"
#include "vevo/rng.hpp"

using namespace vevo;

namespace {

Eigen::VectorXd normals(int n, std::uint64_t seed, std::uint64_t stream = 0) {
    CounterRng rng(seed, stream);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.next_normal();
    return v;
}

Eigen::VectorXd ar1(int n, double coeff, std::uint64_t seed, std::uint64_t stream = 0) {
    CounterRng rng(seed, stream);
    Eigen::VectorXd v(n);
    double y = 0.0;
    for (int i = 0; i < n; ++i) {
        y = coeff * y + rng.next_normal();
        v[i] = y;
    }
    return v;
}

}  // namespace

TEST_CASE("ols reproduces an exact linear relation") {
    Eigen::MatrixXd X(20, 1);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
        X(i, 0) = i + 1;
        y[i] = 2.0 * X(i, 0);
    }
    const OLSResult res = ols(y, X, true);
    CHECK(res.coefficients[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(res.coefficients[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.rss < 1e-20);
}

TEST_CASE("ols matches the normal-equations oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(seed, 3);
        Eigen::MatrixXd X(50, 3);
        Eigen::VectorXd y(50);
        for (int i = 0; i < 50; ++i) {
            for (int j = 0; j < 3; ++j) X(i, j) = rng.next_normal();
            y[i] = 0.5 + X(i, 0) - 2.0 * X(i, 1) + 0.3 * rng.next_normal();
        }
        const OLSResult res = ols(y, X, true);
        const Eigen::VectorXd beta = oracle::ols_coefficients(y, oracle::with_intercept(X));
        for (int j = 0; j < 4; ++j)
            CHECK(res.coefficients[j] == doctest::Approx(beta[j]).epsilon(1e-10));
        CHECK(res.rss == doctest::Approx(oracle::ols_rss(y, oracle::with_intercept(X))).epsilon(1e-10));
    }
}

TEST_CASE("ols overall F keeps its size under the null") {
    int false_positives = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        CounterRng rng(seed, 4);
        Eigen::MatrixXd X(40, 2);
        Eigen::VectorXd y(40);
        for (int i = 0; i < 40; ++i) {
            X(i, 0) = rng.next_normal();
            X(i, 1) = rng.next_normal();
            y[i] = rng.next_normal();
        }
        if (ols(y, X, true).f_pvalue <= 0.05) ++false_positives;
    }
    CHECK(false_positives <= 10);  // ~5 expected
}

TEST_CASE("ols rejects degenerate designs") {
    Eigen::MatrixXd X(10, 2);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) {
        X(i, 0) = i;
        X(i, 1) = 2.0 * i;  // exact collinearity
        y[i] = i;
    }
    CHECK_THROWS_AS(ols(y, X, true), ValidationError);

    Eigen::MatrixXd wide(3, 5);
    Eigen::VectorXd y3(3);
    CHECK_THROWS_AS(ols(y3, wide, false), InsufficientDataError);
}

TEST_CASE("adf statistic matches the reference implementation") {
    // AR(1) with coefficient 0.5 from the fixed stream; reference statistics
    // computed with statsmodels adfuller (constant regression)
    const Eigen::VectorXd y = ar1(300, 0.5, 7);
    CHECK(y[0] == doctest::Approx(-0.6163716959).epsilon(1e-8));

    const ADFResult lag0 = adf_test(y, 0);
    CHECK(lag0.statistic == doctest::Approx(-9.7700368387).epsilon(1e-8));
    CHECK(lag0.selected_lag == 0);
    CHECK(lag0.reject_unit_root_at_5pct);

    const ADFResult aic = adf_test(y, 4);
    CHECK(aic.selected_lag == 0);
    CHECK(aic.statistic == doctest::Approx(-9.7700368387).epsilon(1e-8));
}

TEST_CASE("adf rejects white noise and keeps size on random walks") {
    int power = 0, size = 0;
    const int seeds = 25;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        if (adf_test(normals(500, seed, 10), 4).reject_unit_root_at_5pct) ++power;
        const Eigen::VectorXd walk = ar1(500, 1.0, seed, 11);
        if (adf_test(walk, 4).reject_unit_root_at_5pct) ++size;
    }
    CHECK(power == seeds);
    CHECK(size <= 4);
}

TEST_CASE("an exact linear ramp cannot reject the unit root") {
    Eigen::VectorXd ramp(200);
    for (int i = 0; i < 200; ++i) ramp[i] = 3.0 + 0.5 * i;
    const ADFResult res = adf_test(ramp, 2);
    CHECK_FALSE(res.reject_unit_root_at_5pct);
    CHECK(res.statistic == 0.0);
}

TEST_CASE("adf validates its input") {
    CHECK_THROWS_AS(adf_test(Eigen::VectorXd::Zero(8), 0), InsufficientDataError);
    CHECK_THROWS_AS(adf_test(Eigen::VectorXd::Constant(100, 3.0), 2), ValidationError);
}

TEST_CASE("var recovers a known bivariate system") {
    // v_t = 0.4 v_{t-1} + 0.3 z_{t-1} + e1; z_t = 0.5 z_{t-1} + e2
    const int n = 5000;
    CounterRng rng(123, 0);
    Eigen::VectorXd v(n), z(n);
    double pv = 0.0, pz = 0.0;
    for (int i = 0; i < n; ++i) {
        const double nv = 0.4 * pv + 0.3 * pz + rng.next_normal();
        const double nz = 0.5 * pz + rng.next_normal();
        v[i] = nv;
        z[i] = nz;
        pv = nv;
        pz = nz;
    }
    const VARModel model = var_fit_aic(v, z, 6);
    CHECK(model.lag == 1);
    CHECK(model.v_on_v[0] == doctest::Approx(0.4).epsilon(0.13));
    CHECK(model.z_on_v[0] == doctest::Approx(0.3).epsilon(0.13));
    CHECK(model.z_on_z[0] == doctest::Approx(0.5).epsilon(0.13));
    CHECK(std::fabs(model.v_on_z[0]) < 0.05);
}

TEST_CASE("ols residuals are orthogonal to the regressors") {
    CounterRng rng(88, 0);
    Eigen::MatrixXd X(100, 3);
    Eigen::VectorXd y(100);
    for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 3; ++j) X(i, j) = rng.next_normal();
        y[i] = 1.0 - X(i, 1) + 0.5 * rng.next_normal();
    }
    const OLSResult res = ols(y, X, true);
    CHECK(std::fabs(res.residuals.sum()) < 1e-8 * res.residuals.norm() * 10.0);
    for (int j = 0; j < 3; ++j) {
        const double dot = std::fabs(res.residuals.dot(X.col(j)));
        CHECK(dot < 1e-8 * res.residuals.norm() * X.col(j).norm());
    }
}

TEST_CASE("var aic selection is deterministic and finds a second-order system") {
    CounterRng rng(321, 0);
    const int n = 6000;
    Eigen::VectorXd v(n), z(n);
    double v1 = 0, v2 = 0, z1 = 0, z2 = 0;
    for (int i = 0; i < n; ++i) {
        const double nv = 0.3 * v1 - 0.35 * v2 + 0.2 * z2 + rng.next_normal();
        const double nz = 0.4 * z1 + rng.next_normal();
        v2 = v1;
        v1 = nv;
        z2 = z1;
        z1 = nz;
        v[i] = nv;
        z[i] = nz;
    }
    const VARModel a = var_fit_aic(v, z, 5);
    const VARModel b = var_fit_aic(v, z, 5);
    CHECK(a.lag == 2);  // lag-2 dynamics in both the own and cross terms
    CHECK(a.lag == b.lag);
    CHECK(a.aic == b.aic);
    CHECK(a.v_on_v[1] == doctest::Approx(-0.35).epsilon(0.15));
    CHECK(a.z_on_v[1] == doctest::Approx(0.2).epsilon(0.2));
}

TEST_CASE("var cross coefficients vanish for independent noise") {
    const Eigen::VectorXd v = normals(2000, 5, 20);
    const Eigen::VectorXd z = normals(2000, 5, 21);
    const VARModel model = var_fit_aic(v, z, 3);
    for (int k = 0; k < model.lag; ++k) {
        CHECK(std::fabs(model.z_on_v[k]) < 0.07);  // ~3 standard errors
        CHECK(std::fabs(model.v_on_z[k]) < 0.07);
    }
}

TEST_CASE("a shifted copy produces a unit lead coefficient") {
    const Eigen::VectorXd base = normals(500, 9, 22);
    const int n = 499;
    Eigen::VectorXd v(n), z(n);
    for (int i = 0; i < n; ++i) {
        v[i] = base[i];
        z[i] = base[i + 1];  // z anticipates v by one step: v_t = z_{t-1} exactly
    }
    const VARModel model = var_fit_aic(v, z, 1);
    CHECK(model.z_on_v[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(model.v_on_v[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
}

TEST_CASE("granger F equals the nested-OLS oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(seed, 30);
        const int n = 300;
        Eigen::VectorXd v(n), z(n);
        double pv = 0, pz = 0;
        for (int i = 0; i < n; ++i) {
            const double nv = 0.3 * pv + 0.2 * pz + rng.next_normal();
            const double nz = 0.4 * pz + 0.1 * pv + rng.next_normal();
            v[i] = nv;
            z[i] = nz;
            pv = nv;
            pz = nz;
        }
        const VARModel model = var_fit_aic(v, z, 2);
        const GrangerResult granger = granger_test(model, GrangerDirection::volume_to_volatility);

        const int lag = model.lag, rows = n - lag;
        Eigen::MatrixXd restricted(rows, lag + 1), unrestricted(rows, 2 * lag + 1);
        Eigen::VectorXd y(rows);
        restricted.col(0).setOnes();
        unrestricted.col(0).setOnes();
        for (int t = lag; t < n; ++t) {
            const int r = t - lag;
            y[r] = v[t];
            for (int j = 1; j <= lag; ++j) {
                restricted(r, j) = v[t - j];
                unrestricted(r, j) = v[t - j];
                unrestricted(r, lag + j) = z[t - j];
            }
        }
        const double f_oracle = oracle::nested_f(y, restricted, unrestricted, lag);
        CHECK(granger.f_statistic == doctest::Approx(f_oracle).epsilon(1e-8));
    }
}

TEST_CASE("granger detects a constructed lead and ignores the reverse") {
    int detected = 0, reverse_rejections = 0;
    const int seeds = 25;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        CounterRng rng(seed, 31);
        const int n = 400;
        Eigen::VectorXd v(n), z(n);
        double pv = 0;
        for (int i = 0; i < n; ++i) {
            v[i] = rng.next_normal();
            z[i] = 0.8 * pv + rng.next_normal();
            pv = v[i];
        }
        const VARModel model = var_fit_aic(v, z, 3);
        if (granger_test(model, GrangerDirection::volatility_to_volume).p_value <= 0.05) ++detected;
        if (granger_test(model, GrangerDirection::volume_to_volatility).p_value <= 0.05)
            ++reverse_rejections;
    }
    CHECK(detected == seeds);
    CHECK(reverse_rejections <= 4);
}

TEST_CASE("detrending removes an exact quadratic per session") {
    const int n = 240;
    Eigen::VectorXd z(n);
    std::vector<int> pos(n), sess(n);
    for (int i = 0; i < n; ++i) {
        const int s = i < 120 ? 0 : 1;
        const int p = (i % 120) + 1;
        sess[i] = s;
        pos[i] = p;
        z[i] = s == 0 ? 5.0 - 0.02 * p + 3e-4 * p * p : 4.0 + 0.01 * p - 1e-4 * p * p;
    }
    const DetrendResult res = detrend_volume(z, pos, sess);
    CHECK(res.residual.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(res.coefficients(0, 0) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(res.coefficients(0, 1) == doctest::Approx(-0.02).epsilon(1e-9));
    CHECK(res.coefficients(0, 2) == doctest::Approx(3e-4).epsilon(1e-9));
}

TEST_CASE("noisy detrend matches the OLS oracle and has zero-mean residuals") {
    CounterRng rng(77, 0);
    const int n = 480;
    Eigen::VectorXd z(n);
    std::vector<int> pos(n), sess(n);
    for (int i = 0; i < n; ++i) {
        sess[i] = (i / 120) % 2;
        pos[i] = (i % 120) + 1;
        z[i] = 6.0 + 0.015 * pos[i] - 2e-4 * pos[i] * pos[i] + 0.1 * rng.next_normal();
    }
    const DetrendResult res = detrend_volume(z, pos, sess);

    for (int s = 0; s < 2; ++s) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
            if (sess[i] == s) idx.push_back(i);
        Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), 3);
        Eigen::VectorXd ys(static_cast<Eigen::Index>(idx.size()));
        double mean_resid = 0.0;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            X(static_cast<Eigen::Index>(r), 0) = 1.0;
            X(static_cast<Eigen::Index>(r), 1) = pos[idx[r]];
            X(static_cast<Eigen::Index>(r), 2) = static_cast<double>(pos[idx[r]]) * pos[idx[r]];
            ys[static_cast<Eigen::Index>(r)] = z[idx[r]];
            mean_resid += res.residual[idx[r]];
        }
        const Eigen::VectorXd beta = oracle::ols_coefficients(ys, X);
        for (int j = 0; j < 3; ++j)
            CHECK(res.coefficients(s, j) == doctest::Approx(beta[j]).epsilon(1e-10));
        CHECK(std::fabs(mean_resid / static_cast<double>(idx.size())) < 1e-12);
    }
}

TEST_CASE("detrend rejects a session with fewer than 4 observations") {
    Eigen::VectorXd z(6);
    z << 1, 2, 3, 4, 5, 6;
    std::vector<int> pos{1, 2, 3, 4, 5, 1};
    std::vector<int> sess{0, 0, 0, 0, 0, 1};
    CHECK_THROWS_AS(detrend_volume(z, pos, sess), InsufficientDataError);
}

TEST_CASE("arma recovers AR(1) and MA(1) coefficients") {
    const int n = 10000;
    {
        const Eigen::VectorXd phi = ar1(n, 0.5, 1001);
        const ArmaFit fit = arma_fit(phi, 1, 0);
        CHECK(fit.ar[0] > 0.45);
        CHECK(fit.ar[0] < 0.55);
        CHECK(fit.stationary);
    }
    {
        CounterRng rng(1002, 0);
        Eigen::VectorXd phi(n);
        double prevferr = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e = rng.next_normal();
            phi[i] = e + 0.3 * prevferr;
            prevferr = e;
        }
        const ArmaFit fit = arma_fit(phi, 0, 1);
        CHECK(fit.ma[0] > 0.25);
        CHECK(fit.ma[0] < 0.35);
        CHECK(fit.invertible);
    }
    {
        const Eigen::VectorXd phi = normals(n, 1003);
        const ArmaFit fit = arma_fit(phi, 1, 0);
        CHECK(std::fabs(fit.ar[0]) < 2.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("arma split is exact and flags explosive estimates") {
    const Eigen::VectorXd phi = ar1(600, 0.4, 1004);
    const ArmaFit fit = arma_fit(phi, 1, 1);
    for (int i = 0; i < 600; ++i)
        CHECK(fit.fitted[i] + fit.innovations[i] == doctest::Approx(phi[i]).epsilon(1e-14));
    for (int i = 0; i < fit.p; ++i) CHECK(fit.innovations[i] == 0.0);

    const Eigen::VectorXd explosive = ar1(80, 1.08, 1005);
    CHECK_THROWS_AS(arma_fit(explosive, 5, 5), InsufficientDataError);  // too short for the order
    const ArmaFit bad = arma_fit(explosive, 1, 0);
    CHECK_FALSE(bad.stationary);
}

TEST_CASE("arma order selection by AIC picks the generating order") {
    const Eigen::VectorXd phi = ar1(8000, 0.6, 1006);
    const ArmaFit fit = arma_fit_aic(phi, 2, 2);
    CHECK(fit.p == 1);
    CHECK(fit.q == 0);
    CHECK(fit.ar[0] == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("volume decomposition identity and construction variance") {
    // quadratic trend + AR(1) + white noise, single session
    const int n = 2000;
    CounterRng rng(2024, 0);
    Eigen::VectorXd z(n);
    std::vector<int> pos(n), sess(n, 0);
    Eigen::VectorXd white(n);
    double ar_state = 0.0;
    for (int i = 0; i < n; ++i) {
        pos[i] = (i % 200) + 1;
        ar_state = 0.5 * ar_state + rng.next_normal();
        white[i] = 0.4 * rng.next_normal();
        z[i] = 8.0 + 0.01 * pos[i] - 3e-5 * pos[i] * pos[i] + ar_state + white[i];
    }
    const VolumeDecomposition dec = decompose_volume(z, pos, sess, ArmaOrder{false, 1, 0}, {});
    for (int i = 0; i < n; ++i)
        CHECK(dec.informed[i] + dec.uninformed[i] ==
              doctest::Approx(dec.detrended[i]).epsilon(1e-12));

    // the innovation variance matches white noise + the AR innovation
    const double var_informed =
        (dec.informed.array() - dec.informed.mean()).square().sum() / (n - 1);
    CHECK(var_informed / (1.0 + 0.16) > 0.8);
    CHECK(var_informed / (1.0 + 0.16) < 1.2);
}

TEST_CASE("deterministic quadratic volume has zero informed component") {
    const int n = 400;
    Eigen::VectorXd z(n);
    std::vector<int> pos(n), sess(n, 0);
    for (int i = 0; i < n; ++i) {
        pos[i] = i + 1;
        z[i] = 7.0 + 0.02 * pos[i] - 4e-5 * pos[i] * pos[i];
    }
    const VolumeDecomposition dec = decompose_volume(z, pos, sess, ArmaOrder{false, 1, 0}, {});
    CHECK(dec.informed.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("vv regression finds the informed component and matches the oracle") {
    int informative = 0, null_rejections = 0;
    const int seeds = 25;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        CounterRng rng(seed, 40);
        const int n = 200;
        Eigen::VectorXd v(n), zi(n), zu(n);
        for (int i = 0; i < n; ++i) {
            zi[i] = rng.next_normal();
            zu[i] = rng.next_normal();
            v[i] = 3.0 * zi[i] + rng.next_normal();
        }
        const OLSResult res = vv_regression(v, zi, zu);
        if (res.t_pvalues[1] <= 0.05 && res.t_pvalues[2] > 0.05) ++informative;

        Eigen::VectorXd v_null(n);
        for (int i = 0; i < n; ++i) v_null[i] = rng.next_normal();
        if (vv_regression(v_null, zi, zu).f_pvalue <= 0.05) ++null_rejections;

        Eigen::MatrixXd X(n, 2);
        X.col(0) = zi;
        X.col(1) = zu;
        const Eigen::VectorXd beta = oracle::ols_coefficients(v, oracle::with_intercept(X));
        for (int j = 0; j < 3; ++j)
            CHECK(res.coefficients[j] == doctest::Approx(beta[j]).epsilon(1e-10));
    }
    CHECK(informative >= 22);
    CHECK(null_rejections <= 4);

    Eigen::VectorXd a = normals(50, 60), b = normals(50, 61);
    CHECK(vv_regression(a, b, b * 2.0).collinear_flagged);
    CHECK_THROWS_AS(vv_regression(a.head(5), b.head(5), b.head(5)), InsufficientDataError);
}

TEST_CASE("stage battery runs the full suite on a long sample") {
    CounterRng rng(501, 0);
    const int n = 200;
    Eigen::VectorXd v(n), z(n);
    double pz = 0.0;
    for (int i = 0; i < n; ++i) {
        z[i] = 0.6 * pz + rng.next_normal();
        v[i] = 0.8 * pz + 0.3 * rng.next_normal();  // volume leads volatility
        pz = z[i];
    }
    const StageBattery battery = run_stage_battery(v, z, 4, ArmaOrder{}, {});
    REQUIRE(battery.adf_volatility.has_value());
    REQUIRE(battery.granger_volume_to_volatility.has_value());
    REQUIRE(battery.volume_volatility.has_value());
    CHECK(battery.skipped.empty());
    CHECK(battery.adf_volatility->reject_unit_root_at_5pct);
    CHECK(battery.granger_volume_to_volatility->p_value <= 0.05);
    CHECK(battery.granger_volatility_to_volume->p_value > 0.05);
}

TEST_CASE("stage battery marks short samples as insufficient") {
    const Eigen::VectorXd v = normals(8, 600), z = normals(8, 601);
    const StageBattery battery = run_stage_battery(v, z, 4, ArmaOrder{}, {});
    CHECK_FALSE(battery.adf_volatility.has_value());
    CHECK_FALSE(battery.granger_volume_to_volatility.has_value());
    CHECK_FALSE(battery.volume_volatility.has_value());
    CHECK(battery.skipped.size() == 3);
}
