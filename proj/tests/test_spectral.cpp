#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <boost/math/special_functions/bessel.hpp>

#include "levylab/spectral.hpp"
#include "levylab/verify.hpp"

using namespace levylab;

namespace {

/// Independent Bessel-zero oracle: bisection on J_nu.
double bessel_zero_bisect(double nu, double lo, double hi) {
    auto f = [&](double x) { return boost::math::cyl_bessel_j(nu, x); };
    REQUIRE(f(lo) * f(hi) < 0.0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("closed-form Brownian eigenvalues", "[spectral]") {
    CHECK(lambda1_bm_closed_form(1) == kPi * kPi / 4.0);  // exact: (pi/2)^2
    const double j01 = bessel_zero_bisect(0.0, 2.0, 3.0);
    CHECK(lambda1_bm_closed_form(2) == Catch::Approx(j01 * j01).epsilon(1e-12));
    CHECK(lambda1_bm_closed_form(2) == Catch::Approx(5.783185962946783).epsilon(1e-12));
    CHECK(lambda1_bm_closed_form(3) == Catch::Approx(kPi * kPi).epsilon(1e-14));
}

TEST_CASE("unit ball volumes", "[spectral]") {
    CHECK(unit_ball_volume(1) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(unit_ball_volume(2) == Catch::Approx(kPi).epsilon(1e-15));
    CHECK(unit_ball_volume(3) == Catch::Approx(4.0 * kPi / 3.0).epsilon(1e-15));
}

TEST_CASE("Faber-Krahn reduction", "[spectral]") {
    CHECK(lambda_alpha_infimum(1, 2.0, kPi * kPi / 4.0) ==
          Catch::Approx(kPi * kPi).epsilon(1e-14));
    CHECK(lambda_alpha_infimum(2, 2.0, lambda1_bm_closed_form(2)) ==
          Catch::Approx(kPi * 5.783185962946783).epsilon(1e-12));
    // linearity in lambda1
    CHECK(lambda_alpha_infimum(2, 1.3, 2.0) ==
          Catch::Approx(2.0 * lambda_alpha_infimum(2, 1.3, 1.0)).epsilon(1e-14));
}

TEST_CASE("1-d grid solver", "[spectral]") {
    SECTION("alpha = 2 converges to pi^2/4") {
        const auto est = lambda1_grid_1d(2.0, 1.0, 2000);
        CHECK(std::abs(est.value - kPi * kPi / 4.0) / (kPi * kPi / 4.0) <= 0.005);
        CHECK(est.error_bar >= std::abs(est.value - kPi * kPi / 4.0) / 50.0);
    }
    SECTION("exact stable scaling lambda(R) R^alpha") {
        for (double alpha : {1.0, 1.5}) {
            const double base = lambda1_grid_1d(alpha, 1.0, 600).value;
            for (double R : {2.0, 4.0}) {
                const double scaled = lambda1_grid_1d(alpha, R, 600).value * std::pow(R, alpha);
                CHECK(scaled == Catch::Approx(base).epsilon(1e-10));
            }
        }
    }
    SECTION("alpha = 1 regression value 1.1577738 within 1%") {
        const auto est = lambda1_grid_1d(1.0, 1.0, 2000);
        CHECK(std::abs(est.value - kLambda1Stable1d) / kLambda1Stable1d <= 0.01);
    }
    SECTION("domain monotonicity") {
        CHECK(lambda1_grid_1d(1.5, 1.0, 400).value > lambda1_grid_1d(1.5, 2.0, 400).value);
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(lambda1_grid_1d(2.0, 1.0, 100), std::invalid_argument);
        CHECK_THROWS_AS(lambda1_grid_1d(2.5, 1.0, 400), std::invalid_argument);
    }
}

TEST_CASE("exit-time MC estimator (reduced size)", "[spectral][slow]") {
    SECTION("Brownian d=1 within 12% at dt=1e-3, N=2e4") {
        ExitTimeMcConfig cfg;
        cfg.dt = 1e-3;
        cfg.n_paths = 20000;
        cfg.t_max = 3.0;
        cfg.seed = 99;
        const auto est = lambda1_exit_time_mc(LevySymbol::brownian(1, 1.0), 1.0, cfg);
        CHECK(std::abs(est.value - kPi * kPi / 4.0) / (kPi * kPi / 4.0) <= 0.12);
        CHECK(est.fit_t2 > est.fit_t1);
    }
    SECTION("stable domain scaling within combined error bars") {
        const double delta = 1.0;
        auto sym = LevySymbol::isotropic_stable(1, delta);
        ExitTimeMcConfig cfg;
        cfg.dt = 1e-3;
        cfg.n_paths = 15000;
        cfg.t_max = 4.0;
        cfg.seed = 7;
        const auto a = lambda1_exit_time_mc(sym, 1.0, cfg);
        cfg.t_max = 8.0;
        cfg.seed = 8;
        const auto b = lambda1_exit_time_mc(sym, 2.0, cfg);
        const double scaled = b.value * std::pow(2.0, delta);
        // generous bars: 3 fit sigmas each plus a 5% monitoring-bias margin
        const double bars = 3.0 * (a.error_bar + 2.0 * b.error_bar) + 0.05 * a.value;
        CHECK(std::abs(scaled - a.value) <= bars);
        // domain monotonicity
        CHECK(a.value > b.value);
    }
    SECTION("statistical error when the window starves") {
        ExitTimeMcConfig cfg;
        cfg.dt = 1e-2;
        cfg.n_paths = 10000;
        cfg.t_max = 2.0;
        cfg.fit_t2 = 2.0;
        cfg.fit_t1 = 1.9;  // window too narrow to hold 100 survivors comfortably
        cfg.seed = 3;
        CHECK_THROWS_AS(lambda1_exit_time_mc(LevySymbol::brownian(1, 4.0), 0.4, cfg),
                        std::runtime_error);
    }
}
