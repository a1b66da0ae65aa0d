#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "levylab/math.hpp"
#include "levylab/paths.hpp"
#include "levylab/symbols.hpp"

namespace levylab {

enum class EigenMethod { closed_form, grid_1d, exit_time_mc };

struct EigenvalueEstimate {
    double value = 0.0;
    EigenMethod method = EigenMethod::closed_form;
    double error_bar = 0.0;  // absolute
    // sqrt(dt)-extrapolated value when a dt/2 refinement ran (removes the
    // first-order discrete-monitoring bias of the exit-time estimator)
    std::optional<double> value_refined;
    double error_refined = 0.0;
    // metadata
    std::size_t grid_n = 0;
    std::size_t n_paths = 0;
    double dt = 0.0;
    double fit_t1 = 0.0, fit_t2 = 0.0;
    std::string note;
};

inline const char* eigen_method_name(EigenMethod m) {
    switch (m) {
        case EigenMethod::closed_form: return "closed_form";
        case EigenMethod::grid_1d: return "grid_1d";
        case EigenMethod::exit_time_mc: return "exit_time_mc";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// First Dirichlet eigenvalue of -Delta on B(0,1) in R^d: the square of the
/// first positive zero of J_{d/2-1}.
inline double lambda1_bm_closed_form(int d) {
    if (d < 1) throw std::invalid_argument("lambda1_bm_closed_form: d must be >= 1");
    switch (d) {
        case 1: return sqr(0.5 * kPi);  // cos(pi x / 2) on (-1,1)
        case 3: return sqr(kPi);        // j_{1/2,1} = pi
        default:
            return sqr(boost::math::cyl_bessel_j_zero(0.5 * d - 1.0, 1));
    }
}

/// Faber-Krahn reduction: lambda_(alpha) = w_d^{alpha/d} lambda1(B(0,1)) for
/// isotropic symbols.
inline double lambda_alpha_infimum(int d, double alpha, double lambda1_unit_ball) {
    if (!(lambda1_unit_ball > 0.0))
        throw std::invalid_argument("lambda_alpha_infimum: lambda1 must be > 0");
    return std::pow(unit_ball_volume(d), alpha / d) * lambda1_unit_ball;
}

// ---------------------------------------------------------------------------
// 1-d grid discretization
// ---------------------------------------------------------------------------

namespace detail {

/// Smallest eigenvalue of the (possibly dense) SPD matrix by inverse power
/// iteration; tridiagonal systems use the Thomas algorithm.
inline double smallest_eig_tridiag(const std::vector<double>& diag, double off, int n) {
    std::vector<double> x(n, 1.0), y(n), cp(n), dp(n);
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        // Thomas solve (diag, off) y = x
        cp[0] = off / diag[0];
        dp[0] = x[0] / diag[0];
        for (int i = 1; i < n; ++i) {
            const double m = diag[i] - off * cp[i - 1];
            cp[i] = off / m;
            dp[i] = (x[i] - off * dp[i - 1]) / m;
        }
        y[n - 1] = dp[n - 1];
        for (int i = n - 2; i >= 0; --i) y[i] = dp[i] - cp[i] * y[i + 1];
        double xy = 0.0, xx = 0.0, yy = 0.0;
        for (int i = 0; i < n; ++i) { xy += x[i] * y[i]; xx += x[i] * x[i]; yy += y[i] * y[i]; }
        const double lam = xx / xy;
        const double ny = std::sqrt(yy);
        for (int i = 0; i < n; ++i) x[i] = y[i] / ny;
        if (it > 2 && std::abs(lam - lambda) <= 1e-13 * std::abs(lam)) return lam;
        lambda = lam;
    }
    throw std::runtime_error("grid solver: tridiagonal power iteration did not converge");
}

inline double smallest_eig_dense(const Eigen::MatrixXd& A) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("grid solver: LDLT factorization failed");
    const auto n = A.rows();
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd y = ldlt.solve(x);
        const double lam = x.squaredNorm() / x.dot(y);
        x = y.normalized();
        if (it > 2 && std::abs(lam - lambda) <= 1e-13 * std::abs(lam)) return lam;
        lambda = lam;
    }
    throw std::runtime_error("grid solver: dense power iteration did not converge");
}

/// Raw grid eigenvalue for the generator with symbol |xi|^alpha on (-R, R),
/// exterior Dirichlet condition.
inline double lambda1_grid_raw(double alpha, double R, int n) {
    const double h = 2.0 * R / (n + 1);
    if (alpha == 2.0) {
        std::vector<double> diag(n, 2.0 / (h * h));
        return smallest_eig_tridiag(diag, -1.0 / (h * h), n);
    }
    // fractional case: cell quadrature of the exact kernel c |s|^{-1-alpha}
    const double c = 1.0 / LevySymbol::stable_cos_integral(1, alpha);
    const double c_half = c * std::pow(0.5 * h, 2.0 - alpha) / (2.0 - alpha);
    // w_k = c int over the k-th cell; the full sum telescopes to (c/alpha)(h/2)^{-alpha}
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 1; k <= n; ++k)
        w[static_cast<std::size_t>(k)] =
            c / alpha * (std::pow((k - 0.5) * h, -alpha) - std::pow((k + 0.5) * h, -alpha));
    const double w_total = c / alpha * std::pow(0.5 * h, -alpha);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0 * c_half / (h * h) + 2.0 * w_total;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            A(i, j) -= w[static_cast<std::size_t>(std::abs(i - j))];
        }
        if (i > 0) A(i, i - 1) -= c_half / (h * h);
        if (i + 1 < n) A(i, i + 1) -= c_half / (h * h);
    }
    return smallest_eig_dense(A);
}

}  // namespace detail

/// Principal Dirichlet eigenvalue of the 1-d symbol |xi|^alpha on (-R, R):
/// second differences for alpha = 2, exact-kernel cell quadrature with an
/// exterior-integrated Dirichlet condition for alpha < 2.  The error bar is a
/// Richardson comparison of the n and n/2 grids.
inline EigenvalueEstimate lambda1_grid_1d(double alpha, double R, int n) {
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw std::invalid_argument("lambda1_grid_1d: alpha must lie in (0,2]");
    if (n < 200) throw std::invalid_argument("lambda1_grid_1d: need n >= 200");
    if (!(R > 0.0)) throw std::invalid_argument("lambda1_grid_1d: need R > 0");
    EigenvalueEstimate est;
    est.method = EigenMethod::grid_1d;
    est.grid_n = static_cast<std::size_t>(n);
    const double fine = detail::lambda1_grid_raw(alpha, R, n);
    const double coarse = detail::lambda1_grid_raw(alpha, R, n / 2);
    est.value = fine;
    est.error_bar = std::abs(fine - coarse);
    est.note = "exterior Dirichlet by exact kernel integration";
    return est;
}

// ---------------------------------------------------------------------------
// Exit-time Monte Carlo
// ---------------------------------------------------------------------------

struct ExitTimeMcConfig {
    double dt = 1e-3;
    std::size_t n_paths = 100000;
    double t_max = 0.0;           // 0: auto from a pilot run
    double fit_t1 = 0.0;          // 0: first time with survival <= 0.2
    double fit_t2 = 0.0;          // 0: last time with >= 100 survivors
    std::uint64_t seed = 1;
    SamplerConfig sampler{};
    bool refine_dt = false;       // add a dt/2 comparison to the error bar
};

/// Least-squares slope of -log P(tau > t): the principal eigenvalue through
/// the eigenfunction expansion of the killed semigroup.
inline EigenvalueEstimate lambda1_exit_time_mc(const LevySymbol& symbol, double radius,
                                               const ExitTimeMcConfig& cfg) {
    if (cfg.n_paths < 10000)
        throw std::invalid_argument("lambda1_exit_time_mc: need N >= 1e4");
    if (!(radius > 0.0)) throw std::invalid_argument("lambda1_exit_time_mc: radius must be > 0");
    const int d = symbol.dimension();
    IncrementSampler sampler(symbol, cfg.sampler);

    // Weighted LS slope of -log S (inverse-variance weights N S/(1-S): the
    // sparse late tail must not dominate).  Points with S = 0 are skipped.
    auto wls_slope = [](const std::vector<double>& ts, const std::vector<double>& ys,
                        const std::vector<double>& ws) {
        double sw = 0.0, swx = 0.0, swy = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            sw += ws[i]; swx += ws[i] * ts[i]; swy += ws[i] * ys[i];
        }
        const double mx = swx / sw, my = swy / sw;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            sxx += ws[i] * sqr(ts[i] - mx);
            sxy += ws[i] * (ts[i] - mx) * (ys[i] - my);
        }
        return sxy / sxx;
    };

    auto run = [&](double dt, std::size_t n_paths, std::uint64_t seed_salt) {
        double t_max = cfg.t_max;
        if (t_max <= 0.0) {
            // pilot: crude rate from a small batch to place the horizon
            const std::size_t pilot = 2000;
            std::vector<double> x(static_cast<std::size_t>(d));
            double mean_exit = 0.0;
            Rng prng(derive_seed(cfg.seed, 0x9E3779B9ULL));
            for (std::size_t i = 0; i < pilot; ++i) {
                std::fill(x.begin(), x.end(), 0.0);
                std::size_t k = 0;
                const std::size_t cap = static_cast<std::size_t>(1e7);
                std::vector<double> inc(static_cast<std::size_t>(d));
                while (k < cap) {
                    double r2 = 0.0;
                    for (double c : x) r2 += c * c;
                    if (r2 > radius * radius) break;
                    sampler.sample(prng, dt, inc);
                    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] += inc[static_cast<std::size_t>(j)];
                    ++k;
                }
                mean_exit += static_cast<double>(k) * dt;
            }
            mean_exit /= static_cast<double>(pilot);
            t_max = 12.0 * mean_exit;
        }
        const auto n_steps = static_cast<std::size_t>(std::ceil(t_max / dt));
        constexpr std::size_t kBatches = 10;  // batch spread gives an honest se
        std::vector<std::vector<std::size_t>> exits(kBatches,
                                                    std::vector<std::size_t>(n_steps + 1, 0));
        std::vector<double> x(static_cast<std::size_t>(d)), inc(static_cast<std::size_t>(d));
        for (std::size_t p = 0; p < n_paths; ++p) {
            Rng rng(derive_seed(cfg.seed + seed_salt, p));
            std::fill(x.begin(), x.end(), 0.0);
            for (std::size_t k = 1; k <= n_steps; ++k) {
                sampler.sample(rng, dt, inc);
                double r2 = 0.0;
                for (int j = 0; j < d; ++j) {
                    x[static_cast<std::size_t>(j)] += inc[static_cast<std::size_t>(j)];
                    r2 += sqr(x[static_cast<std::size_t>(j)]);
                }
                if (r2 > radius * radius) {
                    ++exits[p % kBatches][k];
                    break;
                }
            }
        }
        // pooled and per-batch survival curves
        auto survival = [&](const std::vector<std::size_t>& ex, double n0) {
            std::vector<double> surv(n_steps + 1);
            double alive = n0;
            surv[0] = 1.0;
            for (std::size_t k = 1; k <= n_steps; ++k) {
                alive -= static_cast<double>(ex[k]);
                surv[k] = alive / n0;
            }
            return surv;
        };
        std::vector<std::size_t> exits_all(n_steps + 1, 0);
        for (const auto& ex : exits)
            for (std::size_t k = 0; k <= n_steps; ++k) exits_all[k] += ex[k];
        const auto surv = survival(exits_all, static_cast<double>(n_paths));
        // fit window
        std::size_t k1 = 1, k2 = n_steps;
        if (cfg.fit_t1 > 0.0) k1 = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.fit_t1 / dt));
        else while (k1 < n_steps && surv[k1] > 0.2) ++k1;
        if (cfg.fit_t2 > 0.0) k2 = std::min(n_steps, static_cast<std::size_t>(cfg.fit_t2 / dt));
        else {
            while (k2 > k1 && surv[k2] * static_cast<double>(n_paths) < 100.0) --k2;
        }
        if (k2 <= k1 + 8 || surv[k2] * static_cast<double>(n_paths) < 100.0)
            throw std::runtime_error(
                "lambda1_exit_time_mc: fewer than 100 surviving paths in the fit window; "
                "increase N or shorten t2");
        const std::size_t stride = std::max<std::size_t>(1, (k2 - k1) / 512);
        auto fit_curve = [&](const std::vector<double>& s, double n0) {
            std::vector<double> ts, ys, ws;
            for (std::size_t k = k1; k <= k2; k += stride) {
                if (s[k] <= 0.0) break;
                ts.push_back(static_cast<double>(k) * dt);
                ys.push_back(-std::log(s[k]));
                ws.push_back(n0 * s[k] / std::max(1.0 - s[k], 1e-3));
            }
            return ts.size() >= 4 ? wls_slope(ts, ys, ws)
                                  : std::numeric_limits<double>::quiet_NaN();
        };
        const double slope = fit_curve(surv, static_cast<double>(n_paths));
        double bmean = 0.0, bvar = 0.0;
        std::size_t nb = 0;
        for (const auto& ex : exits) {
            const double n0 = static_cast<double>(n_paths / kBatches);
            const double bs = fit_curve(survival(ex, n0), n0);
            if (std::isfinite(bs)) { bmean += bs; bvar += bs * bs; ++nb; }
        }
        double se = 0.0;
        if (nb >= 3) {
            bmean /= static_cast<double>(nb);
            bvar = std::max(0.0, bvar / static_cast<double>(nb) - bmean * bmean);
            se = std::sqrt(bvar / static_cast<double>(nb));
        }
        struct Out { double slope, se, t1, t2; };
        return Out{slope, se, static_cast<double>(k1) * dt, static_cast<double>(k2) * dt};
    };

    const auto main_run = run(cfg.dt, cfg.n_paths, 0);
    EigenvalueEstimate est;
    est.method = EigenMethod::exit_time_mc;
    est.value = main_run.slope;
    est.error_bar = main_run.se;
    est.n_paths = cfg.n_paths;
    est.dt = cfg.dt;
    est.fit_t1 = main_run.t1;
    est.fit_t2 = main_run.t2;
    if (cfg.refine_dt) {
        const auto half = run(0.5 * cfg.dt, cfg.n_paths, 0x5eed);
        est.error_bar += std::abs(main_run.slope - half.slope);
        est.note = "error bar includes dt/2 refinement delta";
        // Bias model lambda(dt) = lambda0 - c sqrt(dt) (the boundary-layer
        // shrinkage of discrete monitoring): extrapolate the pair to dt -> 0.
        const double w = 1.0 / (1.0 - 1.0 / std::sqrt(2.0));  // 3.414...
        est.value_refined = main_run.slope + w * (half.slope - main_run.slope);
        est.error_refined = 2.0 * std::sqrt(sqr(w * half.se) + sqr((w - 1.0) * main_run.se));
    }
    return est;
}

}  // namespace levylab
