#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "levylab/environment.hpp"
#include "levylab/feynman_kac.hpp"
#include "levylab/io.hpp"
#include "levylab/paths.hpp"
#include "levylab/rates.hpp"
#include "levylab/spectral.hpp"
#include "levylab/symbols.hpp"

namespace levylab {

/// Regression constant for the principal eigenvalue of the 1-d Cauchy symbol
/// |xi| on (-1,1), frozen after the grid and exit-time estimators agreed
/// within combined error bars (see the spectral tests).
inline constexpr double kLambda1Stable1d = 1.1577738;

struct CheckResult {
    std::string id;
    std::string description;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    bool corrupt_lambda1 = false;  // fault-injection fixture for the harness test
    std::string filter;            // run only checks whose id contains this
    int threads = 1;
    std::uint64_t seed = 20260810;  // master seed for every stochastic check
};

namespace detail {

class CheckRunner {
  public:
    explicit CheckRunner(const VerifyOptions& opt) : opt_(opt) {}

    template <typename Fn>
    void run(const std::string& id, const std::string& desc, Fn&& fn) {
        if (!opt_.filter.empty() && id.find(opt_.filter) == std::string::npos) return;
        CheckResult res;
        res.id = id;
        res.description = desc;
        const auto start = std::chrono::steady_clock::now();
        try {
            fn(res);
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("exception: ") + e.what();
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        results_.push_back(std::move(res));
    }

    std::vector<CheckResult> take() { return std::move(results_); }

  private:
    const VerifyOptions& opt_;
    std::vector<CheckResult> results_;
};

inline std::string fmt_g(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Criterion 1: Table-1 reproduction
// ---------------------------------------------------------------------------

inline void verify_table1(detail::CheckRunner& r) {
    r.run("A1.table1", "Table-1 rows, rate tags, constants, theorem identity (1e-12)",
          [&](CheckResult& res) {
        const int d = 1;
        const double rho = 1.0;
        const double lam_bm = lambda1_bm_closed_form(d);
        const double wd = unit_ball_volume(d);

        struct RowSpec {
            std::string family;
            std::map<std::string, double> params;
            double lambda1;
            RateTag tag;
            bool has_limit;
        };
        const double lam_stable = kLambda1Stable1d;
        const std::vector<RowSpec> rows{
            {"polynomial", {{"alpha", 1.0}}, lam_stable, RateTag::poly_alpha, false},
            {"layered", {{"delta", 3.0}}, 2.0 * lam_bm, RateTag::poly_two, false},
            {"log_decay", {{"theta", 1.0}, {"beta", 2.0}}, 1.5 * lam_bm, RateTag::log_decay, false},
            {"stretched_exp", {{"beta", 0.5}}, 1.2 * lam_bm, RateTag::log_corrected, true},
            {"exp", {{"beta", 1.0}}, 1.1 * lam_bm, RateTag::log_corrected, true},
            {"truncated", {}, 0.9 * lam_bm, RateTag::log_corrected, true},
            {"brownian", {}, lam_bm, RateTag::log_corrected, true},
        };
        double max_dev = 0.0;
        bool structure_ok = true;
        for (const auto& spec : rows) {
            const auto row = table1_constants(spec.family, d, spec.params, rho, spec.lambda1);
            structure_ok = structure_ok && row.rate == spec.tag &&
                           row.has_limit == spec.has_limit && row.C1 >= row.C2 && row.C2 > 0.0;
            // Table-1 <-> theorem identity through lambda_(alpha) = w_d^{alpha/d} lambda1
            double theorem = 0.0;
            if (spec.family == "polynomial") {
                const double a = spec.params.at("alpha");
                theorem = theorem_polynomial_upper(d, a, rho,
                                                   lambda_alpha_infimum(d, a, spec.lambda1));
            } else if (spec.family == "layered") {
                theorem = theorem_layered_upper(d, spec.params.at("delta"), rho,
                                                lambda_alpha_infimum(d, 2.0, spec.lambda1));
            } else if (spec.family == "log_decay") {
                theorem = theorem_log_decay_upper(d, spec.params.at("theta"),
                                                  spec.params.at("beta"), rho,
                                                  lambda_alpha_infimum(d, 2.0, spec.lambda1));
            } else if (spec.family == "stretched_exp") {
                theorem = theorem_exp_limit(d, spec.params.at("beta"), rho,
                                            lambda_alpha_infimum(d, 2.0, spec.lambda1));
            } else if (spec.family == "exp" || spec.family == "truncated") {
                theorem = theorem_exp_limit(d, spec.family == "exp" ? spec.params.at("beta") : 2.0,
                                            rho, lambda_alpha_infimum(d, 2.0, spec.lambda1));
            } else {
                theorem = std::pow(rho * wd / d, 2.0 / d) * spec.lambda1;
            }
            max_dev = std::max(max_dev, std::abs(row.C2 / theorem - 1.0));
            if (spec.family == "log_decay")
                max_dev = std::max(max_dev, std::abs(row.C1 / (2.0 * row.C2) - 1.0));
        }
        res.measured = max_dev;
        res.threshold = 1e-12;
        res.pass = structure_ok && max_dev <= res.threshold;
        res.detail = structure_ok ? "7 rows, tags and limit flags as printed"
                                  : "structure mismatch (tags/limits/order of constants)";
    });
}

// ---------------------------------------------------------------------------
// Criterion 2: rate-machine round trip and defining relation
// ---------------------------------------------------------------------------

inline void verify_rate_roundtrip(detail::CheckRunner& r, const VerifyOptions& opt) {
    r.run("A2.roundtrip", "|f(h(t)) - t|/t <= 1e-9 over 100 random draws",
          [&](CheckResult& res) {
        Rng rng(derive_seed(opt.seed, 2));
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int d = 1 + static_cast<int>(rng.uniform() * 3.0);
            const double alpha = 0.2 + 1.8 * rng.uniform();
            const double kappa = 0.2 + 4.8 * rng.uniform();
            TailProfile prof = TailProfile::polynomial(0.5 + 3.0 * rng.uniform());
            switch (static_cast<int>(rng.uniform() * 4.0)) {
                case 1: prof = TailProfile::log_decay(d, 0.5 + rng.uniform(), 1.2 + rng.uniform()); break;
                case 2: prof = TailProfile::stretched_exp(0.5 + rng.uniform(), 0.3 + 0.9 * rng.uniform()); break;
                case 3: prof = TailProfile::hard_exp(0.5 + rng.uniform()); break;
                default: break;
            }
            const RateMachine m(alpha, kappa, prof, d);
            const double t = std::pow(10.0, -2.0 + 10.0 * rng.uniform());
            // stay in log space: h(t) itself can exceed the double range
            worst = std::max(worst, std::abs(m.f_from_logr(m.log_h_value(t)) - t) / t);
        }
        res.measured = worst;
        res.threshold = 1e-9;
        res.pass = worst <= res.threshold;
    });

    r.run("A2.defining-relation", "eq. residual of the h(t) fixed point <= 1e-8 on a log grid",
          [&](CheckResult& res) {
        const std::vector<RateMachine> machines{
            {2.0, 1.0, TailProfile::polynomial(2.0), 1},
            {1.5, 0.7, TailProfile::polynomial(1.5), 2},
            {2.0, 1.0, TailProfile::log_decay(1, 1.0, 2.0), 1},
            {2.0, 1.3, TailProfile::stretched_exp(1.0, 0.5), 2},
            {2.0, 1.0, TailProfile::hard_exp(1.0), 1},
        };
        double worst = 0.0;
        for (const auto& m : machines)
            for (int i = 0; i <= 24; ++i)
                worst = std::max(worst,
                                 m.defining_relation_residual(std::pow(10.0, i / 3.0)));
        res.measured = worst;
        res.threshold = 1e-8;
        res.pass = worst <= res.threshold;
    });
}

// ---------------------------------------------------------------------------
// Criterion 3: closed-form asymptotics of h and g
// ---------------------------------------------------------------------------

inline void verify_asymptotics(detail::CheckRunner& r) {
    r.run("A3.polynomial", "h vs closed form within 1e-3 by t = 1e9 (and the g-h constant)",
          [&](CheckResult& res) {
        double worst = 0.0;
        std::ostringstream detail;
        for (const auto& [q, d] : std::vector<std::pair<double, int>>{{2.0, 1}, {1.0, 2}, {3.0, 1}}) {
            const RateMachine m(2.0, 1.0, TailProfile::polynomial(q), d);
            const auto v = m.validate_asymptotics();
            worst = std::max({worst, v.final_h_ratio_err, v.max_gh_const_err});
            detail << "q=" << q << ",d=" << d << ": h_err=" << detail::fmt_g(v.final_h_ratio_err)
                   << " gh_const_err=" << detail::fmt_g(v.max_gh_const_err) << "; ";
        }
        res.measured = worst;
        res.threshold = 1e-3;
        res.pass = worst <= res.threshold;
        res.detail = detail.str();
    });

    r.run("A3.stretched-exp", "g vs proof closed form within 2% by t = 1e9",
          [&](CheckResult& res) {
        double worst = 0.0;
        std::ostringstream detail;
        for (const auto& prof : {TailProfile::stretched_exp(1.0, 0.5),
                                 TailProfile::stretched_exp(2.0, 0.8),
                                 TailProfile::hard_exp(1.0)}) {
            for (int d : {1, 2}) {
                const RateMachine m(2.0, 1.0, prof, d);
                const auto v = m.validate_asymptotics();
                worst = std::max(worst, v.final_g_ratio_err);
                detail << prof.name() << ",d=" << d << ": g_err="
                       << detail::fmt_g(v.final_g_ratio_err)
                       << " (leading-order form: " << detail::fmt_g(v.final_plain_g_ratio_err)
                       << ", not gated); ";
            }
        }
        res.measured = worst;
        res.threshold = 0.02;
        res.pass = worst <= res.threshold;
        res.detail = detail.str();
    });

    r.run("A3.log-decay", "g vs closed form within 2% by t = 1e9", [&](CheckResult& res) {
        double worst = 0.0;
        for (const auto& [theta, beta, d] :
             std::vector<std::tuple<double, double, int>>{{1.0, 2.0, 1}, {0.7, 1.5, 2}}) {
            const RateMachine m(2.0, 1.0, TailProfile::log_decay(d, theta, beta), d);
            worst = std::max(worst, m.validate_asymptotics().final_g_ratio_err);
        }
        res.measured = worst;
        res.threshold = 0.02;
        res.pass = worst <= res.threshold;
    });
}

// ---------------------------------------------------------------------------
// Criterion 4: eigenvalue oracles
// ---------------------------------------------------------------------------

inline void verify_eigen(detail::CheckRunner& r, const VerifyOptions& opt) {
    const double lam_exact = kPi * kPi / 4.0;

    r.run("A4.closed-form", "lambda1_bm_closed_form(1) = pi^2/4 exactly",
          [&](CheckResult& res) {
        const double v = lambda1_bm_closed_form(1);
        const double reference = opt.corrupt_lambda1 ? 2.2 : lam_exact;  // fault injection
        res.measured = std::abs(v - reference);
        res.threshold = 0.0;
        res.pass = res.measured == 0.0;
        res.detail = "value=" + fmt_double(v);
    });

    r.run("A4.grid-2000", "grid_1d(alpha=2, n=2000) within 0.5% of pi^2/4",
          [&](CheckResult& res) {
        const auto est = lambda1_grid_1d(2.0, 1.0, 2000);
        res.measured = std::abs(est.value - lam_exact) / lam_exact;
        res.threshold = 0.005;
        res.pass = res.measured <= res.threshold;
        res.detail = "value=" + fmt_double(est.value) + " err_bar=" + detail::fmt_g(est.error_bar);
    });

    r.run("A4.mc-brownian", "exit-time MC (dt=1e-3, N=1e5) within 10% of pi^2/4",
          [&](CheckResult& res) {
        ExitTimeMcConfig cfg;
        cfg.dt = 1e-3;
        cfg.n_paths = 100000;
        cfg.t_max = 3.0;
        cfg.seed = derive_seed(opt.seed, 4);
        const auto est = lambda1_exit_time_mc(LevySymbol::brownian(1, 1.0), 1.0, cfg);
        res.measured = std::abs(est.value - lam_exact) / lam_exact;
        res.threshold = 0.10;
        res.pass = res.measured <= res.threshold;
        res.detail = "value=" + fmt_double(est.value) + " window=[" + detail::fmt_g(est.fit_t1) +
                     "," + detail::fmt_g(est.fit_t2) + "]";
    });

    r.run("A4.grid-vs-mc", "grid and MC agree within combined error bars (alpha in {1,2})",
          [&](CheckResult& res) {
        std::ostringstream detail;
        double worst_excess = 0.0;
        for (double alpha : {1.0, 2.0}) {
            const auto grid = lambda1_grid_1d(alpha, 1.0, 1200);
            ExitTimeMcConfig cfg;
            cfg.dt = 1e-3;
            cfg.n_paths = 60000;
            cfg.t_max = alpha == 2.0 ? 3.0 : 5.0;
            cfg.seed = derive_seed(opt.seed, 40 + static_cast<std::uint64_t>(alpha));
            cfg.refine_dt = true;
            const auto sym = alpha == 2.0 ? LevySymbol::brownian(1, 1.0)
                                          : LevySymbol::isotropic_stable(1, alpha);
            const auto mc = lambda1_exit_time_mc(sym, 1.0, cfg);
            const double mc_value = mc.value_refined.value_or(mc.value);
            const double mc_err = mc.error_refined > 0.0 ? mc.error_refined : mc.error_bar;
            const double gap = std::abs(grid.value - mc_value);
            const double bars = grid.error_bar + mc_err;
            worst_excess = std::max(worst_excess, gap - bars);
            detail << "alpha=" << alpha << ": grid=" << detail::fmt_g(grid.value) << "+-"
                   << detail::fmt_g(grid.error_bar) << " mc=" << detail::fmt_g(mc_value) << "+-"
                   << detail::fmt_g(mc_err) << "; ";
        }
        res.measured = worst_excess;
        res.threshold = 0.0;
        res.pass = worst_excess <= 0.0;
        res.detail = detail.str();
    });
}

// ---------------------------------------------------------------------------
// Criterion 5: sampler characteristic functions
// ---------------------------------------------------------------------------

inline void verify_cf(detail::CheckRunner& r, const VerifyOptions& opt) {
    r.run("A5.cf-match", "empirical CF within 4.5/sqrt(N) of e^{-t psi} (N = 1e5)",
          [&](CheckResult& res) {
        const std::size_t N = 100000;
        const double bound = 4.5 / std::sqrt(static_cast<double>(N));
        const std::vector<double> xi{0.25, 0.5, 1.0, 2.0, 4.0};
        const double t = 0.5;
        std::vector<std::pair<std::string, LevySymbol>> symbols;
        symbols.emplace_back("brownian", LevySymbol::brownian(1, 1.0));
        symbols.emplace_back("stable-0.7", LevySymbol::isotropic_stable(1, 0.7));
        symbols.emplace_back("stable-1.5", LevySymbol::isotropic_stable(1, 1.5));
        symbols.emplace_back("relativistic", LevySymbol::relativistic(1, 1.0, 1.0));
        symbols.emplace_back("layered",
                             LevySymbol::density(1, RadialLevyDensityProfile::layered(1, 1.0, 3.0)));
        double worst = 0.0;
        std::ostringstream detail;
        std::uint64_t salt = 5;
        for (const auto& [name, sym] : symbols) {
            SamplerConfig scfg;
            scfg.small_jump_eps = 1e-2;
            const auto rows = empirical_cf_check(sym, t, xi, N, derive_seed(opt.seed, salt++), scfg);
            double fam_worst = 0.0;
            for (const auto& row : rows) fam_worst = std::max(fam_worst, row.error);
            worst = std::max(worst, fam_worst);
            detail << name << "=" << detail::fmt_g(fam_worst) << "; ";
        }
        res.measured = worst;
        res.threshold = bound;
        res.pass = worst <= bound;
        res.detail = detail.str();
    });
}

// ---------------------------------------------------------------------------
// Criterion 6: environment laws
// ---------------------------------------------------------------------------

inline void verify_environment(detail::CheckRunner& r, const VerifyOptions& opt) {
    r.run("A6.void-probability", "empirical void probability within 3 binomial sigma (1e4 seeds)",
          [&](CheckResult& res) {
        const std::size_t n_seeds = 10000;
        double worst_sigmas = 0.0;
        std::ostringstream detail;
        for (int d : {1, 2}) {
            for (double s : {0.5, 1.0, 2.0}) {
                const double rho = 1.0;
                const double p_exact = std::exp(-rho * unit_ball_volume(d) * std::pow(s, d));
                std::size_t voids = 0;
                for (std::size_t k = 0; k < n_seeds; ++k) {
                    const auto cloud = sample_cloud(d, rho, s + 0.5,
                                                    derive_seed(opt.seed, 600 + k * 7 + d));
                    bool empty = true;
                    for (std::size_t i = 0; i < cloud.n_points() && empty; ++i) {
                        double r2 = 0.0;
                        for (double c : cloud.point(i)) r2 += c * c;
                        if (r2 < s * s) empty = false;
                    }
                    if (empty) ++voids;
                }
                const double p_hat = static_cast<double>(voids) / static_cast<double>(n_seeds);
                const double sigma =
                    std::sqrt(p_exact * (1.0 - p_exact) / static_cast<double>(n_seeds));
                const double dev = std::abs(p_hat - p_exact) / sigma;
                worst_sigmas = std::max(worst_sigmas, dev);
                detail << "d=" << d << ",s=" << s << ": " << detail::fmt_g(dev) << " sigma; ";
            }
        }
        res.measured = worst_sigmas;
        res.threshold = 3.0;
        res.pass = worst_sigmas <= res.threshold;
        res.detail = detail.str();
    });

    r.run("A6.grid-vs-brute", "grid-indexed potential equals brute force exactly",
          [&](CheckResult& res) {
        double worst = 0.0;
        std::size_t cases = 0;
        for (int d : {1, 2}) {
            const auto w = BumpProfile::cone(1.5, 0.8);
            for (int k = 0; k < 50; ++k) {
                const auto cloud = sample_cloud(d, 2.0, 6.0, derive_seed(opt.seed, 660 + k + d));
                PotentialEvaluator V(cloud, w);
                Rng rng(derive_seed(opt.seed, 670 + k + d));
                std::vector<double> x(static_cast<std::size_t>(d));
                for (int q = 0; q < 20; ++q) {
                    for (double& c : x) c = rng.uniform(-5.0, 5.0);
                    worst = std::max(worst, std::abs(V(x) - eval_potential_brute(cloud, w, x)));
                    ++cases;
                }
            }
        }
        res.measured = worst;
        res.threshold = 0.0;
        res.pass = worst == 0.0;
        res.detail = std::to_string(cases) + " point evaluations, bitwise comparison";
    });

    r.run("A6.empty-ball", "find_empty_ball results re-verified exhaustively",
          [&](CheckResult& res) {
        std::size_t violations = 0, found = 0;
        const double rad = 1.0, a = 0.25, r_in = 2.0;
        for (std::size_t k = 0; k < 200; ++k) {
            const auto cloud = sample_cloud(1, 0.5, 40.0, derive_seed(opt.seed, 700 + k));
            const auto c = find_empty_ball(cloud, rad, a, r_in);
            if (!c) continue;
            ++found;
            double supc = 0.0;
            for (double v : *c) supc = std::max(supc, std::abs(v));
            if (supc < r_in + rad + a) ++violations;  // exclusion zone
            for (std::size_t i = 0; i < cloud.n_points(); ++i) {
                double r2 = 0.0;
                for (int j = 0; j < cloud.d; ++j) r2 += sqr((*c)[static_cast<std::size_t>(j)] - cloud.point(i)[static_cast<std::size_t>(j)]);
                if (r2 < sqr(rad + a)) { ++violations; break; }
            }
        }
        // adversarial covering cloud must yield no ball
        std::vector<double> dense;
        for (double x = -39.0; x <= 39.0; x += 1.0) dense.push_back(x);
        const auto covered = cloud_from_points(1, 1.0, 40.0, std::move(dense));
        if (find_empty_ball(covered, rad, a, r_in)) ++violations;
        res.measured = static_cast<double>(violations);
        res.threshold = 0.0;
        res.pass = violations == 0;
        res.detail = std::to_string(found) + "/200 clouds produced a ball; covering cloud: none";
    });
}

// ---------------------------------------------------------------------------
// Criterion 7: Feynman-Kac exactness and monotonicity
// ---------------------------------------------------------------------------

inline void verify_feynman_kac(detail::CheckRunner& r, const VerifyOptions& opt) {
    const auto bm = LevySymbol::brownian(1, 1.0);
    const std::vector<double> x0{0.0};

    r.run("A7.exactness", "V=0 gives u=1 exactly; constant V gives e^{-vt} to 1e-12",
          [&](CheckResult& res) {
        const auto w = BumpProfile::indicator_ball(1.0, 0.5);
        const auto empty = cloud_from_points(1, 1.0, 50.0, {});
        const auto est0 = estimate_u(bm, empty, w, x0, 1.0, 0.01, 2000,
                                     derive_seed(opt.seed, 70), {}, opt.threads);
        const bool exact_one = est0.u_hat == 1.0 && est0.stderr_ == 0.0;
        const auto one = cloud_from_points(1, 1.0, 100.0, {0.0});
        const auto wide = BumpProfile::indicator_ball(0.7, 80.0);
        const auto estc = estimate_u(bm, one, wide, x0, 2.0, 0.01, 500,
                                     derive_seed(opt.seed, 71), {}, opt.threads);
        const double rel = std::abs(estc.u_hat - std::exp(-1.4)) / std::exp(-1.4);
        res.measured = rel;
        res.threshold = 1e-12;
        res.pass = exact_one && rel <= res.threshold;
        res.detail = std::string("u(V=0)=") + fmt_double(est0.u_hat) + " stderr=" +
                     fmt_double(est0.stderr_);
    });

    r.run("A7.monotonicity", "u decreases exactly under v0 increase and cloud inclusion",
          [&](CheckResult& res) {
        const auto cloud = sample_cloud(1, 1.0, 40.0, derive_seed(opt.seed, 72));
        auto bigger = cloud;
        bigger.points.push_back(0.3);
        bigger.points.push_back(-1.1);
        const auto w1 = BumpProfile::indicator_ball(1.0, 0.5);
        const auto w2 = BumpProfile::indicator_ball(2.0, 0.5);
        const std::uint64_t seed = derive_seed(opt.seed, 73);
        const auto ua = estimate_u(bm, cloud, w1, x0, 2.0, 0.01, 4000, seed, {}, opt.threads);
        const auto ub = estimate_u(bm, cloud, w2, x0, 2.0, 0.01, 4000, seed, {}, opt.threads);
        const auto uc = estimate_u(bm, bigger, w1, x0, 2.0, 0.01, 4000, seed, {}, opt.threads);
        const double viol = std::max({ub.u_hat - ua.u_hat, uc.u_hat - ua.u_hat, 0.0});
        res.measured = viol;
        res.threshold = 0.0;
        res.pass = viol == 0.0;
        res.detail = "u(v0=1)=" + detail::fmt_g(ua.u_hat) + " u(v0=2)=" + detail::fmt_g(ub.u_hat) +
                     " u(+2 points)=" + detail::fmt_g(uc.u_hat);
    });

    r.run("A7.dt-halving", "|u(dt) - u(dt/2)| <= 5 stderr at a desk-scale config",
          [&](CheckResult& res) {
        const auto cloud = sample_cloud(1, 1.0, 40.0, derive_seed(opt.seed, 74));
        const auto w = BumpProfile::indicator_ball(1.0, 0.5);
        const auto ua = estimate_u(bm, cloud, w, x0, 2.0, 0.02, 20000,
                                   derive_seed(opt.seed, 75), {}, opt.threads);
        const auto ub = estimate_u(bm, cloud, w, x0, 2.0, 0.01, 20000,
                                   derive_seed(opt.seed, 76), {}, opt.threads);
        const double gap = std::abs(ua.u_hat - ub.u_hat);
        const double se = std::max(ua.stderr_, ub.stderr_);
        res.measured = gap;
        res.threshold = 5.0 * se;
        res.pass = gap <= res.threshold;
        res.detail = "u(dt)=" + detail::fmt_g(ua.u_hat) + " u(dt/2)=" + detail::fmt_g(ub.u_hat) +
                     " stderr=" + detail::fmt_g(se);
    });

    r.run("A7.killing-consistency", "hard potential outside a ball approaches the killed estimate",
          [&](CheckResult& res) {
        // bumps tile [1, 30] on both sides so V >= v0 exactly outside B(0,1);
        // v0 dt = 100 makes a single step in the potential effectively lethal
        std::vector<double> pts;
        for (double x = 1.21; x <= 30.0; x += 0.4) { pts.push_back(x); pts.push_back(-x); }
        const auto cloud = cloud_from_points(1, 1.0, 40.0, std::move(pts));
        const auto w = BumpProfile::indicator_ball(1e5, 0.21);
        const std::uint64_t seed = derive_seed(opt.seed, 77);
        const auto u_hard = estimate_u(bm, cloud, w, x0, 1.0, 1e-3, 20000, seed, {}, opt.threads);
        const Domain ball = BallDomain{{0.0}, 1.0};
        const auto empty = cloud_from_points(1, 1.0, 40.0, {});
        const auto u_kill = estimate_u_killed(bm, empty, w, ball, x0, 1.0, 1e-3, 20000, seed,
                                              {}, opt.threads);
        res.measured = std::abs(u_hard.u_hat - u_kill.u_hat) / u_kill.u_hat;
        res.threshold = 0.02;
        res.pass = res.measured <= res.threshold;
        res.detail = "u_hard=" + detail::fmt_g(u_hard.u_hat) + " u_killed=" +
                     detail::fmt_g(u_kill.u_hat);
    });
}

// ---------------------------------------------------------------------------
// Criterion 8: stable scaling law
// ---------------------------------------------------------------------------

inline void verify_scaling(detail::CheckRunner& r, const VerifyOptions& opt) {
    r.run("A8.stable-scaling", "lambda1(B(0,R)) R^alpha constant for R in {1,2,4}, both estimators",
          [&](CheckResult& res) {
        const double alpha = 1.0;
        const auto sym = LevySymbol::isotropic_stable(1, alpha);
        std::ostringstream detail;
        // grid estimator
        double grid_ref = 0.0, grid_ref_err = 0.0, worst_excess = 0.0;
        for (double R : {1.0, 2.0, 4.0}) {
            const auto est = lambda1_grid_1d(alpha, R, 1200);
            const double scaled = est.value * std::pow(R, alpha);
            const double scaled_err = est.error_bar * std::pow(R, alpha);
            if (R == 1.0) { grid_ref = scaled; grid_ref_err = scaled_err; continue; }
            worst_excess = std::max(worst_excess,
                                    std::abs(scaled - grid_ref) - (scaled_err + grid_ref_err));
            detail << "grid R=" << R << ": " << detail::fmt_g(scaled) << "; ";
        }
        // exit-time MC estimator
        double mc_ref = 0.0, mc_ref_err = 0.0;
        for (double R : {1.0, 2.0, 4.0}) {
            ExitTimeMcConfig cfg;
            cfg.dt = R == 4.0 ? 2e-3 : 1e-3;
            cfg.n_paths = 30000;
            cfg.t_max = 5.0 * std::pow(R, alpha);
            cfg.seed = derive_seed(opt.seed, 80 + static_cast<std::uint64_t>(R));
            const auto est = lambda1_exit_time_mc(sym, R, cfg);
            const double scaled = est.value * std::pow(R, alpha);
            // allow for slope-fit noise: 3 standard errors plus monitoring bias margin
            const double scaled_err =
                (3.0 * est.error_bar + 0.03 * est.value) * std::pow(R, alpha);
            if (R == 1.0) { mc_ref = scaled; mc_ref_err = scaled_err; continue; }
            worst_excess = std::max(worst_excess,
                                    std::abs(scaled - mc_ref) - (scaled_err + mc_ref_err));
            detail << "mc R=" << R << ": " << detail::fmt_g(scaled) << "; ";
        }
        res.measured = worst_excess;
        res.threshold = 0.0;
        res.pass = worst_excess <= 0.0;
        res.detail = detail.str();
    });
}

// ---------------------------------------------------------------------------
// Criterion 9: quenched-ratio diagnostic (pinned regression)
// ---------------------------------------------------------------------------

/// Pinned u_hat series for the criterion-9 configuration, frozen after the
/// first computation.  A finite-t regression only: never compared against
/// asymptotic constants.  Empty means "not yet frozen": the structural gates
/// still run.
inline const std::vector<double>& pinned_quenched_u() {
    static const std::vector<double> pinned{
        // t = 3, 5, 8, 12, 20, 30, 40, 50
        0.20286227400972279, 0.10582398657867761, 0.052719076582788661,
        0.026127185656921764, 0.0093084533886719049, 0.0033231146105249165,
        0.0012074431175601139, 0.00047047361280024133,
    };
    return pinned;
}

inline QuenchedRatioSeries run_reference_quenched_series(const VerifyOptions& opt) {
    const auto bm = LevySymbol::brownian(1, 1.0);
    const auto w = BumpProfile::indicator_ball(1.0, 0.5);
    const auto row = table1_constants("brownian", 1, {}, 1.0, lambda1_bm_closed_form(1));
    QuenchedRatioConfig cfg;
    cfg.t_grid = {3.0, 5.0, 8.0, 12.0, 20.0, 30.0, 40.0, 50.0};
    cfg.n_envs = 20;
    cfg.n_paths = 10000;
    cfg.dt = 0.01;
    cfg.env_master_seed = derive_seed(opt.seed, 90);
    cfg.path_master_seed = derive_seed(opt.seed, 91);
    const std::vector<double> x0{0.0};
    return quenched_ratio_experiment(bm, 1.0, w, x0, row, cfg);
}

inline void verify_quenched(detail::CheckRunner& r, const VerifyOptions& opt) {
    r.run("A9.quenched-ratio", "diagnostic series: negative, decreasing beyond t=5, reproducible",
          [&](CheckResult& res) {
        const auto series = run_reference_quenched_series(opt);
        const auto series2 = run_reference_quenched_series(opt);
        bool reproducible = series.points.size() == series2.points.size();
        for (std::size_t i = 0; reproducible && i < series.points.size(); ++i)
            reproducible = series.points[i].u_hat == series2.points[i].u_hat &&
                           series.points[i].ratio == series2.points[i].ratio;
        bool negative = true, decreasing = true;
        for (std::size_t i = 0; i < series.points.size(); ++i) {
            negative = negative && series.points[i].ratio < 0.0;
            if (i > 0 && series.points[i].t > 5.0)
                decreasing = decreasing && series.points[i].ratio < series.points[i - 1].ratio;
        }
        double pin_dev = 0.0;
        const auto& pinned = pinned_quenched_u();
        if (!pinned.empty() && pinned.size() == series.points.size()) {
            for (std::size_t i = 0; i < pinned.size(); ++i)
                pin_dev = std::max(pin_dev,
                                   std::abs(series.points[i].u_hat / pinned[i] - 1.0));
        }
        std::ostringstream detail;
        detail << "u_hat = {";
        for (const auto& p : series.points) detail << fmt_double(p.u_hat) << ", ";
        detail << "}; ratios = {";
        for (const auto& p : series.points) detail << detail::fmt_g(p.ratio) << ", ";
        detail << "}";
        if (pinned.empty()) detail << " [pins not frozen yet]";
        res.measured = pin_dev;
        res.threshold = 1e-9;
        res.pass = negative && decreasing && reproducible && pin_dev <= res.threshold;
        res.detail = detail.str();
    });
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline std::vector<CheckResult> run_verify(const VerifyOptions& opt = {}) {
    detail::CheckRunner runner(opt);
    verify_table1(runner);
    verify_rate_roundtrip(runner, opt);
    verify_asymptotics(runner);
    verify_eigen(runner, opt);
    verify_cf(runner, opt);
    verify_environment(runner, opt);
    verify_feynman_kac(runner, opt);
    verify_scaling(runner, opt);
    verify_quenched(runner, opt);
    return runner.take();
}

inline std::string format_verify_report(const std::vector<CheckResult>& results) {
    std::ostringstream out;
    std::size_t passed = 0;
    for (const auto& res : results) {
        out << (res.pass ? "[PASS] " : "[FAIL] ") << res.id << "  measured="
            << fmt_double(res.measured) << " threshold=" << fmt_double(res.threshold) << "  ("
            << res.description << ")";
        if (!res.detail.empty()) out << "\n       " << res.detail;
        out << "\n";
        if (res.pass) ++passed;
    }
    out << passed << "/" << results.size() << " checks passed\n";
    return out.str();
}

}  // namespace levylab
