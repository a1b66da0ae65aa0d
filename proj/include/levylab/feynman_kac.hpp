#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "levylab/environment.hpp"
#include "levylab/paths.hpp"
#include "levylab/rates.hpp"
#include "levylab/rng.hpp"
#include "levylab/symbols.hpp"

namespace levylab {

// ---------------------------------------------------------------------------
// FK estimate
// ---------------------------------------------------------------------------

struct FKEstimate {
    double u_hat = 1.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
    double dt_eff = 0.0;
    double t = 0.0;
    std::vector<double> x;
    std::uint64_t env_seed = 0;
    std::uint64_t path_seed = 0;
    double escaped_fraction = 0.0;
    bool reliable = true;  // false when escaped fraction exceeds 1%
};

namespace detail {

struct FkAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t escaped = 0;
};

/// One path's FK weight exp(-int_0^t V ds) by left-endpoint Riemann sum on a
/// uniform grid of n steps (dt_eff = t/n).  Paths leaving the covered region
/// freeze the last in-range potential value for the remaining time (never a
/// silent zero extension) and count as escaped.  An optional killing domain
/// scores 0 on the first grid exit.
template <typename PotentialFn, typename InCoverageFn>
double fk_path_weight(const LevySymbol& symbol, const IncrementSampler& sampler,
                      PotentialFn&& V, InCoverageFn&& in_coverage,
                      std::span<const double> x0, double t, std::size_t n_steps,
                      const Domain* killing, Rng& rng, bool& escaped_out) {
    const int d = symbol.dimension();
    const double dt = t / static_cast<double>(n_steps);
    std::vector<double> x(x0.begin(), x0.end()), inc(static_cast<std::size_t>(d));
    double integral = 0.0;
    bool escaped = false;
    double frozen_v = 0.0;
    if (killing && !domain_contains(*killing, x)) { escaped_out = false; return 0.0; }
    for (std::size_t j = 0; j < n_steps; ++j) {
        double v = 0.0;
        if (escaped) {
            v = frozen_v;
        } else if (in_coverage(std::span<const double>(x))) {
            v = V(std::span<const double>(x));
            frozen_v = v;
        } else {
            escaped = true;
            v = frozen_v;
        }
        integral += v * dt;
        if (!escaped) {
            sampler.sample(rng, dt, inc);
            for (int k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] += inc[static_cast<std::size_t>(k)];
            if (killing && !domain_contains(*killing, x)) { escaped_out = escaped; return 0.0; }
        }
    }
    escaped_out = escaped;
    return std::exp(-integral);
}

}  // namespace detail

/// u_hat = (1/N) sum_p exp(-sum_j V(X_{t_j}) dt), paths fanned out from
/// master_seed with the documented splitting rule.  Deterministic chunked
/// reduction (fixed chunk size, combined in chunk order) keeps results
/// bit-stable for any worker count.
inline FKEstimate estimate_u_impl(const LevySymbol& symbol, const PoissonCloud& cloud,
                                  const BumpProfile& w, std::span<const double> x0, double t,
                                  double dt, std::size_t n_paths, std::uint64_t master_seed,
                                  const Domain* killing, const SamplerConfig& cfg,
                                  int threads) {
    if (!(t > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("estimate_u: need t > 0, dt > 0");
    if (n_paths == 0) throw std::invalid_argument("estimate_u: need at least one path");
    const auto n_steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-12));
    PotentialEvaluator V(cloud, w);
    V.check_coverage(x0);
    IncrementSampler sampler(symbol, cfg);

    constexpr std::size_t kChunk = 4096;
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<detail::FkAccumulator> partial(n_chunks);

    auto run_chunk = [&](std::size_t c) {
        detail::FkAccumulator acc;
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(n_paths, lo + kChunk);
        for (std::size_t p = lo; p < hi; ++p) {
            Rng rng(derive_seed(master_seed, p));
            bool escaped = false;
            const double weight = detail::fk_path_weight(
                symbol, sampler, [&](std::span<const double> y) { return V(y); },
                [&](std::span<const double> y) { return V.in_coverage(y); }, x0, t, n_steps,
                killing, rng, escaped);
            acc.sum += weight;
            acc.sum_sq += weight * weight;
            if (escaped) ++acc.escaped;
        }
        partial[c] = acc;
    };

    if (threads <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const int n_workers = std::min<int>(threads, static_cast<int>(n_chunks));
        for (int wk = 0; wk < n_workers; ++wk)
            pool.emplace_back([&]() {
                for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1))
                    run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    double sum = 0.0, sum_sq = 0.0;
    std::size_t escaped = 0;
    for (const auto& acc : partial) {  // fixed order: bit-stable reduction
        sum += acc.sum;
        sum_sq += acc.sum_sq;
        escaped += acc.escaped;
    }

    FKEstimate est;
    est.n_paths = n_paths;
    est.dt_eff = t / static_cast<double>(n_steps);
    est.t = t;
    est.x.assign(x0.begin(), x0.end());
    est.env_seed = cloud.seed;
    est.path_seed = master_seed;
    est.u_hat = sum / static_cast<double>(n_paths);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n_paths) - sqr(est.u_hat));
    est.stderr_ = std::sqrt(var / static_cast<double>(n_paths));
    est.escaped_fraction = static_cast<double>(escaped) / static_cast<double>(n_paths);
    est.reliable = est.escaped_fraction <= 0.01;
    return est;
}

inline FKEstimate estimate_u(const LevySymbol& symbol, const PoissonCloud& cloud,
                             const BumpProfile& w, std::span<const double> x0, double t,
                             double dt, std::size_t n_paths, std::uint64_t master_seed,
                             const SamplerConfig& cfg = {}, int threads = 1) {
    return estimate_u_impl(symbol, cloud, w, x0, t, dt, n_paths, master_seed, nullptr, cfg,
                           threads);
}

inline FKEstimate estimate_u_killed(const LevySymbol& symbol, const PoissonCloud& cloud,
                                    const BumpProfile& w, const Domain& domain,
                                    std::span<const double> x0, double t, double dt,
                                    std::size_t n_paths, std::uint64_t master_seed,
                                    const SamplerConfig& cfg = {}, int threads = 1) {
    return estimate_u_impl(symbol, cloud, w, x0, t, dt, n_paths, master_seed, &domain, cfg,
                           threads);
}

// ---------------------------------------------------------------------------
// Quenched-ratio experiment
// ---------------------------------------------------------------------------

struct QuenchedRatioPoint {
    double t = 0.0;
    double u_hat = 0.0;
    double stderr_ = 0.0;
    double eta = 0.0;
    double ratio = 0.0;  // log u_hat / eta(t)
};

struct QuenchedRatioSeries {
    std::vector<QuenchedRatioPoint> points;
    double C1 = 0.0, C2 = 0.0;   // Table-1 band [-C1, -C2]
    std::string rate_tag;
    std::string label =
        "finite-t diagnostic - asymptotic bounds not verifiable at desk scale";
    double box_halfwidth = 0.0;
    std::size_t n_envs = 0;
    std::size_t n_paths_per_env = 0;
    double dt = 0.0;
    double escaped_fraction_max = 0.0;
};

struct QuenchedRatioConfig {
    std::vector<double> t_grid;    // strictly increasing multiples of dt, > e
    std::size_t n_envs = 20;
    std::size_t n_paths = 10000;
    double dt = 0.01;
    std::uint64_t env_master_seed = 1;
    std::uint64_t path_master_seed = 2;
    SamplerConfig sampler{};
    double box_quantile = 0.999;   // displacement quantile used to size the box
    double box_margin_factor = 3.0;
};

/// For each environment seed, one coupled sweep evaluates u_hat at every t in
/// the grid (the FK integral is accumulated incrementally, so u_hat is exactly
/// non-increasing in t per environment).
inline QuenchedRatioSeries quenched_ratio_experiment(const LevySymbol& symbol, double rho,
                                                     const BumpProfile& w,
                                                     std::span<const double> x0,
                                                     const Table1Row& row,
                                                     const QuenchedRatioConfig& cfg) {
    if (cfg.t_grid.empty()) throw std::invalid_argument("quenched_ratio: empty t grid");
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
        if (!(cfg.t_grid[i] > std::exp(1.0)))
            throw std::invalid_argument("quenched_ratio: t grid must stay above e");
        if (i && cfg.t_grid[i] <= cfg.t_grid[i - 1])
            throw std::invalid_argument("quenched_ratio: t grid must increase strictly");
    }
    const double t_max = cfg.t_grid.back();
    std::vector<std::size_t> t_steps;
    for (double t : cfg.t_grid) {
        const double k = t / cfg.dt;
        const auto ki = static_cast<std::size_t>(std::llround(k));
        if (std::abs(k - static_cast<double>(ki)) > 1e-9 * std::max(1.0, k))
            throw std::invalid_argument("quenched_ratio: every t must be a multiple of dt");
        t_steps.push_back(ki);
    }
    const auto n_steps = t_steps.back();
    const int d = symbol.dimension();

    // box policy: |x|_inf + margin * displacement quantile at t_max + range
    double x_inf = 0.0;
    for (double c : x0) x_inf = std::max(x_inf, std::abs(c));
    const double disp = displacement_quantile(symbol, t_max, cfg.box_quantile, 2000,
                                              derive_seed(cfg.path_master_seed, 0xb0c5),
                                              cfg.sampler);
    const double R_box = x_inf + cfg.box_margin_factor * disp + w.range;

    IncrementSampler sampler(symbol, cfg.sampler);
    QuenchedRatioSeries series;
    series.C1 = row.C1;
    series.C2 = row.C2;
    series.rate_tag = rate_tag_name(row.rate);
    series.box_halfwidth = R_box;
    series.n_envs = cfg.n_envs;
    series.n_paths_per_env = cfg.n_paths;
    series.dt = cfg.dt;

    const std::size_t nt = cfg.t_grid.size();
    std::vector<double> env_mean_sum(nt, 0.0), env_mean_sq(nt, 0.0);

    std::vector<double> x(static_cast<std::size_t>(d)), inc(static_cast<std::size_t>(d));
    for (std::size_t e = 0; e < cfg.n_envs; ++e) {
        const auto cloud = sample_cloud(d, rho, R_box, derive_seed(cfg.env_master_seed, e));
        PotentialEvaluator V(cloud, w);
        std::vector<double> score_sum(nt, 0.0);
        std::size_t escaped_paths = 0;
        for (std::size_t p = 0; p < cfg.n_paths; ++p) {
            Rng rng(derive_seed(cfg.path_master_seed, e * cfg.n_paths + p));
            std::copy(x0.begin(), x0.end(), x.begin());
            double integral = 0.0, frozen_v = 0.0;
            bool escaped = false;
            std::size_t next_t = 0;
            for (std::size_t j = 0; j < n_steps && next_t < nt; ++j) {
                double v;
                if (escaped) {
                    v = frozen_v;
                } else if (V.in_coverage(x)) {
                    v = V(x);
                    frozen_v = v;
                } else {
                    escaped = true;
                    v = frozen_v;
                }
                integral += v * cfg.dt;
                if (!escaped) {
                    sampler.sample(rng, cfg.dt, inc);
                    for (int k = 0; k < d; ++k)
                        x[static_cast<std::size_t>(k)] += inc[static_cast<std::size_t>(k)];
                }
                while (next_t < nt && j + 1 == t_steps[next_t]) {
                    score_sum[next_t] += std::exp(-integral);
                    ++next_t;
                }
            }
            if (escaped) ++escaped_paths;
        }
        series.escaped_fraction_max =
            std::max(series.escaped_fraction_max,
                     static_cast<double>(escaped_paths) / static_cast<double>(cfg.n_paths));
        for (std::size_t k = 0; k < nt; ++k) {
            const double m = score_sum[k] / static_cast<double>(cfg.n_paths);
            env_mean_sum[k] += m;
            env_mean_sq[k] += m * m;
        }
    }

    for (std::size_t k = 0; k < nt; ++k) {
        QuenchedRatioPoint pt;
        pt.t = cfg.t_grid[k];
        pt.u_hat = env_mean_sum[k] / static_cast<double>(cfg.n_envs);
        const double var = std::max(0.0, env_mean_sq[k] / static_cast<double>(cfg.n_envs) -
                                             sqr(pt.u_hat));
        pt.stderr_ = std::sqrt(var / static_cast<double>(cfg.n_envs));
        pt.eta = eta_closed_form(row, pt.t);
        pt.ratio = std::log(pt.u_hat) / pt.eta;
        series.points.push_back(pt);
    }
    return series;
}

}  // namespace levylab
