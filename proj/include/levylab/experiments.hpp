#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "levylab/config.hpp"
#include "levylab/feynman_kac.hpp"
#include "levylab/io.hpp"
#include "levylab/rates.hpp"
#include "levylab/spectral.hpp"
#include "levylab/verify.hpp"

namespace levylab {

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> artifacts;
    std::string summary;
};

namespace detail {

struct RunContext {
    ExperimentConfig cfg;
    std::filesystem::path out_dir;
    std::vector<std::string> artifacts;
    std::ostringstream summary;
    bool gated_failure = false;
    json resolved = json::object();  // every numeric actually consumed

    void save_csv(const std::string& name, const CsvWriter& csv) {
        const auto path = (out_dir / name).string();
        csv.save(path);
        artifacts.push_back(name);
    }
    void save_json(const std::string& name, const json& j) {
        write_text_file((out_dir / name).string(), j.dump(2) + "\n");
        artifacts.push_back(name);
    }
    // every experiment emits the frozen CSV columns plus a JSON mirror
    void save_table(const std::string& stem, const CsvWriter& csv) {
        save_csv(stem + ".csv", csv);
        save_json(stem + ".json", csv.to_json());
    }
};

inline std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}

/// manifest.json: full config echo plus a content hash of the config (the
/// timestamp lives only here and is excluded from the hash).
inline void write_manifest(RunContext& ctx) {
    json manifest;
    manifest["experiment"] = ctx.cfg.experiment;
    manifest["config"] = ctx.cfg.raw;
    manifest["resolved"] = ctx.resolved;
    manifest["config_sha256"] = sha256_hex(ctx.cfg.raw.dump());
    manifest["artifacts"] = ctx.artifacts;
    manifest["generated_at"] = iso_now();
    write_text_file((ctx.out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

// -- table1 ----------------------------------------------------------------

inline void run_table1(RunContext& ctx) {
    const auto block = ctx.cfg.block_or("table1", json::object());
    const int d = block.value("d", 1);
    const double rho = block.value("rho", 1.0);
    const double alpha = block.value("alpha", 1.0);
    const double delta_layered = block.value("delta", 3.0);
    const double theta = block.value("theta", 1.0);
    const double beta_log = block.value("beta_log", 2.0);
    const double beta_stretched = block.value("beta_stretched", 0.5);
    const double lam_bm = lambda1_bm_closed_form(d);

    // principal eigenvalue for the stable row: user-supplied, pinned regression
    // constant for (d=1, alpha=1), or a quick grid solve
    double lam_stable;
    if (block.contains("lambda1_stable")) {
        lam_stable = block.at("lambda1_stable").get<double>();
    } else if (d == 1 && alpha == 1.0) {
        lam_stable = kLambda1Stable1d;
    } else if (d == 1) {
        lam_stable = lambda1_grid_1d(alpha, 1.0, 600).value;
    } else {
        throw ConfigError("table1: supply 'lambda1_stable' for d >= 2 stable rows");
    }

    // effective diffusion coefficients a~ for the finite-second-moment rows
    auto a_tilde = [&](const RadialLevyDensityProfile& prof) {
        return prof.second_radial_moment() / (2.0 * d);
    };
    const double lam_layered = a_tilde(RadialLevyDensityProfile::layered(d, 1.0, delta_layered)) * lam_bm;
    const double lam_logdec = a_tilde(RadialLevyDensityProfile::log_decay(d, 1.0, theta, beta_log)) * lam_bm;
    const double lam_stretch = a_tilde(RadialLevyDensityProfile::tempered(d, 1.0, theta, beta_stretched, 0.0)) * lam_bm;
    const double lam_exp = a_tilde(RadialLevyDensityProfile::tempered(d, 1.0, theta, 1.0, 0.0)) * lam_bm;
    const double lam_trunc = a_tilde(RadialLevyDensityProfile::truncated(d, 1.0)) * lam_bm;

    ctx.resolved["table1"] = {{"d", d}, {"rho", rho}, {"alpha", alpha},
                              {"delta", delta_layered}, {"theta", theta},
                              {"beta_log", beta_log}, {"beta_stretched", beta_stretched},
                              {"lambda1_stable", lam_stable}, {"lambda1_bm", lam_bm},
                              {"lambda1_layered", lam_layered}, {"lambda1_log_decay", lam_logdec},
                              {"lambda1_stretched", lam_stretch}, {"lambda1_exp", lam_exp},
                              {"lambda1_truncated", lam_trunc}};
    std::vector<Table1Row> rows{
        table1_constants("polynomial", d, {{"alpha", alpha}}, rho, lam_stable),
        table1_constants("layered", d, {{"delta", delta_layered}}, rho, lam_layered),
        table1_constants("log_decay", d, {{"theta", theta}, {"beta", beta_log}}, rho, lam_logdec),
        table1_constants("stretched_exp", d, {{"beta", beta_stretched}}, rho, lam_stretch),
        table1_constants("exp", d, {{"beta", 1.0}}, rho, lam_exp),
        table1_constants("truncated", d, {}, rho, lam_trunc),
        table1_constants("brownian", d, {}, rho, lam_bm),
    };

    CsvWriter csv({"family", "d", "rho", "alpha", "delta", "theta", "beta", "lambda1",
                   "rate", "C1", "C2", "has_limit", "optimized_C1"});
    json jrows = json::array();
    for (const auto& row : rows) {
        auto get = [&](const char* k) {
            auto it = row.params.find(k);
            return it == row.params.end() ? std::string() : fmt_double(it->second);
        };
        csv.add_row({row.family, std::to_string(row.d), fmt_double(row.rho), get("alpha"),
                     get("delta"), get("theta"), get("beta"), fmt_double(row.lambda1),
                     rate_tag_name(row.rate), fmt_double(row.C1), fmt_double(row.C2),
                     row.has_limit ? "true" : "false",
                     row.optimized_C1 ? fmt_double(*row.optimized_C1) : std::string()});
        json jr;
        jr["family"] = row.family;
        jr["d"] = row.d;
        jr["rho"] = row.rho;
        jr["params"] = row.params;
        jr["lambda1"] = row.lambda1;
        jr["rate"] = rate_tag_name(row.rate);
        jr["C1"] = row.C1;
        jr["C2"] = row.C2;
        jr["has_limit"] = row.has_limit;
        if (row.optimized_C1) jr["optimized_C1"] = *row.optimized_C1;
        jrows.push_back(jr);
    }
    ctx.save_csv("table1.csv", csv);
    ctx.save_json("table1.json", jrows);
    ctx.summary << "table1: 7 rows (d=" << d << ", rho=" << rho << ")\n";
    for (const auto& row : rows)
        ctx.summary << "  " << row.family << ": eta=" << rate_tag_name(row.rate)
                    << " C1=" << fmt_double(row.C1) << " C2=" << fmt_double(row.C2)
                    << (row.has_limit ? " (limit)" : "") << "\n";
}

// -- rates-asymptotics -------------------------------------------------------

inline void run_rates_asymptotics(RunContext& ctx) {
    const auto block = ctx.cfg.block_or("rates", json::object());
    const int d = block.value("d", 1);
    const double alpha = block.value("alpha", 2.0);
    const double kappa = block.value("kappa", 1.0);
    const std::vector<RateMachine> machines{
        {alpha, kappa, TailProfile::polynomial(block.value("q", 2.0)), d},
        {alpha, kappa, TailProfile::log_decay(d, 1.0, 2.0), d},
        {alpha, kappa, TailProfile::stretched_exp(1.0, 0.5), d},
        {alpha, kappa, TailProfile::hard_exp(1.0), d},
    };
    ctx.resolved["rates"] = {{"d", d}, {"alpha", alpha}, {"kappa", kappa},
                             {"q", block.value("q", 2.0)}};
    CsvWriter csv({"profile", "t", "roundtrip_rel_err", "defining_relation_resid",
                   "h_ratio_err", "g_ratio_err", "plain_g_ratio_err"});
    for (const auto& m : machines) {
        const auto form = m.asymptotic_closed_form();
        for (int i = 0; i <= 10; ++i) {
            const double t = std::pow(10.0, 4.0 + 0.5 * i);
            const double L = m.log_h_value(t);
            const double g = t / std::pow(L, m.alpha() / m.dim());
            csv.add_row({m.profile().name(), fmt_double(t),
                         fmt_double(std::abs(m.f_value(std::min(m.h_value(t), 1e300)) - t) / t),
                         fmt_double(m.defining_relation_residual(t)),
                         fmt_double(std::abs(std::expm1(L - form.log_h(t)))),
                         fmt_double(std::abs(g / form.g(t) - 1.0)),
                         fmt_double(std::abs(g / form.plain_g(t) - 1.0))});
        }
        const auto v = m.validate_asymptotics();
        ctx.summary << "rates " << m.profile().name() << ": final g ratio err "
                    << fmt_double(v.final_g_ratio_err) << ", h ratio err "
                    << fmt_double(v.final_h_ratio_err) << "\n";
        if (v.final_g_ratio_err > 0.02 && m.profile().family != TailProfile::Family::polynomial)
            ctx.gated_failure = true;
    }
    ctx.save_table("rates-asymptotics", csv);
}

// -- eigen -------------------------------------------------------------------

inline void run_eigen(RunContext& ctx) {
    const auto block = ctx.cfg.block_or("eigen", json::object());
    const auto sym = symbol_from_config(ctx.cfg.block("symbol"));
    const double R = block.value("R", 1.0);
    json out;
    out["symbol"] = ctx.cfg.block("symbol");
    if (sym.jump_family() == JumpFamily::none && sym.gauss_kind() == GaussKind::isotropic) {
        const double lam = sym.gauss_isotropic_coeff() * lambda1_bm_closed_form(sym.dimension()) /
                           std::pow(R, 2.0);
        out["closed_form"] = {{"value", lam}, {"method", "closed_form"}};
    }
    if (sym.dimension() == 1 &&
        (sym.jump_family() == JumpFamily::isotropic_stable ||
         (sym.jump_family() == JumpFamily::none && sym.gauss_kind() == GaussKind::isotropic))) {
        const double alpha = sym.jump_family() == JumpFamily::isotropic_stable
                                 ? sym.stable_delta() : 2.0;
        const auto est = lambda1_grid_1d(alpha, R, block.value("n", 2000));
        out["grid_1d"] = {{"value", est.value}, {"error_bar", est.error_bar},
                          {"n", est.grid_n}, {"method", "grid_1d"}, {"note", est.note}};
    }
    ExitTimeMcConfig mc;
    mc.dt = block.value("dt", 1e-3);
    mc.n_paths = block.value("paths", 100000);
    mc.t_max = block.value("t_max", 0.0);
    mc.seed = ctx.cfg.seed;
    mc.refine_dt = block.value("refine_dt", false);
    ctx.resolved["eigen"] = {{"R", R}, {"n", block.value("n", 2000)}, {"dt", mc.dt},
                             {"paths", mc.n_paths}, {"t_max", mc.t_max},
                             {"refine_dt", mc.refine_dt}, {"seed", mc.seed}};
    const auto est = lambda1_exit_time_mc(sym, R, mc);
    out["exit_time_mc"] = {{"value", est.value}, {"error_bar", est.error_bar},
                           {"n_paths", est.n_paths}, {"dt", est.dt},
                           {"fit_window", {est.fit_t1, est.fit_t2}},
                           {"method", "exit_time_mc"}};
    if (est.value_refined)
        out["exit_time_mc"]["value_refined"] = *est.value_refined;
    CsvWriter csv({"method", "value", "error_bar"});
    for (const auto& key : {"closed_form", "grid_1d", "exit_time_mc"}) {
        if (!out.contains(key)) continue;
        csv.add_row({key, fmt_double(out.at(key).at("value").get<double>()),
                     out.at(key).contains("error_bar")
                         ? fmt_double(out.at(key).at("error_bar").get<double>())
                         : std::string()});
    }
    ctx.save_csv("eigen.csv", csv);
    ctx.save_json("eigen.json", out);
    ctx.summary << "eigen: exit_time_mc = " << fmt_double(est.value) << " +- "
                << fmt_double(est.error_bar) << "\n";
}

// -- cf-check ------------------------------------------------------------------

inline void run_cf_check(RunContext& ctx) {
    const auto sym = symbol_from_config(ctx.cfg.block("symbol"));
    const auto block = ctx.cfg.block_or("numerics", json::object());
    const double t = block.value("t", 0.5);
    const std::size_t N = block.value("n_samples", 100000);
    std::vector<double> xis = block.value("xi_grid", std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0});
    SamplerConfig scfg;
    scfg.small_jump_eps = block.value("small_jump_eps", 1e-2);
    const auto rows = empirical_cf_check(sym, t, xis, N, ctx.cfg.seed, scfg);
    const double gate = 4.5 / std::sqrt(static_cast<double>(N));
    ctx.resolved["cf-check"] = {{"t", t}, {"n_samples", N}, {"xi_grid", xis},
                                 {"small_jump_eps", scfg.small_jump_eps},
                                 {"gate", gate}, {"seed", ctx.cfg.seed}};
    CsvWriter csv({"xi", "empirical", "exact", "abs_error", "gate", "pass"});
    double worst = 0.0;
    for (const auto& row : rows) {
        csv.add_row({fmt_double(row.xi_norm), fmt_double(row.empirical), fmt_double(row.exact),
                     fmt_double(row.error), fmt_double(gate),
                     row.error <= gate ? "true" : "false"});
        worst = std::max(worst, row.error);
    }
    ctx.save_table("cf-check", csv);
    ctx.summary << "cf-check: max |emp - exact| = " << fmt_double(worst) << " (gate "
                << fmt_double(gate) << ")\n";
    if (worst > gate) ctx.gated_failure = true;
}

// -- env-stats -------------------------------------------------------------------

inline void run_env_stats(RunContext& ctx) {
    const auto env = ctx.cfg.block_or("environment", json::object());
    const auto block = ctx.cfg.block_or("numerics", json::object());
    const int d = env.value("d", 1);
    const double rho = env.value("rho", 1.0);
    const std::size_t n_seeds = block.value("n_seeds", 10000);
    const std::vector<double> radii = block.value("radii", std::vector<double>{0.5, 1.0, 2.0});
    ctx.resolved["env-stats"] = {{"d", d}, {"rho", rho}, {"n_seeds", n_seeds},
                                  {"radii", radii}, {"seed", ctx.cfg.seed}};
    CsvWriter csv({"s", "void_empirical", "void_exact", "binomial_sigma", "deviation_sigmas"});
    double worst = 0.0;
    for (double s : radii) {
        const double p_exact = std::exp(-rho * unit_ball_volume(d) * std::pow(s, d));
        std::size_t voids = 0;
        for (std::size_t k = 0; k < n_seeds; ++k) {
            const auto cloud = sample_cloud(d, rho, s + 0.5, derive_seed(ctx.cfg.seed, k));
            bool empty = true;
            for (std::size_t i = 0; i < cloud.n_points() && empty; ++i) {
                double r2 = 0.0;
                for (double c : cloud.point(i)) r2 += c * c;
                if (r2 < s * s) empty = false;
            }
            if (empty) ++voids;
        }
        const double p_hat = static_cast<double>(voids) / static_cast<double>(n_seeds);
        const double sigma = std::sqrt(p_exact * (1.0 - p_exact) / static_cast<double>(n_seeds));
        const double dev = std::abs(p_hat - p_exact) / sigma;
        worst = std::max(worst, dev);
        csv.add_row({fmt_double(s), fmt_double(p_hat), fmt_double(p_exact), fmt_double(sigma),
                     fmt_double(dev)});
    }
    ctx.save_table("env-stats", csv);
    ctx.summary << "env-stats: worst void-probability deviation " << fmt_double(worst)
                << " sigma over " << n_seeds << " seeds\n";
    if (worst > 3.0) ctx.gated_failure = true;
}

// -- quenched-ratio -----------------------------------------------------------

inline void run_quenched_ratio(RunContext& ctx) {
    const auto sym = symbol_from_config(ctx.cfg.block("symbol"));
    const auto env = ctx.cfg.block("environment");
    const auto num = ctx.cfg.block("numerics");
    const double rho = env.value("rho", 1.0);
    const auto w = bump_from_config(env.at("profile"));

    QuenchedRatioConfig qcfg;
    qcfg.t_grid = num.at("t_grid").get<std::vector<double>>();
    qcfg.n_envs = num.value("env_count", 20);
    qcfg.n_paths = num.value("paths", 10000);
    qcfg.dt = num.value("dt", 0.01);
    qcfg.env_master_seed = derive_seed(ctx.cfg.seed, 1);
    qcfg.path_master_seed = derive_seed(ctx.cfg.seed, 2);

    // Table-1 band for the matching family
    const auto t1 = ctx.cfg.block_or("table1", json::object());
    const std::string family = t1.value("family", std::string("brownian"));
    std::map<std::string, double> params;
    for (const auto& [k, v] : t1.items())
        if (v.is_number()) params[k] = v.get<double>();
    const double lam = t1.value("lambda1", lambda1_bm_closed_form(sym.dimension()));
    const auto row = table1_constants(family, sym.dimension(), params, rho, lam);

    ctx.resolved["quenched-ratio"] = {{"rho", rho}, {"t_grid", qcfg.t_grid},
                                       {"env_count", qcfg.n_envs}, {"paths", qcfg.n_paths},
                                       {"dt", qcfg.dt}, {"env_master_seed", qcfg.env_master_seed},
                                       {"path_master_seed", qcfg.path_master_seed},
                                       {"profile_height", w.sup_norm()}, {"profile_range", w.range},
                                       {"C1", row.C1}, {"C2", row.C2}};
    const std::vector<double> x0(static_cast<std::size_t>(sym.dimension()), 0.0);
    const auto series = quenched_ratio_experiment(sym, rho, w, x0, row, qcfg);

    CsvWriter csv({"t", "u_hat", "stderr", "eta", "ratio", "C1", "C2"});
    for (const auto& p : series.points)
        csv.add_row({fmt_double(p.t), fmt_double(p.u_hat), fmt_double(p.stderr_),
                     fmt_double(p.eta), fmt_double(p.ratio), fmt_double(series.C1),
                     fmt_double(series.C2)});
    ctx.save_csv("quenched-ratio.csv", csv);
    json out;
    out["label"] = series.label;
    out["rate"] = series.rate_tag;
    out["C1"] = series.C1;
    out["C2"] = series.C2;
    out["box_halfwidth"] = series.box_halfwidth;
    out["escaped_fraction_max"] = series.escaped_fraction_max;
    out["config"] = ctx.cfg.raw;
    json pts = json::array();
    for (const auto& p : series.points)
        pts.push_back({{"t", p.t}, {"u_hat", p.u_hat}, {"stderr", p.stderr_},
                       {"eta", p.eta}, {"ratio", p.ratio}});
    out["points"] = pts;
    ctx.save_json("quenched-ratio.json", out);
    ctx.summary << "quenched-ratio: " << series.label << "\n  band [-"
                << fmt_double(series.C1) << ", -" << fmt_double(series.C2) << "], "
                << series.points.size() << " t-points, escaped_max "
                << fmt_double(series.escaped_fraction_max) << "\n";
    if (series.escaped_fraction_max > 0.01) ctx.gated_failure = true;
}

// -- empty-ball ----------------------------------------------------------------

inline void run_empty_ball(RunContext& ctx) {
    const auto env = ctx.cfg.block_or("environment", json::object());
    const auto num = ctx.cfg.block_or("numerics", json::object());
    const int d = env.value("d", 1);
    const double rho = env.value("rho", 1.0);
    const double r = num.value("r", 1.0);
    const double a = num.value("a", 0.25);
    const double r_in = num.value("r_in", 2.0);
    const std::size_t n_seeds = num.value("n_seeds", 2000);
    const std::vector<double> boxes = num.value("box_sizes", std::vector<double>{20.0, 40.0, 80.0});

    ctx.resolved["empty-ball"] = {{"d", d}, {"rho", rho}, {"r", r}, {"a", a},
                                   {"r_in", r_in}, {"n_seeds", n_seeds},
                                   {"box_sizes", boxes}, {"seed", ctx.cfg.seed}};
    CsvWriter csv({"box", "candidates", "p_void", "p_find_exact", "p_find_mc", "sigma", "pass"});
    bool all_pass = true;
    double prev_p = -1.0;
    for (double box : boxes) {
        const auto probe = cloud_from_points(d, rho, box, {});
        const std::size_t cand = empty_ball_candidate_count(probe, r, a, r_in);
        const double p_void = std::exp(-rho * unit_ball_volume(d) * std::pow(r + a, d));
        const double p_exact = 1.0 - std::pow(1.0 - p_void, static_cast<double>(cand));
        std::size_t hits = 0;
        for (std::size_t k = 0; k < n_seeds; ++k) {
            const auto cloud = sample_cloud(d, rho, box, derive_seed(ctx.cfg.seed, k * 131 + static_cast<std::uint64_t>(box)));
            if (find_empty_ball(cloud, r, a, r_in)) ++hits;
        }
        const double p_mc = static_cast<double>(hits) / static_cast<double>(n_seeds);
        const double sigma = std::sqrt(p_exact * (1.0 - p_exact) / static_cast<double>(n_seeds));
        const bool pass = std::abs(p_mc - p_exact) <= 3.0 * sigma && p_exact >= prev_p;
        all_pass = all_pass && pass;
        prev_p = p_exact;
        csv.add_row({fmt_double(box), std::to_string(cand), fmt_double(p_void),
                     fmt_double(p_exact), fmt_double(p_mc), fmt_double(sigma),
                     pass ? "true" : "false"});
    }
    ctx.save_table("empty-ball", csv);
    ctx.summary << "empty-ball: packing search frequency vs exact void probability ("
                << (all_pass ? "all within 3 sigma, monotone" : "MISMATCH") << ")\n";
    if (!all_pass) ctx.gated_failure = true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run / verify entry points
// ---------------------------------------------------------------------------

inline RunResult run_experiment(const ExperimentConfig& cfg_in,
                                const std::optional<std::string>& out_override = {},
                                std::optional<int> threads_override = {},
                                std::optional<std::uint64_t> seed_override = {}) {
    ExperimentConfig cfg = cfg_in;
    if (out_override) cfg.output_dir = *out_override;
    if (threads_override) cfg.threads = *threads_override;
    if (seed_override) {
        cfg.seed = *seed_override;
        cfg.raw["seed"] = *seed_override;
    }

    detail::RunContext ctx{cfg, std::filesystem::path(cfg.output_dir), {}, {}, false, {}};
    std::filesystem::create_directories(ctx.out_dir);

    if (cfg.experiment == "table1") detail::run_table1(ctx);
    else if (cfg.experiment == "rates-asymptotics") detail::run_rates_asymptotics(ctx);
    else if (cfg.experiment == "eigen") detail::run_eigen(ctx);
    else if (cfg.experiment == "cf-check") detail::run_cf_check(ctx);
    else if (cfg.experiment == "env-stats") detail::run_env_stats(ctx);
    else if (cfg.experiment == "quenched-ratio") detail::run_quenched_ratio(ctx);
    else if (cfg.experiment == "empty-ball") detail::run_empty_ball(ctx);
    else throw ConfigError("config: unknown experiment '" + cfg.experiment + "'");

    write_text_file((ctx.out_dir / "summary.txt").string(), ctx.summary.str());
    ctx.artifacts.push_back("summary.txt");
    detail::write_manifest(ctx);
    ctx.artifacts.push_back("manifest.json");

    RunResult result;
    result.exit_code = ctx.gated_failure ? 2 : 0;
    result.artifacts = ctx.artifacts;
    result.summary = ctx.summary.str();
    return result;
}

}  // namespace levylab
