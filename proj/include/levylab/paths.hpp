#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "levylab/quadrature.hpp"
#include "levylab/rng.hpp"
#include "levylab/symbols.hpp"

namespace levylab {

struct SamplerConfig {
    double small_jump_eps = 1e-2;       // compound-Poisson cutoff (must be < 1)
    std::int64_t rejection_cap = 1000000;  // tempering rejection budget per increment
    bool gaussian_small_jumps = true;   // replace sub-eps jumps by a matched Gaussian
};

/// Grid skeleton of a Levy path: positions[0] = x0, uniform step dt.
struct PathSample {
    double dt = 0.0;
    std::size_t n = 0;
    int d = 1;
    std::uint64_t seed = 0;
    std::vector<double> positions;  // (n+1) * d, row-major

    std::span<const double> at(std::size_t i) const {
        return {positions.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }
};

// ---------------------------------------------------------------------------
// Increment sampler
// ---------------------------------------------------------------------------

/// Samples exact-in-law increments for the closed-form catalog families;
/// density-profile families use compound Poisson above the cutoff plus a
/// variance-matched Gaussian below it.
class IncrementSampler {
  public:
    explicit IncrementSampler(const LevySymbol& symbol, SamplerConfig cfg = {})
        : sym_(symbol), cfg_(cfg), d_(symbol.dimension()) {
        if (sym_.gauss_kind() == GaussKind::matrix) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym_.gauss_matrix());
            sqrtA_ = es.operatorSqrt();
        }
        if (sym_.jump_family() == JumpFamily::density_profile) prepare_density();
    }

    int dimension() const { return d_; }

    /// One increment with law X_dt; overwrites out.
    void sample(Rng& rng, double dt, std::span<double> out) const {
        if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be > 0");
        if (out.size() != static_cast<std::size_t>(d_))
            throw std::invalid_argument("sample_increment: output has wrong dimension");
        std::fill(out.begin(), out.end(), 0.0);
        add_gaussian_part(rng, dt, out);
        switch (sym_.jump_family()) {
            case JumpFamily::none: break;
            case JumpFamily::isotropic_stable:
                add_subordinated_gaussian(rng, stable_time(rng, dt, sym_.stable_delta()), out);
                break;
            case JumpFamily::relativistic:
                add_subordinated_gaussian(rng, relativistic_time(rng, dt), out);
                break;
            case JumpFamily::stable_mixture:
                for (const auto& [a, al] : sym_.mixture()) {
                    // a |xi|^al  ==  law of a^{1/al} X^{(al)}_dt
                    add_subordinated_gaussian(rng, stable_time(rng, dt, al), out,
                                              std::pow(a, 1.0 / al));
                }
                break;
            case JumpFamily::geometric_stable: {
                const double u = rng.gamma(dt, 1.0);  // Gamma subordinator increment
                if (u > 0.0)
                    add_subordinated_gaussian(rng, stable_time(rng, u, sym_.stable_delta()), out);
                break;
            }
            case JumpFamily::density_profile:
                add_density_jumps(rng, dt, out);
                break;
        }
    }

    /// Small-jump Gaussian quality heuristic sigma(eps, dt)/eps; values below 3
    /// mean the Gaussian replacement is questionable at this step size.
    double small_jump_quality(double dt) const {
        if (sym_.jump_family() != JumpFamily::density_profile || !cfg_.gaussian_small_jumps)
            return std::numeric_limits<double>::infinity();
        return std::sqrt(small_var_rate_ * dt) / cfg_.small_jump_eps;
    }

    double compound_rate() const { return jump_rate_; }

  private:
    void add_gaussian_part(Rng& rng, double dt, std::span<double> out) const {
        switch (sym_.gauss_kind()) {
            case GaussKind::none: return;
            case GaussKind::isotropic: {
                const double sd = std::sqrt(2.0 * sym_.gauss_isotropic_coeff() * dt);
                for (double& v : out) v += rng.normal(0.0, sd);
                return;
            }
            case GaussKind::matrix: {
                Eigen::VectorXd z(d_);
                for (int i = 0; i < d_; ++i) z(i) = rng.normal();
                const Eigen::VectorXd g = std::sqrt(2.0 * dt) * (sqrtA_ * z);
                for (int i = 0; i < d_; ++i) out[static_cast<std::size_t>(i)] += g(i);
                return;
            }
        }
    }

    /// Subordinator increment S with E e^{-lam S} = e^{-dt lam^{delta/2}}, so
    /// that B(S) with B having symbol |xi|^2 is the delta-stable increment.
    static double stable_time(Rng& rng, double dt, double delta) {
        return std::pow(dt, 2.0 / delta) * rng.stable_subordinator(0.5 * delta);
    }

    /// Tempered subordinator increment by rejection: propose the stable time,
    /// accept with probability e^{-m^{2/alpha} S}.  Mean acceptance e^{-m dt}.
    double relativistic_time(Rng& rng, double dt) const {
        const double alpha = sym_.relativistic_alpha();
        const double theta = std::pow(sym_.relativistic_mass(), 2.0 / alpha);
        for (std::int64_t tries = 0; tries < cfg_.rejection_cap; ++tries) {
            const double s = stable_time(rng, dt, alpha);
            if (rng.uniform() <= std::exp(-theta * s)) return s;
        }
        throw std::runtime_error(
            "relativistic sampler: rejection cap exceeded (m^{2/alpha} dt too large; "
            "use a smaller dt)");
    }

    void add_subordinated_gaussian(Rng& rng, double s, std::span<double> out,
                                   double spatial_scale = 1.0) const {
        const double sd = spatial_scale * std::sqrt(2.0 * s);
        for (double& v : out) v += rng.normal(0.0, sd);
    }

    // -- density-profile machinery -------------------------------------------

    void prepare_density() {
        const auto& prof = sym_.profile();
        const double eps = cfg_.small_jump_eps;
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("sampler: small-jump cutoff must lie in (0,1)");
        const double sigma = unit_sphere_surface(d_);
        auto mass = [&](double r) { return prof(r) * std::pow(r, d_ - 1); };
        const bool truncated = prof.family == RadialLevyDensityProfile::Family::truncated;
        // find r_max with negligible tail mass
        double r_max = 1.0;
        if (!truncated) {
            const double total_tail =
                integrate(mass, 1.0, std::numeric_limits<double>::infinity(), sym_.quad(),
                          "sampler tail mass");
            r_max = 2.0;
            while (r_max < 1e12) {
                const double rest = integrate(mass, r_max, std::numeric_limits<double>::infinity(),
                                              sym_.quad(), "sampler tail rest");
                if (rest < 1e-12 * std::max(total_tail, 1e-300)) break;
                r_max *= 2.0;
            }
        }
        // log-spaced cells from eps to r_max with a breakpoint at 1
        const int n_cells = 2048;
        cell_edges_.resize(n_cells + 1);
        for (int i = 0; i <= n_cells; ++i) {
            double e = eps * std::pow(r_max / eps, static_cast<double>(i) / n_cells);
            cell_edges_[static_cast<std::size_t>(i)] = e;
        }
        // snap the closest edge to the branch point
        auto it = std::lower_bound(cell_edges_.begin(), cell_edges_.end(), 1.0);
        if (it != cell_edges_.begin() && it != cell_edges_.end()) *it = 1.0;
        cell_cum_.assign(cell_edges_.size(), 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < cell_edges_.size(); ++i) {
            acc += sigma * integrate(mass, cell_edges_[i], cell_edges_[i + 1], sym_.quad(),
                                     "sampler cell mass");
            cell_cum_[i + 1] = acc;
        }
        jump_rate_ = acc;
        small_var_rate_ = cfg_.gaussian_small_jumps
                              ? sigma / d_ * integrate([&](double s) {
                                    return std::pow(s, d_ + 1) * prof(s);
                                }, 0.0, eps, sym_.quad(), "sampler small-jump variance")
                              : 0.0;
    }

    double sample_jump_radius(Rng& rng) const {
        const double u = rng.uniform() * jump_rate_;
        auto it = std::upper_bound(cell_cum_.begin(), cell_cum_.end(), u);
        std::size_t i = static_cast<std::size_t>(it - cell_cum_.begin());
        i = std::clamp<std::size_t>(i, 1, cell_cum_.size() - 1) - 1;
        const double a = cell_edges_[i], b = cell_edges_[i + 1];
        const double mass = cell_cum_[i + 1] - cell_cum_[i];
        const double frac = mass > 0.0 ? (u - cell_cum_[i]) / mass : rng.uniform();
        // local power-law fit of g(r) r^{d-1} across the cell
        const auto& prof = sym_.profile();
        const double fa = prof(a) * std::pow(a, d_ - 1);
        const double fb = prof(std::min(b, std::nextafter(b, 0.0))) * std::pow(b, d_ - 1);
        double p = 0.0;
        if (fa > 0.0 && fb > 0.0) p = std::log(fb / fa) / std::log(b / a);
        const double p1 = p + 1.0;
        if (std::abs(p1) < 1e-9)
            return a * std::pow(b / a, frac);
        const double ap = std::pow(a, p1), bp = std::pow(b, p1);
        return std::pow(ap + frac * (bp - ap), 1.0 / p1);
    }

    void add_density_jumps(Rng& rng, double dt, std::span<double> out) const {
        const auto n_jumps = rng.poisson(jump_rate_ * dt);
        std::vector<double> dir(static_cast<std::size_t>(d_));
        for (std::int64_t j = 0; j < n_jumps; ++j) {
            const double r = sample_jump_radius(rng);
            rng.unit_sphere(dir);
            for (int k = 0; k < d_; ++k) out[static_cast<std::size_t>(k)] += r * dir[static_cast<std::size_t>(k)];
        }
        if (small_var_rate_ > 0.0) {
            const double sd = std::sqrt(small_var_rate_ * dt);
            for (double& v : out) v += rng.normal(0.0, sd);
        }
    }

    const LevySymbol& sym_;
    SamplerConfig cfg_;
    int d_;
    Eigen::MatrixXd sqrtA_;
    // density caches
    std::vector<double> cell_edges_, cell_cum_;
    double jump_rate_ = 0.0;
    double small_var_rate_ = 0.0;
};

inline void sample_increment(const LevySymbol& symbol, double dt, Rng& rng,
                             std::span<double> out, const SamplerConfig& cfg = {}) {
    IncrementSampler(symbol, cfg).sample(rng, dt, out);
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

/// Cumulative sum of ceil(t_end/dt) increments; deterministic in the seed.
inline PathSample sample_path(const LevySymbol& symbol, std::span<const double> x0,
                              double t_end, double dt, std::uint64_t seed,
                              const SamplerConfig& cfg = {}) {
    if (!(dt > 0.0) || t_end < 0.0)
        throw std::invalid_argument("sample_path: need dt > 0, t_end >= 0");
    const double steps = std::ceil(t_end / dt - 1e-12);
    if (steps > 1e8) throw std::invalid_argument("sample_path: more than 1e8 steps");
    const auto n = static_cast<std::size_t>(std::max(0.0, steps));
    const int d = symbol.dimension();
    if (x0.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("sample_path: x0 has wrong dimension");

    PathSample path;
    path.dt = dt;
    path.n = n;
    path.d = d;
    path.seed = seed;
    path.positions.resize((n + 1) * static_cast<std::size_t>(d));
    std::copy(x0.begin(), x0.end(), path.positions.begin());

    IncrementSampler sampler(symbol, cfg);
    Rng rng(seed);
    std::vector<double> inc(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < n; ++i) {
        sampler.sample(rng, dt, inc);
        double* prev = path.positions.data() + i * static_cast<std::size_t>(d);
        double* next = prev + d;
        for (int k = 0; k < d; ++k) next[k] = prev[k] + inc[static_cast<std::size_t>(k)];
    }
    return path;
}

// ---------------------------------------------------------------------------
// Domains and exit times
// ---------------------------------------------------------------------------

struct BallDomain {
    std::vector<double> center;
    double radius = 1.0;
};
struct BoxDomain {
    double halfwidth = 1.0;
};
using Domain = std::variant<BallDomain, BoxDomain>;

inline bool domain_contains(const Domain& dom, std::span<const double> x) {
    if (std::holds_alternative<BallDomain>(dom)) {
        const auto& b = std::get<BallDomain>(dom);
        double r2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) r2 += sqr(x[k] - b.center[k]);
        return r2 <= b.radius * b.radius;  // closed ball
    }
    const auto& box = std::get<BoxDomain>(dom);
    for (double c : x)
        if (std::abs(c) > box.halfwidth) return false;
    return true;
}

/// First grid index whose position lies outside the closed domain (discrete
/// monitoring: excursions between grid points are missed by convention).
inline std::optional<std::pair<std::size_t, double>> exit_time_on_grid(const PathSample& path,
                                                                       const Domain& dom) {
    for (std::size_t i = 0; i <= path.n; ++i) {
        if (!domain_contains(dom, path.at(i)))
            return std::make_pair(i, static_cast<double>(i) * path.dt);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tail probabilities
// ---------------------------------------------------------------------------

struct TailEstimate {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

/// Monte Carlo estimate of P_0(|X_t| >= r) from N single increments at
/// horizon t (exact in law for the closed-form families).
inline TailEstimate tail_probability_estimate(const LevySymbol& symbol, double t, double r,
                                              std::size_t n_samples, std::uint64_t seed,
                                              const SamplerConfig& cfg = {}) {
    if (n_samples < 1000)
        throw std::invalid_argument("tail_probability_estimate: need N >= 1e3");
    IncrementSampler sampler(symbol, cfg);
    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(symbol.dimension()));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        sampler.sample(rng, t, x);
        double s = 0.0;
        for (double c : x) s += c * c;
        if (std::sqrt(s) >= r) ++hits;
    }
    TailEstimate est;
    est.n = n_samples;
    est.p_hat = static_cast<double>(hits) / static_cast<double>(n_samples);
    est.stderr_ = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(n_samples));
    return est;
}

/// Empirical radial quantile of |X_t| (used to size environment boxes).
inline double displacement_quantile(const LevySymbol& symbol, double t, double q,
                                    std::size_t n_samples, std::uint64_t seed,
                                    const SamplerConfig& cfg = {}) {
    IncrementSampler sampler(symbol, cfg);
    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(symbol.dimension()));
    std::vector<double> radii(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        sampler.sample(rng, t, x);
        double s = 0.0;
        for (double c : x) s += c * c;
        radii[i] = std::sqrt(s);
    }
    std::sort(radii.begin(), radii.end());
    const auto idx = static_cast<std::size_t>(std::min<double>(
        static_cast<double>(n_samples - 1), q * static_cast<double>(n_samples)));
    return radii[idx];
}

/// Binary path dump: header (d, n, dt) then positions row-major.
inline void save_path_binary(const PathSample& path, const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("save_path_binary: cannot open " + file);
    const std::int64_t d = path.d;
    const std::uint64_t n = path.n;
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&path.dt), sizeof(path.dt));
    out.write(reinterpret_cast<const char*>(path.positions.data()),
              static_cast<std::streamsize>(path.positions.size() * sizeof(double)));
}

inline PathSample load_path_binary(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("load_path_binary: cannot open " + file);
    std::int64_t d = 0;
    std::uint64_t n = 0;
    PathSample path;
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&path.dt), sizeof(path.dt));
    path.d = static_cast<int>(d);
    path.n = static_cast<std::size_t>(n);
    path.positions.resize((path.n + 1) * static_cast<std::size_t>(path.d));
    in.read(reinterpret_cast<char*>(path.positions.data()),
            static_cast<std::streamsize>(path.positions.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_path_binary: truncated file " + file);
    return path;
}

/// Empirical characteristic function (cosine part) on a xi-grid, with the
/// exact e^{-t psi(xi)} reference.
struct CfCheckRow {
    double xi_norm = 0.0;
    double empirical = 0.0;
    double exact = 0.0;
    double error = 0.0;
};

inline std::vector<CfCheckRow> empirical_cf_check(const LevySymbol& symbol, double t,
                                                  const std::vector<double>& xi_norms,
                                                  std::size_t n_samples, std::uint64_t seed,
                                                  const SamplerConfig& cfg = {}) {
    IncrementSampler sampler(symbol, cfg);
    Rng rng(seed);
    const int d = symbol.dimension();
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> acc(xi_norms.size(), 0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
        sampler.sample(rng, t, x);
        for (std::size_t j = 0; j < xi_norms.size(); ++j)
            acc[j] += std::cos(xi_norms[j] * x[0]);  // xi along e_1
    }
    std::vector<CfCheckRow> rows(xi_norms.size());
    for (std::size_t j = 0; j < xi_norms.size(); ++j) {
        rows[j].xi_norm = xi_norms[j];
        rows[j].empirical = acc[j] / static_cast<double>(n_samples);
        std::vector<double> xi(static_cast<std::size_t>(d), 0.0);
        xi[0] = xi_norms[j];
        rows[j].exact = std::exp(-t * symbol.psi(xi));
        rows[j].error = std::abs(rows[j].empirical - rows[j].exact);
    }
    return rows;
}

}  // namespace levylab
