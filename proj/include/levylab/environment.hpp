#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levylab/math.hpp"
#include "levylab/rng.hpp"

namespace levylab {

// ---------------------------------------------------------------------------
// Bump profiles W
// ---------------------------------------------------------------------------

/// Finite-range bump profile: W(x) = 0 for |x| > range, 0 <= W <= sup_norm.
struct BumpProfile {
    enum class Shape { indicator_ball, cone, table };

    Shape shape = Shape::indicator_ball;
    double height = 1.0;
    double range = 1.0;
    std::vector<double> table;  // radial samples on [0, range], linear interp

    static BumpProfile indicator_ball(double height, double range) {
        if (!(height > 0.0) || !(range > 0.0))
            throw std::invalid_argument("indicator_ball: need height > 0, range > 0");
        BumpProfile w; w.shape = Shape::indicator_ball; w.height = height; w.range = range;
        return w;
    }
    static BumpProfile cone(double height, double range) {
        if (!(height > 0.0) || !(range > 0.0))
            throw std::invalid_argument("cone: need height > 0, range > 0");
        BumpProfile w; w.shape = Shape::cone; w.height = height; w.range = range;
        return w;
    }
    static BumpProfile from_table(double range, std::vector<double> samples) {
        if (!(range > 0.0) || samples.size() < 2)
            throw std::invalid_argument("from_table: need range > 0 and >= 2 samples");
        for (double v : samples)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("from_table: samples must be finite and >= 0");
        BumpProfile w; w.shape = Shape::table; w.range = range; w.table = std::move(samples);
        w.height = *std::max_element(w.table.begin(), w.table.end());
        return w;
    }

    double sup_norm() const { return height; }

    /// W at radial distance r; exactly zero beyond the range.
    double radial(double r) const {
        if (r > range) return 0.0;
        switch (shape) {
            case Shape::indicator_ball: return height;
            case Shape::cone: return height * (1.0 - r / range);
            case Shape::table: {
                const double pos = r / range * static_cast<double>(table.size() - 1);
                const std::size_t i = std::min(static_cast<std::size_t>(pos), table.size() - 2);
                const double t = pos - static_cast<double>(i);
                return table[i] * (1.0 - t) + table[i + 1] * t;
            }
        }
        return 0.0;
    }

    const char* name() const {
        switch (shape) {
            case Shape::indicator_ball: return "indicator_ball";
            case Shape::cone: return "cone";
            case Shape::table: return "table";
        }
        return "?";
    }
};

// ---------------------------------------------------------------------------
// Poisson clouds
// ---------------------------------------------------------------------------

/// Seeded Poisson point cloud on [-R_box, R_box]^d.  Immutable after sampling.
struct PoissonCloud {
    int d = 1;
    double rho = 1.0;
    double R_box = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> points;  // flat, row-major, size n_points * d

    std::size_t n_points() const { return points.size() / static_cast<std::size_t>(d); }

    std::span<const double> point(std::size_t i) const {
        return {points.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }
};

/// N ~ Poisson(rho (2 R_box)^d) points i.i.d. uniform on the box; fully
/// reproducible from the seed.
inline PoissonCloud sample_cloud(int d, double rho, double R_box, std::uint64_t seed) {
    if (d < 1 || !(rho > 0.0) || !(R_box > 0.0))
        throw std::invalid_argument("sample_cloud: need d >= 1, rho > 0, R_box > 0");
    const double expected = rho * std::pow(2.0 * R_box, d);
    if (expected > 1e8)
        throw std::invalid_argument("sample_cloud: expected count " + std::to_string(expected) +
                                    " exceeds the 1e8 cap");
    PoissonCloud cloud;
    cloud.d = d; cloud.rho = rho; cloud.R_box = R_box; cloud.seed = seed;
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(rng.poisson(expected));
    cloud.points.resize(n * static_cast<std::size_t>(d));
    for (double& c : cloud.points) c = rng.uniform(-R_box, R_box);
    return cloud;
}

/// Test/replay constructor from an explicit point list.
inline PoissonCloud cloud_from_points(int d, double rho, double R_box,
                                      std::vector<double> flat_points) {
    if (flat_points.size() % static_cast<std::size_t>(d) != 0)
        throw std::invalid_argument("cloud_from_points: point array not a multiple of d");
    PoissonCloud cloud;
    cloud.d = d; cloud.rho = rho; cloud.R_box = R_box; cloud.seed = 0;
    cloud.points = std::move(flat_points);
    return cloud;
}

// ---------------------------------------------------------------------------
// Potential evaluation V^omega(x) = sum_i W(x - y_i)
// ---------------------------------------------------------------------------

/// Uniform-grid neighbor index over the cloud with cell size = range of W.
/// Candidate indices are summed in ascending point order, so the result is
/// bitwise identical to a brute-force sum over all points (far points add an
/// exact 0).
class PotentialEvaluator {
  public:
    PotentialEvaluator(const PoissonCloud& cloud, const BumpProfile& w)
        : cloud_(cloud), w_(w), cell_(w.range), d_(cloud.d) {
        n_cells_per_axis_ = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::ceil(2.0 * cloud.R_box / cell_)));
        std::int64_t total = 1;
        if (d_ > 8) dense_grid_ = false;  // fall back to the direct sum
        for (int k = 0; dense_grid_ && k < d_; ++k) {
            if (total > (1 << 28) / n_cells_per_axis_) {  // grid would not fit
                dense_grid_ = false;
                break;
            }
            total *= n_cells_per_axis_;
        }
        if (dense_grid_) {
            cells_.resize(static_cast<std::size_t>(total));
            const std::size_t n = cloud.n_points();
            for (std::size_t i = 0; i < n; ++i)
                cells_[cell_index(cloud.point(i))].push_back(i);
        }
    }

    double range() const { return w_.range; }

    /// Exact V(x); throws when the a-neighbourhood of x is not covered by the
    /// cloud box (silent truncation would bias V downward).  Reentrant: the
    /// candidate buffer is thread-local.
    double operator()(std::span<const double> x) const {
        check_coverage(x);
        double sum = 0.0;
        if (!dense_grid_) {
            const std::size_t n = cloud_.n_points();
            for (std::size_t i = 0; i < n; ++i) sum += contribution(i, x);
            return sum;
        }
        thread_local std::vector<std::size_t> scratch;
        scratch.clear();
        gather_neighbors(x, scratch);
        std::sort(scratch.begin(), scratch.end());
        for (std::size_t i : scratch) sum += contribution(i, x);
        return sum;
    }

    void check_coverage(std::span<const double> x) const {
        for (double c : x)
            if (std::abs(c) + w_.range > cloud_.R_box + 1e-12)
                throw std::domain_error(
                    "eval_potential: x is closer than the profile range to the box edge");
    }

    bool in_coverage(std::span<const double> x) const {
        for (double c : x)
            if (std::abs(c) + w_.range > cloud_.R_box + 1e-12) return false;
        return true;
    }

  private:
    double contribution(std::size_t i, std::span<const double> x) const {
        const double* p = cloud_.points.data() + i * static_cast<std::size_t>(d_);
        double r2 = 0.0;
        for (int k = 0; k < d_; ++k) r2 += sqr(x[k] - p[k]);
        return w_.radial(std::sqrt(r2));
    }

    std::int64_t axis_cell(double c) const {
        auto idx = static_cast<std::int64_t>(std::floor((c + cloud_.R_box) / cell_));
        return std::clamp<std::int64_t>(idx, 0, n_cells_per_axis_ - 1);
    }

    std::size_t cell_index(std::span<const double> p) const {
        std::int64_t idx = 0;
        for (int k = 0; k < d_; ++k) idx = idx * n_cells_per_axis_ + axis_cell(p[k]);
        return static_cast<std::size_t>(idx);
    }

    void gather_neighbors(std::span<const double> x, std::vector<std::size_t>& out) const {
        std::int64_t lo[8], hi[8], cur[8];
        for (int k = 0; k < d_; ++k) {
            lo[k] = std::max<std::int64_t>(0, axis_cell(x[k]) - 1);
            hi[k] = std::min<std::int64_t>(n_cells_per_axis_ - 1, axis_cell(x[k]) + 1);
            cur[k] = lo[k];
        }
        while (true) {
            std::int64_t idx = 0;
            for (int k = 0; k < d_; ++k) idx = idx * n_cells_per_axis_ + cur[k];
            const auto& cell = cells_[static_cast<std::size_t>(idx)];
            out.insert(out.end(), cell.begin(), cell.end());
            int k = d_ - 1;
            while (k >= 0 && ++cur[k] > hi[k]) { cur[k] = lo[k]; --k; }
            if (k < 0) break;
        }
    }

    const PoissonCloud& cloud_;
    BumpProfile w_;
    double cell_;
    int d_;
    std::int64_t n_cells_per_axis_ = 1;
    bool dense_grid_ = true;
    std::vector<std::vector<std::size_t>> cells_;
};

inline double eval_potential(const PoissonCloud& cloud, const BumpProfile& w,
                             std::span<const double> x) {
    return PotentialEvaluator(cloud, w)(x);
}

/// Brute-force oracle: sums W over every point in ascending index order.
inline double eval_potential_brute(const PoissonCloud& cloud, const BumpProfile& w,
                                   std::span<const double> x) {
    double sum = 0.0;
    const std::size_t n = cloud.n_points();
    for (std::size_t i = 0; i < n; ++i) {
        auto p = cloud.point(i);
        double r2 = 0.0;
        for (int k = 0; k < cloud.d; ++k) r2 += sqr(x[k] - p[k]);
        sum += w.radial(std::sqrt(r2));
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Empty-ball search
// ---------------------------------------------------------------------------

/// Deterministic packing search: candidate centers on the lattice of pitch
/// 2(r+a) + 2a (boxes of side 2(r+a), 2a-separated), scanned outward by
/// sup-norm shells in lexicographic order.  Boxes whose closure meets
/// (-r_in, r_in)^d are excluded.  Returns the first center whose ball
/// B(c, r+a) contains no cloud point.
inline std::optional<std::vector<double>> find_empty_ball(const PoissonCloud& cloud,
                                                          double r, double a,
                                                          double r_in = 0.0) {
    if (!(r > 0.0) || a < 0.0 || r_in < 0.0)
        throw std::invalid_argument("find_empty_ball: need r > 0, a >= 0, r_in >= 0");
    const int d = cloud.d;
    const double half_side = r + a;
    const double pitch = 2.0 * (r + a) + 2.0 * a;
    const auto k_max = static_cast<std::int64_t>(
        std::floor((cloud.R_box - half_side) / pitch));
    if (k_max < 0) return std::nullopt;

    auto ball_empty = [&](const std::vector<double>& c) {
        const std::size_t n = cloud.n_points();
        const double rr = sqr(r + a);
        for (std::size_t i = 0; i < n; ++i) {
            auto p = cloud.point(i);
            double dist2 = 0.0;
            for (int k = 0; k < d; ++k) dist2 += sqr(c[k] - p[k]);
            if (dist2 < rr) return false;
        }
        return true;
    };

    std::vector<std::int64_t> k(d);
    std::vector<double> center(d);
    for (std::int64_t shell = 0; shell <= k_max; ++shell) {
        // enumerate k with max|k_i| == shell, lexicographically
        std::fill(k.begin(), k.end(), -shell);
        while (true) {
            std::int64_t sup = 0;
            for (int i = 0; i < d; ++i) sup = std::max(sup, std::abs(k[i]));
            if (sup == shell) {
                double supc = 0.0;
                for (int i = 0; i < d; ++i) {
                    center[i] = static_cast<double>(k[i]) * pitch;
                    supc = std::max(supc, std::abs(center[i]));
                }
                const bool excluded = supc < r_in + half_side;
                if (!excluded && ball_empty(center)) return center;
            }
            int i = d - 1;
            while (i >= 0 && ++k[i] > shell) { k[i] = -shell; --i; }
            if (i < 0) break;
        }
    }
    return std::nullopt;
}

/// Number of eligible candidate centers for the same packing (used by the
/// void-probability oracle in tests and the empty-ball experiment).
inline std::size_t empty_ball_candidate_count(const PoissonCloud& cloud, double r, double a,
                                              double r_in = 0.0) {
    const int d = cloud.d;
    const double half_side = r + a;
    const double pitch = 2.0 * (r + a) + 2.0 * a;
    const auto k_max = static_cast<std::int64_t>(
        std::floor((cloud.R_box - half_side) / pitch));
    if (k_max < 0) return 0;
    std::size_t count = 0;
    const auto axis = static_cast<std::size_t>(2 * k_max + 1);
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= axis;
    std::vector<std::int64_t> k(d, -k_max);
    for (std::size_t it = 0; it < total; ++it) {
        double supc = 0.0;
        for (int i = 0; i < d; ++i) supc = std::max(supc, std::abs(static_cast<double>(k[i])) * pitch);
        if (!(supc < r_in + half_side)) ++count;
        int i = d - 1;
        while (i >= 0 && ++k[i] > k_max) { k[i] = -k_max; --i; }
        if (i < 0) break;
    }
    return count;
}

// ---------------------------------------------------------------------------
// M^eps(r) box size and the sup-potential bound
// ---------------------------------------------------------------------------

/// M^eps(r) = (d/(w_d rho (1+eps)))^{2/d+2} r^{-2d-2} exp((w_d rho (1+eps)/d) r^d).
inline double m_epsilon_box_size(double eps, double r, int d, double rho) {
    if (!(r > 0.0) || eps < 0.0 || !(rho > 0.0))
        throw std::invalid_argument("m_epsilon_box_size: need r > 0, eps >= 0, rho > 0");
    const double wd = unit_ball_volume(d);
    const double expo = wd * rho * (1.0 + eps) / d * std::pow(r, d);
    if (expo > 700.0) {
        const double r_max = std::pow(700.0 * d / (wd * rho * (1.0 + eps)), 1.0 / d);
        throw std::range_error("m_epsilon_box_size: exponential overflow; r must stay below " +
                               std::to_string(r_max));
    }
    return std::pow(d / (wd * rho * (1.0 + eps)), 2.0 / d + 2.0) *
           std::pow(r, -2.0 * d - 2.0) * std::exp(expo);
}

struct SupPotentialReport {
    double sup_estimate = 0.0;
    double bound = 0.0;  // 3 d log R
    bool pass = false;
};

/// Grid sweep of V over (-R, R)^d with spacing <= range/4, compared against
/// the almost-sure bound 3 d log R.
inline SupPotentialReport check_sup_potential_bound(const PoissonCloud& cloud,
                                                    const BumpProfile& w, double R,
                                                    double spacing = 0.0) {
    const int d = cloud.d;
    if (spacing <= 0.0) spacing = w.range / 4.0;
    if (spacing > w.range / 4.0 + 1e-12)
        throw std::invalid_argument("check_sup_potential_bound: spacing must be <= range/4");
    if (R + w.range > cloud.R_box + 1e-12)
        throw std::domain_error("check_sup_potential_bound: R + range exceeds the cloud box");
    PotentialEvaluator V(cloud, w);
    const auto steps = static_cast<std::int64_t>(std::floor(2.0 * R / spacing));
    std::vector<std::int64_t> idx(d, 0);
    std::vector<double> x(d);
    SupPotentialReport rep;
    rep.bound = 3.0 * d * std::log(R);
    while (true) {
        for (int k = 0; k < d; ++k) x[k] = -R + static_cast<double>(idx[k]) * spacing;
        rep.sup_estimate = std::max(rep.sup_estimate, V(x));
        int k = d - 1;
        while (k >= 0 && ++idx[k] > steps) { idx[k] = 0; --k; }
        if (k < 0) break;
    }
    rep.pass = rep.sup_estimate <= rep.bound;
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization (CSV replay format)
// ---------------------------------------------------------------------------

inline void save_cloud_csv(const PoissonCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cloud_csv: cannot open " + path);
    out.precision(17);
    out << "d,rho,R_box,seed,N\n";
    out << cloud.d << ',' << cloud.rho << ',' << cloud.R_box << ',' << cloud.seed << ','
        << cloud.n_points() << '\n';
    for (std::size_t i = 0; i < cloud.n_points(); ++i) {
        auto p = cloud.point(i);
        for (int k = 0; k < cloud.d; ++k) out << (k ? "," : "") << p[k];
        out << '\n';
    }
}

inline PoissonCloud load_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_cloud_csv: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::getline(in, line);
    std::istringstream meta(line);
    PoissonCloud cloud;
    char comma = 0;
    std::size_t n = 0;
    meta >> cloud.d >> comma >> cloud.rho >> comma >> cloud.R_box >> comma >> cloud.seed >>
        comma >> n;
    cloud.points.reserve(n * static_cast<std::size_t>(cloud.d));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double v = 0.0;
        while (row >> v) {
            cloud.points.push_back(v);
            row >> comma;
        }
    }
    if (cloud.points.size() != n * static_cast<std::size_t>(cloud.d))
        throw std::runtime_error("load_cloud_csv: point count mismatch in " + path);
    return cloud;
}

}  // namespace levylab
