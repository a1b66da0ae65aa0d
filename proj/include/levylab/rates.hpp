#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "levylab/math.hpp"

namespace levylab {

// ---------------------------------------------------------------------------
// Tail profiles F(r) for the dominating bound P_0(|X_t| >= r) <= C t^g F(r)
// ---------------------------------------------------------------------------

/// Closed-form tail profile families on [1, infinity), with |log F| available
/// directly (never through exp/log round trips, which overflow long before the
/// rate machinery does).
struct TailProfile {
    enum class Family { polynomial, log_decay, stretched_exp, hard_exp };

    Family family = Family::polynomial;
    int dim = 1;          // log_decay's dimensional correction needs d
    double q = 1.0;       // polynomial exponent: F(r) = r^{-q}
    double theta = 1.0;
    double beta = 2.0;
    double scale_c = 1.0;  // c3 inside log(c3 r) / overall scale c
    bool correction = false;  // log_decay: multiply by r^d (log c3 r)^{-(beta-1)}

    static TailProfile polynomial(double q) {
        if (!(q > 0.0)) throw std::invalid_argument("polynomial tail: q must be > 0");
        TailProfile p; p.family = Family::polynomial; p.q = q;
        return p;
    }
    static TailProfile log_decay(int d, double theta, double beta, double c = 1.0,
                                 bool correction = false) {
        if (!(beta > 1.0) || !(theta > 0.0) || !(c > 0.0))
            throw std::invalid_argument("log_decay tail: need theta > 0, beta > 1, c > 0");
        TailProfile p; p.family = Family::log_decay; p.dim = d; p.theta = theta;
        p.beta = beta; p.scale_c = c; p.correction = correction;
        return p;
    }
    static TailProfile stretched_exp(double theta, double beta, double c = 1.0) {
        if (!(beta > 0.0) || !(theta > 0.0) || !(c > 0.0))
            throw std::invalid_argument("stretched_exp tail: need theta > 0, beta > 0, c > 0");
        TailProfile p; p.family = Family::stretched_exp; p.theta = theta; p.beta = beta;
        p.scale_c = c;
        return p;
    }
    static TailProfile hard_exp(double c) {
        if (!(c > 0.0)) throw std::invalid_argument("hard_exp tail: rate must be > 0");
        TailProfile p; p.family = Family::hard_exp; p.theta = c; p.beta = 1.0;
        return p;
    }

    const char* name() const {
        switch (family) {
            case Family::polynomial: return "polynomial";
            case Family::log_decay: return "log_decay";
            case Family::stretched_exp: return "stretched_exp";
            case Family::hard_exp: return "hard_exp";
        }
        return "?";
    }

    /// log F(r) expressed through L = log r.  +inf means F > 1 there (wedged
    /// away by 1 ^ F); -inf means F underflows.
    double log_F_from_logr(double L) const {
        const double r = exp_capped(L);
        switch (family) {
            case Family::polynomial: return -q * L;
            case Family::log_decay: {
                const double ell = std::log(scale_c) + L;
                if (ell <= 0.0) return std::numeric_limits<double>::infinity();
                double lf = -theta * std::pow(ell, beta);
                if (correction) lf += dim * L - (beta - 1.0) * std::log(ell);
                return lf;
            }
            case Family::stretched_exp:
                return std::log(scale_c) - theta * std::pow(r - 1.0, beta);
            case Family::hard_exp: return -theta * r;
        }
        return 0.0;
    }

    double F(double r) const {
        if (r < 1.0) throw std::invalid_argument("TailProfile: F is defined on [1, inf)");
        return exp_capped(log_F_from_logr(std::log(r)));
    }

    /// |log(1 ^ F(r))| as a function of L = log r.
    double abs_log_wedge_from_logr(double L) const {
        const double lf = log_F_from_logr(L);
        return lf >= 0.0 ? 0.0 : -lf;
    }

    /// First radius beyond which F is non-increasing (documented r*).  The
    /// corrected log_decay profile increases near r = 1 before its eventual
    /// decay; every other family is monotone from 1.
    double r_star() const {
        if (family != Family::log_decay || !correction) return 1.0;
        // d/dr log F = (1/r)(d - theta beta ell^{beta-1} - (beta-1)/ell) < 0
        double lo = 0.0, hi = 1.0;
        auto deriv = [&](double ell) {
            return dim - theta * beta * std::pow(ell, beta - 1.0) - (beta - 1.0) / ell;
        };
        while (deriv(hi) > 0.0 && hi < 1e8) hi *= 2.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (deriv(mid) > 0.0 ? lo : hi) = mid;
        }
        return std::max(1.0, std::exp(hi) / scale_c);
    }

    std::map<std::string, double> parameter_map() const {
        std::map<std::string, double> p;
        switch (family) {
            case Family::polynomial: p["q"] = q; break;
            case Family::log_decay:
                p["theta"] = theta; p["beta"] = beta; p["c"] = scale_c;
                p["correction"] = correction ? 1.0 : 0.0; p["d"] = dim;
                break;
            case Family::stretched_exp:
                p["theta"] = theta; p["beta"] = beta; p["c"] = scale_c; break;
            case Family::hard_exp: p["c"] = theta; break;
        }
        return p;
    }
};

// ---------------------------------------------------------------------------
// Rate machine: f_{F,alpha,kappa}, its inverse h, and g
// ---------------------------------------------------------------------------

struct AsymptoticForm {
    std::string description;
    std::function<double(double)> log_h;  // proof-level closed form for log h(t)
    std::function<double(double)> g;      // matching closed form for g(t)
    std::function<double(double)> plain_g;  // leading-order textbook form
    std::optional<double> gh_ratio_constant;  // polynomial: lim log h / g
};

struct AsymptoticValidation {
    double max_h_ratio_err = 0.0;       // max |h_num/h_closed - 1| over the grid
    double max_g_ratio_err = 0.0;       // max |g_num/g_closed - 1| over the grid
    double final_h_ratio_err = 0.0;     // value at the largest grid point
    double final_g_ratio_err = 0.0;
    double final_plain_g_ratio_err = 0.0;  // leading-order form, diagnostic only
    double max_gh_const_err = 0.0;      // polynomial only: |log h / g / const - 1|
};

/// Bundles (F, alpha, kappa, d) and exposes
///   f(r) = ((r ^ |log(1 ^ F(r))|) + (d/2) log r) (d log r / kappa)^{alpha/d},
/// its inverse h, and g(t) = t / (log h(t))^{alpha/d}.  All internals work on
/// L = log r: h(t) exceeds the double range long before the machinery breaks.
class RateMachine {
  public:
    RateMachine(double alpha, double kappa, TailProfile profile, int d,
                double bisect_tol = 1e-12)
        : alpha_(alpha), kappa_(kappa), profile_(std::move(profile)), d_(d),
          tol_(bisect_tol) {
        if (!(alpha > 0.0 && alpha <= 2.0))
            throw std::invalid_argument("RateMachine: alpha must lie in (0,2]");
        if (!(kappa > 0.0)) throw std::invalid_argument("RateMachine: kappa must be > 0");
        if (d < 1) throw std::invalid_argument("RateMachine: d must be >= 1");
    }

    double alpha() const { return alpha_; }
    double kappa() const { return kappa_; }
    int dim() const { return d_; }
    const TailProfile& profile() const { return profile_; }

    double f_from_logr(double L) const {
        if (L < 0.0) throw std::domain_error("f: r must be >= 1");
        if (L == 0.0) return 0.0;
        const double r = exp_capped(L);
        const double wedge = std::min(r, profile_.abs_log_wedge_from_logr(L));
        return (wedge + 0.5 * d_ * L) * std::pow(d_ * L / kappa_, alpha_ / d_);
    }

    double f_value(double r) const {
        if (r < 1.0) throw std::domain_error("f: r must be >= 1");
        return f_from_logr(std::log(r));
    }

    /// log of the inverse h(t): bracket-doubling in log r, then bisection.
    double log_h_value(double t) const {
        if (t < 0.0) throw std::domain_error("h: t must be >= 0");
        if (t == 0.0) return 0.0;
        double lo = 0.0, hi = std::log(2.0);
        int guard = 0;
        while (f_from_logr(hi) < t) {
            hi *= 2.0;
            if (++guard > 200) throw std::runtime_error("h: bracket doubling exhausted");
        }
        // tolerance relative to the solution scale, not to log r = 1: tiny
        // t gives tiny log h with a steep local slope of f
        for (int i = 0; i < 300 && (hi - lo) > tol_ * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (f_from_logr(mid) < t ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    double h_value(double t) const { return exp_capped(log_h_value(t)); }

    double g_value(double t) const {
        const double L = log_h_value(t);
        if (L <= 0.0) throw std::domain_error("g: h(t) = 1, log h vanishes");
        return t / std::pow(L, alpha_ / d_);
    }

    /// Relative residual of t (kappa/(d log h))^{alpha/d} =
    /// (h ^ |log(1 ^ F(h))|) + (d/2) log h at the computed h(t).
    double defining_relation_residual(double t) const {
        const double L = log_h_value(t);
        if (L <= 0.0) return 0.0;
        const double lhs = t * std::pow(kappa_ / (d_ * L), alpha_ / d_);
        const double r = exp_capped(L);
        const double rhs = std::min(r, profile_.abs_log_wedge_from_logr(L)) + 0.5 * d_ * L;
        return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
    }

    /// Proof-level closed-form asymptotics of h and g for the catalog profiles.
    AsymptoticForm asymptotic_closed_form() const {
        AsymptoticForm form;
        const double ad = alpha_ / d_;
        const double dd = d_, al = alpha_, ka = kappa_;
        switch (profile_.family) {
            case TailProfile::Family::polynomial: {
                const double q = profile_.q;
                const double Cf = (q + 0.5 * dd) * std::pow(dd / ka, ad);
                form.description =
                    "h(t) = exp((t/Cf)^{d/(d+alpha)}), Cf = (q + d/2)(d/kappa)^{alpha/d}";
                form.log_h = [=](double t) { return std::pow(t / Cf, dd / (dd + al)); };
                form.g = [=](double t) { return t / std::pow(std::pow(t / Cf, dd / (dd + al)), ad); };
                form.plain_g = form.g;
                form.gh_ratio_constant = std::pow(ka / dd, ad) * 2.0 / (2.0 * q + dd);
                break;
            }
            case TailProfile::Family::log_decay: {
                const double th = profile_.theta, be = profile_.beta;
                const double ex = dd / (dd * be + al);
                form.description =
                    "log h(t) = (t (kappa/d)^{alpha/d} / theta)^{d/(d beta + alpha)}";
                auto log_h = [=](double t) {
                    return std::pow(t * std::pow(ka / dd, ad) / th, ex);
                };
                form.log_h = log_h;
                form.g = [=](double t) { return t / std::pow(log_h(t), ad); };
                form.plain_g = form.g;
                break;
            }
            case TailProfile::Family::stretched_exp:
            case TailProfile::Family::hard_exp: {
                const double be = profile_.family == TailProfile::Family::hard_exp
                                      ? 1.0 : profile_.beta;
                const double b = std::min(be, 1.0);
                // effective coefficient of the wedge r ^ theta (r-1)^beta
                const double theta_eff =
                    be < 1.0 ? profile_.theta : (be > 1.0 ? 1.0 : std::min(profile_.theta, 1.0));
                form.description =
                    "log h solves b L + (alpha/d) log L = log t + (alpha/d) log(kappa/d) "
                    "- log theta_eff; leading order log h ~ (1/b) log(t/(log t)^{alpha/d})";
                auto log_h = [=](double t) {
                    const double A = std::log(t) + ad * std::log(ka / dd) - std::log(theta_eff);
                    // Newton on b L + ad log L = A
                    double L = std::max(A, 2.0) / b;
                    for (int i = 0; i < 100; ++i) {
                        const double fv = b * L + ad * std::log(L) - A;
                        const double df = b + ad / L;
                        const double step = fv / df;
                        L -= step;
                        if (L <= 0.0) L = 1e-6;
                        if (std::abs(step) < 1e-14 * std::max(1.0, L)) break;
                    }
                    return L;
                };
                form.log_h = log_h;
                form.g = [=](double t) { return t / std::pow(log_h(t), ad); };
                form.plain_g = [=](double t) {
                    return std::pow(b, ad) * t / std::pow(std::log(t), ad);
                };
                break;
            }
        }
        return form;
    }

    /// Max over a log-grid t in [1e4, 1e9] of |numeric/closed-form - 1| for
    /// h and g, plus the values at the top of the grid.
    AsymptoticValidation validate_asymptotics(int grid_points = 11,
                                              double t_lo = 1e4, double t_hi = 1e9) const {
        const AsymptoticForm form = asymptotic_closed_form();
        AsymptoticValidation v;
        for (int i = 0; i < grid_points; ++i) {
            const double t = t_lo * std::pow(t_hi / t_lo,
                                             static_cast<double>(i) / (grid_points - 1));
            const double L = log_h_value(t);
            const double Lc = form.log_h(t);
            const double h_err = std::abs(std::expm1(L - Lc));
            const double g_num = t / std::pow(L, alpha_ / d_);
            const double g_err = std::abs(g_num / form.g(t) - 1.0);
            v.max_h_ratio_err = std::max(v.max_h_ratio_err, h_err);
            v.max_g_ratio_err = std::max(v.max_g_ratio_err, g_err);
            if (i == grid_points - 1) {
                v.final_h_ratio_err = h_err;
                v.final_g_ratio_err = g_err;
                v.final_plain_g_ratio_err = std::abs(g_num / form.plain_g(t) - 1.0);
            }
            if (form.gh_ratio_constant) {
                const double c = L / g_num;
                v.max_gh_const_err =
                    std::max(v.max_gh_const_err, std::abs(c / *form.gh_ratio_constant - 1.0));
            }
        }
        return v;
    }

  private:
    double alpha_, kappa_;
    TailProfile profile_;
    int d_;
    double tol_;
};

// ---------------------------------------------------------------------------
// Table-1 constants generator
// ---------------------------------------------------------------------------

enum class RateTag { poly_alpha, poly_two, log_decay, log_corrected };

inline const char* rate_tag_name(RateTag tag) {
    switch (tag) {
        case RateTag::poly_alpha: return "t^{d/(d+alpha)}";
        case RateTag::poly_two: return "t^{d/(d+2)}";
        case RateTag::log_decay: return "t^{d beta/(d beta+2)}";
        case RateTag::log_corrected: return "t/(log t)^{2/d}";
    }
    return "?";
}

struct Table1Row {
    std::string family;
    int d = 1;
    std::map<std::string, double> params;
    RateTag rate = RateTag::log_corrected;
    double C1 = 0.0;  // lower-bound constant (-C1 <= liminf)
    double C2 = 0.0;  // upper-bound constant (limsup <= -C2)
    bool has_limit = false;
    double rho = 1.0;
    double lambda1 = 0.0;  // principal eigenvalue supplied by the caller
    std::optional<double> optimized_C1;  // remark-level optimized lower constant
};

/// Fills the Table-1 constants for one process family from (rho, lambda1).
/// lambda1 is the principal Dirichlet eigenvalue on B(0,1) for the matching
/// limit process (stable for the first row, diffusion for the rest).
inline Table1Row table1_constants(const std::string& family, int d,
                                  const std::map<std::string, double>& params,
                                  double rho, double lambda1) {
    if (!(rho > 0.0) || !(lambda1 > 0.0))
        throw std::invalid_argument("table1_constants: need rho > 0, lambda1 > 0");
    const double wd = unit_ball_volume(d);
    Table1Row row;
    row.family = family;
    row.d = d;
    row.params = params;
    row.rho = rho;
    row.lambda1 = lambda1;

    auto need = [&](const char* key) {
        auto it = params.find(key);
        if (it == params.end())
            throw std::invalid_argument("table1_constants: missing parameter " + std::string(key));
        return it->second;
    };

    if (family == "polynomial") {
        const double a = need("alpha");
        if (!(a > 0.0 && a < 2.0))
            throw std::invalid_argument("table1_constants: polynomial needs alpha in (0,2)");
        const double tail = std::pow(2.0 / (d + 2.0 * a), d / (d + a)) *
                            std::pow(rho * wd / d, a / (d + a)) *
                            std::pow(lambda1, d / (d + a));
        row.rate = RateTag::poly_alpha;
        row.C2 = a * tail;
        row.C1 = 0.5 * (4.0 * a + 9.0 * d) * tail;
        row.optimized_C1 = std::pow(a + 4.0 * d, a / (d + a)) *
                           (std::pow(d / a, a / (d + a)) + std::pow(a / d, d / (d + a))) *
                           std::pow(rho * wd / d, a / (d + a)) * std::pow(lambda1, d / (d + a));
        row.has_limit = false;
    } else if (family == "layered") {
        const double de = need("delta");
        if (!(de > 2.0)) throw std::invalid_argument("table1_constants: layered needs delta > 2");
        const double tail = std::pow(2.0 / (d + 2.0 * de), d / (d + 2.0)) *
                            std::pow(rho * wd / d, 2.0 / (d + 2.0)) *
                            std::pow(lambda1, d / (d + 2.0));
        row.rate = RateTag::poly_two;
        row.C2 = de * tail;
        row.C1 = 0.5 * (4.0 * de + 9.0 * d) * tail;
        row.optimized_C1 = std::pow(de + 4.0 * d, 2.0 / (d + 2.0)) *
                           (std::pow(0.5 * d, 2.0 / (d + 2.0)) + std::pow(2.0 / d, d / (d + 2.0))) *
                           std::pow(rho * wd / d, 2.0 / (d + 2.0)) *
                           std::pow(lambda1, d / (d + 2.0));
        row.has_limit = false;
    } else if (family == "log_decay") {
        const double th = need("theta"), be = need("beta");
        if (!(be > 1.0) || !(th > 0.0))
            throw std::invalid_argument("table1_constants: log_decay needs theta > 0, beta > 1");
        row.rate = RateTag::log_decay;
        row.C2 = std::pow(th, 2.0 / (2.0 + d * be)) *
                 std::pow(wd * rho / d, 2.0 * be / (2.0 + d * be)) *
                 std::pow(lambda1, d * be / (2.0 + d * be));
        row.C1 = 2.0 * row.C2;
        row.has_limit = false;
    } else if (family == "stretched_exp" || family == "exp" || family == "truncated") {
        double bfac = 1.0;
        if (family == "stretched_exp") {
            const double be = need("beta");
            if (!(be > 0.0 && be < 1.0))
                throw std::invalid_argument("table1_constants: stretched_exp needs beta in (0,1)");
            bfac = be;
        } else if (family == "exp") {
            const double be = need("beta");
            if (!(be >= 1.0))
                throw std::invalid_argument("table1_constants: exp needs beta >= 1");
        }
        row.rate = RateTag::log_corrected;
        row.C1 = row.C2 = std::pow(bfac * rho * wd / d, 2.0 / d) * lambda1;
        row.has_limit = true;
    } else if (family == "brownian") {
        row.rate = RateTag::log_corrected;
        row.C1 = row.C2 = std::pow(rho * wd / d, 2.0 / d) * lambda1;
        row.has_limit = true;
    } else {
        throw std::invalid_argument("table1_constants: unsupported family " + family);
    }
    return row;
}

/// Evaluates the row's rate eta(t).  Requires t > e so every tagged form is
/// positive and increasing.
inline double eta_closed_form(const Table1Row& row, double t) {
    if (!(t > std::exp(1.0)))
        throw std::domain_error("eta_closed_form: need t > e");
    const double d = row.d;
    switch (row.rate) {
        case RateTag::poly_alpha: {
            const double a = row.params.at("alpha");
            return std::pow(t, d / (d + a));
        }
        case RateTag::poly_two: return std::pow(t, d / (d + 2.0));
        case RateTag::log_decay: {
            const double be = row.params.at("beta");
            return std::pow(t, d * be / (d * be + 2.0));
        }
        case RateTag::log_corrected: return t / std::pow(std::log(t), 2.0 / d);
    }
    throw std::logic_error("eta_closed_form: unknown tag");
}

// ---------------------------------------------------------------------------
// Theorem-level constants (lambda_{(alpha)} form) and the annealed constant
// ---------------------------------------------------------------------------

/// Upper constant of the polynomial-tail theorem in its lambda_{(alpha)} form.
inline double theorem_polynomial_upper(int d, double alpha, double rho, double lambda_alpha) {
    return alpha * std::pow(2.0 / (d + 2.0 * alpha), d / (d + alpha)) *
           std::pow(rho / d, alpha / (d + alpha)) * std::pow(lambda_alpha, d / (d + alpha));
}

inline double theorem_layered_upper(int d, double delta, double rho, double lambda_2) {
    return delta * std::pow(2.0 / (d + 2.0 * delta), d / (d + 2.0)) *
           std::pow(rho / d, 2.0 / (d + 2.0)) * std::pow(lambda_2, d / (d + 2.0));
}

inline double theorem_log_decay_upper(int d, double theta, double beta, double rho,
                                      double lambda_2) {
    return std::pow(theta, 2.0 / (2.0 + d * beta)) *
           std::pow(rho / d, 2.0 * beta / (2.0 + d * beta)) *
           std::pow(lambda_2, d * beta / (2.0 + d * beta));
}

inline double theorem_exp_limit(int d, double beta, double rho, double lambda_2) {
    return std::pow(rho * std::min(beta, 1.0) / d, 2.0 / d) * lambda_2;
}

/// Annealed (environment-averaged) constant:
/// (rho w_d)^{alpha/(d+alpha)} ((d+alpha)/alpha) (2 lambda_{(alpha)}/d)^{d/(d+alpha)}.
inline double annealed_constant(int d, double alpha, double rho, double lambda_alpha) {
    const double wd = unit_ball_volume(d);
    return std::pow(rho * wd, alpha / (d + alpha)) * ((d + alpha) / alpha) *
           std::pow(2.0 * lambda_alpha / d, d / (d + alpha));
}

/// Quenched limit constant of the relativistic process:
/// (alpha/2) m^{1-2/alpha} (rho w_d / d)^{2/d} lambda1_bm.
inline double relativistic_limit_constant(int d, double alpha, double m, double rho,
                                          double lambda1_bm) {
    const double wd = unit_ball_volume(d);
    return 0.5 * alpha * std::pow(m, 1.0 - 2.0 / alpha) * std::pow(rho * wd / d, 2.0 / d) *
           lambda1_bm;
}

}  // namespace levylab
