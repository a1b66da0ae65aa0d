#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "levylab/math.hpp"

namespace levylab {

struct QuadratureError : std::runtime_error {
    explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

struct QuadratureConfig {
    double rel_tol = 1e-10;
    int max_depth = 15;
};

/// Adaptive integration of f over [a, b] (b may be +inf) by tanh-sinh
/// refinement, which keeps a usable error estimate at endpoint singularities
/// (the catalog profiles are singular at 0 and kinked at 1).  Integrand values
/// that overflow at a singular endpoint node are truncated to zero; a genuinely
/// non-integrable singularity then shows up as a failed error estimate.
/// Throws QuadratureError naming `label` on non-convergence.
template <typename F>
double integrate(F&& f, double a, double b, const QuadratureConfig& cfg = {},
                 const std::string& label = "integral") {
    thread_local boost::math::quadrature::tanh_sinh<double> ts(15);
    auto guarded = [&f](double x) {
        const double v = f(x);
        return std::isfinite(v) ? v : 0.0;
    };
    double err = 0.0, l1 = 0.0;
    const double value = ts.integrate(guarded, a, b, std::max(cfg.rel_tol, 1e-12), &err, &l1);
    // err is tanh-sinh's relative error estimate; l1 the integral of |f|
    const bool ok = std::isfinite(value) &&
                    (err <= std::max(1e-8, 100.0 * cfg.rel_tol) ||
                     err * l1 <= 1e-13);
    if (!ok) {
        throw QuadratureError("quadrature failed to converge for " + label +
                              " (value=" + std::to_string(value) +
                              ", rel_err=" + std::to_string(err) + ")");
    }
    return value;
}

/// Integrate over consecutive panels [p0,p1], [p1,p2], ...; the last breakpoint
/// may be +inf.  Panels are split at the catalog profiles' branch points so the
/// adaptive rule never straddles a kink.
template <typename F>
double integrate_panels(F&& f, const std::vector<double>& breaks,
                        const QuadratureConfig& cfg = {},
                        const std::string& label = "integral") {
    if (breaks.size() < 2) throw std::invalid_argument("integrate_panels: need >= 2 breakpoints");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] <= breaks[i]) continue;
        total += integrate(f, breaks[i], breaks[i + 1], cfg, label);
    }
    return total;
}

/// Tail integral of a decaying oscillatory integrand: sums half-period panels
/// [a + k p, a + (k+1) p] until several consecutive panels are negligible.
/// The usual map-to-finite-interval rules cannot estimate these tails.
template <typename F>
double integrate_oscillatory_tail(F&& f, double a, double period,
                                  const QuadratureConfig& cfg = {},
                                  const std::string& label = "oscillatory tail") {
    if (!(period > 0.0)) throw std::invalid_argument("integrate_oscillatory_tail: bad period");
    double total = 0.0;
    int quiet = 0;
    const std::size_t max_panels = 4'000'000;
    for (std::size_t k = 0; k < max_panels; ++k) {
        const double lo = a + static_cast<double>(k) * period;
        const double hi = lo + period;
        double err = 0.0;
        const double panel = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            f, lo, hi, 5, cfg.rel_tol, &err);
        total += panel;
        if (std::abs(panel) < std::max(1e-16, cfg.rel_tol * std::abs(total))) {
            if (++quiet >= 4) return total;
        } else {
            quiet = 0;
        }
    }
    throw QuadratureError("oscillatory tail did not decay for " + label);
}

}  // namespace levylab
