#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace levylab {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Volume of the unit ball in R^d: pi^{d/2} / Gamma(d/2 + 1).
inline double unit_ball_volume(int d) {
    if (d < 1) throw std::invalid_argument("unit_ball_volume: d must be >= 1");
    return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface measure of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
/// For d = 1 this is the counting measure of {-1, +1}, i.e. 2.
inline double unit_sphere_surface(int d) {
    if (d < 1) throw std::invalid_argument("unit_sphere_surface: d must be >= 1");
    return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// exp with overflow saturating to +inf instead of raising FE_OVERFLOW noise.
inline double exp_capped(double x) {
    if (x > 709.0) return std::numeric_limits<double>::infinity();
    return std::exp(x);
}

inline double sqr(double x) { return x * x; }

/// 1 - E[cos(u * Theta_1)] for Theta uniform on S^{d-1}.
/// Closed forms for d = 1,2,3; Bessel form Gamma(d/2)(2/u)^{d/2-1} J_{d/2-1}(u)
/// otherwise.  Series branch keeps full precision for small u.
inline double one_minus_cos_average(int d, double u) {
    u = std::abs(u);
    if (u < 1e-4) {
        const double u2 = u * u;
        return u2 / (2.0 * d) * (1.0 - u2 / (4.0 * (d + 2.0)));
    }
    switch (d) {
        case 1: return 1.0 - std::cos(u);
        case 2: return 1.0 - boost::math::cyl_bessel_j(0.0, u);
        case 3: return 1.0 - std::sin(u) / u;
        default: {
            const double nu = 0.5 * d - 1.0;
            const double lam = std::tgamma(0.5 * d) * std::pow(2.0 / u, nu) *
                               boost::math::cyl_bessel_j(nu, u);
            return 1.0 - lam;
        }
    }
}

/// Kernel k_d(u) = int_{S^{d-1}} (1 - cos(u * theta_1)) sigma(dtheta), the
/// isotropic cosine average appearing in every radial Levy-Khintchine integral.
inline double cosine_kernel(int d, double u) {
    return unit_sphere_surface(d) * one_minus_cos_average(d, u);
}

/// E[cos(u * Theta_1)] itself, needed when the oscillatory part of a Levy
/// transform is summed separately over half-period panels.
inline double cos_average(int d, double u) {
    return 1.0 - one_minus_cos_average(d, u);
}

/// E[min(1, c * chi^2_d)] via regularized incomplete gammas.
/// Used when integrating min(1, |y|^2/r^2) against subordinated Gaussian laws.
inline double capped_chi2_mean(int d, double c) {
    if (c <= 0.0) return 0.0;
    const double x = 0.5 / c;  // chi2 threshold 1/c, halved for gamma_p
    if (x > 1e6) return c * d;  // deep in the linear regime
    return boost::math::gamma_q(0.5 * d, x) + c * d * boost::math::gamma_p(0.5 * d + 1.0, x);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("least_squares: need n >= 2 matched points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            ss += sqr(y[i] - fit.intercept - fit.slope * x[i]);
        fit.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

/// Monotone cubic interpolation (Fritsch-Carlson) on a fixed grid.
/// Keeps monotone data monotone; we use it for cached radial transforms.
class MonotoneInterp {
  public:
    MonotoneInterp() = default;
    MonotoneInterp(std::vector<double> xs, std::vector<double> ys)
        : x_(std::move(xs)), y_(std::move(ys)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneInterp: need >= 2 points");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("MonotoneInterp: x not increasing");
        std::vector<double> delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        m_.assign(n, 0.0);
        m_[0] = delta[0];
        m_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) m_[i] = 0.0;
            else m_[i] = 0.5 * (delta[i - 1] + delta[i]);
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (delta[i] == 0.0) { m_[i] = m_[i + 1] = 0.0; continue; }
            const double a = m_[i] / delta[i];
            const double b = m_[i + 1] / delta[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double tau = 3.0 / std::sqrt(s);
                m_[i] = tau * a * delta[i];
                m_[i + 1] = tau * b * delta[i];
            }
        }
    }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double h00 = (1 + 2 * t) * sqr(1 - t);
        const double h10 = t * sqr(1 - t);
        const double h01 = t * t * (3 - 2 * t);
        const double h11 = t * t * (t - 1);
        return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

  private:
    std::vector<double> x_, y_, m_;
};

}  // namespace levylab
