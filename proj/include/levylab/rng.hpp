#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "levylab/math.hpp"

namespace levylab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed splitting rule used everywhere a batch is fanned out from a master
/// seed: seed_i = master XOR splitmix64(i).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return master ^ splitmix64(index);
}

/// Deterministic RNG: mt19937_64 engine (fully specified by the standard) with
/// boost.random distributions (portable, versioned algorithms).  A given seed
/// reproduces the same stream bit-for-bit.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return boost::random::uniform_01<double>()(eng_); }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal(double mean = 0.0, double sd = 1.0) {
        return boost::random::normal_distribution<double>(mean, sd)(eng_);
    }

    double exponential(double rate = 1.0) {
        return boost::random::exponential_distribution<double>(rate)(eng_);
    }

    std::int64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return boost::random::poisson_distribution<std::int64_t>(mean)(eng_);
    }

    double gamma(double shape, double scale = 1.0) {
        return boost::random::gamma_distribution<double>(shape, scale)(eng_);
    }

    void gaussian_vector(std::span<double> out, double sd) {
        for (double& v : out) v = normal(0.0, sd);
    }

    /// Uniform direction on S^{d-1}; d = 1 gives +-1.
    void unit_sphere(std::span<double> out) {
        const std::size_t d = out.size();
        if (d == 1) {
            out[0] = uniform() < 0.5 ? -1.0 : 1.0;
            return;
        }
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (double& v : out) { v = normal(); norm2 += v * v; }
        } while (norm2 < 1e-300);
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& v : out) v *= inv;
    }

    /// One-sided stable subordinator variate with E e^{-lam S} = e^{-lam^g},
    /// g in (0,1), by Kanter's representation:
    ///   S = (A(theta)/W)^{(1-g)/g},  theta ~ U(0,pi), W ~ Exp(1),
    ///   A(theta) = [sin(g theta)^g sin((1-g) theta)^{1-g} / sin(theta)]^{1/(1-g)}.
    double stable_subordinator(double g) {
        if (!(g > 0.0 && g < 1.0))
            throw std::invalid_argument("stable_subordinator: index must be in (0,1)");
        const double theta = kPi * std::max(uniform(), 1e-16);
        double w = exponential();
        if (w < 1e-300) w = 1e-300;
        const double a = kanter_a(g, theta);
        return std::pow(a / w, (1.0 - g) / g);
    }

    static double kanter_a(double g, double theta) {
        const double lognum = g * std::log(std::sin(g * theta)) +
                              (1.0 - g) * std::log(std::sin((1.0 - g) * theta)) -
                              std::log(std::sin(theta));
        return exp_capped(lognum / (1.0 - g));
    }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace levylab
