#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "levylab/environment.hpp"
#include "levylab/io.hpp"
#include "levylab/symbols.hpp"

namespace levylab {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Declarative experiment configuration (JSON).  Schema: docs in
/// configs/README.md; every numeric consumed by a module is echoed into the
/// manifest.  Seeds are explicit by contract: there are no wall-clock
/// defaults anywhere.
struct ExperimentConfig {
    json raw;
    std::string experiment;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    int threads = 1;

    static const std::set<std::string>& known_experiments() {
        static const std::set<std::string> k{"table1",        "rates-asymptotics",
                                             "eigen",         "cf-check",
                                             "env-stats",     "quenched-ratio",
                                             "empty-ball"};
        return k;
    }

    static ExperimentConfig parse(const std::string& text) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config: invalid JSON: ") + e.what());
        }
        ExperimentConfig cfg;
        cfg.raw = j;
        if (!j.contains("experiment"))
            throw ConfigError("config: missing required key 'experiment'");
        cfg.experiment = j.at("experiment").get<std::string>();
        if (!known_experiments().count(cfg.experiment))
            throw ConfigError("config: unknown experiment '" + cfg.experiment + "'");
        if (!j.contains("seed"))
            throw ConfigError("config: missing required key 'seed' (seeds are explicit; "
                              "there is no wall-clock default)");
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.output_dir = j.value("output_dir", std::string("out"));
        cfg.threads = j.value("threads", 1);
        return cfg;
    }

    static ExperimentConfig load(const std::string& path) {
        return parse(read_text_file(path));
    }

    const json& block(const std::string& key) const {
        if (!raw.contains(key))
            throw ConfigError("config: missing required block '" + key + "' for experiment '" +
                              experiment + "'");
        return raw.at(key);
    }

    json block_or(const std::string& key, json fallback) const {
        return raw.contains(key) ? raw.at(key) : fallback;
    }
};

/// Builds a LevySymbol from a declarative block:
///   {"family": "...", "d": 1, ...family parameters...}
/// Canonical family names: brownian, isotropic_stable, relativistic,
/// stable_mixture, geometric_stable, polynomial, layered, log_decay,
/// tempered, truncated.
inline LevySymbol symbol_from_config(const json& j) {
    if (!j.contains("family")) throw ConfigError("symbol: missing 'family'");
    const std::string fam = j.at("family").get<std::string>();
    const int d = j.value("d", 1);
    auto need = [&](const char* key) -> double {
        if (!j.contains(key))
            throw ConfigError("symbol '" + fam + "': missing parameter '" + key + "'");
        return j.at(key).get<double>();
    };
    const double gauss_a = j.value("gauss_a", 0.0);
    try {
        if (fam == "brownian") return LevySymbol::brownian(d, j.value("a", 1.0));
        if (fam == "isotropic_stable") return LevySymbol::isotropic_stable(d, need("delta"));
        if (fam == "relativistic") return LevySymbol::relativistic(d, need("alpha"), need("m"));
        if (fam == "geometric_stable")
            return LevySymbol::geometric_stable(d, need("delta"), gauss_a);
        if (fam == "stable_mixture") {
            std::vector<std::pair<double, double>> comps;
            for (const auto& c : j.at("components"))
                comps.emplace_back(c.at("a").get<double>(), c.at("alpha").get<double>());
            return LevySymbol::stable_mixture(d, j.value("a0", 0.0), std::move(comps));
        }
        if (fam == "polynomial")
            return LevySymbol::density(
                d, RadialLevyDensityProfile::polynomial(d, need("alpha"), j.value("scale", 1.0)),
                {}, gauss_a);
        if (fam == "layered")
            return LevySymbol::density(
                d,
                RadialLevyDensityProfile::layered(d, need("eta"), need("delta"),
                                                  j.value("scale", 1.0)),
                {}, gauss_a);
        if (fam == "log_decay")
            return LevySymbol::density(
                d,
                RadialLevyDensityProfile::log_decay(d, need("delta"), need("theta"),
                                                    need("beta"), j.value("scale", 1.0)),
                {}, gauss_a);
        if (fam == "tempered")
            return LevySymbol::density(
                d,
                RadialLevyDensityProfile::tempered(d, need("delta"), need("theta"), need("beta"),
                                                   j.value("gamma", 0.0), j.value("scale", 1.0)),
                {}, gauss_a);
        if (fam == "truncated")
            return LevySymbol::density(
                d, RadialLevyDensityProfile::truncated(d, need("delta"), j.value("scale", 1.0)),
                {}, gauss_a);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("symbol '" + fam + "': " + e.what());
    }
    throw ConfigError("symbol: unknown family '" + fam + "'");
}

/// Bump profile from {"shape": "indicator_ball"|"cone"|"table", "height", "range", ["samples"]}.
inline BumpProfile bump_from_config(const json& j) {
    const std::string shape = j.value("shape", std::string("indicator_ball"));
    const double height = j.value("height", 1.0);
    const double range = j.value("range", 1.0);
    if (shape == "indicator_ball") return BumpProfile::indicator_ball(height, range);
    if (shape == "cone") return BumpProfile::cone(height, range);
    if (shape == "table") {
        std::vector<double> samples = j.at("samples").get<std::vector<double>>();
        return BumpProfile::from_table(range, std::move(samples));
    }
    throw ConfigError("environment profile: unknown shape '" + shape + "'");
}

}  // namespace levylab
