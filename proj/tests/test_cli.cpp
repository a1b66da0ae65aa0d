#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "levylab/config.hpp"
#include "levylab/experiments.hpp"
#include "levylab/verify.hpp"

using namespace levylab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("levylab_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("config validation", "[cli]") {
    SECTION("empty config names the missing experiment key") {
        try {
            ExperimentConfig::parse("{}");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("experiment") != std::string::npos);
        }
    }
    SECTION("unknown experiment is rejected by name") {
        CHECK_THROWS_AS(ExperimentConfig::parse(R"({"experiment":"nope","seed":1})"),
                        ConfigError);
    }
    SECTION("seeds are mandatory") {
        try {
            ExperimentConfig::parse(R"({"experiment":"table1"})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("seed") != std::string::npos);
        }
    }
    SECTION("invalid JSON") {
        CHECK_THROWS_AS(ExperimentConfig::parse("{"), ConfigError);
    }
    SECTION("symbol families parse and invalid ones are named") {
        CHECK(symbol_from_config(json{{"family", "relativistic"}, {"d", 1}, {"alpha", 1.0},
                                      {"m", 1.0}}).jump_family() == JumpFamily::relativistic);
        CHECK(symbol_from_config(json{{"family", "layered"}, {"d", 1}, {"eta", 1.0},
                                      {"delta", 3.0}}).jump_family() ==
              JumpFamily::density_profile);
        CHECK_THROWS_AS(symbol_from_config(json{{"family", "unknown"}}), ConfigError);
        CHECK_THROWS_AS(symbol_from_config(json{{"family", "relativistic"}, {"alpha", 1.0}}),
                        ConfigError);  // missing m
    }
}

TEST_CASE("table1 experiment emits the seven-row table", "[cli]") {
    const auto dir = temp_dir("table1");
    auto cfg = ExperimentConfig::parse(R"({
        "experiment": "table1",
        "seed": 7,
        "table1": {"d": 1, "rho": 1.0}
    })");
    const auto res = run_experiment(cfg, dir.string());
    CHECK(res.exit_code == 0);
    REQUIRE(fs::exists(dir / "table1.csv"));
    REQUIRE(fs::exists(dir / "manifest.json"));
    REQUIRE(fs::exists(dir / "summary.txt"));
    const auto csv = read_text_file((dir / "table1.csv").string());
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);  // header + 7 rows
    CHECK(csv.find("brownian") != std::string::npos);
    CHECK(csv.find("log_decay") != std::string::npos);
    const auto manifest = json::parse(read_text_file((dir / "manifest.json").string()));
    CHECK(manifest.at("config_sha256") == sha256_hex(cfg.raw.dump()));
    CHECK(manifest.at("config").at("table1").at("rho") == 1.0);
    fs::remove_all(dir);
}

TEST_CASE("eigen experiment writes estimates with metadata", "[cli]") {
    const auto dir = temp_dir("eigen");
    auto cfg = ExperimentConfig::parse(R"({
        "experiment": "eigen",
        "seed": 11,
        "symbol": {"family": "brownian", "d": 1, "a": 1.0},
        "eigen": {"R": 1.0, "n": 400, "paths": 20000, "dt": 0.001, "t_max": 3.0}
    })");
    const auto res = run_experiment(cfg, dir.string());
    CHECK(res.exit_code == 0);
    const auto out = json::parse(read_text_file((dir / "eigen.json").string()));
    const double mc = out.at("exit_time_mc").at("value").get<double>();
    CHECK(std::abs(mc - kPi * kPi / 4.0) / (kPi * kPi / 4.0) <= 0.10);
    CHECK(out.at("grid_1d").contains("error_bar"));
    CHECK(out.at("closed_form").at("value").get<double>() ==
          Catch::Approx(kPi * kPi / 4.0));
    fs::remove_all(dir);
}

TEST_CASE("cf-check reruns are byte-identical", "[cli]") {
    const auto dir1 = temp_dir("cf1");
    const auto dir2 = temp_dir("cf2");
    const std::string text = R"({
        "experiment": "cf-check",
        "seed": 123,
        "symbol": {"family": "isotropic_stable", "d": 1, "delta": 1.5},
        "numerics": {"t": 0.5, "n_samples": 20000, "xi_grid": [0.5, 1.0, 2.0]}
    })";
    auto cfg = ExperimentConfig::parse(text);
    const auto r1 = run_experiment(cfg, dir1.string());
    const auto r2 = run_experiment(cfg, dir2.string());
    CHECK(r1.exit_code == 0);
    CHECK(read_text_file((dir1 / "cf-check.csv").string()) ==
          read_text_file((dir2 / "cf-check.csv").string()));
    CHECK(read_text_file((dir1 / "summary.txt").string()) ==
          read_text_file((dir2 / "summary.txt").string()));
    // manifests differ only in the timestamp; the content hash is identical
    const auto m1 = json::parse(read_text_file((dir1 / "manifest.json").string()));
    const auto m2 = json::parse(read_text_file((dir2 / "manifest.json").string()));
    CHECK(m1.at("config_sha256") == m2.at("config_sha256"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("empty-ball experiment gates against the packing probability", "[cli]") {
    const auto dir = temp_dir("eball");
    auto cfg = ExperimentConfig::parse(R"({
        "experiment": "empty-ball",
        "seed": 31,
        "environment": {"d": 1, "rho": 1.0},
        "numerics": {"r": 1.0, "a": 0.25, "r_in": 2.0, "n_seeds": 400,
                      "box_sizes": [20.0, 40.0]}
    })");
    const auto res = run_experiment(cfg, dir.string());
    CHECK(res.exit_code == 0);
    const auto csv = read_text_file((dir / "empty-ball.csv").string());
    CHECK(csv.find("true") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("seed override is reflected in the echoed config", "[cli]") {
    const auto dir = temp_dir("seedovr");
    auto cfg = ExperimentConfig::parse(R"({
        "experiment": "env-stats",
        "seed": 1,
        "environment": {"d": 1, "rho": 1.0},
        "numerics": {"n_seeds": 200, "radii": [1.0]}
    })");
    const auto res = run_experiment(cfg, dir.string(), std::nullopt, std::uint64_t{777});
    CHECK(res.exit_code == 0);
    const auto manifest = json::parse(read_text_file((dir / "manifest.json").string()));
    CHECK(manifest.at("config").at("seed").get<std::uint64_t>() == 777);
    fs::remove_all(dir);
}

TEST_CASE("verify harness", "[cli]") {
    SECTION("fast subset passes and reports measured values") {
        VerifyOptions opt;
        opt.filter = "A1";
        const auto results = run_verify(opt);
        REQUIRE(results.size() == 1);
        CHECK(results[0].pass);
        CHECK(results[0].measured <= results[0].threshold);
        const auto report = format_verify_report(results);
        CHECK(report.find("[PASS] A1.table1") != std::string::npos);
    }
    SECTION("deliberately corrupted lambda1 fails exactly that check") {
        VerifyOptions opt;
        opt.filter = "A4.closed";
        opt.corrupt_lambda1 = true;
        const auto bad = run_verify(opt);
        REQUIRE(bad.size() == 1);
        CHECK_FALSE(bad[0].pass);
        opt.corrupt_lambda1 = false;
        const auto good = run_verify(opt);
        REQUIRE(good.size() == 1);
        CHECK(good[0].pass);
    }
    SECTION("reports are byte-identical across reruns") {
        VerifyOptions opt;
        opt.filter = "A2";
        const auto a = format_verify_report(run_verify(opt));
        const auto b = format_verify_report(run_verify(opt));
        // strip nothing: the report carries no timestamps
        CHECK(a == b);
    }
}
