#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "levylab/environment.hpp"

using namespace levylab;

TEST_CASE("cloud sampling law and determinism", "[environment]") {
    SECTION("mean count over 1000 seeds, rho=1, d=2, R=10") {
        double total = 0.0;
        const int n_seeds = 1000;
        for (int k = 0; k < n_seeds; ++k)
            total += static_cast<double>(sample_cloud(2, 1.0, 10.0, 1000 + k).n_points());
        const double mean = total / n_seeds;
        CHECK(std::abs(mean - 400.0) <= 3.0 * std::sqrt(400.0) / std::sqrt(n_seeds));
    }
    SECTION("seed determinism is bit-for-bit") {
        auto a = sample_cloud(3, 0.5, 4.0, 99);
        auto b = sample_cloud(3, 0.5, 4.0, 99);
        CHECK(a.points == b.points);
        auto c = sample_cloud(3, 0.5, 4.0, 100);
        CHECK(a.points != c.points);
    }
    SECTION("points stay in the box") {
        auto cloud = sample_cloud(2, 2.0, 3.0, 5);
        for (double v : cloud.points) CHECK(std::abs(v) <= 3.0);
    }
    SECTION("size cap") {
        CHECK_THROWS_AS(sample_cloud(3, 1e6, 50.0, 1), std::invalid_argument);
    }
    SECTION("empty-ball frequency matches e^{-2} (void probability, 1e4 seeds)") {
        const int n_seeds = 10000;
        int voids = 0;
        for (int k = 0; k < n_seeds; ++k) {
            auto cloud = sample_cloud(1, 1.0, 1.5, 40000 + k);
            bool empty = true;
            for (std::size_t i = 0; i < cloud.n_points() && empty; ++i)
                if (std::abs(cloud.point(i)[0]) < 1.0) empty = false;
            if (empty) ++voids;
        }
        const double p = std::exp(-2.0);
        const double sigma = std::sqrt(p * (1 - p) / n_seeds);
        CHECK(std::abs(static_cast<double>(voids) / n_seeds - p) <= 3.0 * sigma);
    }
}

TEST_CASE("potential evaluation", "[environment]") {
    SECTION("empty cloud gives zero") {
        auto empty = cloud_from_points(2, 1.0, 5.0, {});
        auto w = BumpProfile::indicator_ball(2.0, 1.0);
        std::vector<double> x{0.3, -0.4};
        CHECK(eval_potential(empty, w, x) == 0.0);
    }
    SECTION("single point, indicator(v0=2, a=1), x at distance 0.5") {
        auto one = cloud_from_points(2, 1.0, 5.0, {0.0, 0.0});
        auto w = BumpProfile::indicator_ball(2.0, 1.0);
        std::vector<double> x{0.5, 0.0};
        CHECK(eval_potential(one, w, x) == 2.0);
        std::vector<double> far{2.5, 0.0};
        CHECK(eval_potential(one, w, far) == 0.0);
    }
    SECTION("superposition of overlapping points vs brute force") {
        auto two = cloud_from_points(1, 1.0, 5.0, {0.1, -0.2});
        auto w = BumpProfile::indicator_ball(1.5, 1.0);
        std::vector<double> x{0.0};
        CHECK(eval_potential(two, w, x) == 3.0);
        CHECK(eval_potential(two, w, x) == eval_potential_brute(two, w, x));
    }
    SECTION("grid index equals brute force exactly on random clouds") {
        for (int d : {1, 2, 3}) {
            auto cloud = sample_cloud(d, 3.0, 4.0, 17 + d);
            auto w = BumpProfile::cone(2.0, 0.7);
            PotentialEvaluator V(cloud, w);
            Rng rng(18);
            std::vector<double> x(static_cast<std::size_t>(d));
            for (int k = 0; k < 40; ++k) {
                for (double& c : x) c = rng.uniform(-3.0, 3.0);
                const double a = V(x);
                const double b = eval_potential_brute(cloud, w, x);
                CHECK(a == b);  // bitwise
            }
        }
    }
    SECTION("edge coverage is an error, not a truncation") {
        auto cloud = sample_cloud(1, 1.0, 2.0, 3);
        auto w = BumpProfile::indicator_ball(1.0, 0.5);
        std::vector<double> x{1.8};
        CHECK_THROWS_AS(eval_potential(cloud, w, x), std::domain_error);
    }
    SECTION("table profile interpolates and vanishes beyond the range") {
        auto w = BumpProfile::from_table(2.0, {3.0, 1.0, 0.0});  // samples at r = 0, 1, 2
        CHECK(w.radial(0.0) == 3.0);
        CHECK(w.radial(0.5) == Catch::Approx(2.0));
        CHECK(w.radial(1.0) == Catch::Approx(1.0));
        CHECK(w.radial(2.5) == 0.0);
        CHECK(w.sup_norm() == 3.0);
    }
}

TEST_CASE("find_empty_ball", "[environment]") {
    const double r = 1.0, a = 0.25, r_in = 2.0;
    SECTION("empty cloud: returns a center outside the exclusion zone") {
        auto empty = cloud_from_points(1, 1.0, 30.0, {});
        auto c = find_empty_ball(empty, r, a, r_in);
        REQUIRE(c.has_value());
        CHECK(std::abs((*c)[0]) >= r_in + r + a);
    }
    SECTION("adversarial covering cloud: none") {
        std::vector<double> pts;
        for (double x = -29.5; x <= 29.5; x += 1.0) pts.push_back(x);
        auto covered = cloud_from_points(1, 1.0, 30.0, std::move(pts));
        CHECK_FALSE(find_empty_ball(covered, r, a, r_in).has_value());
    }
    SECTION("found balls are re-verified to be point-free") {
        int found = 0;
        for (int k = 0; k < 100; ++k) {
            auto cloud = sample_cloud(1, 0.5, 30.0, 700 + k);
            auto c = find_empty_ball(cloud, r, a, r_in);
            if (!c) continue;
            ++found;
            for (std::size_t i = 0; i < cloud.n_points(); ++i)
                CHECK(std::abs((*c)[0] - cloud.point(i)[0]) >= r + a);
        }
        CHECK(found > 0);
    }
    SECTION("success frequency matches the exact disjoint-packing probability") {
        // balls in the packing are disjoint, so the find probability is exactly
        // 1 - (1 - p_void)^{candidates}; check 3 binomial sigma and the
        // monotone trend in the box size
        const int n_seeds = 1500;
        double prev_exact = -1.0;
        for (double box : {20.0, 40.0, 80.0}) {
            const auto probe = cloud_from_points(1, 1.0, box, {});
            const auto cand = empty_ball_candidate_count(probe, r, a, r_in);
            const double p_void = std::exp(-1.0 * unit_ball_volume(1) * (r + a));
            const double p_exact = 1.0 - std::pow(1.0 - p_void, static_cast<double>(cand));
            int hits = 0;
            for (int k = 0; k < n_seeds; ++k)
                if (find_empty_ball(sample_cloud(1, 1.0, box, 90000 + k * 3 +
                                                 static_cast<std::uint64_t>(box)), r, a, r_in))
                    ++hits;
            const double p_mc = static_cast<double>(hits) / n_seeds;
            const double sigma = std::sqrt(p_exact * (1.0 - p_exact) / n_seeds);
            INFO("box " << box << ": exact " << p_exact << " mc " << p_mc);
            CHECK(std::abs(p_mc - p_exact) <= 3.0 * sigma);
            CHECK(p_exact > prev_exact);
            prev_exact = p_exact;
        }
    }
}

TEST_CASE("M^eps box size", "[environment]") {
    SECTION("independent arithmetic oracle") {
        const double eps = 0.5, r = 5.0, rho = 1.0;
        const int d = 1;
        const double wd = 2.0;
        const double oracle = std::pow(d / (wd * rho * 1.5), 2.0 / d + 2.0) *
                              std::pow(r, -4.0) * std::exp(wd * rho * 1.5 * r / d);
        CHECK(m_epsilon_box_size(eps, r, d, rho) == Catch::Approx(oracle).epsilon(1e-14));
    }
    SECTION("monotone in r beyond the crossover") {
        double prev = 0.0;
        for (double r = 4.0; r <= 10.0; r += 0.5) {
            const double m = m_epsilon_box_size(0.0, r, 1, 1.0);
            CHECK(m > prev);
            prev = m;
        }
    }
    SECTION("eps-monotonicity for large r (finite difference)") {
        const double r = 6.0;
        CHECK(m_epsilon_box_size(0.11, r, 1, 1.0) > m_epsilon_box_size(0.10, r, 1, 1.0));
    }
    SECTION("overflow guard names the threshold") {
        CHECK_THROWS_AS(m_epsilon_box_size(0.0, 400.0, 1, 1.0), std::range_error);
    }
}

TEST_CASE("sup potential bound", "[environment]") {
    SECTION("empty cloud passes for R > 1") {
        auto empty = cloud_from_points(1, 1.0, 20.0, {});
        auto w = BumpProfile::indicator_ball(1.0, 0.5);
        auto rep = check_sup_potential_bound(empty, w, 10.0);
        CHECK(rep.sup_estimate == 0.0);
        CHECK(rep.pass);
    }
    SECTION("pass frequency at R = e^10, rho=1, d=1, v0=1, a=0.5") {
        const double R = std::exp(10.0);
        int pass = 0;
        const int n_seeds = 40;
        for (int k = 0; k < n_seeds; ++k) {
            auto cloud = sample_cloud(1, 1.0, R + 1.0, 300 + k);
            auto w = BumpProfile::indicator_ball(1.0, 0.5);
            if (check_sup_potential_bound(cloud, w, R).pass) ++pass;
        }
        CHECK(static_cast<double>(pass) / n_seeds >= 0.99);
    }
    SECTION("forced violation raises the fail flag") {
        auto cloud = sample_cloud(1, 1.0, 20.0, 4);
        auto strong = BumpProfile::indicator_ball(1e5, 0.5);
        CHECK_FALSE(check_sup_potential_bound(cloud, strong, 10.0).pass);
    }
}

TEST_CASE("cloud CSV replay round trip", "[environment]") {
    auto cloud = sample_cloud(2, 1.5, 3.0, 12345);
    const auto path = std::filesystem::temp_directory_path() / "levylab_cloud_test.csv";
    save_cloud_csv(cloud, path.string());
    auto loaded = load_cloud_csv(path.string());
    CHECK(loaded.d == cloud.d);
    CHECK(loaded.seed == cloud.seed);
    CHECK(loaded.n_points() == cloud.n_points());
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
        CHECK(loaded.points[i] == cloud.points[i]);
    std::filesystem::remove(path);
}
