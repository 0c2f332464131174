#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "fmcal/ncs.hpp"

using namespace fmcal;

namespace {

NcsConfig sphere_config(std::int64_t budget = 2000) {
    NcsConfig cfg;
    cfg.num_processes = 10;
    cfg.samples_per_process = 1;
    cfg.budget_evals = budget;
    cfg.bounds = {{-5.0, 5.0}, {-5.0, 5.0}};
    return cfg;
}

// deterministic, seed-independent test objective
double sphere(std::span<const double> x, std::uint64_t) {
    const double a = x[0] - 1.0;
    const double b = x[1] + 2.0;
    return a * a + b * b;
}

}  // namespace

TEST_CASE("replace-probability schedule is affine and clamped") {
    NcsConfig cfg;
    CHECK(beta_schedule(0, 10, cfg) == 0.7);
    CHECK(beta_schedule(10, 10, cfg) == doctest::Approx(0.3));
    CHECK(beta_schedule(5, 10, cfg) == doctest::Approx(0.5));
    CHECK(beta_schedule(20, 10, cfg) == doctest::Approx(0.3));
    CHECK(beta_schedule(3, 0, cfg) == 0.3);
    cfg.beta_start = 0.5;
    cfg.beta_end = 0.5;
    CHECK(beta_schedule(7, 10, cfg) == 0.5);
}

TEST_CASE("distribution distance between diagonal gaussians") {
    const std::vector<double> z = {0.0}, one = {1.0}, two = {2.0}, four = {4.0};
    CHECK(bhattacharyya_diag(z, one, z, one) == 0.0);
    CHECK(bhattacharyya_diag(z, one, two, one) == 0.5);
    CHECK(bhattacharyya_diag(z, one, z, four) ==
          doctest::Approx(0.5 * std::log(1.25)).epsilon(1e-12));
    // symmetric, additive over dimensions
    CHECK(bhattacharyya_diag(two, one, z, one) == 0.5);
    const std::vector<double> m1 = {0.0, 0.0}, m2 = {2.0, 0.0};
    const std::vector<double> v = {1.0, 1.0};
    CHECK(bhattacharyya_diag(m1, v, m2, v) == 0.5);
    CHECK_THROWS_AS(bhattacharyya_diag(m1, v, z, one), std::invalid_argument);
    CHECK_THROWS_AS(bhattacharyya_diag(z, z, z, one), std::invalid_argument);
    CHECK_THROWS_AS(bhattacharyya_diag({}, {}, {}, {}), std::invalid_argument);
}

TEST_CASE("diversity is the distance to the nearest other process") {
    std::vector<SearchProcess> procs(3);
    procs[0].mean = {0.0};
    procs[1].mean = {1.0};
    procs[2].mean = {5.0};
    for (auto& p : procs) p.var_diag = {1.0};
    CHECK(diversity_closed_form(0, procs) == 0.125);        // vs mean 1
    CHECK(diversity_closed_form(1, procs) == 0.125);        // vs mean 0
    CHECK(diversity_closed_form(2, procs) == 2.0);          // vs mean 1
    procs.resize(1);
    CHECK_THROWS_AS(diversity_closed_form(0, procs), std::invalid_argument);
}

TEST_CASE("importance-weighted process fitness") {
    const std::vector<double> mean = {0.0}, var = {1.0};
    SUBCASE("one sample is its own score") {
        CHECK(expected_objective({{{3.7}, 42.0}}, mean, var) == 42.0);
    }
    SUBCASE("weights follow the density ratio") {
        // second sample sits where the density is exactly 1/3 of the peak
        const double x2 = std::sqrt(2.0 * std::log(3.0));
        const double got = expected_objective({{{0.0}, 0.2}, {{x2}, 0.4}}, mean, var);
        CHECK(got == doctest::Approx(0.25).epsilon(1e-9));
    }
    SUBCASE("equal positions average plainly") {
        CHECK(expected_objective({{{1.0}, 2.0}, {{1.0}, 6.0}}, mean, var) == 4.0);
    }
    SUBCASE("vanishing densities fall back to the arithmetic mean") {
        const double far = 1e200;
        CHECK(expected_objective({{{far}, 1.0}, {{-far}, 3.0}}, mean, var) == 2.0);
    }
    SUBCASE("bad inputs throw") {
        CHECK_THROWS_AS(expected_objective({}, mean, var), std::invalid_argument);
        CHECK_THROWS_AS(expected_objective({{{1.0, 2.0}, 0.0}, {{1.0, 2.0}, 0.0}}, mean, var),
                        std::invalid_argument);
        CHECK_THROWS_AS(expected_objective({{{1.0}, 0.0}, {{2.0}, 0.0}}, mean, mean),
                        std::invalid_argument);
    }
}

TEST_CASE("replacement rule, standard case mapping") {
    NcsConfig cfg;  // beta(1, 2) = 0.5
    const int g = 1, gm = 2;
    const std::pair<double, double> parent{1.0, 1.0};
    auto sel = [&](double of, double od, double phi, double eps, double u) {
        return select_process(parent, {of, od}, g, gm, phi, eps, u, cfg);
    };
    // strictly better on both axes always replaces
    CHECK(sel(0.5, 2.0, 0.0, 0.9, 0.99) == SelectDecision::ReplaceWithOffspring);
    // worse fitness, better diversity: coin with probability beta
    CHECK(sel(2.0, 2.0, 0.0, 0.9, 0.49) == SelectDecision::ReplaceWithOffspring);
    CHECK(sel(2.0, 2.0, 0.0, 0.9, 0.51) == SelectDecision::KeepParent);
    // better fitness, worse diversity: exploration gate
    CHECK(sel(0.5, 0.5, 0.3, 0.2, 0.99) == SelectDecision::ReplaceWithOffspring);
    CHECK(sel(0.5, 0.5, 0.1, 0.2, 0.0) == SelectDecision::KeepParent);
    CHECK(sel(0.5, 0.5, 0.2, 0.2, 0.0) == SelectDecision::KeepParent);  // gate needs strict >
    // worse on both axes never replaces
    CHECK(sel(2.0, 0.5, 0.9, 0.1, 0.0) == SelectDecision::KeepParent);
    // any tie keeps the parent
    CHECK(sel(1.0, 2.0, 0.9, 0.1, 0.0) == SelectDecision::KeepParent);
    CHECK(sel(0.5, 1.0, 0.9, 0.1, 0.0) == SelectDecision::KeepParent);
    CHECK(sel(1.0, 1.0, 0.9, 0.1, 0.0) == SelectDecision::KeepParent);
}

TEST_CASE("replacement rule, swapped case mapping") {
    NcsConfig cfg;
    cfg.case_mapping = NcsConfig::CaseMapping::Swapped;
    const int g = 1, gm = 2;  // beta = 0.5
    const std::pair<double, double> parent{1.0, 1.0};
    auto sel = [&](double of, double od, double phi, double eps, double u) {
        return select_process(parent, {of, od}, g, gm, phi, eps, u, cfg);
    };
    CHECK(sel(0.5, 2.0, 0.0, 0.9, 0.99) == SelectDecision::ReplaceWithOffspring);
    // worse fitness, better diversity: always kept out
    CHECK(sel(2.0, 2.0, 0.9, 0.1, 0.0) == SelectDecision::KeepParent);
    // better fitness, worse diversity: coin with probability 1 - beta
    CHECK(sel(0.5, 0.5, 0.0, 0.9, 0.49) == SelectDecision::ReplaceWithOffspring);
    CHECK(sel(0.5, 0.5, 0.0, 0.9, 0.51) == SelectDecision::KeepParent);
    // worse on both axes: exploration gate
    CHECK(sel(2.0, 0.5, 0.3, 0.2, 0.0) == SelectDecision::ReplaceWithOffspring);
    CHECK(sel(2.0, 0.5, 0.1, 0.2, 0.0) == SelectDecision::KeepParent);
}

TEST_CASE("exploration gate schedule") {
    CHECK(update_epsilon(0.2, 0.3, 0.2, 0.9) == doctest::Approx(0.18));
    CHECK(update_epsilon(0.18, 0.3, 0.2, 0.9) == doctest::Approx(0.162));
    CHECK(update_epsilon(0.18, 0.1, 0.2, 0.9) == 0.2);   // reset on a closed gate
    CHECK(update_epsilon(0.2, 0.2, 0.2, 0.9) == 0.2);    // equality resets too
}

TEST_CASE("reflection into bounds") {
    CHECK(reflect_into(0.8, 0.0, 0.5) == doctest::Approx(0.2));
    CHECK(reflect_into(-0.1, 0.0, 0.5) == doctest::Approx(0.1));
    CHECK(reflect_into(1.15, 0.0, 0.5) == doctest::Approx(0.15));
    CHECK(reflect_into(0.3, 0.0, 0.5) == 0.3);
    CHECK(reflect_into(0.0, 0.0, 0.5) == 0.0);
    CHECK(reflect_into(0.5, 0.0, 0.5) == 0.5);
    CHECK(reflect_into(2.3, 0.0, 1.0) == doctest::Approx(0.3));
    CHECK(reflect_into(-2.3, 0.0, 1.0) == doctest::Approx(0.3));
    CHECK_THROWS_AS(reflect_into(0.0, 1.0, 1.0), std::invalid_argument);
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-100.0, 100.0);
        const double y = reflect_into(x, -1.5, 2.5);
        CHECK(y >= -1.5);
        CHECK(y <= 2.5);
    }
}

TEST_CASE("population initialization") {
    auto cfg = sphere_config();
    Rng rng(8);
    const auto procs = init_processes(cfg, rng);
    REQUIRE(procs.size() == 10);
    const double spread = 10.0 / 10.0;
    for (const auto& p : procs) {
        REQUIRE(p.mean.size() == 2);
        for (std::size_t d = 0; d < 2; ++d) {
            CHECK(p.mean[d] >= -5.0);
            CHECK(p.mean[d] <= 5.0);
            CHECK(p.var_diag[d] == spread * spread);
        }
    }
    cfg.spread_init = NcsConfig::SpreadInit::AsVariance;
    Rng rng2(8);
    const auto procs2 = init_processes(cfg, rng2);
    CHECK(procs2[0].var_diag[0] == spread);
    CHECK(procs2[0].mean == procs[0].mean);  // same draws either way

    NcsConfig bad = sphere_config();
    bad.num_processes = 1;
    CHECK_THROWS_AS(init_processes(bad, rng), std::invalid_argument);
    bad = sphere_config();
    bad.bounds.clear();
    CHECK_THROWS_AS(init_processes(bad, rng), std::invalid_argument);
    bad = sphere_config();
    bad.bounds[0] = {2.0, 2.0};
    CHECK_THROWS_AS(init_processes(bad, rng), std::invalid_argument);
    bad = sphere_config();
    bad.epsilon0 = 0.0;
    CHECK_THROWS_AS(init_processes(bad, rng), std::invalid_argument);
    bad = sphere_config();
    bad.rho = 1.5;
    CHECK_THROWS_AS(init_processes(bad, rng), std::invalid_argument);
}

TEST_CASE("calibration finds the sphere minimum and accounts its budget") {
    const auto cfg = sphere_config(2000);
    const auto res = calibrate(sphere, cfg, 123);
    CHECK(res.best_value < 0.05);
    CHECK(res.best_params[0] == doctest::Approx(1.0).epsilon(0.25));
    CHECK(res.best_params[1] == doctest::Approx(-2.0).epsilon(0.25));
    CHECK(res.evals_used == 2000);
    CHECK(res.seed == 123);
    // g_max + 1 trace rows, iteration 0 first
    REQUIRE(res.trace.size() == 200);
    CHECK(res.trace.front().iteration == 0);
    CHECK(res.trace.front().evals == 10);
    CHECK(res.trace.front().phi == 1.0);
    CHECK(res.trace.front().epsilon == cfg.epsilon0);
    CHECK(res.trace.back().iteration == 199);
    CHECK(res.trace.back().evals == 2000);
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
        CHECK(res.trace[i].best_f <= res.trace[i - 1].best_f);
        CHECK(res.trace[i].evals == res.trace[i - 1].evals + 10);
        CHECK(res.trace[i].phi >= 0.0);
        CHECK(res.trace[i].phi <= 1.0);
    }
    CHECK(res.trace.back().best_f == res.best_value);
    // the winning draw is replayable
    CHECK(sphere(res.best_params, res.best_eval_seed) == res.best_value);
    for (std::size_t d = 0; d < 2; ++d) {
        CHECK(res.best_params[d] >= -5.0);
        CHECK(res.best_params[d] <= 5.0);
    }
}

TEST_CASE("calibration is deterministic and thread count never changes results") {
    const auto cfg = sphere_config(600);
    const auto a = calibrate(sphere, cfg, 77, 1);
    const auto b = calibrate(sphere, cfg, 77, 1);
    const auto c = calibrate(sphere, cfg, 77, 3);
    CHECK(a.best_value == b.best_value);
    CHECK(a.best_params == b.best_params);
    CHECK(a.best_value == c.best_value);
    CHECK(a.best_params == c.best_params);
    CHECK(a.best_eval_seed == c.best_eval_seed);
    REQUIRE(a.trace.size() == c.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].best_f == c.trace[i].best_f);
        CHECK(a.trace[i].mean_f == c.trace[i].mean_f);
        CHECK(a.trace[i].phi == c.trace[i].phi);
        CHECK(a.trace[i].epsilon == c.trace[i].epsilon);
    }
    const auto d = calibrate(sphere, cfg, 78);
    CHECK(d.best_params != a.best_params);
}

TEST_CASE("calibration rejects a budget below two iterations") {
    auto cfg = sphere_config(19);
    try {
        calibrate(sphere, cfg, 1);
        FAIL("expected a budget rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("budget too small") != std::string::npos);
    }
    cfg.budget_evals = 20;  // exactly two iterations is fine
    const auto res = calibrate(sphere, cfg, 1);
    CHECK(res.evals_used == 20);
    CHECK(res.trace.size() == 2);
}

TEST_CASE("leftover budget below one iteration is not spent") {
    auto cfg = sphere_config(25);  // 2 full iterations of 10, 5 left over
    const auto res = calibrate(sphere, cfg, 4);
    CHECK(res.evals_used == 20);
}

TEST_CASE("sampled diversity and multi-sample processes run deterministically") {
    auto cfg = sphere_config(400);
    cfg.samples_per_process = 2;
    cfg.diversity = NcsConfig::DiversityMode::Sampled;
    const auto a = calibrate(sphere, cfg, 11, 1);
    const auto b = calibrate(sphere, cfg, 11, 2);
    CHECK(a.best_value == b.best_value);
    CHECK(a.best_params == b.best_params);
    CHECK(a.evals_used == 400);
    CHECK(a.best_value < 1.0);
}

TEST_CASE("swapped case mapping runs and differs from standard") {
    auto cfg = sphere_config(600);
    const auto std_res = calibrate(sphere, cfg, 19);
    cfg.case_mapping = NcsConfig::CaseMapping::Swapped;
    const auto swp = calibrate(sphere, cfg, 19);
    CHECK(swp.evals_used == std_res.evals_used);
    // same draws, different replacement decisions: traces diverge
    bool diverged = false;
    for (std::size_t i = 0; i < swp.trace.size(); ++i)
        if (swp.trace[i].mean_f != std_res.trace[i].mean_f) diverged = true;
    CHECK(diverged);
}

TEST_CASE("random search baseline") {
    const std::vector<std::pair<double, double>> bounds = {{-5.0, 5.0}, {-5.0, 5.0}};
    const auto res = random_search(sphere, bounds, 500, 42);
    CHECK(res.evals_used == 500);
    REQUIRE(res.trace.size() == 500);
    CHECK(res.trace.front().evals == 1);
    CHECK(res.trace.back().evals == 500);
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace[i].best_f <= res.trace[i - 1].best_f);
    CHECK(res.trace.back().best_f == res.best_value);
    CHECK(sphere(res.best_params, res.best_eval_seed) == res.best_value);
    for (std::size_t d = 0; d < 2; ++d) {
        CHECK(res.best_params[d] >= -5.0);
        CHECK(res.best_params[d] <= 5.0);
    }
    const auto again = random_search(sphere, bounds, 500, 42, 3);
    CHECK(again.best_value == res.best_value);
    CHECK(again.best_params == res.best_params);
    CHECK_THROWS_AS(random_search(sphere, bounds, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(random_search(sphere, {}, 10, 1), std::invalid_argument);
}

TEST_CASE("seed-sensitive objectives replay through the stored eval seed") {
    auto noisy = [](std::span<const double> x, std::uint64_t s) {
        Rng r(s);
        const double a = x[0] - 1.0, b = x[1] + 2.0;
        return a * a + b * b + 0.05 * r.u01();
    };
    const auto cfg = sphere_config(400);
    const auto res = calibrate(noisy, cfg, 5);
    CHECK(noisy(res.best_params, res.best_eval_seed) == res.best_value);
}
