#include <gtest/gtest.h>

#include <cmath>

#include "freqprice/dispatch.hpp"
#include "freqprice/rng.hpp"
#include "freqprice/scenario.hpp"

using namespace freqprice;

namespace {

DisturbanceSchedule single_step() {
    DisturbanceSchedule s;
    s.steps.push_back({30.0, -30.0});
    return s;
}

double sample_sd(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace

TEST(DeltaAt, StepBeforeAndAfter) {
    const auto s = single_step();
    WienerState w = make_wiener_state(s);
    EXPECT_EQ(delta_at(s, 10.0, 0.05, w), 0.0);
    EXPECT_EQ(delta_at(s, 60.0, 0.05, w), -30.0);
}

TEST(DeltaAt, RightContinuousAndPiecewiseConstant) {
    const auto s = single_step();
    WienerState w = make_wiener_state(s);
    EXPECT_EQ(delta_at(s, 29.95, 0.05, w), 0.0);
    EXPECT_EQ(delta_at(s, 29.99, 0.05, w), 0.0);
    EXPECT_EQ(delta_at(s, 30.0, 0.05, w), -30.0);
    EXPECT_EQ(delta_at(s, 30.04, 0.05, w), -30.0);
    EXPECT_EQ(step_index(30.0, 0.05), 600);
    EXPECT_EQ(step_index(30.01, 0.05), 601);
}

TEST(DeltaAt, WienerReproducible) {
    auto [cfg, s] = paper_scenario_b(42);
    WienerState a = make_wiener_state(s), b = make_wiener_state(s);
    const double va = delta_at(s, 100.0, cfg.dt_physics, a);
    const double vb = delta_at(s, 100.0, cfg.dt_physics, b);
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, 0.0);
}

TEST(Wiener, EqualSeedsEqualPaths) {
    auto [c1, s1] = paper_scenario_b(5);
    auto [c2, s2] = paper_scenario_b(5);
    auto [c3, s3] = paper_scenario_b(6);
    EXPECT_EQ(delta_path(s1, 0.05, 2000), delta_path(s2, 0.05, 2000));
    EXPECT_NE(delta_path(s1, 0.05, 2000), delta_path(s3, 0.05, 2000));
}

TEST(Wiener, DisjointSeedsGiveDisjointPaths) {
    std::vector<std::vector<double>> paths;
    for (unsigned long long seed = 1; seed <= 10; ++seed) paths.push_back(delta_path(paper_scenario_b(seed).second, 0.05, 200));
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t j = i + 1; j < paths.size(); ++j)
            for (std::size_t k = 1; k < paths[i].size(); ++k) EXPECT_NE(paths[i][k], paths[j][k]);
}

// Unit diffusion scale: one-second increments have standard deviation 1 MW.
TEST(Wiener, OneSecondIncrementScale) {
    auto [cfg, s] = paper_scenario_b(2024);
    const long long n = 200000;  // 10^4 s at 0.05 s
    const auto path = delta_path(s, 0.05, n);
    std::vector<double> inc;
    for (long long k = 0; k + 20 <= n; k += 20) inc.push_back(path[k + 20] - path[k]);
    ASSERT_EQ(inc.size(), 10000u);
    EXPECT_NEAR(sample_sd(inc), 1.0, 0.05);
}

// Increments over 1 s and 4 s: variance ratio 4, and neighbouring
// increments uncorrelated (3-sigma bands on 10^4 samples).
TEST(Wiener, IndependentIncrementsVarianceProportional) {
    auto [cfg, s] = paper_scenario_b(77);
    const long long n = 800000;
    const auto path = delta_path(s, 0.05, n);
    std::vector<double> one, four;
    for (long long k = 0; k + 80 <= n && four.size() < 10000; k += 80) four.push_back(path[k + 80] - path[k]);
    for (long long k = 0; k + 20 <= n && one.size() < 10000; k += 20) one.push_back(path[k + 20] - path[k]);
    const double v1 = std::pow(sample_sd(one), 2), v4 = std::pow(sample_sd(four), 2);
    // The sample variance of 10^4 normals has relative sd sqrt(2/9999).
    const double band = 3.0 * std::sqrt(2.0 / 9999.0);
    EXPECT_NEAR(v1, 1.0, band);
    EXPECT_NEAR(v4 / 4.0, 1.0, band);
    double corr = 0.0;
    for (std::size_t i = 0; i + 1 < one.size(); i += 2) corr += one[i] * one[i + 1];
    corr /= static_cast<double>(one.size() / 2);
    EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(static_cast<double>(one.size() / 2)));
}

TEST(NormalStream, DeterministicAndStreamSeparated) {
    NormalStream a(1, "x"), b(1, "x"), c(1, "y");
    for (int i = 0; i < 5; ++i) {
        const double va = a.next();
        EXPECT_EQ(va, b.next());
        EXPECT_NE(va, c.next());
    }
}

TEST(ApplyOutage, PinsOutputToZero) {
    auto cfg = reference_config();
    const Fleet f = apply_outage(cfg.generators, {300.0, 0});
    const auto box = regulation_box(f);
    EXPECT_NEAR(box.lo[0], -48.9856506679, 1e-8);
    EXPECT_NEAR(box.hi[0], -48.9856506679, 1e-8);
    EXPECT_FALSE(f[0].in_service);
    double cap_before = 0, cap_after = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        cap_before += cfg.generators[i].p_max;
        cap_after += f[i].p_max;
    }
    EXPECT_DOUBLE_EQ(cap_before - cap_after, 50.0);
}

TEST(ApplyOutage, NeverRelaxesOtherGenerators) {
    auto cfg = reference_config();
    for (std::size_t j = 0; j < cfg.generators.size(); ++j) {
        const Fleet f = apply_outage(cfg.generators, {0.0, j});
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i == j) continue;
            EXPECT_EQ(f[i].p_min, cfg.generators[i].p_min);
            EXPECT_EQ(f[i].p_max, cfg.generators[i].p_max);
        }
    }
}

TEST(ApplyOutage, IdleGeneratorHasNoImpact) {
    auto cfg = reference_config();
    cfg.generators[2].p_star = 0.0;
    const Fleet f = apply_outage(cfg.generators, {10.0, 2});
    EXPECT_EQ(regulation_box(f).lo[2], 0.0);  // r = 0 stays feasible; sum(r) unchanged
}

TEST(ApplyOutage, InvalidOrRepeated) {
    auto cfg = reference_config();
    EXPECT_THROW(apply_outage(cfg.generators, {0.0, 7}), Error);
    const Fleet f = apply_outage(cfg.generators, {0.0, 1});
    EXPECT_THROW(apply_outage(f, {0.0, 1}), Error);
}

TEST(ApplyOutage, PostOutageDispatchCanBeInfeasible) {
    auto cfg = reference_config();
    const Fleet f = apply_outage(cfg.generators, {0.0, 0});
    EXPECT_NO_THROW(solve_ed(f, cfg.grid, 0.0));
    EXPECT_THROW(solve_ed(f, cfg.grid, 1.0), InfeasibleDemand);
}

TEST(ScenarioA, Construction) {
    auto [cfg, s] = paper_scenario_a();
    EXPECT_TRUE(validate_config(cfg).empty());
    EXPECT_TRUE(validate_schedule(s, cfg.generators.size(), cfg.horizon).empty());
    ASSERT_EQ(s.steps.size() + s.outages.size(), 2u);
    EXPECT_EQ(s.steps[0].t, 30.0);
    EXPECT_EQ(s.outages[0].t, 300.0);
    EXPECT_EQ(s.outages[0].generator, 4u);
    WienerState w = make_wiener_state(s);
    EXPECT_EQ(delta_at(s, 200.0, cfg.dt_physics, w), -30.0);
}

TEST(ScenarioB, Construction) {
    auto [cfg, s] = paper_scenario_b(3);
    ASSERT_TRUE(s.wiener.has_value());
    EXPECT_EQ(s.wiener->sigma, 1.0);
    EXPECT_EQ(s.wiener->seed, 3u);
    EXPECT_EQ(*cfg.baseline_interval, 300.0);
}

TEST(ValidateSchedule, ReportsEveryProblem) {
    DisturbanceSchedule s;
    s.steps.push_back({-1.0, 5.0});
    s.outages.push_back({10.0, 9});
    s.outages.push_back({20.0, 1});
    s.outages.push_back({30.0, 1});
    s.wiener = WienerSpec{-1.0, 0};
    EXPECT_EQ(validate_schedule(s, 5, 600.0).size(), 4u);
}
