#include <gtest/gtest.h>

#include "freqprice/controller.hpp"
#include "freqprice/metrics.hpp"
#include "freqprice/scenario.hpp"
#include "freqprice/simulate.hpp"

using namespace freqprice;

namespace {

GeneratorParams gen(double C) {
    GeneratorParams g;
    g.quad_cost = C;
    g.lin_cost = 27.4;
    g.p_max = 50.0;
    return g;
}

}  // namespace

TEST(Profit, Substitution) {
    EXPECT_EQ(profit(0.0, 30.0, gen(0.01)), 0.0);
    EXPECT_NEAR(profit(20.0, 27.6, gen(0.01)), 2.0, 1e-12);
    const double g = 33.0;
    EXPECT_NEAR(profit(g, marginal_cost(gen(0.01), g), gen(0.01)), 0.5 * 0.01 * g * g, 1e-10);
}

TEST(CostRecovery, ScenarioAHasNoViolation) {
    auto [cfg, s] = paper_scenario_a();
    const auto rep = cost_recovery_report(closed_loop(cfg, s));
    EXPECT_FALSE(rep.violated());
    for (const auto& t : rep.first_violation_t) EXPECT_FALSE(t.has_value());
}

TEST(CostRecovery, EmptyTrajectory) {
    Trajectory t;
    t.fleet = reference_fleet();
    const auto rep = cost_recovery_report(t);
    EXPECT_FALSE(rep.violated());
    EXPECT_TRUE(rep.min_profit.empty());
}

// Oversized step on one unit: the report must flag what it finds.
TEST(CostRecovery, FlagsOversizedStep) {
    auto [cfg, s] = paper_scenario_a();
    cfg.generators[0].eta = 10.0 / cfg.generators[0].quad_cost;
    const auto traj = closed_loop(cfg, s);
    const auto rep = cost_recovery_report(traj);
    std::size_t negative = 0;
    for (const auto& r : traj.records)
        for (double p : r.profit) negative += p < -kProfitTolerance;
    EXPECT_EQ(rep.violations, negative);
    EXPECT_EQ(rep.violated(), negative > 0);
    if (rep.violated()) {
        EXPECT_LT(*std::min_element(rep.min_profit.begin(), rep.min_profit.end()), -kProfitTolerance);
    }
}

TEST(CostRecovery, HandMadeViolation) {
    Trajectory t;
    t.fleet = {gen(0.01)};
    TimeSeriesRecord a, b;
    a.t = 0.0;
    a.g = {10.0};
    a.profit = {1.0};
    b.t = 0.25;
    b.g = {10.0};
    b.profit = {-0.5};
    t.records = {a, b};
    const auto rep = cost_recovery_report(t);
    EXPECT_EQ(rep.violations, 1u);
    EXPECT_EQ(rep.first_violation_t[0], 0.25);
    EXPECT_EQ(rep.min_profit[0], -0.5);
}

TEST(Compare, RestPricesCoincide) {
    auto cfg = reference_config();
    cfg.baseline_interval = 300.0;
    const auto run = run_simulation(cfg, DisturbanceSchedule{});
    const auto rows = compare_online_offline(run.trajectory, *run.baseline);
    for (const auto& row : rows) {
        EXPECT_NEAR(row.lambda_online, row.lambda_offline, 1e-12);
        for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(row.profit_online[i], row.profit_offline[i], 1e-9);
    }
}

TEST(Compare, OfflineFlatWithinInterval) {
    auto [cfg, s] = paper_scenario_a();
    cfg.baseline_interval = 300.0;
    const auto run = run_simulation(cfg, s);
    const auto rows = compare_online_offline(run.trajectory, *run.baseline);
    std::size_t online_moves = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].t != 300.0) {
            EXPECT_EQ(rows[k].lambda_offline, rows[k - 1].lambda_offline) << rows[k].t;
        }
        online_moves += rows[k].lambda_online != rows[k - 1].lambda_online;
    }
    EXPECT_GT(online_moves, 100u);
}

TEST(Compare, TimebaseMismatch) {
    auto [cfg, s] = paper_scenario_b(1);
    const auto run = run_simulation(cfg, s);
    auto b = *run.baseline;
    b.t.pop_back();
    b.lambda.pop_back();
    EXPECT_THROW(compare_online_offline(run.trajectory, b), Error);
}

TEST(Compare, NegativeFractionCountsPairs) {
    std::vector<ComparisonRow> rows(2);
    rows[0].profit_online = {1, 2};
    rows[0].profit_offline = {-1, 2};
    rows[1].profit_online = {1, 2};
    rows[1].profit_offline = {-1, -2};
    EXPECT_EQ(negative_profit_fraction(rows, PriceUsed::online), 0.0);
    EXPECT_EQ(negative_profit_fraction(rows, PriceUsed::offline), 0.75);
}

TEST(TrackingError, RestIsZero) {
    auto cfg = reference_config();
    DisturbanceSchedule s;
    const auto traj = closed_loop(cfg, s);
    for (double e : tracking_error(traj, s, cfg.dt_physics)) EXPECT_NEAR(e, 0.0, 1e-8);
}

TEST(TrackingError, ConvergedReducedFlow) {
    auto cfg = reference_config();
    DisturbanceSchedule s;
    s.steps.push_back({0.0, 20.0});
    const auto traj = integrate(cfg, s, Mode::reduced);
    const auto err = tracking_error(traj, s, cfg.dt_physics);
    EXPECT_LE(err.back(), 1e-3);
    EXPECT_GT(*std::max_element(err.begin(), err.end()), 1.0);
}

TEST(TrackingError, JumpsAtStep) {
    auto cfg = reference_config();
    DisturbanceSchedule s;
    s.steps.push_back({10.0, -20.0});
    const auto traj = integrate(cfg, s, Mode::reduced);
    const auto err = tracking_error(traj, s, cfg.dt_physics);
    EXPECT_LT(err[39], 1e-9);  // t = 9.75
    EXPECT_GT(err[40], 1.0);   // t = 10
}

TEST(Summarize, Rest) {
    auto cfg = reference_config();
    const auto sum = summarize(closed_loop(cfg, DisturbanceSchedule{}));
    ASSERT_TRUE(sum.settling_time.has_value());
    EXPECT_EQ(*sum.settling_time, 0.0);
    EXPECT_EQ(sum.peak_abs_omega, 0.0);
    EXPECT_EQ(sum.samples, 2401u);
}

TEST(Summarize, ScenarioAFinite) {
    auto [cfg, s] = paper_scenario_a();
    const auto sum = summarize(closed_loop(cfg, s));
    EXPECT_TRUE(std::isfinite(sum.peak_abs_omega));
    EXPECT_TRUE(std::isfinite(sum.final_lambda));
    EXPECT_TRUE(std::isfinite(sum.final_omega));
    for (double v : sum.cumulative_profit) EXPECT_TRUE(std::isfinite(v));
    for (double v : sum.energy_mwh) EXPECT_TRUE(std::isfinite(v));
}

TEST(Summarize, RectangleAgreesWithTrapezoid) {
    auto [cfg, s] = paper_scenario_b(4);
    const auto sum = summarize(closed_loop(cfg, s));
    for (std::size_t i = 0; i < 5; ++i)
        EXPECT_NEAR(sum.cumulative_profit[i], sum.cumulative_profit_trapezoid[i],
                    0.01 * std::abs(sum.cumulative_profit_trapezoid[i]));
}

TEST(Settlement, RevenueIsUniformPriceTimesOutput) {
    auto [cfg, s] = paper_scenario_b(9);
    const auto traj = closed_loop(cfg, s);
    for (std::size_t k = 0; k < traj.records.size(); k += 50) {
        const auto& r = traj.records[k];
        const auto rec = make_profit_record(r.t, r.g, r.lambda, traj.fleet, PriceUsed::online);
        double revenue = 0.0, total = 0.0;
        for (std::size_t i = 0; i < r.g.size(); ++i) {
            revenue += rec.revenue[i];
            total += r.g[i];
        }
        EXPECT_NEAR(revenue, r.lambda * total, 1e-9 * std::max(1.0, revenue));
    }
}
