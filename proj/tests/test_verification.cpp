#include <gtest/gtest.h>

#include "freqprice/verification.hpp"

using namespace freqprice;

// The checks themselves must catch broken code; each is run against a
// deliberately broken input.

TEST(Verification, OracleCheckCatchesBadBracket) {
    // Bisection whose bracket stops short of the clearing price.
    const DispatchSolver tampered = [](const Fleet& f, double demand) {
        double lo = 1e300, hi = -1e300;
        for (const auto& g : f) {
            lo = std::min(lo, g.lin_cost - 1.0);
            hi = std::max(hi, g.lin_cost);
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (detail::fleet_response(f, mid) < demand ? lo : hi) = mid;
        }
        DispatchSolution sol;
        sol.lambda_opt = 0.5 * (lo + hi);
        for (const auto& g : f) sol.output.push_back(detail::clamped_response(g, sol.lambda_opt));
        sol.r_opt = sol.output;
        sol.binding.assign(f.size(), Binding::interior);
        for (std::size_t i = 0; i < f.size(); ++i) sol.total_cost += generator_cost(f[i], sol.output[i]);
        return sol;
    };
    const auto res = check_ed_oracle(tampered);
    EXPECT_FALSE(res.passed);
    EXPECT_EQ(res.name, "ED oracle equivalence");
    EXPECT_TRUE(check_ed_oracle().passed);
}

TEST(Verification, IdentityCheckCatchesDerivativeSignFlip) {
    auto trajectories = identity_trajectories();
    ASSERT_TRUE(check_price_identity(trajectories).passed);
    for (auto& [name, traj] : trajectories)
        for (auto& r : traj.records) r.lambda += 2.0 * r.omega_dot / traj.grid.damping;
    const auto res = check_price_identity(trajectories);
    EXPECT_FALSE(res.passed);
    EXPECT_NE(res.detail.find("violates"), std::string::npos);
}

TEST(Verification, IdentityCheckCatchesWrongIntegralRule) {
    auto [cfg, s] = paper_scenario_a();
    auto traj = closed_loop(cfg, s);
    // Right-rectangle integral: shifts the I term by omega_k * h.
    for (auto& r : traj.records) {
        r.omega_integral += r.omega * cfg.dt_sample;
        r.lambda -= cfg.grid.damping * r.omega * cfg.dt_sample;
    }
    const auto e = price_identity_error(traj, cfg.grid);
    EXPECT_LE(e.level, 1e-9);
    EXPECT_GT(e.increment, 1e-9);
}

TEST(Verification, FastLevelSubset) {
    const auto results = run_verification(VerifyLevel::fast);
    std::vector<int> ids;
    for (const auto& r : results) ids.push_back(r.id);
    EXPECT_EQ(ids, (std::vector<int>{1, 4, 8, 9}));
    for (const auto& r : results) EXPECT_TRUE(r.passed) << format_result(r);
    const auto j = verification_json(results, VerifyLevel::fast);
    EXPECT_EQ(j["passed"], true);
    EXPECT_EQ(j["criteria"].size(), 4u);
}
