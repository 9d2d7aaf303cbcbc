#pragma once

// Acceptance checks shared by the acceptance test binary and `freqprice
// verify`. Each check returns one named pass/fail result with the measured
// quantities in `detail`.
//
// fast: oracle and algebraic checks (1, 4, 8, 9)
// full: adds the convergence and statistical runs (2, 3, 5, 6, 7)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "baseline.hpp"
#include "controller.hpp"
#include "dispatch.hpp"
#include "dynamics.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "scenario.hpp"
#include "simulate.hpp"

namespace freqprice {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

enum class VerifyLevel { fast, full };

/// Market clearing routine under test: (fleet, demand) -> solution.
using DispatchSolver = std::function<DispatchSolution(const Fleet&, double)>;

namespace verify_detail {

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : eng_(seed) {}
    double operator()(double lo, double hi) {
        const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
    std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
        return lo + static_cast<std::size_t>(eng_() % (hi - lo + 1));
    }

private:
    std::mt19937_64 eng_;
};

inline std::string num(double v) { return detail::fmt_num(v); }

inline Fleet random_fleet(Uniform& u, std::size_t n) {
    Fleet f;
    for (std::size_t i = 0; i < n; ++i) {
        GeneratorParams g;
        g.quad_cost = u(0.005, 0.05);
        g.lin_cost = u(20.0, 40.0);
        g.p_min = u(0.0, 10.0);
        g.p_max = g.p_min + u(10.0, 60.0);
        f.push_back(g);
    }
    return f;
}

inline double random_feasible_demand(Uniform& u, const Fleet& f) {
    double lo = 0.0, hi = 0.0;
    for (const auto& g : f) {
        lo += g.p_min;
        hi += g.p_max;
    }
    return u(lo, hi);
}

inline double total_cost(const Fleet& f, const std::vector<double>& output) {
    double c = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) c += generator_cost(f[i], output[i]);
    return c;
}

/// Fleet with steep costs whose unit-gain reduced flow is Euler-stable at
/// dt = 0.05 s.
inline SimConfig stiff_config() {
    SimConfig cfg;
    for (double q : {1.0, 1.25, 1.5, 1.75, 2.0}) {
        GeneratorParams g;
        g.quad_cost = q;
        g.lin_cost = 27.4;
        g.p_min = 0.0;
        g.p_max = 100.0;
        cfg.generators.push_back(g);
    }
    cfg.grid = GridParams{12.0, 35.0, 60.0, 200.0};
    cfg.dt_physics = 0.05;
    cfg.dt_sample = 0.05;
    cfg.horizon = 600.0;
    cfg.gains = FlowGains{1.0, 1.0};
    for (auto& g : cfg.generators) g.eta = cfg.dt_physics * cfg.gains.regulation;
    cfg.controller.exact_derivative = true;
    return cfg;
}

inline DisturbanceSchedule stiff_schedule() {
    DisturbanceSchedule s;
    s.id = "equivalence";
    s.steps = {{30.0, 20.0}, {200.0, -30.0}};
    s.wiener = WienerSpec{0.5, 7};
    return s;
}

}  // namespace verify_detail

// ---------------------------------------------------------------------------

inline DispatchSolver default_dispatch_solver() {
    return [](const Fleet& f, double demand) { return clear_market(f, demand); };
}

inline CriterionResult check_ed_oracle(const DispatchSolver& solver = default_dispatch_solver()) {
    using namespace verify_detail;
    CriterionResult res{1, "ED oracle equivalence", false, "", 0.0};
    Timer timer;
    Uniform u(20240601);
    constexpr double resolution = 0.001;
    double worst_gap_ratio = 0.0;
    double worst_kkt = 0.0;
    std::string first_failure;
    try {
        for (int k = 0; k < 100; ++k) {
            const Fleet f = random_fleet(u, 2);
            const double demand = random_feasible_demand(u, f);
            const auto sol = solver(f, demand);
            const auto brute = brute_force_ed(f, demand, resolution);
            double max_mc = 0.0;
            for (const auto& g : f) max_mc = std::max(max_mc, marginal_cost(g, g.p_max));
            const double bound = 2.0 * resolution * max_mc;
            const double gap = std::abs(total_cost(f, sol.output) - brute.total_cost);
            worst_gap_ratio = std::max(worst_gap_ratio, gap / bound);
            if (gap > bound && first_failure.empty())
                first_failure = "2-generator instance " + std::to_string(k) + ": cost gap " + num(gap) + " > " + num(bound);
        }
        for (int k = 0; k < 1000; ++k) {
            const Fleet f = random_fleet(u, u.index(2, 10));
            const double demand = random_feasible_demand(u, f);
            const auto sol = solver(f, demand);
            const double kkt = kkt_residual(f, sol, demand);
            worst_kkt = std::max(worst_kkt, kkt);
            if (kkt > 1e-6 && first_failure.empty())
                first_failure = "instance " + std::to_string(k) + ": KKT residual " + num(kkt);
        }
    } catch (const std::exception& e) {
        first_failure = std::string("solver error: ") + e.what();
    }
    res.seconds = timer.seconds();
    res.passed = first_failure.empty() && res.seconds < 10.0;
    res.detail = "max cost gap / bound " + num(worst_gap_ratio) + ", max KKT residual " + num(worst_kkt) +
                 ", runtime " + num(res.seconds) + " s";
    if (!first_failure.empty()) res.detail += "; " + first_failure;
    return res;
}

inline CriterionResult check_convergence() {
    using namespace verify_detail;
    CriterionResult res{2, "reduced flow converges to the dispatch optimum", true, "", 0.0};
    Timer total;
    std::ostringstream os;
    for (double delta : {-30.0, 20.0}) {
        Timer timer;
        SimConfig cfg = reference_config();
        cfg.mode = Mode::reduced;
        DisturbanceSchedule s;
        s.id = "constant";
        s.steps.push_back({0.0, delta});
        const auto traj = integrate(cfg, s, Mode::reduced);
        const double secs = timer.seconds();
        const auto& last = traj.records.back();
        const auto sol = solve_ed(cfg.generators, cfg.grid, delta);
        const double imb = std::abs(sum(last.r) - delta);
        const double cost_gap = std::abs(total_cost(cfg.generators, last.g) - sol.total_cost);
        const bool ok = std::abs(last.omega) <= 1e-3 && imb <= 1e-3 && cost_gap <= 1e-2 && secs < 5.0;
        res.passed = res.passed && ok;
        os << "delta " << num(delta) << ": |omega| " << num(std::abs(last.omega)) << ", |sum r - delta| " << num(imb)
           << ", cost gap " << num(cost_gap) << ", " << num(secs) << " s" << (ok ? "" : " FAIL") << "; ";
    }
    res.seconds = total.seconds();
    res.detail = os.str();
    return res;
}

inline CriterionResult check_controller_equivalence() {
    using namespace verify_detail;
    CriterionResult res{3, "controller equals Euler-discretised reduced flow", false, "", 0.0};
    Timer timer;
    SimConfig cfg = stiff_config();
    const auto s = stiff_schedule();
    const auto ctl = closed_loop(cfg, s);
    const auto red = integrate(cfg, s, Mode::reduced);
    const auto& M = cfg.grid.inertia;
    const auto& D = cfg.grid.damping;
    double e_omega = 0.0, e_int = 0.0, e_price = 0.0, e_r = 0.0;
    for (std::size_t k = 0; k + 1 < ctl.records.size(); ++k) {
        const auto& c = ctl.records[k];
        const auto& r = red.records[k];
        e_omega = std::max(e_omega, std::abs(c.omega - r.omega));
        e_int = std::max(e_int, std::abs(c.omega_integral - r.omega_integral));
        const double ctl_price = ctl.lambda_da - M * c.omega - D * c.omega_integral;
        e_price = std::max(e_price, std::abs(ctl_price - r.lambda));
        for (std::size_t i = 0; i < c.r.size(); ++i)
            e_r = std::max(e_r, std::abs(c.r[i] - red.records[k + 1].r[i]));
    }
    res.seconds = timer.seconds();
    const double worst = std::max({e_omega, e_int, e_price, e_r});
    res.passed = ctl.records.size() == red.records.size() && worst <= 1e-6;
    res.detail = "max |diff| omega " + num(e_omega) + ", integral " + num(e_int) + ", price " + num(e_price) +
                 ", regulation " + num(e_r) + " over " + std::to_string(ctl.records.size()) + " steps";
    return res;
}

struct PriceIdentityError {
    double level = 0.0;      ///< |lambda_rt - (lambda_da - M omega - D I - omega_dot/D)|
    double increment = 0.0;  ///< |Delta(P+I) + (D omega_prev + M omega_dot) h|
};

/// Measures both price identities along a controller trajectory. The
/// increment identity only applies when omega_dot is the backward-difference
/// estimate.
inline PriceIdentityError price_identity_error(const Trajectory& traj, const GridParams& believed,
                                               bool estimated_derivative = true) {
    PriceIdentityError e;
    const double M = believed.inertia, D = believed.damping;
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
        const auto& r = traj.records[k];
        const double expected = traj.lambda_da - (M * r.omega + D * r.omega_integral + r.omega_dot / D);
        e.level = std::max(e.level, std::abs(r.lambda - expected));
        if (k == 0 || !estimated_derivative) continue;
        const auto& p = traj.records[k - 1];
        const double h = r.t - p.t;
        const double d_pi = (-M * r.omega - D * r.omega_integral) - (-M * p.omega - D * p.omega_integral);
        e.increment = std::max(e.increment, std::abs(d_pi + (D * p.omega + M * r.omega_dot) * h));
    }
    return e;
}

inline std::vector<std::pair<std::string, Trajectory>> identity_trajectories() {
    std::vector<std::pair<std::string, Trajectory>> out;
    auto [cfg_a, s_a] = paper_scenario_a();
    out.emplace_back("scenario_a", closed_loop(cfg_a, s_a));
    for (unsigned long long seed : {1ULL, 2ULL, 3ULL}) {
        auto [cfg, s] = paper_scenario_b(seed);
        out.emplace_back("scenario_b/seed " + std::to_string(seed), closed_loop(cfg, s));
    }
    return out;
}

inline CriterionResult check_price_identity(const std::vector<std::pair<std::string, Trajectory>>& trajectories) {
    using namespace verify_detail;
    CriterionResult res{4, "PID price identity", true, "", 0.0};
    Timer timer;
    double level = 0.0, incr = 0.0;
    for (const auto& [name, traj] : trajectories) {
        const auto e = price_identity_error(traj, traj.grid);
        level = std::max(level, e.level);
        incr = std::max(incr, e.increment);
        if (e.level > 1e-9 || e.increment > 1e-9) {
            res.passed = false;
            res.detail += name + " violates (level " + num(e.level) + ", increment " + num(e.increment) + "); ";
        }
    }
    res.seconds = timer.seconds();
    res.detail += "max level error " + num(level) + ", max increment error " + num(incr) + " over " +
                  std::to_string(trajectories.size()) + " trajectories";
    return res;
}

inline CriterionResult check_price_identity() { return check_price_identity(identity_trajectories()); }

inline CriterionResult check_cost_recovery() {
    using namespace verify_detail;
    CriterionResult res{5, "cost recovery under frequency pricing", false, "", 0.0};
    Timer timer;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    auto absorb = [&](const Trajectory& t) {
        const auto rep = cost_recovery_report(t);
        for (double v : rep.min_profit) worst = std::min(worst, v);
        violations += rep.violations;
    };
    auto [cfg_a, s_a] = paper_scenario_a();
    absorb(closed_loop(cfg_a, s_a));
    for (unsigned long long seed = 1; seed <= 20; ++seed) {
        auto [cfg, s] = paper_scenario_b(seed);
        absorb(closed_loop(cfg, s));
    }
    res.seconds = timer.seconds();
    res.passed = worst >= -kProfitTolerance && res.seconds < 60.0;
    res.detail = "min profit " + num(worst) + " $/h, " + std::to_string(violations) +
                 " violating samples over scenario A + 20 Wiener seeds, runtime " + num(res.seconds) + " s";
    return res;
}

inline CriterionResult check_scenario_a_shape() {
    using namespace verify_detail;
    CriterionResult res{6, "scenario A frequency and price shape", false, "", 0.0};
    Timer timer;
    auto [cfg, s] = paper_scenario_a();
    const auto traj = closed_loop(cfg, s);
    const double t_step = s.steps[0].t, t_out = s.outages[0].t;
    const double lam1 = solve_ed(cfg.generators, cfg.grid, -30.0).lambda_opt;
    const double lam2 = solve_ed(fleet_at(cfg.generators, s, t_out, cfg.dt_physics), cfg.grid, -30.0).lambda_opt;

    double max_after_step = -1e300, min_after_outage = 1e300, tail1 = 0.0, tail2 = 0.0;
    double price_before_outage = kNaN;
    for (const auto& r : traj.records) {
        if (r.t >= t_step && r.t < t_out) max_after_step = std::max(max_after_step, r.omega);
        if (r.t >= t_out) min_after_outage = std::min(min_after_outage, r.omega);
        if (r.t >= t_out - kSettleHold && r.t < t_out) tail1 = std::max(tail1, std::abs(r.omega));
        if (r.t >= cfg.horizon - kSettleHold) tail2 = std::max(tail2, std::abs(r.omega));
        if (r.t < t_out) price_before_outage = r.lambda;
    }
    const double price_end = traj.records.back().lambda;
    std::vector<std::string> failed;
    if (!(max_after_step > kSettleBand)) failed.emplace_back("no positive excursion after the step");
    if (!(min_after_outage < -kSettleBand)) failed.emplace_back("no negative excursion after the outage");
    if (!(tail1 <= kSettleBand)) failed.emplace_back("not settled before the outage");
    if (!(tail2 <= kSettleBand)) failed.emplace_back("not settled before the horizon");
    if (!(price_before_outage < traj.lambda_da && std::abs(price_before_outage - lam1) <= 1e-2))
        failed.emplace_back("post-step price off its dispatch dual");
    if (!(price_end > price_before_outage && std::abs(price_end - lam2) <= 1e-2))
        failed.emplace_back("post-outage price off its dispatch dual");
    res.seconds = timer.seconds();
    res.passed = failed.empty();
    std::ostringstream os;
    os << "max omega after step " << num(max_after_step) << ", min omega after outage " << num(min_after_outage)
       << ", max |omega| in last 5 s before outage " << num(tail1) << " / before horizon " << num(tail2)
       << ", price before outage " << num(price_before_outage) << " (dual " << num(lam1) << "), final price "
       << num(price_end) << " (dual " << num(lam2) << ")";
    for (const auto& f : failed) os << "; " << f;
    res.detail = os.str();
    return res;
}

inline CriterionResult check_offline_direction() {
    using namespace verify_detail;
    CriterionResult res{7, "offline prices produce losses, online prices do not", false, "", 0.0};
    Timer timer;
    int offline_negative = 0;
    double worst_online = 0.0, max_offline = 0.0;
    for (unsigned long long seed = 1; seed <= 20; ++seed) {
        auto [cfg, s] = paper_scenario_b(seed);
        const auto run = run_simulation(cfg, s);
        const auto rows = compare_online_offline(run.trajectory, *run.baseline);
        const double on = negative_profit_fraction(rows, PriceUsed::online);
        const double off = negative_profit_fraction(rows, PriceUsed::offline);
        worst_online = std::max(worst_online, on);
        max_offline = std::max(max_offline, off);
        if (off > 0.0) ++offline_negative;
    }
    res.seconds = timer.seconds();
    res.passed = worst_online == 0.0 && offline_negative >= 15;
    res.detail = "online negative fraction max " + num(worst_online) + "; offline negative fraction > 0 in " +
                 std::to_string(offline_negative) + "/20 seeds (max fraction " + num(max_offline) + ")";
    return res;
}

/// Finite-difference checks of the flows against the Lagrangians. Central
/// differences are exact on these quadratics up to round-off, so the step is
/// chosen for round-off only. Errors are relative to max(|analytic|, 1).
inline CriterionResult check_gradient_flows() {
    using namespace verify_detail;
    CriterionResult res{8, "flows are gradients of the Lagrangians", false, "", 0.0};
    Timer timer;
    SimConfig cfg = reference_config();
    const Fleet& fleet = cfg.generators;
    const GridParams& grid = cfg.grid;
    const auto box = regulation_box(fleet);
    const FlowGains unit{1.0, 1.0};
    Uniform u(8);
    double worst = 0.0;
    std::string where;
    auto rel = [&](double analytic, double fd, const std::string& what) {
        const double e = std::abs(analytic - fd) / std::max(std::abs(analytic), 1.0);
        if (e > worst) {
            worst = e;
            where = what;
        }
    };
    constexpr double h_omega = 1e-6;
    constexpr double h = 1e-3;
    for (int k = 0; k < 100; ++k) {
        SimState s;
        for (std::size_t i = 0; i < fleet.size(); ++i) s.r.push_back(u(box.lo[i] + 1.0, box.hi[i] - 1.0));
        s.omega = u(-0.5, 0.5);
        s.lambda = u(20.0, 40.0);
        s.gamma = u(0.5, 2.0);
        s.delta = u(-40.0, 40.0);

        auto shifted = [&](auto mutate) {
            SimState a = s, b = s;
            mutate(a, +1.0);
            mutate(b, -1.0);
            return std::pair{a, b};
        };
        {
            auto [a, b] = shifted([&](SimState& x, double sg) { x.omega += sg * h_omega; });
            rel(swing_rhs(s, grid), -(lyapunov_fd(a, grid) - lyapunov_fd(b, grid)) / (2 * h_omega), "swing vs L_FD");
        }
        const auto d = composite_flow_rhs(s, fleet, grid, unit);
        for (std::size_t i = 0; i < fleet.size(); ++i) {
            auto [a, b] = shifted([&](SimState& x, double sg) { x.r[i] += sg * h; });
            rel(d.r_dot[i], -(composite_lagrangian(a, fleet, grid) - composite_lagrangian(b, fleet, grid)) / (2 * h),
                "r_dot[" + std::to_string(i + 1) + "]");
        }
        {
            auto [a, b] = shifted([&](SimState& x, double sg) { x.lambda += sg * h; });
            rel(d.lambda_dot, (composite_lagrangian(a, fleet, grid) - composite_lagrangian(b, fleet, grid)) / (2 * h),
                "lambda_dot");
        }
        {
            auto [a, b] = shifted([&](SimState& x, double sg) { x.omega += sg * h; });
            rel(d.omega_dot, -(composite_lagrangian(a, fleet, grid) - composite_lagrangian(b, fleet, grid)) / (2 * h),
                "omega_dot");
        }
        {
            auto [a, b] = shifted([&](SimState& x, double sg) { x.gamma += sg * h; });
            rel(d.gamma_dot, (composite_lagrangian(a, fleet, grid) - composite_lagrangian(b, fleet, grid)) / (2 * h),
                "gamma_dot");
        }
    }
    res.seconds = timer.seconds();
    res.passed = worst <= 1e-6;
    res.detail = "max relative error " + num(worst) + (where.empty() ? "" : " (" + where + ")") + " over 100 states";
    return res;
}

inline CriterionResult check_determinism() {
    using namespace verify_detail;
    CriterionResult res{9, "determinism", false, "", 0.0};
    Timer timer;
    auto csv_for = [](unsigned long long seed) {
        auto [cfg, s] = paper_scenario_b(seed);
        const auto run = run_simulation(cfg, s);
        return trajectory_csv(run.trajectory, run.baseline ? &*run.baseline : nullptr);
    };
    const auto a = csv_for(42), b = csv_for(42), c = csv_for(43);
    res.seconds = timer.seconds();
    res.passed = a == b && a != c;
    res.detail = std::string("seed 42 twice: ") + (a == b ? "byte-identical" : "DIFFERENT") + " (" +
                 std::to_string(a.size()) + " bytes); seed 43: " + (a != c ? "differs" : "IDENTICAL");
    return res;
}

inline std::vector<CriterionResult> run_verification(VerifyLevel level) {
    std::vector<CriterionResult> out;
    out.push_back(check_ed_oracle());
    if (level == VerifyLevel::full) {
        out.push_back(check_convergence());
        out.push_back(check_controller_equivalence());
    }
    out.push_back(check_price_identity());
    if (level == VerifyLevel::full) {
        out.push_back(check_cost_recovery());
        out.push_back(check_scenario_a_shape());
        out.push_back(check_offline_direction());
    }
    out.push_back(check_gradient_flows());
    out.push_back(check_determinism());
    return out;
}

inline std::string format_result(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.passed ? "PASS" : "FAIL") << "  criterion " << r.id << ": " << r.name << " -- " << r.detail;
    return os.str();
}

inline nlohmann::json verification_json(const std::vector<CriterionResult>& results, VerifyLevel level) {
    nlohmann::json j;
    j["level"] = level == VerifyLevel::fast ? "fast" : "full";
    bool all = true;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
        all = all && r.passed;
        arr.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
    }
    j["passed"] = all;
    j["criteria"] = arr;
    return j;
}

}  // namespace freqprice
