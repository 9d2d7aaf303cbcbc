#pragma once

// Economic post-processing of trajectories: profits, cost recovery,
// online versus offline settlement, tracking of the dispatch optimum.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "baseline.hpp"
#include "dispatch.hpp"
#include "model.hpp"
#include "scenario.hpp"
#include "trajectory.hpp"

namespace freqprice {

/// Profit tolerance of the cost-recovery check, $/h.
inline constexpr double kProfitTolerance = 1e-9;

inline double profit(double output, double price, const GeneratorParams& gen) {
    return price * output - generator_cost(gen, output);
}

enum class PriceUsed { online, offline };

struct ProfitRecord {
    double t = 0.0;
    std::vector<double> output;
    std::vector<double> revenue;
    std::vector<double> cost;
    std::vector<double> profit;
    PriceUsed price_used = PriceUsed::online;
};

inline ProfitRecord make_profit_record(double t, const std::vector<double>& output, double price, const Fleet& fleet,
                                       PriceUsed used) {
    ProfitRecord p;
    p.t = t;
    p.price_used = used;
    p.output = output;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        p.revenue.push_back(price * output[i]);
        p.cost.push_back(generator_cost(fleet[i], output[i]));
        p.profit.push_back(p.revenue.back() - p.cost.back());
    }
    return p;
}

struct CostRecoveryReport {
    std::vector<double> min_profit;
    std::vector<std::optional<double>> first_violation_t;
    std::size_t violations = 0;  ///< (sample, generator) pairs below -kProfitTolerance

    [[nodiscard]] bool violated() const { return violations > 0; }
};

inline CostRecoveryReport cost_recovery_report(const Trajectory& traj) {
    CostRecoveryReport rep;
    const std::size_t n = traj.fleet.size();
    if (traj.records.empty()) return rep;
    rep.min_profit.assign(n, std::numeric_limits<double>::infinity());
    rep.first_violation_t.assign(n, std::nullopt);
    for (const auto& rec : traj.records) {
        for (std::size_t i = 0; i < n; ++i) {
            rep.min_profit[i] = std::min(rep.min_profit[i], rec.profit[i]);
            if (rec.profit[i] < -kProfitTolerance) {
                ++rep.violations;
                if (!rep.first_violation_t[i]) rep.first_violation_t[i] = rec.t;
            }
        }
    }
    return rep;
}

struct ComparisonRow {
    double t = 0.0;
    double lambda_online = 0.0;
    double lambda_offline = 0.0;
    std::vector<double> profit_online;
    std::vector<double> profit_offline;
};

/// Settles the same generation path at the online price and at the held
/// offline price.
inline std::vector<ComparisonRow> compare_online_offline(const Trajectory& traj, const OfflineBaseline& baseline) {
    if (baseline.t.size() != traj.records.size())
        throw Error(ErrorKind::timebase_mismatch, "compare_online_offline: " + std::to_string(traj.records.size()) +
                                                      " trajectory samples vs " + std::to_string(baseline.t.size()) +
                                                      " baseline samples");
    std::vector<ComparisonRow> rows;
    rows.reserve(traj.records.size());
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
        const auto& rec = traj.records[k];
        if (std::abs(rec.t - baseline.t[k]) > 1e-9)
            throw Error(ErrorKind::timebase_mismatch,
                        "compare_online_offline: sample " + std::to_string(k) + " at t=" + detail::fmt_num(rec.t) +
                            " vs baseline t=" + detail::fmt_num(baseline.t[k]));
        ComparisonRow row;
        row.t = rec.t;
        row.lambda_online = rec.lambda;
        row.lambda_offline = baseline.lambda[k];
        for (std::size_t i = 0; i < traj.fleet.size(); ++i) {
            row.profit_online.push_back(profit(rec.g[i], row.lambda_online, traj.fleet[i]));
            row.profit_offline.push_back(profit(rec.g[i], row.lambda_offline, traj.fleet[i]));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Fraction of (sample, generator) pairs whose profit is below -kProfitTolerance.
inline double negative_profit_fraction(const std::vector<ComparisonRow>& rows, PriceUsed which) {
    std::size_t neg = 0, total = 0;
    for (const auto& row : rows) {
        const auto& p = which == PriceUsed::online ? row.profit_online : row.profit_offline;
        for (double v : p) {
            ++total;
            if (v < -kProfitTolerance) ++neg;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(neg) / static_cast<double>(total);
}

/// Sup-norm gap between the trajectory's dispatch and the dispatch optimum at
/// each sample's instantaneous delta (outages applied as of that sample).
inline std::vector<double> tracking_error(const Trajectory& traj, const DisturbanceSchedule& schedule,
                                          double dt_physics, const Tolerances& tol = {}) {
    std::vector<double> err;
    err.reserve(traj.records.size());
    for (const auto& rec : traj.records) {
        const Fleet f = fleet_at(traj.fleet, schedule, rec.t, dt_physics);
        DispatchSolution sol;
        try {
            sol = solve_ed(f, traj.grid, rec.delta, tol);
        } catch (const InfeasibleDemand& e) {
            throw InfeasibleDemand(e.shortfall_mw(),
                                   "tracking_error at t=" + detail::fmt_num(rec.t) + " s: " + e.what());
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(rec.g[i] - sol.output[i]));
        err.push_back(worst);
    }
    return err;
}

struct Summary {
    std::size_t samples = 0;
    std::optional<double> settling_time;  ///< s; empty when never settled for 5 s
    double peak_abs_omega = 0.0;
    double final_lambda = kNaN;
    double final_omega = kNaN;
    std::vector<double> energy_mwh;
    std::vector<double> cumulative_profit;            ///< $, left rectangle rule
    std::vector<double> cumulative_profit_trapezoid;  ///< $, cross-check
    std::vector<double> min_profit;
    std::size_t profit_violations = 0;
};

inline constexpr double kSettleBand = 1e-3;  ///< Hz
inline constexpr double kSettleHold = 5.0;   ///< s

inline Summary summarize(const Trajectory& traj) {
    Summary s;
    const auto& recs = traj.records;
    const std::size_t n = traj.fleet.size();
    s.samples = recs.size();
    s.energy_mwh.assign(n, 0.0);
    s.cumulative_profit.assign(n, 0.0);
    s.cumulative_profit_trapezoid.assign(n, 0.0);
    if (recs.empty()) return s;

    std::optional<std::size_t> last_out;
    for (std::size_t k = 0; k < recs.size(); ++k) {
        s.peak_abs_omega = std::max(s.peak_abs_omega, std::abs(recs[k].omega));
        if (std::abs(recs[k].omega) >= kSettleBand) last_out = k;
    }
    const std::size_t settle_idx = last_out ? *last_out + 1 : 0;
    if (settle_idx < recs.size()) {
        const double t_settle = recs[settle_idx].t;
        if (!last_out || recs.back().t - t_settle >= kSettleHold) s.settling_time = t_settle;
    }
    s.final_lambda = recs.back().lambda;
    s.final_omega = recs.back().omega;

    constexpr double hours_per_second = 1.0 / 3600.0;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        const double dt = (recs[k + 1].t - recs[k].t) * hours_per_second;
        for (std::size_t i = 0; i < n; ++i) {
            s.energy_mwh[i] += recs[k].g[i] * dt;
            s.cumulative_profit[i] += recs[k].profit[i] * dt;
            s.cumulative_profit_trapezoid[i] += 0.5 * (recs[k].profit[i] + recs[k + 1].profit[i]) * dt;
        }
    }
    auto rep = cost_recovery_report(traj);
    s.min_profit = rep.min_profit;
    s.profit_violations = rep.violations;
    return s;
}

}  // namespace freqprice
