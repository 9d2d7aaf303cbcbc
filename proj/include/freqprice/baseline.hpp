#pragma once

// Offline (interval) pricing baseline: economic dispatch re-solved at the
// start of every interval and held until the next one.

#include <cmath>
#include <string>
#include <vector>

#include "dispatch.hpp"
#include "scenario.hpp"

namespace freqprice {

struct BaselineSegment {
    double t_start = 0.0;
    double lambda = 0.0;
    std::vector<double> output;
};

struct OfflineBaseline {
    double interval = 0.0;
    std::vector<BaselineSegment> segments;
    std::vector<double> t;       ///< sample times
    std::vector<double> lambda;  ///< held price at each sample time

    [[nodiscard]] const BaselineSegment& segment_at(double time) const {
        std::size_t idx = 0;
        while (idx + 1 < segments.size() && segments[idx + 1].t_start <= time + 1e-9) ++idx;
        return segments[idx];
    }
};

/// Re-solves dispatch at t = 0, interval, 2*interval, ... using delta and the
/// outage state at that instant; samples the held price every dt_sample.
/// The disturbance path is regenerated from the schedule so it matches the
/// path the simulators see.
inline OfflineBaseline offline_baseline(const Fleet& fleet, const GridParams& grid, const DisturbanceSchedule& schedule,
                                        double interval, double horizon, double dt_physics, double dt_sample,
                                        const Tolerances& tol = {}) {
    if (!(interval > 0.0)) throw Error(ErrorKind::invalid_argument, "offline_baseline: interval must be > 0");
    const long long n_phys = std::llround(horizon / dt_physics);
    const auto delta = delta_path(schedule, dt_physics, n_phys);

    OfflineBaseline out;
    out.interval = interval;
    const auto n_intervals = static_cast<long long>(std::floor(horizon / interval + 1e-9));
    for (long long m = 0; m <= n_intervals; ++m) {
        const double t0 = static_cast<double>(m) * interval;
        if (t0 > horizon + 1e-9) break;
        const long long k = std::min(n_phys, static_cast<long long>(std::floor(t0 / dt_physics + 1e-9)));
        const Fleet f = fleet_at(fleet, schedule, t0, dt_physics);
        try {
            auto sol = solve_ed(f, grid, delta[static_cast<std::size_t>(k)], tol);
            out.segments.push_back({t0, sol.lambda_opt, sol.output});
        } catch (const InfeasibleDemand& e) {
            throw InfeasibleDemand(e.shortfall_mw(), "offline baseline interval " + std::to_string(m) + " (t=" +
                                                         detail::fmt_num(t0) + " s): " + e.what());
        }
    }
    const auto n_samples = static_cast<long long>(std::floor(horizon / dt_sample + 1e-9));
    for (long long j = 0; j <= n_samples; ++j) {
        const double t = static_cast<double>(j) * dt_sample;
        out.t.push_back(t);
        out.lambda.push_back(out.segment_at(t).lambda);
    }
    return out;
}

}  // namespace freqprice
