#pragma once

#include <optional>

#include "baseline.hpp"
#include "controller.hpp"
#include "dynamics.hpp"
#include "model.hpp"
#include "scenario.hpp"
#include "trajectory.hpp"

namespace freqprice {

struct RunResult {
    SimConfig config;  ///< with p* and lambda_da resolved
    Trajectory trajectory;
    std::optional<OfflineBaseline> baseline;
};

/// Runs cfg.mode and, when a baseline interval is configured, the offline
/// baseline on the same disturbance path.
inline RunResult run_simulation(const SimConfig& config, const DisturbanceSchedule& schedule) {
    RunResult out;
    out.config = detail::prepare(config, schedule);
    const auto& cfg = out.config;
    out.trajectory = cfg.mode == Mode::controller ? closed_loop(cfg, schedule) : integrate(cfg, schedule, cfg.mode);
    if (cfg.baseline_interval)
        out.baseline = offline_baseline(cfg.generators, cfg.grid, schedule, *cfg.baseline_interval, cfg.horizon,
                                        cfg.dt_physics, cfg.dt_sample, cfg.tolerances);
    return out;
}

}  // namespace freqprice
