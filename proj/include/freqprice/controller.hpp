#pragma once

// Frequency-derived real-time pricing and the generators' discrete best
// response to it.
//
// Each controller tick samples the frequency deviation, forms the PID price
// adjustment
//
//     pi = -M*omega - D*integral(omega) - omega_dot / D
//
// publishes lambda_rt = lambda_da + pi, and every generator takes one
// projected gradient step toward its best response to lambda_rt. The
// resulting setpoint is held (zero-order hold) over the next sampling
// period.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "scenario.hpp"
#include "trajectory.hpp"

namespace freqprice {

struct ControllerState {
    double omega_integral = 0.0;  ///< Hz*s, left-rectangle sum over past samples
    double omega_prev = 0.0;
    double t_prev = 0.0;
    double pi_last = 0.0;
    double omega_dot_last = 0.0;
    double lambda_da = 0.0;
    bool started = false;
};

struct MeasuredSample {
    double t = 0.0;
    double omega = 0.0;
    std::optional<double> omega_dot_override;
};

/// PID price adjustment for one frequency sample. The rate of change is the
/// backward difference over the sampling interval (zero on the first
/// sample) unless the sample carries an exact value; the integral adds the
/// previous sample times the elapsed time.
inline std::pair<double, ControllerState> price_adjustment(const ControllerState& cs, const MeasuredSample& sample,
                                                           const GridParams& grid) {
    if (cs.started && !(sample.t > cs.t_prev))
        throw Error(ErrorKind::invalid_argument, "price_adjustment: non-monotone sample time " +
                                                     detail::fmt_num(sample.t) + " after " +
                                                     detail::fmt_num(cs.t_prev));
    ControllerState next = cs;
    const double h = cs.started ? sample.t - cs.t_prev : 0.0;
    double omega_dot = 0.0;
    if (sample.omega_dot_override)
        omega_dot = *sample.omega_dot_override;
    else if (cs.started)
        omega_dot = (sample.omega - cs.omega_prev) / h;
    if (cs.started) next.omega_integral += cs.omega_prev * h;

    const double pi = -grid.inertia * sample.omega - grid.damping * next.omega_integral - omega_dot / grid.damping;
    next.omega_prev = sample.omega;
    next.t_prev = sample.t;
    next.pi_last = pi;
    next.omega_dot_last = omega_dot;
    next.started = true;
    return {pi, next};
}

inline double rt_price(const ControllerState& cs, double pi) { return cs.lambda_da + pi; }

/// One generator's projected step. Reads nothing beyond its own parameters,
/// its own regulation and the broadcast price.
inline double regulation_update(double r, double lambda_rt, const GeneratorParams& gen) {
    const double step = effective_eta(gen) * (lambda_rt - marginal_cost(gen, gen.p_star + r));
    return project_box(r + step, gen.p_min - gen.p_star, gen.p_max - gen.p_star);
}

inline std::vector<double> regulation_update(const std::vector<double>& r, double lambda_rt, const Fleet& fleet) {
    std::vector<double> next(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) next[i] = regulation_update(r[i], lambda_rt, fleet[i]);
    return next;
}

/// Step sizes 1/C_ii, under which every cleared setpoint earns a nonnegative profit.
inline std::vector<double> default_step_sizes(const Fleet& fleet) {
    std::vector<double> eta;
    eta.reserve(fleet.size());
    for (const auto& g : fleet) eta.push_back(1.0 / g.quad_cost);
    return eta;
}

/// Frequency and price parameters the controller believes in.
inline GridParams controller_grid(const SimConfig& cfg) {
    GridParams g = cfg.grid;
    if (cfg.controller.inertia) g.inertia = *cfg.controller.inertia;
    if (cfg.controller.damping) g.damping = *cfg.controller.damping;
    return g;
}

/// Hybrid loop: swing equation integrated by forward Euler at dt_physics,
/// controller ticks every dt_sample. The setpoint computed at a tick is
/// applied to the plant at the following tick; until then the plant runs
/// the setpoint of the previous tick. An outage acts on the plant
/// immediately.
inline Trajectory closed_loop(const SimConfig& config, const DisturbanceSchedule& schedule) {
    const SimConfig cfg = detail::prepare(config, schedule);
    const double dt = cfg.dt_physics;
    const long long sub = detail::steps_per(cfg.dt_sample, dt);
    const long long n_phys = detail::sample_count(cfg) * sub;
    const GridParams believed = controller_grid(cfg);

    Fleet fleet = cfg.generators;
    DisturbanceSignal signal(schedule, dt);

    Trajectory traj;
    traj.mode = Mode::controller;
    traj.lambda_da = *cfg.lambda_da;
    traj.dt_sample = cfg.dt_sample;
    traj.fleet = cfg.generators;
    traj.grid = cfg.grid;
    traj.records.reserve(static_cast<std::size_t>(detail::sample_count(cfg) + 1));

    SimState plant;
    plant.r.assign(fleet.size(), 0.0);
    std::vector<double> setpoint = plant.r;
    ControllerState cs;
    cs.lambda_da = *cfg.lambda_da;

    for (long long k = 0;; ++k) {
        plant.t = static_cast<double>(k) * dt;
        plant.delta = signal.at_step(k);
        for (const auto& e : signal.outages_at_step(k)) {
            fleet = apply_outage(std::move(fleet), e);
            const auto box = regulation_box(fleet);
            detail::project_state(plant.r, box);
            detail::project_state(setpoint, box);
        }

        if (k % sub == 0) {
            plant.r = setpoint;
            MeasuredSample sample{plant.t, plant.omega, std::nullopt};
            if (cfg.controller.exact_derivative) sample.omega_dot_override = swing_rhs(plant, cfg.grid);
            auto [pi, next] = price_adjustment(cs, sample, believed);
            cs = next;
            double lambda_rt = rt_price(cs, pi);
            if (cfg.controller.price_floor) lambda_rt = std::max(lambda_rt, cfg.controller.price_floor_value);
            setpoint = regulation_update(plant.r, lambda_rt, fleet);

            TimeSeriesRecord rec;
            rec.t = plant.t;
            rec.omega = plant.omega;
            rec.omega_dot = cs.omega_dot_last;
            rec.omega_integral = cs.omega_integral;
            rec.delta = plant.delta;
            rec.lambda = lambda_rt;
            rec.pi = pi;
            rec.r = setpoint;
            for (std::size_t i = 0; i < fleet.size(); ++i) {
                rec.g.push_back(fleet[i].p_star + setpoint[i]);
                rec.profit.push_back(profit(rec.g.back(), lambda_rt, fleet[i]));
            }
            traj.records.push_back(std::move(rec));
        }
        if (k == n_phys) break;

        plant.omega_integral += dt * plant.omega;
        plant.omega += dt * swing_rhs(plant, cfg.grid);
        detail::check_finite(plant, k + 1);
    }
    return traj;
}

}  // namespace freqprice
