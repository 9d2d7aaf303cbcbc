#pragma once

// Continuous-time market and frequency flows and their fixed-step
// forward-Euler integration.
//
//   market_only: r, lambda                tatonnement on the dispatch Lagrangian
//   composite:   r, omega, lambda, gamma  saddle flow of the composite Lagrangian
//   reduced:     r, omega, lambda         composite flow with gamma held at 1

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dispatch.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "scenario.hpp"
#include "trajectory.hpp"

namespace freqprice {

struct SimState {
    double t = 0.0;
    std::vector<double> r;
    double omega = 0.0;
    double lambda = 0.0;
    double gamma = 1.0;
    double omega_integral = 0.0;
    double delta = 0.0;
};

struct FlowDerivative {
    std::vector<double> r_dot;
    double omega_dot = 0.0;
    double lambda_dot = 0.0;
    double gamma_dot = 0.0;
};

inline constexpr double kBoundaryTolerance = 1e-12;

/// Power imbalance sum(r) - D*omega - delta, MW.
inline double imbalance(const SimState& s, const GridParams& grid) {
    return sum(s.r) - grid.damping * s.omega - s.delta;
}

inline double swing_rhs(const SimState& s, const GridParams& grid) { return imbalance(s, grid) / grid.inertia; }

/// Tangent-cone projection of a velocity at a point of the box.
inline std::vector<double> project_velocity(const std::vector<double>& r, const std::vector<double>& v,
                                            const RegulationBox& box) {
    std::vector<double> out(v);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= box.lo[i] + kBoundaryTolerance && v[i] < 0.0) out[i] = 0.0;
        if (r[i] >= box.hi[i] - kBoundaryTolerance && v[i] > 0.0) out[i] = 0.0;
    }
    return out;
}

namespace detail {

/// Projected regulation velocity for a common price signal.
inline std::vector<double> regulation_velocity(const SimState& s, const Fleet& fleet, double price, double gain) {
    std::vector<double> v(fleet.size());
    for (std::size_t i = 0; i < fleet.size(); ++i) v[i] = price - marginal_cost(fleet[i], fleet[i].p_star + s.r[i]);
    v = project_velocity(s.r, v, regulation_box(fleet));
    for (double& x : v) x *= gain;
    return v;
}

}  // namespace detail

inline FlowDerivative market_flow_rhs(const SimState& s, const Fleet& fleet, const FlowGains& gains = {}) {
    FlowDerivative d;
    d.r_dot = detail::regulation_velocity(s, fleet, s.lambda, gains.regulation);
    d.lambda_dot = gains.price * (s.delta - sum(s.r));
    return d;
}

inline FlowDerivative composite_flow_rhs(const SimState& s, const Fleet& fleet, const GridParams& grid,
                                         const FlowGains& gains = {}) {
    const double dm = grid.damping * grid.inertia;
    const double mismatch = imbalance(s, grid);
    FlowDerivative d;
    d.r_dot = detail::regulation_velocity(s, fleet, s.lambda - s.gamma / dm * mismatch, gains.regulation);
    d.omega_dot = s.gamma / grid.inertia * mismatch;
    d.lambda_dot = gains.price * (s.delta - sum(s.r));
    d.gamma_dot = mismatch * mismatch / (2.0 * dm);
    return d;
}

inline FlowDerivative reduced_flow_rhs(const SimState& s, const Fleet& fleet, const GridParams& grid,
                                       const FlowGains& gains = {}) {
    FlowDerivative d;
    d.omega_dot = swing_rhs(s, grid);
    d.r_dot = detail::regulation_velocity(s, fleet, s.lambda - d.omega_dot / grid.damping, gains.regulation);
    d.lambda_dot = gains.price * (s.delta - sum(s.r));
    return d;
}

inline FlowDerivative flow_rhs(Mode mode, const SimState& s, const Fleet& fleet, const GridParams& grid,
                               const FlowGains& gains) {
    switch (mode) {
    case Mode::market_only: return market_flow_rhs(s, fleet, gains);
    case Mode::composite: return composite_flow_rhs(s, fleet, grid, gains);
    case Mode::reduced: return reduced_flow_rhs(s, fleet, grid, gains);
    case Mode::controller: break;
    }
    throw Error(ErrorKind::invalid_argument, "flow_rhs: controller mode has no continuous flow");
}

/// Frequency Lyapunov function (D*omega - sum(r) + delta)^2 / (2DM).
inline double lyapunov_fd(const SimState& s, const GridParams& grid) {
    const double m = imbalance(s, grid);
    return m * m / (2.0 * grid.damping * grid.inertia);
}

/// c(r) + lambda*(delta - sum(r)).
inline double ed_lagrangian(const SimState& s, const Fleet& fleet) {
    return regulation_cost(fleet, s.r) + s.lambda * (s.delta - sum(s.r));
}

inline double composite_lagrangian(const SimState& s, const Fleet& fleet, const GridParams& grid) {
    return ed_lagrangian(s, fleet) + s.gamma * lyapunov_fd(s, grid);
}

namespace detail {

inline void check_finite(const SimState& s, long long step) {
    bool ok = std::isfinite(s.omega) && std::isfinite(s.lambda) && std::isfinite(s.gamma) &&
              std::isfinite(s.omega_integral);
    for (double x : s.r) ok = ok && std::isfinite(x);
    if (!ok) throw IntegrationDiverged(step, "integration diverged at step " + std::to_string(step));
}

inline void project_state(std::vector<double>& r, const RegulationBox& box) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::clamp(r[i], box.lo[i], box.hi[i]);
}

inline TimeSeriesRecord make_record(const SimState& s, double omega_dot, double lambda_da, const Fleet& fleet) {
    TimeSeriesRecord rec;
    rec.t = s.t;
    rec.omega = s.omega;
    rec.omega_dot = omega_dot;
    rec.omega_integral = s.omega_integral;
    rec.delta = s.delta;
    rec.lambda = s.lambda;
    rec.pi = s.lambda - lambda_da;
    rec.gamma = s.gamma;
    rec.r = s.r;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        rec.g.push_back(fleet[i].p_star + s.r[i]);
        rec.profit.push_back(profit(rec.g.back(), s.lambda, fleet[i]));
    }
    return rec;
}

/// Resolves p* and lambda_da and validates; shared by every simulator.
inline SimConfig prepare(SimConfig cfg, const DisturbanceSchedule& schedule) {
    auto errs = validate_config(cfg);
    auto serrs = validate_schedule(schedule, cfg.generators.size(), cfg.horizon);
    errs.insert(errs.end(), serrs.begin(), serrs.end());
    if (!errs.empty()) throw ConfigInvalid(std::move(errs));
    apply_day_ahead(cfg);
    require_valid(cfg);
    return cfg;
}

inline long long sample_count(const SimConfig& cfg) {
    return static_cast<long long>(std::floor(cfg.horizon / cfg.dt_sample + 1e-9));
}

}  // namespace detail

inline constexpr double kEquilibriumThreshold = 1e-6;
inline constexpr double kEquilibriumHold = 1.0;  ///< s

/// Forward Euler at dt_physics from r = 0, omega = 0, lambda = lambda_da,
/// gamma = 1. The regulation is re-projected onto the box after every step.
/// Records are taken every dt_sample; there are floor(horizon/dt_sample) + 1.
inline Trajectory integrate(const SimConfig& config, const DisturbanceSchedule& schedule, Mode mode) {
    if (mode == Mode::controller) throw Error(ErrorKind::invalid_argument, "integrate: use closed_loop for controller mode");
    const SimConfig cfg = detail::prepare(config, schedule);
    const double dt = cfg.dt_physics;
    const long long sub = detail::steps_per(cfg.dt_sample, dt);
    const long long n_phys = detail::sample_count(cfg) * sub;

    Fleet fleet = cfg.generators;
    RegulationBox box = regulation_box(fleet);
    DisturbanceSignal signal(schedule, dt);

    Trajectory traj;
    traj.mode = mode;
    traj.lambda_da = *cfg.lambda_da;
    traj.dt_sample = cfg.dt_sample;
    traj.fleet = cfg.generators;
    traj.grid = cfg.grid;
    traj.records.reserve(static_cast<std::size_t>(detail::sample_count(cfg) + 1));

    SimState s;
    s.r.assign(fleet.size(), 0.0);
    s.lambda = *cfg.lambda_da;
    std::optional<double> quiet_since;

    for (long long k = 0;; ++k) {
        s.t = static_cast<double>(k) * dt;
        s.delta = signal.at_step(k);
        for (const auto& e : signal.outages_at_step(k)) {
            fleet = apply_outage(std::move(fleet), e);
            box = regulation_box(fleet);
            detail::project_state(s.r, box);
        }
        const FlowDerivative d = flow_rhs(mode, s, fleet, cfg.grid, cfg.gains);

        double speed = std::max({std::abs(d.omega_dot), std::abs(d.lambda_dot)});
        for (double v : d.r_dot) speed = std::max(speed, std::abs(v));
        if (speed < kEquilibriumThreshold) {
            if (!quiet_since) quiet_since = s.t;
            if (!traj.equilibrium_time && s.t - *quiet_since >= kEquilibriumHold - 1e-9) traj.equilibrium_time = *quiet_since;
        } else {
            quiet_since.reset();
        }

        if (k % sub == 0) traj.records.push_back(detail::make_record(s, d.omega_dot, traj.lambda_da, fleet));
        if (k == n_phys) break;

        for (std::size_t i = 0; i < s.r.size(); ++i) s.r[i] += dt * d.r_dot[i];
        detail::project_state(s.r, box);
        s.omega_integral += dt * s.omega;
        s.omega += dt * d.omega_dot;
        s.lambda += dt * d.lambda_dot;
        s.gamma += dt * d.gamma_dot;
        detail::check_finite(s, k + 1);
    }
    return traj;
}

}  // namespace freqprice
