#pragma once

// Disturbance signals: demand steps, generator outages and a seeded Wiener
// demand process sampled on the physics grid.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dispatch.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace freqprice {

struct DemandStep {
    double t = 0.0;       ///< s
    double amount = 0.0;  ///< MW, added to delta from t onward
};

struct OutageEvent {
    double t = 0.0;
    std::size_t generator = 0;  ///< 0-based index into the fleet
};

struct WienerSpec {
    double sigma = 1.0;  ///< diffusion scale, MW per sqrt(s)
    unsigned long long seed = 0;
};

struct DisturbanceSchedule {
    std::string id = "custom";  ///< also names the RNG stream
    std::vector<DemandStep> steps;
    std::vector<OutageEvent> outages;
    std::optional<WienerSpec> wiener;
};

/// Index of the first physics step whose time is at or after t.
inline long long step_index(double t, double dt_physics) {
    return static_cast<long long>(std::ceil(t / dt_physics - 1e-9));
}

inline std::vector<ValidationError> validate_schedule(const DisturbanceSchedule& s, std::size_t fleet_size,
                                                      double horizon) {
    std::vector<ValidationError> errs;
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const auto& e = s.steps[i];
        if (!(e.t >= 0.0 && e.t <= horizon))
            errs.push_back({"scenario.step[" + std::to_string(i + 1) + "].t",
                            "event time " + detail::fmt_num(e.t) + " outside [0, horizon]"});
        if (!std::isfinite(e.amount))
            errs.push_back({"scenario.step[" + std::to_string(i + 1) + "].amount", "amount must be finite"});
    }
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < s.outages.size(); ++i) {
        const auto& e = s.outages[i];
        const std::string f = "scenario.outage[" + std::to_string(i + 1) + "]";
        if (!(e.t >= 0.0 && e.t <= horizon))
            errs.push_back({f + ".t", "event time " + detail::fmt_num(e.t) + " outside [0, horizon]"});
        if (e.generator >= fleet_size)
            errs.push_back({f + ".generator", "generator index " + std::to_string(e.generator + 1) + " out of range"});
        else if (!seen.insert(e.generator).second)
            errs.push_back({f + ".generator", "generator " + std::to_string(e.generator + 1) + " has more than one outage"});
    }
    if (s.wiener && !(s.wiener->sigma >= 0.0)) errs.push_back({"scenario.wiener.sigma", "sigma must be >= 0"});
    return errs;
}

/// Running state of the Wiener component: one increment per physics step.
struct WienerState {
    NormalStream rng;
    long long step = 0;
    double value = 0.0;
};

inline WienerState make_wiener_state(const DisturbanceSchedule& s) {
    WienerState w;
    if (s.wiener) w.rng = NormalStream(s.wiener->seed, s.id);
    return w;
}

inline double step_component(const DisturbanceSchedule& s, long long k, double dt_physics) {
    double d = 0.0;
    for (const auto& e : s.steps)
        if (step_index(e.t, dt_physics) <= k) d += e.amount;
    return d;
}

/// Disturbance at time t (snapped down to the physics grid). Wiener
/// increments sigma*sqrt(dt)*N(0,1) are drawn for every physics step between
/// the state's position and t, so calls must be made with nondecreasing t.
inline double delta_at(const DisturbanceSchedule& s, double t, double dt_physics, WienerState& state) {
    const auto k = static_cast<long long>(std::floor(t / dt_physics + 1e-9));
    if (s.wiener) {
        const double scale = s.wiener->sigma * std::sqrt(dt_physics);
        while (state.step < k) {
            state.value += scale * state.rng.next();
            ++state.step;
        }
    }
    return step_component(s, k, dt_physics) + state.value;
}

/// Step-indexed view of delta_at used by the integrators.
class DisturbanceSignal {
public:
    DisturbanceSignal(const DisturbanceSchedule& schedule, double dt_physics)
        : schedule_(&schedule), dt_(dt_physics), wiener_(make_wiener_state(schedule)) {}

    double at_step(long long k) { return delta_at(*schedule_, static_cast<double>(k) * dt_, dt_, wiener_); }

    /// Outages that take effect exactly at physics step k.
    [[nodiscard]] std::vector<OutageEvent> outages_at_step(long long k) const {
        std::vector<OutageEvent> due;
        for (const auto& e : schedule_->outages)
            if (step_index(e.t, dt_) == k) due.push_back(e);
        return due;
    }

private:
    const DisturbanceSchedule* schedule_;
    double dt_;
    WienerState wiener_;
};

/// delta sampled at physics steps 0..n_steps inclusive.
inline std::vector<double> delta_path(const DisturbanceSchedule& s, double dt_physics, long long n_steps) {
    DisturbanceSignal sig(s, dt_physics);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_steps + 1));
    for (long long k = 0; k <= n_steps; ++k) out.push_back(sig.at_step(k));
    return out;
}

/// Forces the generator's output to zero. Other generators are untouched.
inline Fleet apply_outage(Fleet fleet, const OutageEvent& event) {
    if (event.generator >= fleet.size())
        throw Error(ErrorKind::invalid_argument,
                    "apply_outage: invalid generator index " + std::to_string(event.generator + 1));
    auto& g = fleet[event.generator];
    if (!g.in_service)
        throw Error(ErrorKind::invalid_argument,
                    "apply_outage: generator " + std::to_string(event.generator + 1) + " is already out");
    g.p_min = 0.0;
    g.p_max = 0.0;
    g.in_service = false;
    return fleet;
}

/// Fleet as it stands at time t: every outage with event time <= t applied.
inline Fleet fleet_at(Fleet fleet, const DisturbanceSchedule& s, double t, double dt_physics) {
    const auto k = static_cast<long long>(std::floor(t / dt_physics + 1e-9));
    for (const auto& e : s.outages)
        if (step_index(e.t, dt_physics) <= k) fleet = apply_outage(std::move(fleet), e);
    return fleet;
}

// Canned experiments ------------------------------------------------------

inline constexpr double kReferenceQuadCosts[] = {0.01, 0.01125, 0.0125, 0.01375, 0.015};

/// Five fully dispatchable 50 MW units, c = 27.4 $/MWh, quadratic costs
/// evenly spaced over [0.01, 0.015].
inline Fleet reference_fleet() {
    Fleet f;
    for (double q : kReferenceQuadCosts) {
        GeneratorParams g;
        g.quad_cost = q;
        g.lin_cost = 27.4;
        g.p_min = 0.0;
        g.p_max = 50.0;
        f.push_back(g);
    }
    return f;
}

/// Flow gains used by the shipped configurations. The unit-gain flows are
/// not stable under forward Euler at dt = 0.05 s with this fleet.
inline FlowGains stable_flow_gains() { return {20.0, 0.01}; }

inline SimConfig reference_config() {
    SimConfig cfg;
    cfg.generators = reference_fleet();
    cfg.grid = GridParams{12.0, 35.0, 60.0, 200.0};
    cfg.dt_physics = 0.05;
    cfg.dt_sample = 0.25;
    cfg.horizon = 600.0;
    cfg.mode = Mode::controller;
    cfg.gains = stable_flow_gains();
    apply_day_ahead(cfg);
    return cfg;
}

inline std::size_t highest_cost_generator(const Fleet& fleet) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < fleet.size(); ++i)
        if (fleet[i].quad_cost > fleet[best].quad_cost) best = i;
    return best;
}

/// Demand step of -30 MW at 30 s, outage of the most expensive unit at 300 s.
inline std::pair<SimConfig, DisturbanceSchedule> paper_scenario_a() {
    auto cfg = reference_config();
    DisturbanceSchedule s;
    s.id = "scenario_a";
    s.steps.push_back({30.0, -30.0});
    s.outages.push_back({300.0, highest_cost_generator(cfg.generators)});
    return {cfg, s};
}

/// Wiener demand with sigma = 1 MW/sqrt(s), offline repricing every 300 s.
inline std::pair<SimConfig, DisturbanceSchedule> paper_scenario_b(unsigned long long seed) {
    auto cfg = reference_config();
    cfg.seed = seed;
    cfg.baseline_interval = 300.0;
    DisturbanceSchedule s;
    s.id = "scenario_b";
    s.wiener = WienerSpec{1.0, seed};
    return {cfg, s};
}

}  // namespace freqprice
