#pragma once

#include <optional>
#include <vector>

#include "model.hpp"

namespace freqprice {

/// One sampled row of a simulation.
///
/// For the continuous flows `lambda` is the price state and `r` the
/// regulation at time t. For the closed-loop controller `lambda` is the
/// real-time price computed at t and `r` is the setpoint cleared against it,
/// which the plant runs from the next sampling instant on; `profit` settles
/// that setpoint at that price.
struct TimeSeriesRecord {
    double t = 0.0;
    double omega = 0.0;           ///< Hz deviation
    double omega_dot = 0.0;       ///< Hz/s used by the price (estimate for the controller)
    double omega_integral = 0.0;  ///< Hz*s, left-rectangle sum of sampled omega
    double delta = 0.0;
    double lambda = 0.0;  ///< $/MWh
    double pi = 0.0;      ///< lambda - lambda_da for flows, PID adjustment for the controller
    double gamma = 1.0;
    std::vector<double> r;
    std::vector<double> g;
    std::vector<double> profit;  ///< $/h
};

struct Trajectory {
    Mode mode = Mode::controller;
    double lambda_da = 0.0;
    double dt_sample = 0.0;
    Fleet fleet;  ///< fleet at t = 0 (p* filled in)
    GridParams grid;
    std::vector<TimeSeriesRecord> records;
    /// Flows only: start of the first 1 s window in which every derivative
    /// stayed below 1e-6.
    std::optional<double> equilibrium_time;
};

}  // namespace freqprice
