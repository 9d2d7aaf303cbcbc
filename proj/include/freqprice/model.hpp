#pragma once

// Domain types and elementary cost evaluations shared by the whole library.
//
// Units used throughout:
//   power           MW
//   frequency       Hz (omega is the deviation from f_nominal)
//   price           $/MWh
//   cost / profit   $/h (instantaneous rate)
//   inertia         MW*s/Hz, damping MW/Hz

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace freqprice {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class ErrorKind { invalid_argument, config_invalid, infeasible_demand, integration_diverged, timebase_mismatch };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by dispatch when the fleet cannot meet the requested demand.
class InfeasibleDemand : public Error {
public:
    InfeasibleDemand(double shortfall_mw, const std::string& what)
        : Error(ErrorKind::infeasible_demand, what), shortfall_mw_(shortfall_mw) {}
    /// Positive when demand exceeds capacity, negative when demand is below the sum of minimum outputs.
    [[nodiscard]] double shortfall_mw() const noexcept { return shortfall_mw_; }

private:
    double shortfall_mw_;
};

class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(long long step, const std::string& what)
        : Error(ErrorKind::integration_diverged, what), step_(step) {}
    [[nodiscard]] long long step() const noexcept { return step_; }

private:
    long long step_;
};

struct ValidationError {
    std::string field;
    std::string message;
};

class ConfigInvalid : public Error {
public:
    explicit ConfigInvalid(std::vector<ValidationError> errors)
        : Error(ErrorKind::config_invalid, summarize(errors)), errors_(std::move(errors)) {}
    ConfigInvalid(const std::string& field, const std::string& message)
        : ConfigInvalid(std::vector<ValidationError>{{field, message}}) {}
    [[nodiscard]] const std::vector<ValidationError>& errors() const noexcept { return errors_; }

private:
    static std::string summarize(const std::vector<ValidationError>& errors) {
        std::ostringstream os;
        os << errors.size() << " configuration error(s)";
        for (const auto& e : errors) os << "\n  " << e.field << ": " << e.message;
        return os.str();
    }
    std::vector<ValidationError> errors_;
};

struct GeneratorParams {
    double quad_cost = 0.0;  ///< C_ii, $/MWh^2
    double lin_cost = 0.0;   ///< c_i, $/MWh
    double p_min = 0.0;      ///< MW
    double p_max = 0.0;      ///< MW
    double p_star = kNaN;    ///< day-ahead setpoint, MW; NaN until cleared
    double eta = kNaN;       ///< controller step size, MW^2 h/$; NaN means 1/quad_cost
    bool in_service = true;
};

using Fleet = std::vector<GeneratorParams>;

struct GridParams {
    double inertia = 12.0;    ///< M, MW*s/Hz
    double damping = 35.0;    ///< D, MW/Hz
    double f_nominal = 60.0;  ///< Hz, display offset only
    double demand = 200.0;    ///< d, MW
};

enum class Mode { market_only, composite, reduced, controller };

inline const char* to_string(Mode m) {
    switch (m) {
    case Mode::market_only: return "market_only";
    case Mode::composite: return "composite";
    case Mode::reduced: return "reduced";
    case Mode::controller: return "controller";
    }
    return "?";
}

inline std::optional<Mode> parse_mode(const std::string& s) {
    if (s == "market_only") return Mode::market_only;
    if (s == "composite") return Mode::composite;
    if (s == "reduced") return Mode::reduced;
    if (s == "controller") return Mode::controller;
    return std::nullopt;
}

/// Per-equation time-scale gains of the continuous flows. The frequency
/// equation is physics and carries no gain.
struct FlowGains {
    double regulation = 1.0;
    double price = 1.0;
};

struct ControllerSettings {
    std::optional<double> inertia;  ///< controller's belief of M; plant value when empty
    std::optional<double> damping;  ///< controller's belief of D; plant value when empty
    bool price_floor = false;
    double price_floor_value = 0.0;
    bool exact_derivative = false;  ///< feed the exact swing RHS instead of the backward difference
};

struct Tolerances {
    double balance = 1e-9;
    double kkt = 1e-6;
};

struct SimConfig {
    Fleet generators;
    GridParams grid;
    double dt_physics = 0.05;
    double dt_sample = 0.25;
    double horizon = 600.0;
    Mode mode = Mode::controller;
    std::optional<double> lambda_da;  ///< cleared day-ahead price; computed when empty
    unsigned long long seed = 0;
    FlowGains gains;
    ControllerSettings controller;
    Tolerances tolerances;
    std::optional<double> baseline_interval;  ///< offline repricing interval, s
};

/// Cost rate in $/h at total output `output`.
inline double generator_cost(const GeneratorParams& g, double output) {
    return 0.5 * g.quad_cost * output * output + g.lin_cost * output;
}

inline double marginal_cost(const GeneratorParams& g, double output) {
    return g.quad_cost * output + g.lin_cost;
}

inline double project_box(double value, double lo, double hi) {
    if (lo > hi) {
        std::ostringstream os;
        os << "invalid bounds: lo=" << lo << " > hi=" << hi;
        throw Error(ErrorKind::invalid_argument, os.str());
    }
    return value < lo ? lo : (value > hi ? hi : value);
}

inline double effective_eta(const GeneratorParams& g) {
    return std::isnan(g.eta) ? 1.0 / g.quad_cost : g.eta;
}

/// Regulation box lo = p_min - p*, hi = p_max - p*.
struct RegulationBox {
    std::vector<double> lo;
    std::vector<double> hi;
};

inline RegulationBox regulation_box(const Fleet& fleet) {
    RegulationBox b;
    b.lo.reserve(fleet.size());
    b.hi.reserve(fleet.size());
    for (const auto& g : fleet) {
        b.lo.push_back(g.p_min - g.p_star);
        b.hi.push_back(g.p_max - g.p_star);
    }
    return b;
}

/// c(r) summed over the fleet, evaluated at g = p* + r.
inline double regulation_cost(const Fleet& fleet, const std::vector<double>& r) {
    double total = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) total += generator_cost(fleet[i], fleet[i].p_star + r[i]);
    return total;
}

inline double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

namespace detail {

inline bool is_integer_multiple(double value, double step) {
    if (!(step > 0.0) || !(value > 0.0)) return false;
    const double q = value / step;
    const double n = std::round(q);
    return n >= 1.0 && std::abs(q - n) <= 1e-9 * std::max(1.0, n);
}

inline long long steps_per(double value, double step) { return std::llround(value / step); }

inline std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace detail

/// Checks every invariant of the configuration and returns all violations.
/// A generator whose p_star is still NaN is checked only for p_min <= p_max.
inline std::vector<ValidationError> validate_config(const SimConfig& cfg) {
    std::vector<ValidationError> errs;
    auto add = [&](std::string field, std::string msg) { errs.push_back({std::move(field), std::move(msg)}); };
    using detail::fmt_num;

    if (cfg.generators.empty()) add("generator", "at least one generator is required");
    for (std::size_t i = 0; i < cfg.generators.size(); ++i) {
        const auto& g = cfg.generators[i];
        const std::string p = "generator[" + std::to_string(i + 1) + "].";
        if (!(g.quad_cost > 0.0)) add(p + "quad_cost", "quad_cost must be > 0 (got " + fmt_num(g.quad_cost) + ")");
        if (!std::isfinite(g.lin_cost)) add(p + "lin_cost", "lin_cost must be finite");
        if (!(g.p_min >= 0.0)) add(p + "p_min", "p_min must be >= 0 (got " + fmt_num(g.p_min) + ")");
        if (!(g.p_max >= g.p_min)) add(p + "p_max", "p_max must be >= p_min (got " + fmt_num(g.p_max) + ")");
        if (!std::isnan(g.p_star) && !(g.p_star >= g.p_min && g.p_star <= g.p_max))
            add(p + "p_star", "p_star must lie in [p_min, p_max] (got " + fmt_num(g.p_star) + ")");
        if (!std::isnan(g.eta) && !(g.eta > 0.0)) add(p + "eta", "eta must be > 0 (got " + fmt_num(g.eta) + ")");
    }
    if (!(cfg.grid.inertia > 0.0)) add("grid.inertia", "inertia must be > 0 (got " + fmt_num(cfg.grid.inertia) + ")");
    if (!(cfg.grid.damping > 0.0)) add("grid.damping", "damping must be > 0 (got " + fmt_num(cfg.grid.damping) + ")");
    if (!(cfg.grid.demand >= 0.0)) add("grid.demand", "demand must be >= 0 (got " + fmt_num(cfg.grid.demand) + ")");
    if (!(cfg.dt_physics > 0.0))
        add("simulation.dt_physics", "dt_physics must be > 0 (got " + fmt_num(cfg.dt_physics) + ")");
    if (!(cfg.horizon > 0.0)) add("simulation.horizon", "horizon must be > 0 (got " + fmt_num(cfg.horizon) + ")");
    if (cfg.dt_physics > 0.0 && !detail::is_integer_multiple(cfg.dt_sample, cfg.dt_physics))
        add("controller.dt_sample", "dt_sample (" + fmt_num(cfg.dt_sample) +
                                        ") is not an integer multiple of dt_physics (" + fmt_num(cfg.dt_physics) + ")");
    if (!(cfg.gains.regulation > 0.0)) add("dynamics.regulation_gain", "regulation_gain must be > 0");
    if (!(cfg.gains.price > 0.0)) add("dynamics.price_gain", "price_gain must be > 0");
    if (cfg.controller.inertia && !(*cfg.controller.inertia > 0.0))
        add("controller.inertia", "inertia override must be > 0");
    if (cfg.controller.damping && !(*cfg.controller.damping > 0.0))
        add("controller.damping", "damping override must be > 0");
    if (cfg.baseline_interval && !(*cfg.baseline_interval > 0.0))
        add("simulation.baseline_interval", "baseline_interval must be > 0");
    if (!(cfg.tolerances.balance > 0.0)) add("simulation.balance_tolerance", "balance_tolerance must be > 0");
    if (!(cfg.tolerances.kkt > 0.0)) add("simulation.kkt_tolerance", "kkt_tolerance must be > 0");
    return errs;
}

/// Throws ConfigInvalid carrying every violation; returns the config unchanged otherwise.
inline const SimConfig& require_valid(const SimConfig& cfg) {
    auto errs = validate_config(cfg);
    if (!errs.empty()) throw ConfigInvalid(std::move(errs));
    return cfg;
}

}  // namespace freqprice
