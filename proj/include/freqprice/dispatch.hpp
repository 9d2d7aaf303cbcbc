#pragma once

// Economic dispatch with quadratic costs, box limits and one balance
// constraint, solved exactly by bisection on the shared price (lambda
// iteration / waterfilling).

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "model.hpp"

namespace freqprice {

enum class Binding { lower, interior, upper };

inline const char* to_string(Binding b) {
    switch (b) {
    case Binding::lower: return "lower";
    case Binding::interior: return "interior";
    case Binding::upper: return "upper";
    }
    return "?";
}

struct DispatchSolution {
    std::vector<double> output;  ///< g_i = p*_i + r*_i, MW
    std::vector<double> r_opt;   ///< regulation relative to p*; equals output while p* is unset
    double lambda_opt = kNaN;
    double total_cost = 0.0;
    std::vector<Binding> binding;
};

namespace detail {

inline double clamped_response(const GeneratorParams& g, double price) {
    return std::clamp((price - g.lin_cost) / g.quad_cost, g.p_min, g.p_max);
}

inline double fleet_response(const Fleet& fleet, double price) {
    double s = 0.0;
    for (const auto& g : fleet) s += clamped_response(g, price);
    return s;
}

inline void check_feasible(const Fleet& fleet, double target, double tol) {
    double lo = 0.0, hi = 0.0;
    for (const auto& g : fleet) {
        lo += g.p_min;
        hi += g.p_max;
    }
    if (target > hi + tol) {
        std::ostringstream os;
        os << "infeasible demand: " << target << " MW exceeds fleet capacity " << hi << " MW (shortfall "
           << target - hi << " MW)";
        throw InfeasibleDemand(target - hi, os.str());
    }
    if (target < lo - tol) {
        std::ostringstream os;
        os << "infeasible demand: " << target << " MW is below total minimum output " << lo << " MW (excess "
           << lo - target << " MW)";
        throw InfeasibleDemand(target - lo, os.str());
    }
}

inline void finish(const Fleet& fleet, DispatchSolution& sol) {
    sol.r_opt.resize(fleet.size());
    sol.binding.resize(fleet.size());
    sol.total_cost = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& g = fleet[i];
        const double p_star = std::isnan(g.p_star) ? 0.0 : g.p_star;
        sol.r_opt[i] = sol.output[i] - p_star;
        sol.total_cost += generator_cost(g, sol.output[i]);
    }
}

}  // namespace detail

/// Clears the market for a total output target. Fleet p* values are only
/// used to express the result as regulation.
inline DispatchSolution clear_market(const Fleet& fleet, double target, const Tolerances& tol = {}) {
    if (fleet.empty()) throw Error(ErrorKind::invalid_argument, "clear_market: empty fleet");
    detail::check_feasible(fleet, target, tol.balance);

    double sum_min = 0.0, sum_max = 0.0;
    for (const auto& g : fleet) {
        sum_min += g.p_min;
        sum_max += g.p_max;
    }

    DispatchSolution sol;
    sol.output.resize(fleet.size());

    // Corners: the clearing price is not unique there, take the boundary value.
    if (target <= sum_min + tol.balance) {
        double price = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < fleet.size(); ++i) {
            sol.output[i] = fleet[i].p_min;
            price = std::min(price, marginal_cost(fleet[i], fleet[i].p_min));
        }
        sol.lambda_opt = price;
        detail::finish(fleet, sol);
        std::fill(sol.binding.begin(), sol.binding.end(), Binding::lower);
        return sol;
    }
    if (target >= sum_max - tol.balance) {
        double price = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < fleet.size(); ++i) {
            sol.output[i] = fleet[i].p_max;
            price = std::max(price, marginal_cost(fleet[i], fleet[i].p_max));
        }
        sol.lambda_opt = price;
        detail::finish(fleet, sol);
        std::fill(sol.binding.begin(), sol.binding.end(), Binding::upper);
        return sol;
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& g : fleet) {
        lo = std::min(lo, g.lin_cost);
        hi = std::max(hi, marginal_cost(g, g.p_max));
    }
    lo -= 1.0;
    hi += 1.0;

    double price = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        price = 0.5 * (lo + hi);
        const double s = detail::fleet_response(fleet, price);
        if (std::abs(s - target) <= 0.5 * tol.balance) break;
        if (s < target)
            lo = price;
        else
            hi = price;
        if (!(hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(price)))) break;
    }

    sol.lambda_opt = price;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& g = fleet[i];
        const double raw = (price - g.lin_cost) / g.quad_cost;
        sol.output[i] = std::clamp(raw, g.p_min, g.p_max);
    }
    detail::finish(fleet, sol);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& g = fleet[i];
        const double raw = (price - g.lin_cost) / g.quad_cost;
        sol.binding[i] = raw <= g.p_min ? Binding::lower : (raw >= g.p_max ? Binding::upper : Binding::interior);
    }
    return sol;
}

/// Real-time economic dispatch: total output must equal d + delta.
inline DispatchSolution solve_ed(const Fleet& fleet, const GridParams& grid, double delta,
                                 const Tolerances& tol = {}) {
    return clear_market(fleet, grid.demand + delta, tol);
}

struct DayAhead {
    std::vector<double> p_star;
    double lambda_da = kNaN;
};

inline DayAhead day_ahead(const Fleet& fleet, const GridParams& grid, const Tolerances& tol = {}) {
    auto sol = clear_market(fleet, grid.demand, tol);
    return {sol.output, sol.lambda_opt};
}

/// Fills p_star (when any is unset) and lambda_da (when not overridden).
inline void apply_day_ahead(SimConfig& cfg) {
    const bool need_pstar =
        std::any_of(cfg.generators.begin(), cfg.generators.end(), [](const auto& g) { return std::isnan(g.p_star); });
    if (!need_pstar && cfg.lambda_da) return;
    auto da = day_ahead(cfg.generators, cfg.grid, cfg.tolerances);
    if (need_pstar)
        for (std::size_t i = 0; i < cfg.generators.size(); ++i) cfg.generators[i].p_star = da.p_star[i];
    if (!cfg.lambda_da) cfg.lambda_da = da.lambda_da;
}

/// Stationarity, sign-correct complementary slackness and balance residual.
/// Each generator is classified by where its output sits, not by the
/// solution's binding flags.
inline double kkt_residual(const Fleet& fleet, const DispatchSolution& sol, double demand) {
    constexpr double at_bound = 1e-9;
    double stationarity = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& g = fleet[i];
        const double out = sol.output[i];
        total += out;
        const double gap = sol.lambda_opt - marginal_cost(g, out);
        const bool low = out <= g.p_min + at_bound;
        const bool high = out >= g.p_max - at_bound;
        double v = 0.0;
        if (low && high)
            v = 0.0;
        else if (low)
            v = std::max(0.0, gap);
        else if (high)
            v = std::max(0.0, -gap);
        else
            v = std::abs(gap);
        v = std::max({v, g.p_min - out, out - g.p_max});
        stationarity = std::max(stationarity, v);
    }
    return stationarity + std::abs(total - demand);
}

/// Exhaustive grid search, for fleets of at most three generators. The last
/// generator absorbs the balance so every candidate is exactly balanced.
inline DispatchSolution brute_force_ed(const Fleet& fleet, double demand, double resolution) {
    if (fleet.empty() || fleet.size() > 3)
        throw Error(ErrorKind::invalid_argument, "brute_force_ed: fleet size must be 1..3");
    if (!(resolution > 0.0)) throw Error(ErrorKind::invalid_argument, "brute_force_ed: resolution must be > 0");
    detail::check_feasible(fleet, demand, 1e-12);

    const std::size_t n = fleet.size();
    std::vector<double> best(n, kNaN), cur(n, 0.0);
    double best_cost = std::numeric_limits<double>::infinity();

    // Candidate values of generator k given the demand still to be served by
    // generators k..n-1: the grid plus both feasible endpoints.
    auto candidates = [&](std::size_t k, double rest) {
        double tail_min = 0.0, tail_max = 0.0;
        for (std::size_t j = k + 1; j < n; ++j) {
            tail_min += fleet[j].p_min;
            tail_max += fleet[j].p_max;
        }
        const double a = std::max(fleet[k].p_min, rest - tail_max);
        const double b = std::min(fleet[k].p_max, rest - tail_min);
        std::vector<double> out;
        if (a > b + 1e-12) return out;
        out.push_back(a);
        const auto first = static_cast<long long>(std::ceil((a - fleet[k].p_min) / resolution));
        for (long long m = std::max(0LL, first);; ++m) {
            const double v = fleet[k].p_min + static_cast<double>(m) * resolution;
            if (v >= b) break;
            if (v > a) out.push_back(v);
        }
        if (b > a) out.push_back(b);
        return out;
    };

    auto evaluate = [&] {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) cost += generator_cost(fleet[i], cur[i]);
        if (cost < best_cost) {
            best_cost = cost;
            best = cur;
        }
    };

    auto recurse = [&](auto&& self, std::size_t k, double rest) -> void {
        if (k + 1 == n) {
            cur[k] = std::clamp(rest, fleet[k].p_min, fleet[k].p_max);
            evaluate();
            return;
        }
        for (double v : candidates(k, rest)) {
            cur[k] = v;
            self(self, k + 1, rest - v);
        }
    };
    recurse(recurse, 0, demand);

    DispatchSolution sol;
    sol.output = best;
    detail::finish(fleet, sol);
    constexpr double eps = 1e-12;
    double lam = kNaN;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = fleet[i];
        if (best[i] <= g.p_min + eps)
            sol.binding[i] = Binding::lower;
        else if (best[i] >= g.p_max - eps)
            sol.binding[i] = Binding::upper;
        else {
            sol.binding[i] = Binding::interior;
            if (std::isnan(lam)) lam = marginal_cost(g, best[i]);
        }
    }
    if (std::isnan(lam)) {
        const bool all_low =
            std::all_of(sol.binding.begin(), sol.binding.end(), [](Binding b) { return b == Binding::lower; });
        lam = all_low ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double mc = marginal_cost(fleet[i], best[i]);
            lam = all_low ? std::min(lam, mc) : (sol.binding[i] == Binding::upper ? std::max(lam, mc) : lam);
        }
    }
    sol.lambda_opt = lam;
    return sol;
}

}  // namespace freqprice
