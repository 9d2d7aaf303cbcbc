#pragma once

// Output artifacts: the trajectory CSV, run summary, run manifest and the
// disturbance schedule, all plain text.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baseline.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "trajectory.hpp"

namespace freqprice {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCsvFormatVersion = "1";

namespace detail {

inline void put_num(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out += buf;
}

}  // namespace detail

/// Column names in output order.
inline std::vector<std::string> csv_header(std::size_t n_generators, bool with_baseline) {
    std::vector<std::string> h{"t", "omega_hz", "freq_hz", "delta_mw", "lambda_rt", "pi"};
    for (std::size_t i = 1; i <= n_generators; ++i) h.push_back("g_" + std::to_string(i));
    for (std::size_t i = 1; i <= n_generators; ++i) h.push_back("profit_" + std::to_string(i));
    if (with_baseline) h.emplace_back("lambda_offline");
    return h;
}

/// One header row plus one row per record; 12 significant digits.
inline std::string trajectory_csv(const Trajectory& traj, const OfflineBaseline* baseline = nullptr) {
    if (baseline && baseline->lambda.size() != traj.records.size())
        throw Error(ErrorKind::timebase_mismatch, "trajectory_csv: baseline has " +
                                                      std::to_string(baseline->lambda.size()) + " samples, trajectory " +
                                                      std::to_string(traj.records.size()));
    std::string out;
    const auto header = csv_header(traj.fleet.size(), baseline != nullptr);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ',';
        out += header[j];
    }
    out += '\n';
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
        const auto& r = traj.records[k];
        detail::put_num(out, r.t);
        for (double v : {r.omega, traj.grid.f_nominal + r.omega, r.delta, r.lambda, r.pi}) {
            out += ',';
            detail::put_num(out, v);
        }
        for (double v : r.g) {
            out += ',';
            detail::put_num(out, v);
        }
        for (double v : r.profit) {
            out += ',';
            detail::put_num(out, v);
        }
        if (baseline) {
            out += ',';
            detail::put_num(out, baseline->lambda[k]);
        }
        out += '\n';
    }
    return out;
}

namespace detail {

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline std::string iso8601(std::chrono::system_clock::time_point tp) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

inline nlohmann::json summary_json(const Trajectory& traj, const std::string& scenario_id,
                                   const OfflineBaseline* baseline = nullptr) {
    const Summary s = summarize(traj);
    const auto cr = cost_recovery_report(traj);
    nlohmann::json j;
    j["manifest"] = "manifest.json";
    j["scenario_id"] = scenario_id;
    j["mode"] = to_string(traj.mode);
    j["lambda_da"] = traj.lambda_da;
    j["samples"] = s.samples;
    j["settling_time_s"] = detail::opt(s.settling_time);
    j["equilibrium_time_s"] = detail::opt(traj.equilibrium_time);
    j["peak_abs_omega_hz"] = s.peak_abs_omega;
    j["final_omega_hz"] = s.final_omega;
    j["final_lambda"] = s.final_lambda;
    j["energy_mwh"] = s.energy_mwh;
    j["cumulative_profit"] = s.cumulative_profit;
    j["cumulative_profit_trapezoid"] = s.cumulative_profit_trapezoid;
    j["min_profit"] = s.min_profit;
    double overall = std::numeric_limits<double>::infinity();
    for (double v : cr.min_profit) overall = std::min(overall, v);
    j["min_profit_overall"] = cr.min_profit.empty() ? nlohmann::json(nullptr) : nlohmann::json(overall);
    j["profit_violations"] = cr.violations;
    nlohmann::json first = nlohmann::json::array();
    for (const auto& t : cr.first_violation_t) first.push_back(detail::opt(t));
    j["first_violation_t"] = first;
    if (baseline) {
        const auto rows = compare_online_offline(traj, *baseline);
        nlohmann::json b;
        b["interval_s"] = baseline->interval;
        b["negative_profit_fraction_online"] = negative_profit_fraction(rows, PriceUsed::online);
        b["negative_profit_fraction_offline"] = negative_profit_fraction(rows, PriceUsed::offline);
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& seg : baseline->segments)
            segs.push_back({{"t_start", seg.t_start}, {"lambda", seg.lambda}, {"output", seg.output}});
        b["segments"] = segs;
        j["offline_baseline"] = b;
    }
    return j;
}

struct RunManifest {
    std::string config_hash;
    std::string scenario_id;
    unsigned long long seed = 0;
    Mode mode = Mode::controller;
    std::string tool_version = kToolVersion;
    std::string rng_algorithm = kRngAlgorithm;
    std::chrono::system_clock::time_point started;
    std::chrono::system_clock::time_point finished;
    std::vector<std::pair<std::string, std::string>> outputs;  ///< path, FNV-1a 64 of the content
};

inline nlohmann::json manifest_json(const RunManifest& m) {
    nlohmann::json j;
    j["config_hash"] = m.config_hash;
    j["scenario_id"] = m.scenario_id;
    j["seed"] = m.seed;
    j["mode"] = to_string(m.mode);
    j["tool_version"] = m.tool_version;
    j["csv_format_version"] = kCsvFormatVersion;
    j["rng_algorithm"] = m.rng_algorithm;
    j["started_at"] = detail::iso8601(m.started);
    j["finished_at"] = detail::iso8601(m.finished);
    j["wall_seconds"] = std::chrono::duration<double>(m.finished - m.started).count();
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& [path, hash] : m.outputs) outs.push_back({{"path", path}, {"fnv1a64", hash}});
    j["outputs"] = outs;
    return j;
}

/// Standalone description of a disturbance schedule, enough to regenerate
/// its delta path.
inline nlohmann::json schedule_json(const DisturbanceSchedule& s, double dt_physics) {
    nlohmann::json j;
    j["id"] = s.id;
    j["dt_physics"] = dt_physics;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& st : s.steps) steps.push_back({{"t", st.t}, {"amount", st.amount}});
    j["steps"] = steps;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& e : s.outages) outs.push_back({{"t", e.t}, {"generator", e.generator + 1}});
    j["outages"] = outs;
    if (s.wiener) {
        j["wiener"] = {{"sigma", s.wiener->sigma},
                       {"seed", s.wiener->seed},
                       {"stream_id", s.id},
                       {"rng_algorithm", kRngAlgorithm},
                       {"stream_seed", stream_seed(s.wiener->seed, s.id)}};
    } else {
        j["wiener"] = nullptr;
    }
    return j;
}

}  // namespace freqprice
