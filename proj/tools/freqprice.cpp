// freqprice: run scenarios, seed sweeps and the verification suite.
//
// Exit codes: 0 ok, 1 other failure (including failed verification),
// 2 invalid configuration, 3 integration diverged, 4 infeasible dispatch.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqprice/freqprice.hpp"

namespace fs = std::filesystem;
using namespace freqprice;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitInfeasible = 4;

int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::config_invalid: return kExitConfig;
    case ErrorKind::integration_diverged: return kExitDiverged;
    case ErrorKind::infeasible_demand: return kExitInfeasible;
    default: return kExitFailure;
    }
}

nlohmann::json error_json(const Error& e) {
    static const std::map<ErrorKind, const char*> names{{ErrorKind::invalid_argument, "invalid_argument"},
                                                        {ErrorKind::config_invalid, "config_invalid"},
                                                        {ErrorKind::infeasible_demand, "infeasible_dispatch"},
                                                        {ErrorKind::integration_diverged, "integration_diverged"},
                                                        {ErrorKind::timebase_mismatch, "timebase_mismatch"}};
    nlohmann::json j;
    j["error"] = names.at(e.kind());
    j["message"] = e.what();
    if (const auto* ci = dynamic_cast<const ConfigInvalid*>(&e)) {
        nlohmann::json errs = nlohmann::json::array();
        for (const auto& v : ci->errors()) errs.push_back({{"field", v.field}, {"message", v.message}});
        j["errors"] = errs;
    }
    if (const auto* d = dynamic_cast<const IntegrationDiverged*>(&e)) j["step"] = d->step();
    if (const auto* d = dynamic_cast<const InfeasibleDemand*>(&e)) j["shortfall_mw"] = d->shortfall_mw();
    return j;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

struct RunOutcome {
    nlohmann::json summary;
};

/// Runs one configuration and writes trajectory.csv, summary.json and manifest.json into dir.
RunOutcome execute_run(const LoadedConfig& lc, const fs::path& dir) {
    RunManifest manifest;
    manifest.started = std::chrono::system_clock::now();
    manifest.config_hash = lc.hash;
    manifest.scenario_id = lc.schedule.id;
    manifest.seed = lc.config.seed;
    manifest.mode = lc.config.mode;

    const auto run = run_simulation(lc.config, lc.schedule);
    const OfflineBaseline* baseline = run.baseline ? &*run.baseline : nullptr;
    const std::string csv = trajectory_csv(run.trajectory, baseline);
    auto summary = summary_json(run.trajectory, lc.schedule.id, baseline);
    const std::string summary_text = summary.dump(2) + "\n";

    fs::create_directories(dir);
    const fs::path csv_path = dir / "trajectory.csv";
    const fs::path summary_path = dir / "summary.json";
    write_file(csv_path, csv);
    write_file(summary_path, summary_text);
    manifest.finished = std::chrono::system_clock::now();
    manifest.outputs = {{csv_path.string(), detail::hex64(fnv1a64(csv))},
                        {summary_path.string(), detail::hex64(fnv1a64(summary_text))}};
    write_file(dir / "manifest.json", manifest_json(manifest).dump(2) + "\n");
    return {summary};
}

/// Sweepable parameters, applied on top of a loaded configuration.
void apply_param(LoadedConfig& lc, const std::string& name, double v) {
    auto& c = lc.config;
    if (name == "grid.inertia")
        c.grid.inertia = v;
    else if (name == "grid.damping")
        c.grid.damping = v;
    else if (name == "grid.demand")
        c.grid.demand = v;
    else if (name == "dynamics.regulation_gain")
        c.gains.regulation = v;
    else if (name == "dynamics.price_gain")
        c.gains.price = v;
    else if (name == "controller.eta_scale")
        for (auto& g : c.generators) g.eta = v * effective_eta(g);
    else if (name == "controller.price_floor_value") {
        c.controller.price_floor = true;
        c.controller.price_floor_value = v;
    } else if (name == "simulation.baseline_interval")
        c.baseline_interval = v;
    else if (name == "scenario.wiener.sigma" && lc.schedule.wiener)
        lc.schedule.wiener->sigma = v;
    else
        throw ConfigInvalid(name, "not a sweepable parameter");
    if (name == "grid.inertia" || name == "grid.damping" || name == "grid.demand")
        for (auto& g : c.generators) g.p_star = kNaN;  // re-derive the day-ahead schedule
    if (name == "grid.demand") c.lambda_da.reset();
}

struct ParamAxis {
    std::string name;
    std::vector<double> values;
};

ParamAxis parse_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigInvalid("--param", "expected name=v1,v2,... (got '" + spec + "')");
    ParamAxis axis{spec.substr(0, eq), {}};
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            axis.values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigInvalid("--param " + axis.name, "not a number: '" + item + "'");
        }
    }
    if (axis.values.empty()) throw ConfigInvalid("--param " + axis.name, "no values");
    return axis;
}

int cmd_run(const std::string& config, const std::optional<std::string>& mode, const std::string& out,
            const std::optional<unsigned long long>& seed, const std::optional<double>& baseline) {
    auto lc = load_config(config);
    if (mode) {
        auto m = parse_mode(*mode);
        if (!m) throw ConfigInvalid("--mode", "unknown mode '" + *mode + "'");
        lc.config.mode = *m;
    }
    if (seed) set_seed(lc, *seed);
    if (baseline) lc.config.baseline_interval = *baseline;
    const auto outcome = execute_run(lc, out);
    std::cout << "wrote " << (fs::path(out) / "trajectory.csv").string() << ", summary.json, manifest.json ("
              << outcome.summary["samples"] << " samples)\n";
    return kExitOk;
}

int cmd_sweep(const std::string& config, int n_seeds, unsigned long long seed_start,
              const std::vector<std::string>& params, const std::optional<std::string>& mode, const std::string& out) {
    if (n_seeds < 1) throw ConfigInvalid("--seeds", "must be >= 1");
    const auto base = load_config(config);
    std::vector<ParamAxis> axes;
    for (const auto& p : params) axes.push_back(parse_axis(p));

    struct Task {
        std::vector<std::pair<std::string, double>> params;
        unsigned long long seed;
        std::string name;
    };
    std::vector<std::vector<std::pair<std::string, double>>> combos{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<std::pair<std::string, double>>> next;
        for (const auto& c : combos)
            for (double v : axis.values) {
                auto c2 = c;
                c2.emplace_back(axis.name, v);
                next.push_back(std::move(c2));
            }
        combos = std::move(next);
    }
    std::vector<Task> tasks;
    for (std::size_t ci = 0; ci < combos.size(); ++ci)
        for (int s = 0; s < n_seeds; ++s) {
            const unsigned long long seed = seed_start + static_cast<unsigned long long>(s);
            std::string name = combos.size() > 1 ? "p" + std::to_string(ci) + "_seed_" + std::to_string(seed)
                                                 : "seed_" + std::to_string(seed);
            tasks.push_back({combos[ci], seed, name});
        }

    std::vector<nlohmann::json> results(tasks.size());
    std::vector<int> codes(tasks.size(), kExitOk);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& t = tasks[i];
            nlohmann::json r;
            r["run"] = t.name;
            r["seed"] = t.seed;
            nlohmann::json pj = nlohmann::json::object();
            for (const auto& [k, v] : t.params) pj[k] = v;
            r["params"] = pj;
            try {
                LoadedConfig lc = base;
                set_seed(lc, t.seed);
                if (mode) {
                    auto m = parse_mode(*mode);
                    if (!m) throw ConfigInvalid("--mode", "unknown mode '" + *mode + "'");
                    lc.config.mode = *m;
                }
                for (const auto& [k, v] : t.params) apply_param(lc, k, v);
                const auto outcome = execute_run(lc, fs::path(out) / t.name);
                r["status"] = "ok";
                r["min_profit"] = outcome.summary["min_profit_overall"];
                r["settling_time_s"] = outcome.summary["settling_time_s"];
                r["profit_violations"] = outcome.summary["profit_violations"];
            } catch (const Error& e) {
                codes[i] = exit_code_for(e);
                r["status"] = "failed";
                r["exit_code"] = codes[i];
                r["diagnostic"] = error_json(e);
            } catch (const std::exception& e) {
                codes[i] = kExitFailure;
                r["status"] = "failed";
                r["exit_code"] = codes[i];
                r["diagnostic"] = {{"error", "internal"}, {"message", e.what()}};
            }
            results[i] = std::move(r);
        }
    };

    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FREQPRICE_WORKERS")) {
        try {
            workers = static_cast<std::size_t>(std::max(1, std::stoi(env)));
        } catch (const std::exception&) {
            throw ConfigInvalid("FREQPRICE_WORKERS", std::string("not an integer: '") + env + "'");
        }
    }
    workers = std::min(workers, tasks.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    double min_profit = std::numeric_limits<double>::infinity();
    double settle_sum = 0.0;
    std::size_t settled = 0, failed = 0;
    std::ostringstream csv;
    csv << "run,seed,status,min_profit,settling_time_s,profit_violations\n";
    for (const auto& r : results) {
        const bool ok = r["status"] == "ok";
        if (!ok) ++failed;
        if (ok && r["min_profit"].is_number()) min_profit = std::min(min_profit, r["min_profit"].get<double>());
        if (ok && r["settling_time_s"].is_number()) {
            settle_sum += r["settling_time_s"].get<double>();
            ++settled;
        }
        auto cell = [&](const char* key) {
            if (!ok || !r[key].is_number()) return std::string();
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.12g", r[key].get<double>());
            return std::string(buf);
        };
        csv << r["run"].get<std::string>() << ',' << r["seed"].get<unsigned long long>() << ','
            << r["status"].get<std::string>() << ',' << cell("min_profit") << ',' << cell("settling_time_s") << ','
            << cell("profit_violations") << '\n';
    }
    nlohmann::json agg;
    agg["config_hash"] = base.hash;
    agg["scenario_id"] = base.schedule.id;
    agg["runs"] = results.size();
    agg["failed"] = failed;
    agg["workers"] = workers;
    agg["aggregate_min_profit"] = std::isfinite(min_profit) ? nlohmann::json(min_profit) : nlohmann::json(nullptr);
    agg["mean_settling_time_s"] = settled ? nlohmann::json(settle_sum / static_cast<double>(settled)) : nlohmann::json(nullptr);
    agg["settled_runs"] = settled;
    agg["results"] = results;
    fs::create_directories(out);
    write_file(fs::path(out) / "sweep_summary.json", agg.dump(2) + "\n");
    write_file(fs::path(out) / "sweep_summary.csv", csv.str());

    std::cout << results.size() << " runs, " << failed << " failed, aggregate min profit "
              << agg["aggregate_min_profit"] << ", mean settling time " << agg["mean_settling_time_s"] << "\n";
    for (std::size_t i = 0; i < codes.size(); ++i)
        if (codes[i] != kExitOk) {
            std::cerr << results[i]["diagnostic"].dump() << "\n";
            return codes[i];
        }
    return kExitOk;
}

int cmd_verify(const std::string& level_name, const std::optional<std::string>& report) {
    const VerifyLevel level = level_name == "full" ? VerifyLevel::full : VerifyLevel::fast;
    const auto results = run_verification(level);
    bool all = true;
    for (const auto& r : results) {
        std::cout << format_result(r) << "\n";
        all = all && r.passed;
    }
    const auto j = verification_json(results, level);
    if (report) write_file(*report, j.dump(2) + "\n");
    std::cout << (all ? "all criteria passed" : "some criteria FAILED") << "\n";
    return all ? kExitOk : kExitFailure;
}

int cmd_schedule(const std::string& config, const std::optional<unsigned long long>& seed,
                 const std::optional<std::string>& out) {
    auto lc = load_config(config);
    if (seed) set_seed(lc, *seed);
    const std::string text = schedule_json(lc.schedule, lc.config.dt_physics).dump(2) + "\n";
    if (out)
        write_file(*out, text);
    else
        std::cout << text;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-derived real-time pricing simulator"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string config, out = "out", level = "fast";
    std::optional<std::string> mode, report, schedule_out;
    std::optional<unsigned long long> seed;
    std::optional<double> baseline;
    int n_seeds = 1;
    unsigned long long seed_start = 1;
    std::vector<std::string> params;

    auto* run = app.add_subcommand("run", "simulate one configuration");
    run->add_option("config", config, "TOML configuration")->required();
    run->add_option("--mode", mode, "market_only | composite | reduced | controller");
    run->add_option("--out", out, "output directory")->capture_default_str();
    run->add_option("--seed", seed, "override the configured seed");
    run->add_option("--baseline-interval", baseline, "also compute the offline baseline (s)");

    auto* sweep = app.add_subcommand("sweep", "run seeds (and parameter grids) in parallel");
    sweep->add_option("config", config, "TOML configuration")->required();
    sweep->add_option("--seeds", n_seeds, "number of seeds")->capture_default_str();
    sweep->add_option("--seed-start", seed_start, "first seed")->capture_default_str();
    sweep->add_option("--param", params, "name=v1,v2,... (repeatable)");
    sweep->add_option("--mode", mode, "override the configured mode");
    sweep->add_option("--out", out, "output directory")->capture_default_str();

    auto* verify = app.add_subcommand("verify", "run the acceptance checks");
    verify->add_option("--level", level, "fast | full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
    verify->add_option("--report", report, "write a JSON report here");

    auto* sched = app.add_subcommand("schedule", "export the disturbance schedule as JSON");
    sched->add_option("config", config, "TOML configuration")->required();
    sched->add_option("--seed", seed, "override the configured seed");
    sched->add_option("--out", schedule_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config, mode, out, seed, baseline);
        if (*sweep) return cmd_sweep(config, n_seeds, seed_start, params, mode, out);
        if (*verify) return cmd_verify(level, report);
        if (*sched) return cmd_schedule(config, seed, schedule_out);
    } catch (const Error& e) {
        std::cerr << error_json(e).dump() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
