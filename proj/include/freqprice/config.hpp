#pragma once

// TOML configuration loader. Every problem found in a file (syntax, type,
// unknown key, violated invariant) is collected and reported together.
//
// Sections: [grid], [[generator]], [simulation], [controller], [dynamics],
// [scenario] with [[scenario.step]], [[scenario.outage]], [scenario.wiener].
// See README.md for every key, its unit and default.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "model.hpp"
#include "rng.hpp"
#include "scenario.hpp"

namespace freqprice {

struct LoadedConfig {
    SimConfig config;
    DisturbanceSchedule schedule;
    std::string source;  ///< raw file text
    std::string hash;    ///< FNV-1a 64 of the raw text, hex
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

class TomlReader {
public:
    explicit TomlReader(std::vector<ValidationError>& errs) : errs_(errs) {}

    void allowed_keys(const toml::table& t, const std::string& prefix, std::initializer_list<std::string_view> keys) {
        for (const auto& [k, v] : t) {
            bool known = false;
            for (auto a : keys) known = known || k.str() == a;
            if (!known) errs_.push_back({prefix + std::string(k.str()), "unknown key"});
        }
    }

    void number(const toml::table& t, const std::string& prefix, std::string_view key, double& out) {
        if (auto v = read_number(t, prefix, key)) out = *v;
    }

    void number(const toml::table& t, const std::string& prefix, std::string_view key, std::optional<double>& out) {
        if (auto v = read_number(t, prefix, key)) out = *v;
    }

    void boolean(const toml::table& t, const std::string& prefix, std::string_view key, bool& out) {
        const auto* node = t.get(key);
        if (!node) return;
        if (auto b = node->value<bool>())
            out = *b;
        else
            errs_.push_back({prefix + std::string(key), "expected a boolean"});
    }

    void string(const toml::table& t, const std::string& prefix, std::string_view key, std::optional<std::string>& out) {
        const auto* node = t.get(key);
        if (!node) return;
        if (auto s = node->value<std::string>())
            out = *s;
        else
            errs_.push_back({prefix + std::string(key), "expected a string"});
    }

    void integer(const toml::table& t, const std::string& prefix, std::string_view key, std::optional<long long>& out) {
        const auto* node = t.get(key);
        if (!node) return;
        if (node->is_integer())
            out = node->value<long long>();
        else
            errs_.push_back({prefix + std::string(key), "expected an integer"});
    }

    const toml::table* table(const toml::table& t, std::string_view key) {
        const auto* node = t.get(key);
        if (!node) return nullptr;
        if (const auto* tt = node->as_table()) return tt;
        errs_.push_back({std::string(key), "expected a table"});
        return nullptr;
    }

    std::vector<const toml::table*> table_array(const toml::table& t, std::string_view key, const std::string& name) {
        std::vector<const toml::table*> out;
        const auto* node = t.get(key);
        if (!node) return out;
        const auto* arr = node->as_array();
        if (!arr) {
            errs_.push_back({name, "expected an array of tables ([[" + name + "]])"});
            return out;
        }
        for (const auto& el : *arr) {
            if (const auto* tt = el.as_table())
                out.push_back(tt);
            else
                errs_.push_back({name, "expected an array of tables ([[" + name + "]])"});
        }
        return out;
    }

    void add(std::string field, std::string msg) { errs_.push_back({std::move(field), std::move(msg)}); }

private:
    std::optional<double> read_number(const toml::table& t, const std::string& prefix, std::string_view key) {
        const auto* node = t.get(key);
        if (!node) return std::nullopt;
        if (node->is_integer()) return static_cast<double>(*node->value<long long>());
        if (node->is_floating_point()) return *node->value<double>();
        errs_.push_back({prefix + std::string(key), "expected a number"});
        return std::nullopt;
    }

    std::vector<ValidationError>& errs_;
};

}  // namespace detail

/// Parses configuration text. Throws ConfigInvalid listing every problem.
inline LoadedConfig parse_config(std::string_view text) {
    std::vector<ValidationError> errs;
    LoadedConfig out;
    out.source = std::string(text);
    out.hash = detail::hex64(fnv1a64(text));

    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (line " << e.source().begin.line << ", column " << e.source().begin.column << ")";
        throw ConfigInvalid("toml", os.str());
    }

    detail::TomlReader rd(errs);
    rd.allowed_keys(root, "", {"grid", "generator", "simulation", "controller", "dynamics", "scenario"});
    auto& cfg = out.config;

    if (const auto* grid = rd.table(root, "grid")) {
        rd.allowed_keys(*grid, "grid.", {"inertia", "damping", "f_nominal", "demand"});
        rd.number(*grid, "grid.", "inertia", cfg.grid.inertia);
        rd.number(*grid, "grid.", "damping", cfg.grid.damping);
        rd.number(*grid, "grid.", "f_nominal", cfg.grid.f_nominal);
        rd.number(*grid, "grid.", "demand", cfg.grid.demand);
    }

    const auto gens = rd.table_array(root, "generator", "generator");
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const std::string p = "generator[" + std::to_string(i + 1) + "].";
        const auto& t = *gens[i];
        rd.allowed_keys(t, p, {"quad_cost", "lin_cost", "p_min", "p_max", "p_star", "eta"});
        GeneratorParams g;
        if (!t.contains("quad_cost")) rd.add(p + "quad_cost", "required");
        if (!t.contains("lin_cost")) rd.add(p + "lin_cost", "required");
        if (!t.contains("p_max")) rd.add(p + "p_max", "required");
        rd.number(t, p, "quad_cost", g.quad_cost);
        rd.number(t, p, "lin_cost", g.lin_cost);
        rd.number(t, p, "p_min", g.p_min);
        rd.number(t, p, "p_max", g.p_max);
        rd.number(t, p, "p_star", g.p_star);
        rd.number(t, p, "eta", g.eta);
        cfg.generators.push_back(g);
    }

    std::optional<double> dt_sample_sim;
    if (const auto* sim = rd.table(root, "simulation")) {
        const std::string p = "simulation.";
        rd.allowed_keys(*sim, p,
                        {"mode", "dt_physics", "dt_sample", "horizon", "seed", "lambda_da", "baseline_interval",
                         "balance_tolerance", "kkt_tolerance"});
        std::optional<std::string> mode;
        rd.string(*sim, p, "mode", mode);
        if (mode) {
            if (auto m = parse_mode(*mode))
                cfg.mode = *m;
            else
                rd.add(p + "mode", "unknown mode '" + *mode + "' (market_only|composite|reduced|controller)");
        }
        rd.number(*sim, p, "dt_physics", cfg.dt_physics);
        rd.number(*sim, p, "dt_sample", dt_sample_sim);
        rd.number(*sim, p, "horizon", cfg.horizon);
        std::optional<long long> seed;
        rd.integer(*sim, p, "seed", seed);
        if (seed) {
            if (*seed < 0)
                rd.add(p + "seed", "seed must be >= 0");
            else
                cfg.seed = static_cast<unsigned long long>(*seed);
        }
        rd.number(*sim, p, "lambda_da", cfg.lambda_da);
        rd.number(*sim, p, "baseline_interval", cfg.baseline_interval);
        rd.number(*sim, p, "balance_tolerance", cfg.tolerances.balance);
        rd.number(*sim, p, "kkt_tolerance", cfg.tolerances.kkt);
    }
    if (dt_sample_sim) cfg.dt_sample = *dt_sample_sim;

    std::optional<double> eta_scale;
    if (const auto* ctl = rd.table(root, "controller")) {
        const std::string p = "controller.";
        rd.allowed_keys(*ctl, p,
                        {"dt_sample", "eta", "eta_scale", "price_floor", "price_floor_value", "inertia", "damping",
                         "exact_derivative"});
        rd.number(*ctl, p, "dt_sample", cfg.dt_sample);
        rd.number(*ctl, p, "eta_scale", eta_scale);
        rd.boolean(*ctl, p, "price_floor", cfg.controller.price_floor);
        rd.number(*ctl, p, "price_floor_value", cfg.controller.price_floor_value);
        rd.number(*ctl, p, "inertia", cfg.controller.inertia);
        rd.number(*ctl, p, "damping", cfg.controller.damping);
        rd.boolean(*ctl, p, "exact_derivative", cfg.controller.exact_derivative);
        if (const auto* node = ctl->get("eta")) {
            const auto* arr = node->as_array();
            if (!arr || arr->size() != cfg.generators.size()) {
                rd.add(p + "eta", "expected an array with one step size per generator");
            } else {
                for (std::size_t i = 0; i < arr->size(); ++i) {
                    const auto& el = (*arr)[i];
                    if (el.is_number())
                        cfg.generators[i].eta = el.is_integer() ? static_cast<double>(*el.value<long long>())
                                                                : *el.value<double>();
                    else
                        rd.add(p + "eta[" + std::to_string(i + 1) + "]", "expected a number");
                }
            }
        }
    }
    if (eta_scale) {
        if (!(*eta_scale > 0.0))
            rd.add("controller.eta_scale", "eta_scale must be > 0");
        else
            for (auto& g : cfg.generators)
                if (g.quad_cost > 0.0) g.eta = *eta_scale * effective_eta(g);
    }

    if (const auto* dyn = rd.table(root, "dynamics")) {
        rd.allowed_keys(*dyn, "dynamics.", {"regulation_gain", "price_gain"});
        rd.number(*dyn, "dynamics.", "regulation_gain", cfg.gains.regulation);
        rd.number(*dyn, "dynamics.", "price_gain", cfg.gains.price);
    }

    auto& sched = out.schedule;
    if (const auto* sc = rd.table(root, "scenario")) {
        rd.allowed_keys(*sc, "scenario.", {"id", "step", "outage", "wiener"});
        std::optional<std::string> id;
        rd.string(*sc, "scenario.", "id", id);
        if (id) sched.id = *id;
        const auto steps = rd.table_array(*sc, "step", "scenario.step");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const std::string p = "scenario.step[" + std::to_string(i + 1) + "].";
            rd.allowed_keys(*steps[i], p, {"t", "amount"});
            DemandStep s;
            if (!steps[i]->contains("t") || !steps[i]->contains("amount")) rd.add(p.substr(0, p.size() - 1), "t and amount are required");
            rd.number(*steps[i], p, "t", s.t);
            rd.number(*steps[i], p, "amount", s.amount);
            sched.steps.push_back(s);
        }
        const auto outages = rd.table_array(*sc, "outage", "scenario.outage");
        for (std::size_t i = 0; i < outages.size(); ++i) {
            const std::string p = "scenario.outage[" + std::to_string(i + 1) + "].";
            rd.allowed_keys(*outages[i], p, {"t", "generator"});
            OutageEvent e;
            rd.number(*outages[i], p, "t", e.t);
            std::optional<long long> gen;
            rd.integer(*outages[i], p, "generator", gen);
            if (!gen || *gen < 1)
                rd.add(p + "generator", "required, 1-based generator number");
            else
                e.generator = static_cast<std::size_t>(*gen - 1);
            sched.outages.push_back(e);
        }
        if (const auto* w = rd.table(*sc, "wiener")) {
            rd.allowed_keys(*w, "scenario.wiener.", {"sigma", "seed"});
            WienerSpec ws;
            ws.seed = cfg.seed;
            rd.number(*w, "scenario.wiener.", "sigma", ws.sigma);
            std::optional<long long> wseed;
            rd.integer(*w, "scenario.wiener.", "seed", wseed);
            if (wseed) ws.seed = static_cast<unsigned long long>(*wseed);
            sched.wiener = ws;
        }
    }

    auto verrs = validate_config(cfg);
    errs.insert(errs.end(), verrs.begin(), verrs.end());
    auto serrs = validate_schedule(sched, cfg.generators.size(), cfg.horizon);
    errs.insert(errs.end(), serrs.begin(), serrs.end());
    if (!errs.empty()) throw ConfigInvalid(std::move(errs));
    return out;
}

inline LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigInvalid("file", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Overrides the run seed; the Wiener stream follows it.
inline void set_seed(LoadedConfig& lc, unsigned long long seed) {
    lc.config.seed = seed;
    if (lc.schedule.wiener) lc.schedule.wiener->seed = seed;
}

}  // namespace freqprice
