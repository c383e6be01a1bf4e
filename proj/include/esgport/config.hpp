#pragma once

// Run configuration (JSON). Relative data paths resolve against the config
// file's directory. Every violation is reported with the offending key path.
//
// {
//   "data":   { "prices": "prices.csv", "esg": "esg.csv", "index_weights": "index_weights.csv" },
//   "grid":   { "modes": ["standard", "black_litterman"], "lambda": [...], "alpha": [...],
//               "rho_standard": [...], "rho_bl": [...], "beta": [...], "scenarios": 10000 },
//   "strategies": [ { "mode": "bl", "lambda": 0.25, "alpha": 0.3, "rho": 0.0005,
//                     "beta": 0.95, "scenarios": 10000 } ],
//   "engine": { "window": 1007, "test_days": 0, "tau": 0.05, "risk_aversion": 2.5,
//               "kappa": "auto", "normalization": "zscore", "shrink": "mean",
//               "mixing": "correlation", "bounds": "long_only", "seed": 20240101,
//               "risk_free_daily": 0, "benchmark_beta": 0.95,
//               "views": [ { "picks": { "AAPL": 1, "MSFT": -1 }, "value": 0.0001,
//                            "uncertainty": 1e-6 } ] },
//   "output": { "dir": "results" },
//   "jobs": 0
// }

#include "esgport/backtest.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace esgport {

using Json = nlohmann::json;

struct ConfigIssues : ConfigError {
    std::vector<std::string> issues;
    explicit ConfigIssues(std::vector<std::string> list)
        : ConfigError(join(list)), issues(std::move(list)) {}

private:
    static std::string join(const std::vector<std::string>& list) {
        std::string s;
        for (const auto& i : list) s += (s.empty() ? "" : "\n") + i;
        return s;
    }
};

struct DataPaths {
    std::string prices;
    std::string esg;
    std::string index_weights;
};

struct RunConfig {
    DataPaths data;                 // as written in the file
    std::filesystem::path base_dir; // directory of the config file
    std::optional<GridSpec> grid;
    std::vector<StrategyConfig> extra_strategies;
    EngineConfig engine;
    std::string output_dir = "results";
    std::size_t jobs = 0;  // 0: available cores
    Json source;           // parsed document, echoed into the manifest

    std::filesystem::path resolve(const std::string& p) const {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }

    std::vector<StrategyConfig> strategies() const {
        std::vector<StrategyConfig> out;
        if (grid) out = grid->expand();
        out.insert(out.end(), extra_strategies.begin(), extra_strategies.end());
        return out;
    }
};

namespace detail {

class JsonReader {
public:
    std::vector<std::string> issues;

    void fail(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

    const Json* child(const Json& obj, const std::string& path, const char* key, bool required) {
        if (!obj.is_object()) {
            fail(path, "expected an object");
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(path + "." + key, "missing");
            return nullptr;
        }
        return &*it;
    }

    template <typename T>
    bool number(const Json& obj, const std::string& path, const char* key, T& out, bool required,
                double lo, double hi) {
        const Json* v = child(obj, path, key, required);
        if (!v) return false;
        const std::string p = path + "." + key;
        if (!v->is_number()) {
            fail(p, "expected a number");
            return false;
        }
        const double d = v->get<double>();
        if (!(d >= lo && d <= hi)) {
            fail(p, "value " + format_double(d) + " outside [" + format_double(lo) + ", " + format_double(hi) + "]");
            return false;
        }
        if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer() && !v->is_number_unsigned()) {
                fail(p, "expected an integer");
                return false;
            }
            out = v->get<T>();
        } else {
            out = static_cast<T>(d);
        }
        return true;
    }

    bool text(const Json& obj, const std::string& path, const char* key, std::string& out, bool required) {
        const Json* v = child(obj, path, key, required);
        if (!v) return false;
        if (!v->is_string()) {
            fail(path + "." + key, "expected a string");
            return false;
        }
        out = v->get<std::string>();
        return true;
    }

    std::vector<double> numbers(const Json& obj, const std::string& path, const char* key,
                                std::vector<double> fallback, double lo, double hi) {
        const Json* v = child(obj, path, key, false);
        if (!v) return fallback;
        const std::string p = path + "." + key;
        if (!v->is_array()) {
            fail(p, "expected an array of numbers");
            return fallback;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            const auto& e = (*v)[i];
            const std::string ep = p + "[" + std::to_string(i) + "]";
            if (!e.is_number()) {
                fail(ep, "expected a number");
                continue;
            }
            const double d = e.get<double>();
            if (!(d >= lo && d <= hi)) {
                fail(ep, "value " + format_double(d) + " outside [" + format_double(lo) + ", " + format_double(hi) + "]");
                continue;
            }
            out.push_back(d);
        }
        if (v->empty()) fail(p, "must not be empty");
        return out;
    }

    template <typename Enum, typename Parse>
    void choice(const Json& obj, const std::string& path, const char* key, Enum& out, Parse parse) {
        std::string s;
        if (!text(obj, path, key, s, false)) return;
        try {
            out = parse(s);
        } catch (const ConfigError& e) {
            fail(path + "." + key, e.what());
        }
    }
};

}  // namespace detail

inline RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir) {
    detail::JsonReader rd;
    RunConfig cfg;
    cfg.base_dir = base_dir;
    cfg.source = doc;
    if (!doc.is_object()) throw ConfigIssues({"$: config must be a JSON object"});

    for (const auto& [key, value] : doc.items()) {
        static const std::set<std::string> known{"data", "grid", "strategies", "engine", "output", "jobs"};
        if (!known.count(key)) rd.fail("$." + key, "unknown key");
    }

    if (const Json* data = rd.child(doc, "$", "data", true)) {
        rd.text(*data, "$.data", "prices", cfg.data.prices, true);
        rd.text(*data, "$.data", "esg", cfg.data.esg, true);
        rd.text(*data, "$.data", "index_weights", cfg.data.index_weights, true);
    }

    if (const Json* g = rd.child(doc, "$", "grid", false)) {
        GridSpec grid;
        const std::string p = "$.grid";
        if (const Json* modes = rd.child(*g, p, "modes", false)) {
            grid.modes.clear();
            if (!modes->is_array()) rd.fail(p + ".modes", "expected an array of strings");
            else {
                for (std::size_t i = 0; i < modes->size(); ++i) {
                    const auto& m = (*modes)[i];
                    try {
                        if (!m.is_string()) throw ConfigError("expected a string");
                        grid.modes.push_back(parse_strategy_mode(m.get<std::string>()));
                    } catch (const ConfigError& e) {
                        rd.fail(p + ".modes[" + std::to_string(i) + "]", e.what());
                    }
                }
                if (grid.modes.empty()) rd.fail(p + ".modes", "must not be empty");
            }
        }
        grid.lambdas = rd.numbers(*g, p, "lambda", grid.lambdas, 0.0, 1.0);
        grid.alphas = rd.numbers(*g, p, "alpha", grid.alphas, 0.0, 1.0);
        grid.rho_standard = rd.numbers(*g, p, "rho_standard", grid.rho_standard, 0.0, 1e6);
        grid.rho_bl = rd.numbers(*g, p, "rho_bl", grid.rho_bl, 0.0, 1e6);
        grid.betas = rd.numbers(*g, p, "beta", grid.betas, 0.5, 0.9999);
        rd.number(*g, p, "scenarios", grid.scenarios, false, 1.0, 1e7);
        cfg.grid = grid;
    }

    if (const Json* list = rd.child(doc, "$", "strategies", false)) {
        if (!list->is_array()) rd.fail("$.strategies", "expected an array");
        else {
            for (std::size_t i = 0; i < list->size(); ++i) {
                const std::string p = "$.strategies[" + std::to_string(i) + "]";
                const auto& s = (*list)[i];
                StrategyConfig c;
                c.scenarios = cfg.grid ? cfg.grid->scenarios : c.scenarios;
                rd.choice(s, p, "mode", c.mode, parse_strategy_mode);
                rd.number(s, p, "lambda", c.lambda, true, 0.0, 1.0);
                rd.number(s, p, "alpha", c.alpha, true, 0.0, 1.0);
                rd.number(s, p, "rho", c.rho, true, 0.0, 1e6);
                rd.number(s, p, "beta", c.beta, true, 0.5, 0.9999);
                rd.number(s, p, "scenarios", c.scenarios, false, 1.0, 1e7);
                cfg.extra_strategies.push_back(c);
            }
        }
    }

    if (const Json* e = rd.child(doc, "$", "engine", true)) {
        const std::string p = "$.engine";
        auto& en = cfg.engine;
        rd.number(*e, p, "window", en.window, false, 250.0, 1e6);
        rd.number(*e, p, "test_days", en.test_days, false, 0.0, 1e7);
        rd.number(*e, p, "tau", en.tau, false, 1e-12, 1e6);
        rd.number(*e, p, "risk_aversion", en.risk_aversion, false, 0.0, 1e6);
        if (const Json* k = rd.child(*e, p, "kappa", false)) {
            if (k->is_string() && k->get<std::string>() == "auto") en.kappa.reset();
            else {
                double kappa = 0.0;
                if (rd.number(*e, p, "kappa", kappa, false, 0.0, 1e3)) en.kappa = kappa;
            }
        }
        rd.choice(*e, p, "normalization", en.normalization, parse_normalization);
        rd.choice(*e, p, "shrink", en.shrink, parse_shrink_mode);
        rd.choice(*e, p, "mixing", en.mixing, parse_mixing_source);
        rd.choice(*e, p, "bounds", en.bounds, parse_weight_bounds);
        rd.number(*e, p, "seed", en.seed, true, 0.0, 1.8e19);
        rd.number(*e, p, "risk_free_daily", en.risk_free_daily, false, -1.0, 1.0);
        rd.number(*e, p, "benchmark_beta", en.benchmark_beta, false, 0.5, 0.9999);
        if (const Json* views = rd.child(*e, p, "views", false)) {
            if (!views->is_array()) rd.fail(p + ".views", "expected an array");
            else {
                for (std::size_t i = 0; i < views->size(); ++i) {
                    const std::string vp = p + ".views[" + std::to_string(i) + "]";
                    const auto& v = (*views)[i];
                    ViewSpec spec;
                    if (const Json* picks = rd.child(v, vp, "picks", true)) {
                        if (!picks->is_object() || picks->empty()) rd.fail(vp + ".picks", "expected a non-empty ticker:coefficient object");
                        else {
                            for (const auto& [ticker, coef] : picks->items()) {
                                if (!coef.is_number()) rd.fail(vp + ".picks." + ticker, "expected a number");
                                else spec.picks.emplace_back(ticker, coef.get<double>());
                            }
                        }
                    }
                    rd.number(v, vp, "value", spec.value, true, -1.0, 1.0);
                    rd.number(v, vp, "uncertainty", spec.uncertainty, true, 1e-300, 1e6);
                    en.views.push_back(spec);
                }
            }
        }
    }

    if (const Json* out = rd.child(doc, "$", "output", false)) rd.text(*out, "$.output", "dir", cfg.output_dir, false);
    rd.number(doc, "$", "jobs", cfg.jobs, false, 0.0, 4096.0);

    if (rd.issues.empty() && !cfg.grid && cfg.extra_strategies.empty()) {
        rd.fail("$.grid", "no strategies: give a grid or a strategies list");
    }
    if (!rd.issues.empty()) throw ConfigIssues(rd.issues);
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigIssues({path.string() + ": cannot open config file"});
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigIssues({path.string() + ": " + e.what()});
    }
    return parse_run_config(doc, path.parent_path());
}

/// Default 616-strategy grid with the given data files and seed.
inline Json full_grid_config_json(const DataPaths& data, std::uint64_t seed) {
    return Json{{"data", {{"prices", data.prices}, {"esg", data.esg}, {"index_weights", data.index_weights}}},
                {"grid",
                 {{"modes", {"standard", "black_litterman"}},
                  {"lambda", {0.0, 0.25, 0.5, 0.7}},
                  {"alpha", alpha_grid()},
                  {"rho_standard", {5e-4}},
                  {"rho_bl", {5e-4, 10e-4, 15e-4, 20e-4, 30e-4, 40e-4}},
                  {"beta", {0.95, 0.99}},
                  {"scenarios", 10000}}},
                {"engine", {{"window", 1007}, {"seed", seed}}},
                {"output", {{"dir", "results"}}}};
}

}  // namespace esgport
