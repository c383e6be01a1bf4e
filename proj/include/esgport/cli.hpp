#pragma once

// Command implementations behind the esgport executable. Exit codes:
//   0 success, 1 partial failure, 2 configuration error, 3 data error,
//   4 every strategy failed.

#include "esgport/backtest.hpp"
#include "esgport/config.hpp"
#include "esgport/output.hpp"
#include "esgport/plot.hpp"
#include "esgport/synth.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace esgport {

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitConfig = 2, kExitData = 3, kExitTotal = 4 };

struct BacktestOptions {
    std::optional<std::filesystem::path> out;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> strategies;  // comma-separated ids
};

struct LoadedRun {
    RunConfig config;
    ReturnPanel panel;
    EsgTable esg;
    std::vector<StrategyConfig> strategies;
};

namespace detail {

inline void check_data_against_config(const RunConfig& cfg, const ReturnPanel& panel, const EsgTable& esg) {
    std::vector<std::string> issues;
    const auto needed = cfg.engine.window + 2;
    if (panel.rows() < needed) {
        issues.push_back("$.engine.window: window of " + std::to_string(cfg.engine.window) + " returns needs at least " +
                         std::to_string(needed) + " return days, data has " + std::to_string(panel.rows()));
    }
    for (std::size_t i = 0; i < cfg.engine.views.size(); ++i) {
        for (const auto& [ticker, coef] : cfg.engine.views[i].picks) {
            if (!panel.index_of(ticker)) {
                issues.push_back("$.engine.views[" + std::to_string(i) + "].picks." + ticker + ": ticker not in price data");
            }
        }
    }
    if (!issues.empty()) throw ConfigIssues(issues);
    for (const auto& t : panel.assets) {
        if (!esg.index_weights.count(t)) throw DataError("no index weight for " + t);
    }
}

inline std::vector<StrategyConfig> filter_strategies(const std::vector<StrategyConfig>& all, const std::string& ids) {
    std::set<std::string> wanted;
    std::stringstream s(ids);
    std::string item;
    while (std::getline(s, item, ',')) {
        if (!item.empty()) wanted.insert(item);
    }
    std::vector<StrategyConfig> out;
    std::set<std::string> found;
    for (const auto& c : all) {
        if (wanted.count(c.id())) {
            out.push_back(c);
            found.insert(c.id());
        }
    }
    std::vector<std::string> issues;
    for (const auto& w : wanted) {
        if (!found.count(w)) issues.push_back("--strategies: unknown strategy id '" + w + "'");
    }
    if (!issues.empty()) throw ConfigIssues(issues);
    if (out.empty()) throw ConfigIssues({"--strategies: selection is empty"});
    return out;
}

inline std::vector<StrategyConfig> unique_strategies(const std::vector<StrategyConfig>& all) {
    std::set<std::string> seen;
    std::vector<std::string> dups;
    for (const auto& c : all) {
        if (!seen.insert(c.id()).second) dups.push_back("$: strategy " + c.id() + " is listed twice");
    }
    if (!dups.empty()) throw ConfigIssues(dups);
    return all;
}

}  // namespace detail

inline LoadedRun load_run(const std::filesystem::path& config_path) {
    LoadedRun run;
    run.config = load_run_config(config_path);
    run.strategies = detail::unique_strategies(run.config.strategies());
    run.panel = load_prices(run.config.resolve(run.config.data.prices).string());
    run.esg = load_esg(run.config.resolve(run.config.data.esg).string(),
                       run.config.resolve(run.config.data.index_weights).string());
    detail::check_data_against_config(run.config, run.panel, run.esg);
    return run;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigIssues& e) {
        err << "configuration error:\n";
        for (const auto& i : e.issues) err << "  " << i << '\n';
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitTotal;
    }
}

inline int cmd_validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const LoadedRun run = load_run(config_path);
        const auto [first, last] = run.config.engine.test_rows(run.panel);
        out << "config OK\n";
        out << "data: " << run.panel.rows() << " return days x " << run.panel.cols() << " assets ("
            << run.panel.dates.front().iso() << " .. " << run.panel.dates.back().iso() << ")\n";
        out << "window: " << run.config.engine.window << " returns; test period: " << (last - first) << " days ("
            << run.panel.dates[first].iso() << " .. " << run.panel.dates[last - 1].iso() << ")\n";
        out << run.strategies.size() << " strategies\n";
        return static_cast<int>(kExitOk);
    });
}

inline int cmd_backtest(const std::filesystem::path& config_path, const BacktestOptions& opt, std::ostream& out,
                        std::ostream& err) {
    return guarded(err, [&] {
        LoadedRun run = load_run(config_path);
        auto& cfg = run.config;
        if (opt.seed) cfg.engine.seed = *opt.seed;
        cfg.engine.jobs = opt.jobs ? *opt.jobs : cfg.jobs;
        if (cfg.engine.jobs == 0) cfg.engine.jobs = default_jobs();
        if (opt.strategies) run.strategies = detail::filter_strategies(run.strategies, *opt.strategies);
        const std::filesystem::path dir = opt.out ? *opt.out : cfg.resolve(cfg.output_dir);

        const GridRun grid = run_grid(run.panel, run.esg, cfg.engine, run.strategies);
        const BacktestResult bench = run_benchmark(run.panel, run.esg, cfg.engine);
        const RunSummary summary = write_run(dir, cfg, run.panel, grid, bench);

        out << summary.strategies - summary.failed << " of " << summary.strategies << " strategies completed; results in "
            << dir.string() << '\n';
        for (const auto& r : grid.results) {
            if (!r.ok) err << "strategy " << r.id << " failed: " << r.error << '\n';
        }
        if (summary.failed == 0) return static_cast<int>(kExitOk);
        return static_cast<int>(summary.failed == summary.strategies ? kExitTotal : kExitPartial);
    });
}

inline int cmd_plot(const std::filesystem::path& results, const std::string& selector, std::ostream& out,
                    std::ostream& err) {
    return guarded(err, [&] {
        if (!std::filesystem::exists(results / "metrics.csv")) {
            throw DataError("no results in " + results.string() + " (metrics.csv missing)");
        }
        const PlotOutput p = plot_results(results, selector);
        out << p.curves << " curves written to " << p.svg.string() << '\n';
        return static_cast<int>(kExitOk);
    });
}

/// Desk-scale grid used with synthetic data: 2 modes x 2 lambdas x 3 alphas x 2 betas.
inline Json desk_config_json(std::uint64_t seed) {
    return Json{{"data", {{"prices", "prices.csv"}, {"esg", "esg.csv"}, {"index_weights", "index_weights.csv"}}},
                {"grid",
                 {{"modes", {"standard", "black_litterman"}},
                  {"lambda", {0.0, 0.5}},
                  {"alpha", {0.0, 0.5, 1.0}},
                  {"rho_standard", {5e-4}},
                  {"rho_bl", {5e-4}},
                  {"beta", {0.95, 0.99}},
                  {"scenarios", 2000}}},
                {"engine", {{"window", 700}, {"test_days", 100}, {"seed", seed}}},
                {"output", {{"dir", "results"}}}};
}

inline int cmd_synth(const std::filesystem::path& dir, const SynthSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const SynthData data = generate_synthetic(spec);
        data.write(dir);
        write_file(dir / "config.json", desk_config_json(spec.seed).dump(2) + "\n");
        out << "synthetic dataset (" << spec.assets << " assets, " << spec.returns << " returns) and config.json written to "
            << dir.string() << '\n';
        return static_cast<int>(kExitOk);
    });
}

}  // namespace esgport
