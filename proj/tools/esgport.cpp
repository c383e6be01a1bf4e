#include "esgport/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    using namespace esgport;
    CLI::App app{"ESG-shrunk mean-CVaR and Black-Litterman backtester"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::size_t jobs = 0;
    std::uint64_t seed = 0;
    std::string strategies;

    auto* validate = app.add_subcommand("validate", "check a run config and its data, print the grid size");
    validate->add_option("--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);

    auto* backtest = app.add_subcommand("backtest", "run every strategy in the grid and write results");
    backtest->add_option("--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    auto* out_opt = backtest->add_option("--out", out, "output directory (overrides output.dir)");
    auto* jobs_opt = backtest->add_option("--jobs", jobs, "worker threads (default: config, else all cores)");
    auto* seed_opt = backtest->add_option("--seed-override", seed, "replace engine.seed");
    auto* strat_opt = backtest->add_option("--strategies", strategies, "comma-separated strategy ids to run");

    auto* plot = app.add_subcommand("plot", "equity-curve SVG and (date, wealth) files from a results directory");
    plot->add_option("--out", out, "results directory written by backtest")->required();
    plot->add_option("--strategies", strategies, "ids, top:N and/or benchmark, comma-separated")
        ->default_val("benchmark");

    SynthSpec spec;
    auto* synth = app.add_subcommand("synth", "write a synthetic desk-scale dataset and config");
    synth->add_option("--out", out, "output directory")->required();
    synth->add_option("--assets", spec.assets, "number of assets")->default_val(5);
    synth->add_option("--returns", spec.returns, "number of daily returns")->default_val(800);
    synth->add_option("--seed", spec.seed, "generator seed")->default_val(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    if (*validate) return cmd_validate(config, std::cout, std::cerr);
    if (*backtest) {
        BacktestOptions opt;
        if (*out_opt) opt.out = out;
        if (*jobs_opt) opt.jobs = jobs;
        if (*seed_opt) opt.seed = seed;
        if (*strat_opt) opt.strategies = strategies;
        return cmd_backtest(config, opt, std::cout, std::cerr);
    }
    if (*plot) return cmd_plot(out, strategies, std::cout, std::cerr);
    if (*synth) return cmd_synth(out, spec, std::cout, std::cerr);
    return kExitConfig;
}
