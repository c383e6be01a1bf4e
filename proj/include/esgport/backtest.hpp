#pragma once

// Rolling-window, daily-rebalanced backtest over a strategy grid.
//
// For the allocation applied to return row k (the "target row"):
//   window      rows [k - W, k), decision date = date of row k - 1
//   universe    complete window and an ESG score in force on the decision date
//   model       ARMA-GARCH + standardized NIG per asset, residual correlation
//   scenarios   one draw per (day, q) shared by every strategy
//   allocation  solved against the drifted holdings, realized on row k
//
// Strategies advance in lockstep so the per-day model is fitted once.

#include "esgport/black_litterman.hpp"
#include "esgport/core.hpp"
#include "esgport/market_data.hpp"
#include "esgport/metrics.hpp"
#include "esgport/nig.hpp"
#include "esgport/optimizer.hpp"
#include "esgport/parallel.hpp"
#include "esgport/scenario.hpp"
#include "esgport/shrinkage.hpp"
#include "esgport/timeseries.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace esgport {

enum class StrategyMode { standard, black_litterman };

inline const char* mode_tag(StrategyMode m) { return m == StrategyMode::standard ? "std" : "bl"; }

inline StrategyMode parse_strategy_mode(std::string_view s) {
    if (s == "standard" || s == "std") return StrategyMode::standard;
    if (s == "black_litterman" || s == "bl") return StrategyMode::black_litterman;
    throw ConfigError("unknown strategy mode '" + std::string(s) + "'");
}

enum class MixingSource { correlation, covariance };

inline MixingSource parse_mixing_source(std::string_view s) {
    if (s == "correlation") return MixingSource::correlation;
    if (s == "covariance") return MixingSource::covariance;
    throw ConfigError("unknown mixing source '" + std::string(s) + "'");
}

namespace detail {
inline std::string compact_number(double v, double unit) {
    return format_double(std::round(v / unit * 1e6) / 1e6);
}
}  // namespace detail

struct StrategyConfig {
    StrategyMode mode = StrategyMode::standard;
    double lambda = 0.0;
    double alpha = 0.5;
    double rho = 5e-4;
    double beta = 0.95;
    std::size_t scenarios = 10000;  // q

    /// e.g. "bl-b95-r5-l0.25-a0.3" (rho in units of 1e-4, beta in percent)
    std::string id() const {
        return std::string(mode_tag(mode)) + "-b" + detail::compact_number(beta, 0.01) + "-r" +
               detail::compact_number(rho, 1e-4) + "-l" + format_double(lambda) + "-a" +
               format_double(alpha);
    }

    void validate() const {
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
        if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be finite and non-negative");
        require_level(beta);
    }
};

struct GridSpec {
    std::vector<StrategyMode> modes{StrategyMode::standard, StrategyMode::black_litterman};
    std::vector<double> lambdas{0.0, 0.25, 0.5, 0.7};
    std::vector<double> alphas = alpha_grid();
    std::vector<double> rho_standard{5e-4};
    std::vector<double> rho_bl{5e-4, 10e-4, 15e-4, 20e-4, 30e-4, 40e-4};
    std::vector<double> betas{0.95, 0.99};
    std::size_t scenarios = 10000;

    /// Order: mode, rho, beta, lambda, alpha.
    std::vector<StrategyConfig> expand() const {
        std::vector<StrategyConfig> out;
        for (auto mode : modes) {
            const auto& rhos = mode == StrategyMode::standard ? rho_standard : rho_bl;
            for (double rho : rhos) {
                for (double beta : betas) {
                    for (double lambda : lambdas) {
                        for (double alpha : alphas) {
                            StrategyConfig c{mode, lambda, alpha, rho, beta, scenarios};
                            c.validate();
                            out.push_back(c);
                        }
                    }
                }
            }
        }
        return out;
    }
};

/// One investor view over tickers; dropped on days when a picked ticker is
/// outside the active universe.
struct ViewSpec {
    std::vector<std::pair<std::string, double>> picks;
    double value = 0.0;        // daily return units
    double uncertainty = 0.0;  // Omega_kk
};

struct EngineConfig {
    std::size_t window = 1007;
    std::size_t test_days = 0;  // 0: every row after the first window
    double tau = 0.05;
    double risk_aversion = 2.5;
    std::optional<double> kappa;  // empty: cross-sectional std of window means
    ScoreNormalization normalization = ScoreNormalization::zscore;
    ShrinkMode shrink = ShrinkMode::mean;
    MixingSource mixing = MixingSource::correlation;
    WeightBounds bounds = WeightBounds::long_only;
    std::uint64_t seed = 0;
    std::vector<ViewSpec> views;
    double benchmark_beta = 0.95;
    double risk_free_daily = 0.0;
    ArmaGarchFitOptions garch{};
    NigFitOptions nig{};
    OptimizerOptions optimizer{};
    std::size_t jobs = 1;

    void validate() const {
        if (window < 250) throw ConfigError("window must be at least 250 returns");
        if (!(tau > 0.0)) throw ConfigError("tau must be positive");
        if (!(risk_aversion >= 0.0)) throw ConfigError("risk aversion must be non-negative");
        if (kappa && !(*kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
        require_level(benchmark_beta);
        for (const auto& v : views) {
            if (v.picks.empty()) throw ConfigError("view with no picks");
            if (!(v.uncertainty > 0.0)) throw ConfigError("view uncertainty must be positive");
        }
    }

    /// Target rows [first, last).
    std::pair<std::size_t, std::size_t> test_rows(const ReturnPanel& panel) const {
        if (panel.rows() <= window + 1) {
            throw ConfigError("window of " + std::to_string(window) + " returns needs at least " +
                              std::to_string(window + 2) + " return rows, data has " +
                              std::to_string(panel.rows()));
        }
        const std::size_t last = test_days == 0 ? panel.rows() : std::min(panel.rows(), window + test_days);
        return {window, last};
    }
};

// ---------------------------------------------------------------------------
// Per-day model
// ---------------------------------------------------------------------------

struct AssetFit {
    ArmaGarchParams garch;
    NigParams nig;
    Forecast forecast;
};

struct DayModel {
    std::size_t row = 0;  // target row
    Date decision;
    std::vector<std::size_t> universe;  // panel columns
    std::vector<std::string> tickers;
    std::vector<AssetFit> fits;
    Vector mu;              // one-step ARMA means
    Vector sigma;           // one-step GARCH volatilities
    Matrix mixing;          // L (correlation) or chol(covariance)
    double jitter = 0.0;
    Matrix covariance;      // sample covariance of window returns
    Vector raw_scores;
    Vector index_weights;   // renormalized over the universe
    double kappa = 0.0;
    std::uint64_t scenario_seed = 0;
    std::vector<std::string> events;

    std::vector<Marginal> marginals() const {
        std::vector<Marginal> out;
        for (std::size_t i = 0; i < universe.size(); ++i) {
            out.push_back(Marginal{fits[i].nig, mu(static_cast<Eigen::Index>(i)),
                                   sigma(static_cast<Eigen::Index>(i)), universe[i]});
        }
        return out;
    }
};

inline std::uint64_t day_seed(std::uint64_t seed, std::size_t row) {
    auto rng = make_stream(seed, row, 0xD47u);
    return rng();
}

inline DayModel build_day_model(const ReturnPanel& panel, const EsgTable& esg, const EngineConfig& cfg,
                                std::size_t row) {
    DayModel d;
    d.row = row;
    d.decision = panel.dates[row - 1];
    d.universe = active_universe(panel, esg, row, cfg.window);
    d.tickers = tickers_of(panel, d.universe);
    const auto m = static_cast<Eigen::Index>(d.universe.size());
    const auto w = static_cast<Eigen::Index>(cfg.window);
    const auto first = static_cast<Eigen::Index>(row - cfg.window);

    Matrix x(w, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        x.col(j) = panel.returns.block(first, static_cast<Eigen::Index>(d.universe[static_cast<std::size_t>(j)]), w, 1);
    }

    d.fits.resize(d.universe.size());
    Matrix z(w, m);
    std::vector<std::string> fit_events(d.universe.size());
    parallel_for(d.universe.size(), cfg.jobs, [&](std::size_t i) {
        const auto col = static_cast<Eigen::Index>(i);
        const Vector series = x.col(col);
        const std::span<const double> s(series.data(), static_cast<std::size_t>(series.size()));
        AssetFit f;
        try {
            f.garch = fit_arma_garch(s, cfg.garch);
        } catch (const ConvergenceError<ArmaGarchParams>& e) {
            f.garch = e.best;
            fit_events[i] += "ARMA-GARCH fit for " + d.tickers[i] + " used its best point (" + e.what() + "); ";
        }
        const FilterResult filtered = filter_residuals(f.garch, s);
        f.forecast = forecast_one_step(f.garch, filtered.state);
        const std::span<const double> zs(filtered.standardized.data(),
                                         static_cast<std::size_t>(filtered.standardized.size()));
        try {
            f.nig = fit_standardized(zs, cfg.nig);
        } catch (const ConvergenceError<NigParams>& e) {
            f.nig = e.best;
            fit_events[i] += "NIG fit for " + d.tickers[i] + " used its best point (" + e.what() + "); ";
        }
        z.col(col) = filtered.standardized;
        d.fits[i] = f;
    });
    for (auto& e : fit_events) {
        if (!e.empty()) d.events.push_back(d.decision.iso() + ": " + e.substr(0, e.size() - 2));
    }

    d.mu.resize(m);
    d.sigma.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        d.mu(i) = d.fits[static_cast<std::size_t>(i)].forecast.mean;
        d.sigma(i) = d.fits[static_cast<std::size_t>(i)].forecast.sigma;
    }
    d.covariance = sample_covariance(x);
    const MixingFactor factor = cfg.mixing == MixingSource::correlation ? mixing_factor(residual_correlation(z))
                                                                        : mixing_factor(d.covariance);
    d.mixing = factor.lower;
    d.jitter = factor.jitter;
    if (factor.jitter > 0.0) {
        d.events.push_back(d.decision.iso() + ": mixing matrix needed diagonal load " + format_double(factor.jitter));
    }

    d.raw_scores.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        d.raw_scores(i) = *esg.score_at(d.tickers[static_cast<std::size_t>(i)], d.decision, panel.dates);
    }
    d.index_weights = benchmark_weights(esg, d.tickers);
    d.kappa = cfg.kappa ? *cfg.kappa : auto_kappa(x);
    d.scenario_seed = day_seed(cfg.seed, row);
    return d;
}

/// Zero-mean scenario dispersion (rows of A y) for q draws.
inline Matrix centered_scenarios(const DayModel& d, const EngineConfig& cfg, std::size_t q) {
    const auto marginals = d.marginals();
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(marginals.size()));
    return build_scenarios(marginals, zero, d.mixing, q, d.scenario_seed,
                           cfg.mixing == MixingSource::correlation)
        .centered;
}

inline BlViews views_for(const DayModel& d, const std::vector<ViewSpec>& specs, std::vector<std::string>* dropped) {
    const auto m = static_cast<Eigen::Index>(d.tickers.size());
    std::vector<const ViewSpec*> kept;
    for (const auto& v : specs) {
        bool ok = true;
        for (const auto& [ticker, coef] : v.picks) {
            if (std::find(d.tickers.begin(), d.tickers.end(), ticker) == d.tickers.end()) ok = false;
        }
        if (ok) kept.push_back(&v);
        else if (dropped) dropped->push_back("view on inactive ticker dropped");
    }
    BlViews views{Matrix::Zero(static_cast<Eigen::Index>(kept.size()), m),
                  Vector(static_cast<Eigen::Index>(kept.size())),
                  Vector(static_cast<Eigen::Index>(kept.size()))};
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        for (const auto& [ticker, coef] : kept[k]->picks) {
            const auto pos = std::find(d.tickers.begin(), d.tickers.end(), ticker) - d.tickers.begin();
            views.pick(r, static_cast<Eigen::Index>(pos)) += coef;
        }
        views.value(r) = kept[k]->value;
        views.uncertainty(r) = kept[k]->uncertainty;
    }
    return views;
}

// ---------------------------------------------------------------------------
// Strategy state and results
// ---------------------------------------------------------------------------

struct PortfolioState {
    Vector drifted;  // full panel width, zero outside the universe
    std::vector<std::size_t> universe;
    double wealth = 1.0;
    bool started = false;
};

struct BacktestResult {
    std::string id;
    StrategyConfig config;
    bool ok = true;
    std::string error;
    std::vector<Date> dates;       // date of each realized return
    std::vector<double> returns;
    std::vector<double> turnover;
    std::vector<Vector> weights;   // full panel width
    std::vector<int> iterations;
    std::vector<double> certificate_gaps;
    std::vector<std::string> events;
    std::optional<MetricsRow> metrics;

    std::vector<double> wealth() const { return wealth_curve(returns); }
};

/// Drift after the market move; stays on the simplex for long-only weights.
inline Vector drift_weights(const Vector& w, const Vector& r) {
    const Vector grown = w.cwiseProduct((Vector::Ones(w.size()) + r));
    const double total = grown.sum();
    if (!(total > 0.0)) throw NumericError("portfolio wealth is not positive after the market move");
    return grown / total;
}

/// Realized row-k returns over the universe; a missing entry counts as 0.
inline Vector realized_returns(const ReturnPanel& panel, std::size_t row, std::span<const std::size_t> universe,
                               std::vector<std::string>* events) {
    Vector r(static_cast<Eigen::Index>(universe.size()));
    for (std::size_t i = 0; i < universe.size(); ++i) {
        const double v = panel.returns(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(universe[i]));
        if (std::isfinite(v)) {
            r(static_cast<Eigen::Index>(i)) = v;
        } else {
            r(static_cast<Eigen::Index>(i)) = 0.0;
            if (events) events->push_back(panel.dates[row].iso() + ": missing return for " + panel.assets[universe[i]] + " taken as 0");
        }
    }
    return r;
}

namespace detail {

inline Vector restrict(const Vector& full, std::span<const std::size_t> cols) {
    Vector out(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) out(static_cast<Eigen::Index>(i)) = full(static_cast<Eigen::Index>(cols[i]));
    return out;
}

inline Vector expand(const Vector& sub, std::span<const std::size_t> cols, std::size_t width) {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < cols.size(); ++i) out(static_cast<Eigen::Index>(cols[i])) = sub(static_cast<Eigen::Index>(i));
    return out;
}

inline std::string universe_change(const ReturnPanel& panel, std::span<const std::size_t> before,
                                   std::span<const std::size_t> after) {
    std::string added, removed;
    for (auto c : after) {
        if (std::find(before.begin(), before.end(), c) == before.end()) added += " " + panel.assets[c];
    }
    for (auto c : before) {
        if (std::find(after.begin(), after.end(), c) == after.end()) removed += " " + panel.assets[c];
    }
    std::string out = "universe changed;";
    if (!added.empty()) out += " added" + added + ";";
    if (!removed.empty()) out += " removed" + removed + ";";
    return out;
}

}  // namespace detail

/// Expected-return vector R_t and equilibrium weights for one strategy on one day.
struct StrategyInputs {
    Vector shrunk_mean;  // m
    Vector expected;     // R_t
    Vector equilibrium;  // w_eq
};

inline StrategyInputs strategy_inputs(const DayModel& d, const StrategyConfig& s, const EngineConfig& cfg,
                                      std::vector<std::string>* events) {
    StrategyInputs in;
    const ShrinkageSpec spec{s.lambda, d.kappa, cfg.normalization};
    const Vector xi = normalize_scores(d.raw_scores, spec);
    in.shrunk_mean = shrink_mean(d.mu, xi, s.lambda);
    in.equilibrium = equilibrium_weights(d.index_weights, d.raw_scores, s.lambda);
    if (s.mode == StrategyMode::standard) {
        in.expected = in.shrunk_mean;
    } else {
        const Vector pi = equilibrium_premium(cfg.risk_aversion, d.covariance, in.equilibrium);
        in.expected = posterior(cfg.tau, d.covariance, pi, views_for(d, cfg.views, events)).mean;
    }
    return in;
}

/// One rebalance: allocation for row d.row, realized return, drift.
inline void step_strategy(const ReturnPanel& panel, const DayModel& d, const Matrix& centered,
                          const StrategyConfig& s, const EngineConfig& cfg, PortfolioState& state,
                          BacktestResult& out) {
    const std::string day = panel.dates[d.row].iso();
    std::vector<std::string> notes;
    const StrategyInputs in = strategy_inputs(d, s, cfg, &notes);

    Vector prev;
    if (!state.started) {
        prev = in.equilibrium;
        state.started = true;
    } else if (state.universe != d.universe) {
        prev = detail::restrict(state.drifted, d.universe);
        const double kept = prev.sum();
        std::string note = detail::universe_change(panel, state.universe, d.universe);
        if (kept > 0.0) {
            prev /= kept;
            note += " holdings renormalized over the remaining assets";
        } else {
            prev = in.equilibrium;
            note += " no holdings remain, reset to equilibrium weights";
        }
        notes.push_back(note);
    } else {
        prev = detail::restrict(state.drifted, d.universe);
    }

    const double dispersion = cfg.shrink == ShrinkMode::observations ? 1.0 - s.lambda : 1.0;
    Matrix scenarios = dispersion == 1.0 ? centered : Matrix(centered * dispersion);
    scenarios.rowwise() += in.shrunk_mean.transpose();

    AllocationProblem problem{in.expected, std::move(scenarios), prev, s.alpha, s.rho, s.beta, cfg.bounds};
    AllocationSolution sol;
    try {
        sol = solve(problem, cfg.optimizer);
    } catch (const ConvergenceError<AllocationSolution>& e) {
        sol = e.best;
        notes.push_back(std::string("allocation used its best point (") + e.what() + ")");
    }

    const Vector r = realized_returns(panel, d.row, d.universe, &out.events);
    const double ret = sol.weights.dot(r);
    out.dates.push_back(panel.dates[d.row]);
    out.returns.push_back(ret);
    out.turnover.push_back(sol.turnover);
    out.weights.push_back(detail::expand(sol.weights, d.universe, panel.cols()));
    out.iterations.push_back(sol.iterations);
    out.certificate_gaps.push_back(sol.certificate_gap);
    for (auto& n : notes) out.events.push_back(day + ": " + n);

    state.drifted = detail::expand(drift_weights(sol.weights, r), d.universe, panel.cols());
    state.universe = d.universe;
    state.wealth *= 1.0 + ret;
}

struct GridRun {
    std::vector<BacktestResult> results;  // same order as the strategy list
    std::vector<DayModel> days;
};

inline void finalize_metrics(BacktestResult& r, double beta, const EngineConfig& cfg) {
    if (!r.ok) return;
    try {
        r.metrics = compute_metrics(r.returns, r.turnover, MetricsOptions{beta, cfg.risk_free_daily});
    } catch (const Error& e) {
        r.ok = false;
        r.error = std::string("metrics: ") + e.what();
    }
}

/// All strategies in lockstep. A failure inside one strategy marks only that
/// strategy; a failure of the shared day model marks every strategy still running.
inline GridRun run_grid(const ReturnPanel& panel, const EsgTable& esg, const EngineConfig& cfg,
                        const std::vector<StrategyConfig>& strategies) {
    if (strategies.empty()) throw ConfigError("strategy grid is empty");
    cfg.validate();
    const auto [first, last] = cfg.test_rows(panel);

    GridRun run;
    run.results.resize(strategies.size());
    std::vector<PortfolioState> states(strategies.size());
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        run.results[i].config = strategies[i];
        run.results[i].id = strategies[i].id();
        try {
            strategies[i].validate();
        } catch (const Error& e) {
            run.results[i].ok = false;
            run.results[i].error = e.what();
        }
    }

    for (std::size_t row = first; row < last; ++row) {
        std::vector<std::size_t> alive;
        for (std::size_t i = 0; i < strategies.size(); ++i) {
            if (run.results[i].ok) alive.push_back(i);
        }
        if (alive.empty()) break;

        DayModel day;
        try {
            day = build_day_model(panel, esg, cfg, row);
        } catch (const Error& e) {
            for (auto i : alive) {
                run.results[i].ok = false;
                run.results[i].error = "day model for " + panel.dates[row].iso() + ": " + e.what();
            }
            break;
        }

        std::map<std::size_t, std::optional<Matrix>> draws;
        std::map<std::size_t, std::string> draw_errors;
        for (auto i : alive) draws[strategies[i].scenarios];
        for (auto& [q, slot] : draws) {
            try {
                slot = centered_scenarios(day, cfg, q);
            } catch (const Error& e) {
                draw_errors[q] = e.what();
            }
        }

        parallel_for(alive.size(), cfg.jobs, [&](std::size_t k) {
            const auto i = alive[k];
            auto& res = run.results[i];
            const auto& slot = draws.at(strategies[i].scenarios);
            if (!slot) {
                res.ok = false;
                res.error = "scenarios on " + panel.dates[row].iso() + ": " + draw_errors.at(strategies[i].scenarios);
                return;
            }
            try {
                step_strategy(panel, day, *slot, strategies[i], cfg, states[i], res);
            } catch (const Error& e) {
                res.ok = false;
                res.error = panel.dates[row].iso() + ": " + e.what();
            }
        });
        day.mixing.resize(0, 0);
        day.covariance.resize(0, 0);
        run.days.push_back(std::move(day));
    }

    for (std::size_t i = 0; i < strategies.size(); ++i) finalize_metrics(run.results[i], strategies[i].beta, cfg);
    return run;
}

inline BacktestResult run_strategy(const ReturnPanel& panel, const EsgTable& esg, const EngineConfig& cfg,
                                   const StrategyConfig& s) {
    return run_grid(panel, esg, cfg, {s}).results.front();
}

/// Buy-and-hold of renormalized index weights over the active universe,
/// drifting daily and reset when the universe changes.
inline BacktestResult run_benchmark(const ReturnPanel& panel, const EsgTable& esg, const EngineConfig& cfg) {
    cfg.validate();
    const auto [first, last] = cfg.test_rows(panel);
    BacktestResult out;
    out.id = "benchmark";
    std::vector<std::size_t> universe;
    Vector w;
    for (std::size_t row = first; row < last; ++row) {
        const auto u = active_universe(panel, esg, row, cfg.window);
        if (u != universe) {
            if (!universe.empty()) {
                out.events.push_back(panel.dates[row].iso() + ": " + detail::universe_change(panel, universe, u) +
                                     " benchmark reset to index weights");
            }
            universe = u;
            const auto tickers = tickers_of(panel, universe);
            w = benchmark_weights(esg, tickers);
        }
        const Vector r = realized_returns(panel, row, universe, &out.events);
        const double ret = w.dot(r);
        out.dates.push_back(panel.dates[row]);
        out.returns.push_back(ret);
        out.turnover.push_back(0.0);
        out.weights.push_back(detail::expand(w, universe, panel.cols()));
        w = drift_weights(w, r);
    }
    finalize_metrics(out, cfg.benchmark_beta, cfg);
    return out;
}

}  // namespace esgport
