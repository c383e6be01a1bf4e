// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "support.hpp"

#include "esgport/cli.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace esgport;
using namespace esgport::testing;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kCvarBudgetMs = 1.0;
constexpr double kCertificateTol = 1e-6;
constexpr double kOptimizerBudgetS = 10.0;
constexpr double kPriorTol = 1e-12;
constexpr double kExactViewTol = 1e-6;
constexpr double kNigTol = 0.15;
constexpr double kGarchTol = 0.1;
constexpr double kGarchPersistenceTol = 0.05;
constexpr double kRecoveryBudgetS = 60.0;
constexpr double kAffineTol = 1e-12;
constexpr double kCorrelationTol = 0.03;
constexpr double kMetricTol = 1e-12;
constexpr double kDeskBudgetS = 600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

template <typename P, typename Fn>
P best_effort(Fn&& fn) {
    try {
        return fn();
    } catch (const ConvergenceError<P>& e) {
        return e.best;
    }
}

Outcome cvar_identity() {
    std::vector<double> losses;
    for (int i = 1; i <= 100; ++i) losses.push_back(i);
    const auto t0 = Clock::now();
    const auto r = cvar_from_objective(losses, 0.95);
    const double ms = seconds_since(t0) * 1e3;
    std::ostringstream d;
    d << "cvar=" << format_double(r.cvar) << " var=" << format_double(r.var) << " time=" << ms << "ms";
    return {r.cvar == 98.0 && r.var == 95.0 && ms < kCvarBudgetMs, d.str()};
}

Outcome optimizer_oracle() {
    const auto t0 = Clock::now();
    bool ok = true;
    double worst_gap = 0.0, worst_excess = 0.0;
    int combos = 0;
    for (double alpha : {0.0, 0.5, 1.0}) {
        for (double rho : {0.0, 5e-4, 4e-3}) {
            std::mt19937_64 rng(31);
            std::student_t_distribution<double> t(5.0);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            AllocationProblem p;
            p.scenarios.resize(500, 3);
            p.expected_returns.resize(3);
            for (Eigen::Index i = 0; i < 3; ++i) {
                for (Eigen::Index j = 0; j < 500; ++j) {
                    p.scenarios(j, i) = 0.0004 * static_cast<double>(i + 1) + (0.008 + 0.004 * static_cast<double>(i)) * t(rng);
                }
                p.expected_returns(i) = p.scenarios.col(i).mean();
            }
            p.prev_weights.resize(3);
            for (auto& w : p.prev_weights) w = 0.2 + u(rng);
            p.prev_weights /= p.prev_weights.sum();
            p.alpha = alpha;
            p.rho = rho;

            double grid_best = -std::numeric_limits<double>::infinity();
            int points = 0;
            Vector w(3);
            for (int a = 0; a <= 100; ++a) {
                for (int b = 0; a + b <= 100; ++b) {
                    w << a / 100.0, b / 100.0, (100 - a - b) / 100.0;
                    grid_best = std::max(grid_best, allocation_objective(p, w));
                    ++points;
                }
            }
            const auto sol = solve(p);
            const double lipschitz = alpha * p.expected_returns.cwiseAbs().maxCoeff() +
                                     (1.0 - alpha) * p.scenarios.cwiseAbs().maxCoeff() + rho;
            const double excess = sol.objective - grid_best;
            worst_gap = std::max(worst_gap, sol.certificate_gap);
            worst_excess = std::max(worst_excess, excess / lipschitz);
            ok = ok && points == 5151 && sol.certificate_gap <= kCertificateTol && excess >= -1e-12 &&
                 excess <= 0.02 * lipschitz;
            ++combos;
        }
    }
    const double s = seconds_since(t0);
    std::ostringstream d;
    d << combos << " combos, max certificate gap " << worst_gap << ", max excess/Lipschitz " << worst_excess
      << ", time=" << s << "s";
    return {ok && combos == 9 && s < kOptimizerBudgetS, d.str()};
}

Outcome bl_limits() {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.01);
    Matrix x(12, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    const Matrix s = x.transpose() * x / 12.0 + 1e-6 * Matrix::Identity(4, 4);
    const Vector pi = equilibrium_premium(2.5, s, Vector::Constant(4, 0.25));
    const double prior_err = (posterior(0.05, s, pi, BlViews::none(4)).mean - pi).cwiseAbs().maxCoeff();
    Vector v(4);
    v << 0.002, -0.001, 0.0005, 0.003;
    const BlViews exact{Matrix::Identity(4, 4), v, Vector::Constant(4, 1e-12)};
    const double view_err =
        (posterior(0.05, s, pi, exact).mean - v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();
    std::ostringstream d;
    d << "no-view error " << prior_err << ", exact-view relative error " << view_err;
    return {prior_err <= kPriorTol && view_err < kExactViewTol, d.str()};
}

Outcome recovery() {
    const auto t0 = Clock::now();
    const auto truth = NigParams::standardized(1.5, -0.3);
    const Vector z = sample_standardized(truth, 20000, 4242);
    const auto nig = best_effort<NigParams>([&] { return fit_standardized(as_span(z)); });
    const bool nig_ok = std::abs(nig.alpha - 1.5) <= kNigTol && std::abs(nig.beta + 0.3) <= kNigTol;

    const ArmaGarchParams g{0.0, 0.5, -0.3, 1e-6, 0.05, 0.90};
    std::mt19937_64 rng(2024);
    const Vector x = simulate_arma_garch(g, 10000, rng);
    const auto p = best_effort<ArmaGarchParams>([&] { return fit_arma_garch(as_span(x)); });
    const bool garch_ok = std::abs(p.ar - 0.5) <= kGarchTol && std::abs(p.ma + 0.3) <= kGarchTol &&
                          std::abs(p.arch - 0.05) <= kGarchTol && std::abs(p.garch - 0.90) <= kGarchTol &&
                          std::abs(p.arch + p.garch - 0.95) <= kGarchPersistenceTol;
    const double s = seconds_since(t0);
    std::ostringstream d;
    d << "NIG (" << nig.alpha << ", " << nig.beta << "); ARMA-GARCH phi=" << p.ar << " theta=" << p.ma
      << " a=" << p.arch << " gamma=" << p.garch << "; time=" << s << "s";
    return {nig_ok && garch_ok && s < kRecoveryBudgetS, d.str()};
}

Outcome affine_contract() {
    std::vector<Marginal> ms;
    for (std::size_t i = 0; i < 3; ++i) {
        ms.push_back(Marginal{NigParams::standardized(1.5, 0.0), 0.0, 0.01 + 0.005 * static_cast<double>(i), i});
    }
    Matrix c(3, 3);
    c << 1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0;
    const Matrix l = mixing_factor(c).lower;
    Vector m(3);
    m << 0.001, -0.0005, 0.002;
    const auto set = build_scenarios(ms, m, l, 2000, 42);
    Vector sigma(3);
    for (Eigen::Index i = 0; i < 3; ++i) sigma(i) = ms[static_cast<std::size_t>(i)].sigma;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < set.scenarios.rows(); ++j) {
        const Vector y = set.draws.row(j).transpose();
        const Vector expected = sigma.asDiagonal() * (l * y) + m;
        worst = std::max(worst, (set.scenarios.row(j).transpose() - expected).cwiseAbs().maxCoeff());
    }

    Matrix c2(2, 2);
    c2 << 1.0, 0.8, 0.8, 1.0;
    const std::vector<Marginal> pair(ms.begin(), ms.begin() + 2);
    const auto big = build_scenarios(pair, Vector::Zero(2), mixing_factor(c2).lower, 100000, 7);
    const Vector a = big.scenarios.col(0).array() - big.scenarios.col(0).mean();
    const Vector b = big.scenarios.col(1).array() - big.scenarios.col(1).mean();
    const double corr = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
    std::ostringstream d;
    d << "max affine error " << worst << ", correlation " << corr;
    return {worst <= kAffineTol && std::abs(corr - 0.8) <= kCorrelationTol, d.str()};
}

Outcome grid_structure() {
    const auto grid = GridSpec{}.expand();
    std::size_t standard = 0;
    std::vector<ReportRow> rows;
    for (const auto& c : grid) {
        if (c.mode == StrategyMode::standard) ++standard;
        rows.push_back(ReportRow{c.id(), mode_tag(c.mode), c.lambda, c.alpha, c.rho, c.beta, MetricsRow{}});
    }
    const auto tables = partition_report(rows);
    std::string labels;
    bool sizes = true;
    for (const auto& t : tables) {
        labels += t.label + " ";
        sizes = sizes && t.rows.size() == 44;
    }
    std::ostringstream d;
    d << grid.size() << " strategies (" << standard << " std, " << grid.size() - standard << " bl), "
      << tables.size() << " tables: " << labels;
    return {grid.size() == 616 && standard == 88 && tables.size() == 14 && sizes &&
                labels == "2A 2B 2C 2D 2E 2F 2G 3A 3B 3C 3D 3E 3F 3G ",
            d.str()};
}

Outcome turnover_monotone() {
    const auto data = small_dataset(4, 330, 13);
    const auto panel = data.panel();
    const auto esg = data.esg();
    const auto cfg = quick_engine(250, 80, 9);
    const std::vector<double> rhos{5e-4, 10e-4, 15e-4, 20e-4, 30e-4, 40e-4};
    std::vector<StrategyConfig> grid;
    for (double rho : rhos) grid.push_back({StrategyMode::black_litterman, 0.25, 0.5, rho, 0.95, 1000});
    grid.push_back({StrategyMode::black_litterman, 0.25, 0.5, 1e3, 0.95, 1000});
    const auto run = run_grid(panel, esg, cfg, grid);

    bool ok = true;
    std::ostringstream d;
    d << "yearly turnover";
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        const auto& r = run.results[i];
        if (!r.ok) return {false, r.id + " failed: " + r.error};
        const double t = r.metrics->yearly_turnover;
        d << ' ' << format_metric(t);
        ok = ok && t <= prev;
        prev = t;
    }
    const auto& frozen = run.results.back();
    bool zero = frozen.ok;
    for (double t : frozen.turnover) zero = zero && t == 0.0;
    d << "; rho=1e3 turnover " << (zero ? "exactly 0" : "nonzero");
    return {ok && zero, d.str()};
}

Outcome no_look_ahead() {
    const auto data = small_dataset(3, 320, 8);
    const auto panel = data.panel();
    const auto esg = data.esg();
    const std::vector<StrategyConfig> grid{{StrategyMode::standard, 0.5, 0.5, 5e-4, 0.95, 1000},
                                           {StrategyMode::black_litterman, 0.25, 0.3, 10e-4, 0.99, 1000}};
    const auto full = run_grid(panel, esg, quick_engine(300, 20), grid);
    bool ok = true;
    int checked = 0;
    for (std::size_t t : {1u, 7u, 15u}) {
        const auto cut = run_grid(panel.slice(0, 300 + t + 1), esg, quick_engine(300, 0), grid);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const auto& a = full.results[s];
            const auto& b = cut.results[s];
            ok = ok && a.ok && b.ok && b.weights.size() == t + 1 && (a.weights[t].array() == b.weights[t].array()).all();
            ++checked;
        }
    }
    return {ok, std::to_string(checked) + " truncated allocations compared bitwise"};
}

Outcome metrics_fixture() {
    const std::vector<double> r{0.02, -0.01, 0.03};
    const std::vector<double> turn{0.1, 0.0, 0.2};
    const auto m = compute_metrics(r, turn, MetricsOptions{0.95, 0.0});
    const double growth = 1.02 * 0.99 * 1.03;
    const double mean = 0.04 / 3.0;
    const double sd = std::sqrt(((0.02 - mean) * (0.02 - mean) + (-0.01 - mean) * (-0.01 - mean) +
                                 (0.03 - mean) * (0.03 - mean)) / 2.0);
    const double downside = std::sqrt(0.01 * 0.01 / 3.0);
    const double gmd = 2.0 * (0.03 + 0.01 + 0.04) / 6.0;
    const double drawdown = (1.02 - 1.02 * 0.99) / 1.02;
    const std::vector<std::pair<double, double>> pairs{
        {m.total_return, growth - 1.0},
        {m.annual_return, std::pow(growth, 252.0 / 3.0) - 1.0},
        {*m.sharpe, mean / sd},
        {*m.sortino, mean / downside},
        {*m.gini, mean / gmd},
        {*m.starr, mean / 0.01},
        {m.max_drawdown, drawdown},
        {*m.ddr, (growth - 1.0) / drawdown},
        {m.yearly_turnover, 252.0 * 0.3 / 3.0}};
    double fixture_err = 0.0;
    for (const auto& [got, want] : pairs) fixture_err = std::max(fixture_err, std::abs(got - want));

    std::mt19937_64 rng(2718);
    std::normal_distribution<double> n(0.0005, 0.012);
    std::uniform_int_distribution<int> len(2, 400);
    double gmd_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(static_cast<std::size_t>(len(rng)));
        for (auto& v : x) v = n(rng);
        double s = 0.0;
        for (double a : x) {
            for (double b : x) s += std::abs(a - b);
        }
        const double t = static_cast<double>(x.size());
        gmd_err = std::max(gmd_err, std::abs(gini_mean_difference(x) - s / (t * (t - 1.0))));
    }

    MetricsRow bench;
    bench.total_return = 1.4864;
    bench.annual_return = 0.3187;
    bench.sharpe = 0.0743;
    bench.sortino = 0.1057;
    bench.gini = 0.1057;
    bench.starr = 0.0288;
    bench.ddr = 4.538;
    const bool row_ok = format_benchmark_row(bench) ==
                        "Total Return,Annual Return,Sharpe,Sortino,Gini,STARR,DDR\n"
                        "1.4864,0.3187,0.0743,0.1057,0.1057,0.0288,4.538\n";
    std::ostringstream d;
    d << "fixture error " << fixture_err << ", GMD error " << gmd_err << ", benchmark row "
      << (row_ok ? "matches" : "differs");
    return {fixture_err <= kMetricTol && gmd_err <= kMetricTol && row_ok, d.str()};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
    }
    return out;
}

Outcome desk_determinism() {
    const auto dir = scratch_dir("acceptance_desk");
    SynthSpec spec;
    spec.assets = 5;
    spec.returns = 800;
    spec.seed = 1;
    std::ostringstream sink;
    if (cmd_synth(dir, spec, sink, sink) != kExitOk) return {false, "synth failed: " + sink.str()};

    std::vector<std::map<std::string, std::string>> trees;
    std::vector<double> times;
    for (std::size_t jobs : {1u, 1u, 4u}) {
        BacktestOptions opt;
        opt.out = dir / ("run_jobs" + std::to_string(jobs) + "_" + std::to_string(trees.size()));
        opt.jobs = jobs;
        const auto t0 = Clock::now();
        const int code = cmd_backtest(dir / "config.json", opt, sink, sink);
        times.push_back(seconds_since(t0));
        if (code != kExitOk) return {false, "backtest exit " + std::to_string(code) + ": " + sink.str()};
        trees.push_back(read_tree(*opt.out));
    }
    const auto manifest = Json::parse(trees[0].at("manifest.json"));
    const bool shape = manifest["strategy_count"] == 24 && manifest["test_period"]["days"] == 100;
    const bool rerun = trees[0] == trees[1];
    const bool parallel = trees[0] == trees[2];
    const double worst = *std::max_element(times.begin(), times.end());
    std::ostringstream d;
    d << trees[0].size() << " files, 24 strategies x 100 days; rerun " << (rerun ? "identical" : "DIFFERS")
      << ", jobs=4 " << (parallel ? "identical" : "DIFFERS") << "; slowest run " << worst << "s";
    return {shape && rerun && parallel && worst < kDeskBudgetS, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 CVaR identity", cvar_identity},
        {"AC2 optimizer vs brute force", optimizer_oracle},
        {"AC3 Black-Litterman limits", bl_limits},
        {"AC4 distribution recovery", recovery},
        {"AC5 scenario affine contract", affine_contract},
        {"AC6 grid structure", grid_structure},
        {"AC7 turnover monotonicity and freeze", turnover_monotone},
        {"AC8 no look-ahead", no_look_ahead},
        {"AC9 metrics correctness", metrics_fixture},
        {"AC10 end-to-end determinism", desk_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << name << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
