#pragma once

// Per-strategy performance summary. Ratios are daily (no annualization);
// a ratio whose denominator is zero is reported as undefined ("NA").

#include "esgport/core.hpp"
#include "esgport/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace esgport {

inline constexpr double kTradingDaysPerYear = 252.0;

struct MetricsRow {
    double total_return = 0.0;
    double annual_return = 0.0;
    std::optional<double> sharpe;
    std::optional<double> sortino;
    std::optional<double> gini;
    std::optional<double> starr;
    std::optional<double> ddr;
    double yearly_turnover = 0.0;
    double max_drawdown = 0.0;
};

struct MetricsOptions {
    double beta = 0.95;            // STARR confidence level
    double risk_free_daily = 0.0;  // subtracted from every return in the ratios
};

/// Gini mean difference by the sorted-order identity
/// GMD = 2 / (T (T-1)) sum_i (2i - T - 1) x_(i), i = 1..T.
inline double gini_mean_difference(std::span<const double> r) {
    const auto t = r.size();
    if (t < 2) throw ConfigError("Gini mean difference needs at least two returns");
    std::vector<double> x(r.begin(), r.end());
    std::sort(x.begin(), x.end());
    double acc = 0.0;
    const double td = static_cast<double>(t);
    for (std::size_t i = 0; i < t; ++i) acc += (2.0 * static_cast<double>(i + 1) - td - 1.0) * x[i];
    return 2.0 * acc / (td * (td - 1.0));
}

/// Definition: mean |r_i - r_j| over ordered pairs i != j.
inline double gini_mean_difference_pairs(std::span<const double> r) {
    const auto t = r.size();
    if (t < 2) throw ConfigError("Gini mean difference needs at least two returns");
    double acc = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j) acc += std::abs(r[i] - r[j]);
    }
    const double td = static_cast<double>(t);
    return acc / (td * (td - 1.0));
}

/// Largest peak-to-trough decline of the wealth curve that starts at 1.
inline double max_drawdown(std::span<const double> r) {
    double wealth = 1.0, peak = 1.0, worst = 0.0;
    for (double x : r) {
        wealth *= 1.0 + x;
        peak = std::max(peak, wealth);
        worst = std::max(worst, (peak - wealth) / peak);
    }
    return worst;
}

inline std::vector<double> wealth_curve(std::span<const double> r) {
    std::vector<double> w;
    w.reserve(r.size());
    double wealth = 1.0;
    for (double x : r) {
        wealth *= 1.0 + x;
        w.push_back(wealth);
    }
    return w;
}

inline MetricsRow compute_metrics(std::span<const double> returns, std::span<const double> turnover,
                                  const MetricsOptions& opt = {}) {
    const auto t = returns.size();
    if (t < 2) throw ConfigError("metrics need at least two daily returns");
    require_level(opt.beta);
    for (double x : returns) {
        if (!std::isfinite(x) || x <= -1.0) throw DataError("daily return is not finite or <= -1");
    }

    auto ratio = [](double num, double den) -> std::optional<double> {
        if (den == 0.0) return std::nullopt;
        return num / den;
    };

    MetricsRow m;
    double growth = 1.0;
    for (double x : returns) growth *= 1.0 + x;
    const double td = static_cast<double>(t);
    m.total_return = growth - 1.0;
    m.annual_return = std::pow(growth, kTradingDaysPerYear / td) - 1.0;

    std::vector<double> ex(returns.begin(), returns.end());
    for (double& x : ex) x -= opt.risk_free_daily;
    double mean = 0.0;
    for (double x : ex) mean += x;
    mean /= td;

    double ss = 0.0, downside = 0.0;
    for (double x : ex) {
        ss += (x - mean) * (x - mean);
        const double d = std::min(x, 0.0);
        downside += d * d;
    }
    // dispersion at round-off level of the returns counts as zero
    double scale = 0.0;
    for (double x : ex) scale = std::max(scale, std::abs(x));
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    auto spread = [&](double den) { return den <= noise ? 0.0 : den; };
    m.sharpe = ratio(mean, spread(std::sqrt(ss / (td - 1.0))));
    m.sortino = ratio(mean, spread(std::sqrt(downside / td)));
    m.gini = ratio(mean, spread(gini_mean_difference(ex)));

    std::vector<double> losses(t);
    for (std::size_t i = 0; i < t; ++i) losses[i] = -ex[i];
    m.starr = ratio(mean, cvar_from_objective(losses, opt.beta).cvar);

    m.max_drawdown = max_drawdown(returns);
    m.ddr = ratio(m.total_return, m.max_drawdown);

    double turn = 0.0;
    for (double x : turnover) turn += x;
    m.yearly_turnover = kTradingDaysPerYear / td * turn;
    return m;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

inline std::string format_metric(const std::optional<double>& v, int decimals = 4) {
    if (!v) return "NA";
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(decimals);
    s << *v;
    return s.str();
}

/// Benchmark columns in the order of the published benchmark table.
inline const std::vector<std::string>& benchmark_columns() {
    static const std::vector<std::string> cols{"Total Return", "Annual Return", "Sharpe", "Sortino",
                                               "Gini",         "STARR",         "DDR"};
    return cols;
}

inline std::vector<std::optional<double>> benchmark_values(const MetricsRow& m) {
    return {m.total_return, m.annual_return, m.sharpe, m.sortino, m.gini, m.starr, m.ddr};
}

/// Two lines: header and values (shortest round-trip formatting).
inline std::string format_benchmark_row(const MetricsRow& m, char delimiter = ',') {
    std::string out;
    const auto& cols = benchmark_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? std::string(1, delimiter) : "") + cols[i];
    out += '\n';
    const auto vals = benchmark_values(m);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) out += delimiter;
        out += vals[i] ? format_double(*vals[i]) : "NA";
    }
    out += '\n';
    return out;
}

struct ReportRow {
    std::string id;
    std::string mode;  // "std" or "bl"
    double lambda = 0.0;
    double alpha = 0.0;
    double rho = 0.0;
    double beta = 0.95;
    std::optional<MetricsRow> metrics;  // empty when the strategy failed
};

struct ReportTable {
    std::string label;  // e.g. "2A"
    std::string title;
    std::string mode;
    double rho = 0.0;
    double beta = 0.0;
    std::vector<ReportRow> rows;
};

/// One table per (mode, rho, beta). Tables are numbered by beta (2, 3, ...)
/// and lettered by (standard first, then rho ascending); rows sort by
/// (lambda, alpha).
inline std::vector<ReportTable> partition_report(std::span<const ReportRow> rows) {
    if (rows.empty()) throw ConfigError("report needs at least one strategy row");
    std::vector<double> betas;
    for (const auto& r : rows) betas.push_back(r.beta);
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());

    using Key = std::tuple<std::size_t, int, double>;  // beta index, mode order, rho
    std::map<Key, ReportTable> tables;
    for (const auto& r : rows) {
        const auto b = static_cast<std::size_t>(std::lower_bound(betas.begin(), betas.end(), r.beta) - betas.begin());
        const Key key{b, r.mode == "std" ? 0 : 1, r.rho};
        auto& t = tables[key];
        t.mode = r.mode;
        t.rho = r.rho;
        t.beta = r.beta;
        t.rows.push_back(r);
    }
    std::vector<ReportTable> out;
    std::size_t prev_beta = static_cast<std::size_t>(-1);
    char letter = 'A';
    for (auto& [key, t] : tables) {
        const auto b = std::get<0>(key);
        if (b != prev_beta) {
            letter = 'A';
            prev_beta = b;
        }
        t.label = std::to_string(2 + b) + std::string(1, letter++);
        std::ostringstream rho;
        rho << t.rho;
        t.title = "CVaR" + format_double(std::round(t.beta * 1e4) / 1e2) + " " + t.mode + " rho=" + rho.str();
        std::stable_sort(t.rows.begin(), t.rows.end(), [](const ReportRow& a, const ReportRow& c) {
            return std::tie(a.lambda, a.alpha) < std::tie(c.lambda, c.alpha);
        });
        out.push_back(std::move(t));
    }
    return out;
}

inline const std::vector<std::string>& strategy_columns() {
    static const std::vector<std::string> cols{"Strategy", "Lambda", "Alpha",  "Total Return",
                                               "Annual Return", "Sharpe", "Sortino", "Gini",
                                               "STARR", "DDR", "Turnover"};
    return cols;
}

/// Delimiter-separated tables, blank line between tables, benchmark first.
inline std::string format_report(std::span<const ReportRow> rows, const std::optional<MetricsRow>& benchmark,
                                 char delimiter = ',') {
    std::ostringstream out;
    const std::string d(1, delimiter);
    if (benchmark) {
        out << "# Table 1: benchmark\n" << format_benchmark_row(*benchmark, delimiter) << '\n';
    }
    for (const auto& t : partition_report(rows)) {
        out << "# Table " << t.label << ": " << t.title << '\n';
        const auto& cols = strategy_columns();
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? d : "") << cols[i];
        out << '\n';
        for (const auto& r : t.rows) {
            out << r.id << d << format_double(r.lambda) << d << format_double(r.alpha);
            if (!r.metrics) {
                for (int i = 0; i < 8; ++i) out << d << "FAILED";
            } else {
                const auto& m = *r.metrics;
                for (const auto& v : benchmark_values(m)) out << d << format_metric(v);
                out << d << format_metric(m.yearly_turnover);
            }
            out << '\n';
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace esgport
