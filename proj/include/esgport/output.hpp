#pragma once

// Result files and the run manifest. Everything written here is a pure
// function of the inputs, config and seeds (no timestamps, no thread counts),
// so reruns are byte-identical.

#include "esgport/backtest.hpp"
#include "esgport/config.hpp"
#include "esgport/metrics.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace esgport {

inline constexpr const char* kSoftwareVersion = "esgport 1.0.0";

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

/// date,return,turnover,wealth,iterations,certificate_gap,w_<ticker>...
inline std::string strategy_csv(const BacktestResult& r, const std::vector<std::string>& tickers) {
    std::ostringstream out;
    out << "date,return,turnover,wealth,iterations,certificate_gap";
    for (const auto& t : tickers) out << ",w_" << t;
    out << '\n';
    const auto wealth = r.wealth();
    for (std::size_t i = 0; i < r.returns.size(); ++i) {
        out << r.dates[i].iso() << ',' << format_double(r.returns[i]) << ',' << format_double(r.turnover[i]) << ','
            << format_double(wealth[i]) << ',' << (i < r.iterations.size() ? r.iterations[i] : 0) << ','
            << format_double(i < r.certificate_gaps.size() ? r.certificate_gaps[i] : 0.0);
        for (Eigen::Index j = 0; j < r.weights[i].size(); ++j) out << ',' << format_double(r.weights[i](j));
        out << '\n';
    }
    return out.str();
}

inline const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols{
        "id",     "mode",   "lambda",  "alpha", "rho", "beta", "scenarios",       "status",
        "total_return", "annual_return", "sharpe", "sortino", "gini", "starr", "ddr",
        "yearly_turnover", "max_drawdown", "error"};
    return cols;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

/// Full-precision summary, one row per strategy, benchmark last.
inline std::string metrics_csv(const std::vector<BacktestResult>& results, const BacktestResult& benchmark) {
    std::ostringstream out;
    const auto& cols = metrics_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    auto row = [&](const BacktestResult& r, bool is_benchmark) {
        const auto& c = r.config;
        out << r.id << ',';
        if (is_benchmark) out << "benchmark,,,,,,";
        else {
            out << mode_tag(c.mode) << ',' << format_double(c.lambda) << ',' << format_double(c.alpha) << ','
                << format_double(c.rho) << ',' << format_double(c.beta) << ',' << c.scenarios << ',';
        }
        out << (r.ok ? "ok" : "failed");
        if (r.metrics) {
            const auto& m = *r.metrics;
            out << ',' << format_double(m.total_return) << ',' << format_double(m.annual_return) << ','
                << optional_number(m.sharpe) << ',' << optional_number(m.sortino) << ',' << optional_number(m.gini)
                << ',' << optional_number(m.starr) << ',' << optional_number(m.ddr) << ','
                << format_double(m.yearly_turnover) << ',' << format_double(m.max_drawdown);
        } else {
            out << ",,,,,,,,,";
        }
        out << ',' << csv_escape(r.error) << '\n';
    };
    for (const auto& r : results) row(r, false);
    row(benchmark, true);
    return out.str();
}

/// Fitted per-asset models for every rebalance day.
inline std::string days_csv(const std::vector<DayModel>& days, const ReturnPanel& panel) {
    std::ostringstream out;
    out << "target_date,decision_date,ticker,mean_const,ar,ma,var_const,arch,garch,loglik,"
           "nig_alpha,nig_beta,nig_delta,nig_mu,forecast_mean,forecast_sigma,kappa,jitter,scenario_seed\n";
    for (const auto& d : days) {
        for (std::size_t i = 0; i < d.tickers.size(); ++i) {
            const auto& f = d.fits[i];
            out << panel.dates[d.row].iso() << ',' << d.decision.iso() << ',' << d.tickers[i] << ','
                << format_double(f.garch.mean_const) << ',' << format_double(f.garch.ar) << ','
                << format_double(f.garch.ma) << ',' << format_double(f.garch.var_const) << ','
                << format_double(f.garch.arch) << ',' << format_double(f.garch.garch) << ','
                << format_double(f.garch.loglik) << ',' << format_double(f.nig.alpha) << ','
                << format_double(f.nig.beta) << ',' << format_double(f.nig.delta) << ','
                << format_double(f.nig.mu) << ',' << format_double(f.forecast.mean) << ','
                << format_double(f.forecast.sigma) << ',' << format_double(d.kappa) << ','
                << format_double(d.jitter) << ',' << d.scenario_seed << '\n';
        }
    }
    return out.str();
}

inline std::vector<ReportRow> report_rows(const std::vector<BacktestResult>& results) {
    std::vector<ReportRow> rows;
    for (const auto& r : results) {
        rows.push_back(ReportRow{r.id, mode_tag(r.config.mode), r.config.lambda, r.config.alpha, r.config.rho,
                                 r.config.beta, r.metrics});
    }
    return rows;
}

struct RunSummary {
    std::size_t strategies = 0;
    std::size_t failed = 0;
    std::filesystem::path out_dir;
};

/// Writes every artifact of a finished run into `dir`:
///   strategies/<id>.csv, benchmark.csv, metrics.csv, report.csv,
///   benchmark_row.csv, days.csv, events.log, manifest.json
inline RunSummary write_run(const std::filesystem::path& dir, const RunConfig& cfg, const ReturnPanel& panel,
                            const GridRun& run, const BacktestResult& benchmark) {
    std::map<std::string, std::string> files;
    for (const auto& r : run.results) files["strategies/" + r.id + ".csv"] = strategy_csv(r, panel.assets);
    files["benchmark.csv"] = strategy_csv(benchmark, panel.assets);
    files["metrics.csv"] = metrics_csv(run.results, benchmark);
    const auto rows = report_rows(run.results);
    files["report.csv"] = format_report(rows, benchmark.metrics);
    if (benchmark.metrics) files["benchmark_row.csv"] = format_benchmark_row(*benchmark.metrics);
    files["days.csv"] = days_csv(run.days, panel);

    std::ostringstream events;
    for (const auto& d : run.days) {
        for (const auto& e : d.events) events << "[model] " << e << '\n';
    }
    for (const auto& e : benchmark.events) events << "[benchmark] " << e << '\n';
    for (const auto& r : run.results) {
        for (const auto& e : r.events) events << '[' << r.id << "] " << e << '\n';
        if (!r.ok) events << '[' << r.id << "] FAILED: " << r.error << '\n';
    }
    files["events.log"] = events.str();

    RunSummary summary;
    summary.out_dir = dir;
    summary.strategies = run.results.size();

    Json manifest;
    manifest["software"] = kSoftwareVersion;
    manifest["config"] = cfg.source;
    manifest["seed"] = cfg.engine.seed;
    Json data;
    for (const auto& [key, rel] : {std::pair{"prices", cfg.data.prices}, std::pair{"esg", cfg.data.esg},
                                   std::pair{"index_weights", cfg.data.index_weights}}) {
        data[key] = {{"path", rel}, {"sha256", sha256_hex(read_file(cfg.resolve(rel)))}};
    }
    manifest["data"] = data;
    const auto [first, last] = cfg.engine.test_rows(panel);
    manifest["test_period"] = {{"first", panel.dates[first].iso()},
                               {"last", panel.dates[last - 1].iso()},
                               {"days", last - first}};
    manifest["strategy_count"] = run.results.size();
    Json strategies = Json::array();
    for (const auto& r : run.results) {
        Json s{{"id", r.id}, {"status", r.ok ? "ok" : "failed"}};
        if (!r.ok) {
            s["error"] = r.error;
            ++summary.failed;
        }
        int iterations = 0;
        double worst_gap = 0.0;
        for (int it : r.iterations) iterations += it;
        for (double g : r.certificate_gaps) worst_gap = std::max(worst_gap, g);
        s["solver"] = {{"total_iterations", iterations}, {"max_certificate_gap", format_double(worst_gap)}};
        strategies.push_back(s);
    }
    manifest["strategies"] = strategies;
    manifest["failed"] = summary.failed;
    Json outputs;
    for (const auto& [name, text] : files) outputs[name] = sha256_hex(text);
    manifest["outputs"] = outputs;
    files["manifest.json"] = manifest.dump(2) + "\n";

    for (const auto& [name, text] : files) write_file(dir / name, text);
    return summary;
}

}  // namespace esgport
