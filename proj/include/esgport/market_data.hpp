#pragma once

// Price / ESG / index-weight ingestion and the daily return panel.
//
// File formats (comma separated, ISO-8601 dates, empty cell = missing):
//   prices        date,<ticker>,...      one row per trading day
//   esg scores    year,<ticker>,...      one row per release year
//   index weights ticker,weight

#include "esgport/core.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace esgport {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t start = cell.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? std::string{} : cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool is_missing_cell(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ReturnPanel
// ---------------------------------------------------------------------------

/// Daily arithmetic returns, N dates by M assets. Missing entries are NaN and
/// flagged false in `available`.
struct ReturnPanel {
    std::vector<Date> dates;
    std::vector<std::string> assets;
    Matrix returns;
    BoolMatrix available;

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return assets.size(); }

    std::optional<std::size_t> index_of(std::string_view ticker) const {
        auto it = std::find(assets.begin(), assets.end(), ticker);
        if (it == assets.end()) return std::nullopt;
        return static_cast<std::size_t>(it - assets.begin());
    }

    /// Row range [first, first + count) as a new panel sharing nothing.
    ReturnPanel slice(std::size_t first, std::size_t count) const {
        ReturnPanel p;
        p.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(first),
                       dates.begin() + static_cast<std::ptrdiff_t>(first + count));
        p.assets = assets;
        p.returns = returns.middleRows(static_cast<Eigen::Index>(first),
                                       static_cast<Eigen::Index>(count));
        p.available = available.middleRows(static_cast<Eigen::Index>(first),
                                           static_cast<Eigen::Index>(count));
        return p;
    }

    /// Throws DataError if any structural invariant is broken.
    void validate() const {
        const auto n = static_cast<Eigen::Index>(rows());
        const auto m = static_cast<Eigen::Index>(cols());
        if (returns.rows() != n || returns.cols() != m || available.rows() != n ||
            available.cols() != m) {
            throw DataError("return panel shape mismatch");
        }
        for (std::size_t i = 1; i < dates.size(); ++i) {
            if (!(dates[i - 1] < dates[i])) {
                throw DataError("dates not strictly increasing at " + dates[i].iso());
            }
        }
        std::set<std::string> seen(assets.begin(), assets.end());
        if (seen.size() != assets.size()) throw DataError("duplicate ticker in panel");
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                const double r = returns(i, j);
                if (available(i, j) != std::isfinite(r)) {
                    throw DataError("availability mask disagrees with returns at " +
                                    dates[static_cast<std::size_t>(i)].iso());
                }
                if (available(i, j) && !(r > -1.0)) {
                    throw DataError("return <= -1 at " + dates[static_cast<std::size_t>(i)].iso() +
                                    " for " + assets[static_cast<std::size_t>(j)]);
                }
            }
        }
    }
};

inline ReturnPanel load_prices(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("price file is empty");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "date") {
        throw DataError("price file header must be 'date,<ticker>,...'");
    }
    std::vector<std::string> tickers(header.begin() + 1, header.end());
    const std::size_t m = tickers.size();

    std::vector<Date> dates;
    std::vector<std::vector<double>> prices;  // NaN = missing
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != m + 1) {
            throw DataError("price file line " + std::to_string(line_no) + ": expected " +
                            std::to_string(m + 1) + " cells, got " +
                            std::to_string(cells.size()));
        }
        dates.push_back(Date::parse(cells[0]));
        std::vector<double> row(m, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < m; ++j) {
            if (detail::is_missing_cell(cells[j + 1])) continue;
            const double p = parse_double(cells[j + 1]);
            if (!(p > 0.0) || !std::isfinite(p)) {
                throw DataError("non-positive price on line " + std::to_string(line_no) +
                                " (" + cells[0] + ") for " + tickers[j]);
            }
            row[j] = p;
        }
        prices.push_back(std::move(row));
    }
    if (dates.size() < 2) throw DataError("price file needs at least two rows");
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) throw DataError("price dates not strictly increasing at " + dates[i].iso());
    }

    ReturnPanel panel;
    panel.assets = tickers;
    panel.dates.assign(dates.begin() + 1, dates.end());
    const auto n = static_cast<Eigen::Index>(panel.dates.size());
    panel.returns.setConstant(n, static_cast<Eigen::Index>(m),
                              std::numeric_limits<double>::quiet_NaN());
    panel.available.setConstant(n, static_cast<Eigen::Index>(m), false);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double p0 = prices[i - 1][j];
            const double p1 = prices[i][j];
            if (std::isnan(p0) || std::isnan(p1)) continue;
            const auto r = static_cast<Eigen::Index>(i - 1);
            panel.returns(r, static_cast<Eigen::Index>(j)) = p1 / p0 - 1.0;
            panel.available(r, static_cast<Eigen::Index>(j)) = true;
        }
    }
    panel.validate();
    return panel;
}

inline ReturnPanel load_prices(const std::string& path) {
    auto in = detail::open_input(path);
    return load_prices(in);
}

/// Interchange format for a return panel; read_panel(write_panel(p)) == p bit-exactly.
inline void write_panel(std::ostream& out, const ReturnPanel& panel) {
    out << "date";
    for (const auto& a : panel.assets) out << ',' << a;
    out << '\n';
    for (std::size_t i = 0; i < panel.rows(); ++i) {
        out << panel.dates[i].iso();
        for (std::size_t j = 0; j < panel.cols(); ++j) {
            out << ',';
            const auto r = static_cast<Eigen::Index>(i);
            const auto c = static_cast<Eigen::Index>(j);
            if (panel.available(r, c)) out << format_double(panel.returns(r, c));
        }
        out << '\n';
    }
}

inline ReturnPanel read_panel(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("panel file is empty");
    auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "date") throw DataError("panel header must start with 'date'");
    ReturnPanel panel;
    panel.assets.assign(header.begin() + 1, header.end());
    const std::size_t m = panel.assets.size();
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != m + 1) throw DataError("panel row has wrong cell count");
        panel.dates.push_back(Date::parse(cells[0]));
        std::vector<double> row(m, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < m; ++j) {
            if (!detail::is_missing_cell(cells[j + 1])) row[j] = parse_double(cells[j + 1]);
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    panel.returns.resize(n, static_cast<Eigen::Index>(m));
    panel.available.resize(n, static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) {
            const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            panel.returns(i, j) = v;
            panel.available(i, j) = std::isfinite(v);
        }
    }
    panel.validate();
    return panel;
}

// ---------------------------------------------------------------------------
// EsgTable
// ---------------------------------------------------------------------------

/// Yearly ESG scores plus benchmark composition weights.
///
/// A score for year Y is released on the last trading day of December Y and
/// takes effect on the first trading day strictly after that release; it holds
/// until the next release. A ticker missing from the latest effective release
/// has no score, even if an older one exists.
struct EsgTable {
    std::map<std::pair<int, std::string>, double> scores;
    std::map<std::string, double> index_weights;

    std::optional<double> score(int year, const std::string& ticker) const {
        auto it = scores.find({year, ticker});
        if (it == scores.end()) return std::nullopt;
        return it->second;
    }

    /// Release date of year Y on `calendar`: last calendar date in December Y,
    /// or Dec 31 when the calendar does not cover that December.
    static Date release_date(int year, std::span<const Date> calendar) {
        const Date dec1(year, 12, 1);
        const Date jan1(year + 1, 1, 1);
        auto hi = std::lower_bound(calendar.begin(), calendar.end(), jan1);
        if (hi != calendar.begin() && *(hi - 1) >= dec1) return *(hi - 1);
        return Date(year, 12, 31);
    }

    /// Year of the release in force on `date` (release strictly before `date`).
    static int effective_year(Date date, std::span<const Date> calendar) {
        if (release_date(date.year(), calendar) < date) return date.year();
        return date.year() - 1;
    }

    std::optional<double> score_at(const std::string& ticker, Date date,
                                   std::span<const Date> calendar) const {
        return score(effective_year(date, calendar), ticker);
    }
};

inline EsgTable load_esg(std::istream& score_in, std::istream& weight_in) {
    EsgTable table;
    std::string line;
    if (!std::getline(score_in, line)) throw DataError("ESG file is empty");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "year") {
        throw DataError("ESG file header must be 'year,<ticker>,...'");
    }
    std::size_t line_no = 1;
    while (std::getline(score_in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("ESG file line " + std::to_string(line_no) + " has wrong cell count");
        }
        const int year = static_cast<int>(parse_double(cells[0]));
        for (std::size_t j = 1; j < cells.size(); ++j) {
            if (detail::is_missing_cell(cells[j])) continue;
            const double s = parse_double(cells[j]);
            if (!(s >= 0.0) || !std::isfinite(s)) {
                throw DataError("negative ESG score for " + header[j] + " in " +
                                std::to_string(year));
            }
            table.scores[{year, header[j]}] = s;
        }
    }

    if (!std::getline(weight_in, line)) throw DataError("index weight file is empty");
    header = detail::split_csv_line(line);
    if (header.size() != 2 || header[0] != "ticker" || header[1] != "weight") {
        throw DataError("index weight header must be 'ticker,weight'");
    }
    double total = 0.0;
    while (std::getline(weight_in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 2) throw DataError("index weight row must have two cells");
        const double w = parse_double(cells[1]);
        if (!(w >= 0.0)) throw DataError("negative index weight for " + cells[0]);
        table.index_weights[cells[0]] = w;
        total += w;
    }
    if (table.index_weights.empty()) throw DataError("index weight file has no rows");
    if (std::abs(total - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "index weights sum to " << total
            << " (renormalization would rescale every weight by " << 1.0 / total
            << "); refusing to renormalize beyond 1e-9";
        throw DataError(msg.str());
    }
    for (auto& [ticker, w] : table.index_weights) w /= total;
    return table;
}

inline EsgTable load_esg(const std::string& score_path, const std::string& weight_path) {
    auto s = detail::open_input(score_path);
    auto w = detail::open_input(weight_path);
    return load_esg(s, w);
}

// ---------------------------------------------------------------------------
// Universe and benchmark
// ---------------------------------------------------------------------------

/// Columns eligible for the allocation applied to return row `target_row`:
/// a complete history over the `window` rows before it, and an ESG score in
/// force on the decision date (the date of row target_row - 1).
inline std::vector<std::size_t> active_universe(const ReturnPanel& panel, const EsgTable& esg,
                                                std::size_t target_row, std::size_t window) {
    if (target_row < window || target_row == 0 || target_row > panel.rows()) {
        throw ConfigError("row " + std::to_string(target_row) +
                          " has no complete window of " + std::to_string(window) + " returns");
    }
    const Date decision = panel.dates[target_row - 1];
    const auto first = static_cast<Eigen::Index>(target_row - window);
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < panel.cols(); ++j) {
        const bool complete = panel.available
                                  .block(first, static_cast<Eigen::Index>(j),
                                         static_cast<Eigen::Index>(window), 1)
                                  .all();
        if (complete && esg.score_at(panel.assets[j], decision, panel.dates)) out.push_back(j);
    }
    if (out.empty()) {
        throw ConfigError("empty active universe on " + decision.iso());
    }
    return out;
}

inline std::vector<std::string> tickers_of(const ReturnPanel& panel,
                                           std::span<const std::size_t> columns) {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (auto c : columns) out.push_back(panel.assets[c]);
    return out;
}

/// Index weights restricted to `universe` and renormalized to sum to one.
inline Vector benchmark_weights(const EsgTable& esg, std::span<const std::string> universe) {
    if (universe.empty()) throw ConfigError("benchmark universe is empty");
    Vector w(static_cast<Eigen::Index>(universe.size()));
    for (std::size_t i = 0; i < universe.size(); ++i) {
        auto it = esg.index_weights.find(universe[i]);
        if (it == esg.index_weights.end()) {
            throw DataError("no index weight for " + universe[i]);
        }
        w(static_cast<Eigen::Index>(i)) = it->second;
    }
    const double total = w.sum();
    if (!(total > 0.0)) throw DataError("index weights of the universe sum to zero");
    return w / total;
}

}  // namespace esgport
