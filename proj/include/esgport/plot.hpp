#pragma once

// Equity-curve plots from a results directory: one SVG overlaying the
// selected strategies on the benchmark, plus a (date, wealth) file per curve.

#include "esgport/core.hpp"
#include "esgport/output.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace esgport {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

/// Splits on commas, honouring double-quoted cells.
inline std::vector<std::string> split_quoted(const std::string& line) {
    std::vector<std::string> cells(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cells.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cells.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back();
        } else if (c != '\r') {
            cells.back() += c;
        }
    }
    return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + " is empty");
    t.header = split_quoted(line);
    while (std::getline(in, line)) {
        if (!line.empty()) t.rows.push_back(split_quoted(line));
    }
    return t;
}

struct Curve {
    std::string id;
    std::vector<std::string> dates;
    std::vector<std::string> wealth_text;  // verbatim from the result file
    std::vector<double> wealth;
};

inline Curve load_curve(const std::filesystem::path& results, const std::string& id) {
    const auto path = id == "benchmark" ? results / "benchmark.csv" : results / "strategies" / (id + ".csv");
    const CsvTable t = read_csv(path);
    const auto d = t.column("date");
    const auto w = t.column("wealth");
    Curve c;
    c.id = id;
    for (const auto& row : t.rows) {
        c.dates.push_back(row[d]);
        c.wealth_text.push_back(row[w]);
        c.wealth.push_back(parse_double(row[w]));
    }
    return c;
}

/// Selector: comma-separated items, each "benchmark", "top:N" (by annual
/// return, ties by id) or a strategy id. The benchmark is always plotted.
inline std::vector<std::string> select_curves(const std::filesystem::path& results, const std::string& selector) {
    const CsvTable metrics = read_csv(results / "metrics.csv");
    const auto id_col = metrics.column("id");
    const auto status_col = metrics.column("status");
    const auto annual_col = metrics.column("annual_return");
    const auto mode_col = metrics.column("mode");

    std::vector<std::string> available;
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& row : metrics.rows) {
        if (row[mode_col] == "benchmark") continue;
        available.push_back(row[id_col]);
        if (row[status_col] == "ok") ranked.emplace_back(parse_double(row[annual_col]), row[id_col]);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });

    std::vector<std::string> chosen;
    auto add = [&](const std::string& id) {
        if (std::find(chosen.begin(), chosen.end(), id) == chosen.end()) chosen.push_back(id);
    };
    std::stringstream items(selector);
    std::string item;
    while (std::getline(items, item, ',')) {
        if (item.empty() || item == "benchmark") continue;
        if (item.rfind("top:", 0) == 0) {
            const auto n = static_cast<std::size_t>(parse_double(item.substr(4)));
            for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) add(ranked[i].second);
        } else if (std::find(available.begin(), available.end(), item) != available.end()) {
            add(item);
        } else {
            std::string list;
            for (const auto& a : available) list += "\n  " + a;
            throw ConfigError("unknown strategy id '" + item + "'; available ids:" + list);
        }
    }
    chosen.push_back("benchmark");
    return chosen;
}

inline std::string render_svg(const std::vector<Curve>& curves) {
    constexpr double width = 960, height = 540, left = 70, right = 220, top = 30, bottom = 60;
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    double lo = 1.0, hi = 1.0;
    std::size_t n = 1;
    for (const auto& c : curves) {
        for (double w : c.wealth) {
            lo = std::min(lo, w);
            hi = std::max(hi, w);
        }
        n = std::max(n, c.wealth.size());
    }
    if (hi == lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double pw = width - left - right, ph = height - top - bottom;
    auto fx = [&](std::size_t i) { return left + pw * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, n - 1)); };
    auto fy = [&](double w) { return top + ph * (hi - w) / (hi - lo); };
    auto num = [](double v) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(2);
        s << v;
        return s.str();
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        svg << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << num(fy(v)) << "\" y2=\"" << num(fy(v))
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << left - 6 << "\" y=\"" << num(fy(v) + 4) << "\" text-anchor=\"end\">" << num(v)
            << "</text>\n";
    }
    if (!curves.empty() && !curves.front().dates.empty()) {
        const auto& d = curves.front().dates;
        svg << "<text x=\"" << left << "\" y=\"" << height - bottom + 20 << "\">" << d.front() << "</text>\n";
        svg << "<text x=\"" << left + pw << "\" y=\"" << height - bottom + 20 << "\" text-anchor=\"end\">" << d.back()
            << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">date</text>\n";
    svg << "<text x=\"18\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 18 " << top + ph / 2
        << ")\" text-anchor=\"middle\">wealth</text>\n";

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const bool bench = curves[c].id == "benchmark";
        const char* color = bench ? "#000000" : palette[c % 10];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << (bench ? 2 : 1.2)
            << "\" points=\"";
        for (std::size_t i = 0; i < curves[c].wealth.size(); ++i) {
            svg << (i ? " " : "") << num(fx(i)) << ',' << num(fy(curves[c].wealth[i]));
        }
        svg << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(c) + 8.0;
        svg << "<line x1=\"" << width - right + 10 << "\" x2=\"" << width - right + 30 << "\" y1=\"" << ly
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << width - right + 36 << "\" y=\"" << ly + 4 << "\">" << curves[c].id << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

struct PlotOutput {
    std::filesystem::path svg;
    std::vector<std::filesystem::path> series;
    std::size_t curves = 0;
};

/// Writes <results>/plots/equity.svg and <results>/plots/<id>.csv.
inline PlotOutput plot_results(const std::filesystem::path& results, const std::string& selector) {
    const auto ids = select_curves(results, selector);
    std::vector<Curve> curves;
    for (const auto& id : ids) curves.push_back(load_curve(results, id));
    PlotOutput out;
    const auto dir = results / "plots";
    for (const auto& c : curves) {
        std::string text = "date,wealth\n";
        for (std::size_t i = 0; i < c.dates.size(); ++i) text += c.dates[i] + ',' + c.wealth_text[i] + '\n';
        const auto path = dir / (c.id + ".csv");
        write_file(path, text);
        out.series.push_back(path);
    }
    out.svg = dir / "equity.svg";
    write_file(out.svg, render_svg(curves));
    out.curves = curves.size();
    return out;
}

}  // namespace esgport
