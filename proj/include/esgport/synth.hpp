#pragma once

// Synthetic desk-scale dataset: correlated ARMA-GARCH prices with NIG shocks,
// yearly ESG scores and index weights, in the same file formats as real data.

#include "esgport/core.hpp"
#include "esgport/market_data.hpp"
#include "esgport/nig.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace esgport {

struct SynthSpec {
    std::size_t assets = 5;
    std::size_t returns = 800;  // price rows = returns + 1
    Date start{2016, 1, 4};
    std::uint64_t seed = 1;
    double correlation = 0.3;   // equicorrelation of the shocks
    std::optional<std::size_t> late_esg_asset;  // no scores before late_esg_year
    int late_esg_year = 0;
};

struct SynthData {
    std::vector<std::string> tickers;
    std::vector<Date> price_dates;
    Matrix prices;  // rows = price_dates
    std::map<std::pair<int, std::string>, double> scores;
    std::vector<double> index_weights;

    std::string prices_csv() const {
        std::ostringstream out;
        out << "date";
        for (const auto& t : tickers) out << ',' << t;
        out << '\n';
        for (std::size_t i = 0; i < price_dates.size(); ++i) {
            out << price_dates[i].iso();
            for (Eigen::Index j = 0; j < prices.cols(); ++j) out << ',' << format_double(prices(static_cast<Eigen::Index>(i), j));
            out << '\n';
        }
        return out.str();
    }

    std::string esg_csv() const {
        std::ostringstream out;
        out << "year";
        for (const auto& t : tickers) out << ',' << t;
        out << '\n';
        std::set<int> years;
        for (const auto& [key, v] : scores) years.insert(key.first);
        for (int y : years) {
            out << y;
            for (const auto& t : tickers) {
                out << ',';
                auto it = scores.find({y, t});
                if (it != scores.end()) out << format_double(it->second);
            }
            out << '\n';
        }
        return out.str();
    }

    std::string weights_csv() const {
        std::ostringstream out;
        out << "ticker,weight\n";
        for (std::size_t i = 0; i < tickers.size(); ++i) out << tickers[i] << ',' << format_double(index_weights[i]) << '\n';
        return out.str();
    }

    ReturnPanel panel() const {
        std::istringstream in(prices_csv());
        return load_prices(in);
    }

    EsgTable esg() const {
        std::istringstream s(esg_csv());
        std::istringstream w(weights_csv());
        return load_esg(s, w);
    }

    /// prices.csv, esg.csv, index_weights.csv
    void write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        auto put = [&](const char* name, const std::string& text) {
            std::ofstream f(dir / name, std::ios::binary);
            if (!f) throw DataError("cannot write " + (dir / name).string());
            f << text;
        };
        put("prices.csv", prices_csv());
        put("esg.csv", esg_csv());
        put("index_weights.csv", weights_csv());
    }
};

inline SynthData generate_synthetic(const SynthSpec& spec) {
    if (spec.assets == 0 || spec.returns < 2) throw ConfigError("synthetic dataset needs assets and returns");
    if (!(spec.correlation > -1.0 / static_cast<double>(spec.assets) && spec.correlation < 1.0)) {
        throw ConfigError("equicorrelation out of range");
    }
    const auto m = static_cast<Eigen::Index>(spec.assets);
    SynthData d;
    for (std::size_t i = 0; i < spec.assets; ++i) d.tickers.push_back("S" + std::to_string(i + 1));

    Date day = spec.start;
    while (day.is_weekend()) day = day.next_day();
    for (std::size_t i = 0; i <= spec.returns; ++i) {
        d.price_dates.push_back(day);
        do day = day.next_day();
        while (day.is_weekend());
    }

    Matrix corr = Matrix::Constant(m, m, spec.correlation);
    corr.diagonal().setOnes();
    const Matrix lower = Eigen::LLT<Matrix>(corr).matrixL();

    std::vector<NigParams> shapes;
    Vector drift(m), var(m), prev_eps = Vector::Zero(m), prev_x(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double k = static_cast<double>(i) / static_cast<double>(std::max<Eigen::Index>(1, m - 1));
        shapes.push_back(NigParams::standardized(1.2 + 1.3 * k, -0.25 + 0.2 * k));
        drift(i) = 2e-4 + 4e-4 * k;
        var(i) = 1.5e-4;
        prev_x(i) = drift(i);
    }
    const double c = 6e-6, a = 0.06, g = 0.9, phi = 0.05;

    d.prices.resize(static_cast<Eigen::Index>(spec.returns + 1), m);
    d.prices.row(0).setConstant(100.0);
    std::vector<std::mt19937_64> streams;
    for (Eigen::Index i = 0; i < m; ++i) streams.push_back(make_stream(spec.seed, i, 0x5Bu));
    Vector y(m);
    for (std::size_t t = 1; t <= spec.returns; ++t) {
        for (Eigen::Index i = 0; i < m; ++i) y(i) = draw_nig(shapes[static_cast<std::size_t>(i)], streams[static_cast<std::size_t>(i)]);
        const Vector shock = lower * y;
        for (Eigen::Index i = 0; i < m; ++i) {
            var(i) = c + a * prev_eps(i) * prev_eps(i) + g * var(i);
            const double mean = drift(i) + phi * (prev_x(i) - drift(i));
            const double eps = std::sqrt(var(i)) * shock(i);
            const double r = std::max(mean + eps, -0.5);
            prev_eps(i) = eps;
            prev_x(i) = r;
            const auto row = static_cast<Eigen::Index>(t);
            d.prices(row, i) = d.prices(row - 1, i) * (1.0 + r);
        }
    }

    auto rng = make_stream(spec.seed, 0xE5Au);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 4.0);
    std::vector<double> base;
    for (Eigen::Index i = 0; i < m; ++i) base.push_back(30.0 + 50.0 * unit(rng));
    for (int year = d.price_dates.front().year() - 1; year <= d.price_dates.back().year(); ++year) {
        for (std::size_t i = 0; i < spec.assets; ++i) {
            const double s = std::clamp(base[i] + noise(rng), 0.0, 100.0);
            if (spec.late_esg_asset && *spec.late_esg_asset == i && year < spec.late_esg_year) continue;
            d.scores[{year, d.tickers[i]}] = std::round(s * 100.0) / 100.0;
        }
    }

    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        d.index_weights.push_back(0.5 + unit(rng));
        total += d.index_weights.back();
    }
    for (auto& w : d.index_weights) w /= total;
    return d;
}

}  // namespace esgport
