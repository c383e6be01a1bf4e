#include "catch_amalgamated.hpp"

#include "esgport/backtest.hpp"
#include "esgport/metrics.hpp"

#include <random>
#include <set>

using namespace esgport;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;
using Catch::Matchers::WithinAbs;

namespace {

double pairwise_gmd(const std::vector<double>& r) {
    double s = 0.0;
    for (double a : r) {
        for (double b : r) s += std::abs(a - b);
    }
    const double t = static_cast<double>(r.size());
    return s / (t * (t - 1.0));
}

std::vector<ReportRow> full_grid_rows() {
    std::vector<ReportRow> rows;
    for (const auto& c : GridSpec{}.expand()) {
        MetricsRow m;
        m.total_return = c.lambda + c.alpha;
        rows.push_back(ReportRow{c.id(), mode_tag(c.mode), c.lambda, c.alpha, c.rho, c.beta, m});
    }
    return rows;
}

}  // namespace

TEST_CASE("hand-computed three-day fixture", "[metrics]") {
    const std::vector<double> r{0.02, -0.01, 0.03};
    const std::vector<double> turn{0.1, 0.0, 0.2};
    const auto m = compute_metrics(r, turn, MetricsOptions{0.95, 0.0});

    const double growth = 1.02 * 0.99 * 1.03;
    const double mean = 0.04 / 3.0;
    const double sd = std::sqrt(((0.02 - mean) * (0.02 - mean) + (-0.01 - mean) * (-0.01 - mean) +
                                 (0.03 - mean) * (0.03 - mean)) / 2.0);
    const double downside = std::sqrt(0.01 * 0.01 / 3.0);
    const double gmd = 2.0 * (0.03 + 0.01 + 0.04) / 6.0;
    // three losses (-0.02, 0.01, -0.03): the 5% tail is the single worst loss
    const double cvar = 0.01;
    const double drawdown = (1.02 - 1.02 * 0.99) / 1.02;

    CHECK_THAT(m.total_return, WithinAbs(growth - 1.0, 1e-12));
    CHECK_THAT(m.annual_return, WithinAbs(std::pow(growth, 252.0 / 3.0) - 1.0, 1e-12));
    CHECK_THAT(*m.sharpe, WithinAbs(mean / sd, 1e-12));
    CHECK_THAT(*m.sortino, WithinAbs(mean / downside, 1e-12));
    CHECK_THAT(*m.gini, WithinAbs(mean / gmd, 1e-12));
    CHECK_THAT(*m.starr, WithinAbs(mean / cvar, 1e-12));
    CHECK_THAT(m.max_drawdown, WithinAbs(drawdown, 1e-12));
    CHECK_THAT(*m.ddr, WithinAbs((growth - 1.0) / drawdown, 1e-12));
    CHECK_THAT(m.yearly_turnover, WithinAbs(252.0 * 0.3 / 3.0, 1e-12));
}

TEST_CASE("risk-free rate shifts the excess returns", "[metrics]") {
    const std::vector<double> r{0.02, -0.01, 0.03, 0.0};
    const auto m = compute_metrics(r, {}, MetricsOptions{0.95, 0.001});
    const auto shifted = compute_metrics(std::vector<double>{0.019, -0.011, 0.029, -0.001}, {}, MetricsOptions{0.95, 0.0});
    CHECK_THAT(*m.sharpe, WithinAbs(*shifted.sharpe, 1e-12));
    CHECK_THAT(*m.sortino, WithinAbs(*shifted.sortino, 1e-12));
}

TEST_CASE("degenerate denominators are undefined, never infinite", "[metrics]") {
    const std::vector<double> flat(10, 0.001);
    const auto m = compute_metrics(flat, {});
    CHECK_FALSE(m.sharpe);
    CHECK_FALSE(m.gini);
    CHECK_FALSE(m.ddr);
    CHECK(m.max_drawdown == 0.0);
    CHECK(format_metric(m.sharpe) == "NA");

    const std::vector<double> zero_mean{0.01, -0.01};
    const auto z = compute_metrics(zero_mean, {});
    CHECK(*z.sharpe == 0.0);
    CHECK(*z.sortino == 0.0);
    CHECK(*z.gini == 0.0);
    CHECK(*z.starr == 0.0);
}

TEST_CASE("Gini mean difference fast path equals the pairwise definition", "[metrics]") {
    std::mt19937_64 rng(2718);
    std::normal_distribution<double> n(0.0005, 0.012);
    std::uniform_int_distribution<int> len(2, 400);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> r(static_cast<std::size_t>(len(rng)));
        for (auto& x : r) x = n(rng);
        const double expected = pairwise_gmd(r);
        CHECK_THAT(gini_mean_difference(r), WithinAbs(expected, 1e-12));
        CHECK_THAT(gini_mean_difference_pairs(r), WithinAbs(expected, 1e-12));
    }
}

TEST_CASE("drawdown and wealth curve", "[metrics]") {
    const std::vector<double> r{0.1, -0.5, 0.2, 0.5, -0.1};
    const auto w = wealth_curve(r);
    CHECK_THAT(w.back(), WithinAbs(1.1 * 0.5 * 1.2 * 1.5 * 0.9, 1e-15));
    // peak 1.1, trough 0.55
    CHECK_THAT(max_drawdown(r), WithinAbs(0.5, 1e-15));
    CHECK(max_drawdown(std::vector<double>{0.01, 0.02}) == 0.0);
}

TEST_CASE("metrics input is validated", "[metrics]") {
    CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.01}, {}), ConfigError);
    CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.01, -1.0}, {}), DataError);
    CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.01, 0.02}, {}, MetricsOptions{1.0, 0.0}), ConfigError);
}

TEST_CASE("benchmark row renders in the published column order", "[metrics]") {
    MetricsRow m;
    m.total_return = 1.4864;
    m.annual_return = 0.3187;
    m.sharpe = 0.0743;
    m.sortino = 0.1057;
    m.gini = 0.1057;
    m.starr = 0.0288;
    m.ddr = 4.538;
    CHECK(format_benchmark_row(m) ==
          "Total Return,Annual Return,Sharpe,Sortino,Gini,STARR,DDR\n"
          "1.4864,0.3187,0.0743,0.1057,0.1057,0.0288,4.538\n");
    CHECK(format_benchmark_row(m, '\t') ==
          "Total Return\tAnnual Return\tSharpe\tSortino\tGini\tSTARR\tDDR\n"
          "1.4864\t0.3187\t0.0743\t0.1057\t0.1057\t0.0288\t4.538\n");
}

TEST_CASE("full grid partitions into fourteen tables", "[metrics]") {
    const auto rows = full_grid_rows();
    REQUIRE(rows.size() == 616);
    const auto tables = partition_report(rows);
    REQUIRE(tables.size() == 14);
    std::vector<std::string> labels;
    for (const auto& t : tables) labels.push_back(t.label);
    CHECK(labels == std::vector<std::string>{"2A", "2B", "2C", "2D", "2E", "2F", "2G",
                                             "3A", "3B", "3C", "3D", "3E", "3F", "3G"});
    CHECK(tables[0].mode == "std");
    CHECK(tables[0].beta == 0.95);
    CHECK(tables[1].mode == "bl");
    CHECK(tables[1].rho == 5e-4);
    CHECK(tables[6].rho == 40e-4);
    CHECK(tables[7].beta == 0.99);
    CHECK(tables[0].title == "CVaR95 std rho=0.0005");
    CHECK(tables[13].title == "CVaR99 bl rho=0.004");

    std::set<std::string> seen;
    for (const auto& t : tables) {
        CHECK(t.rows.size() == 44);
        for (std::size_t i = 1; i < t.rows.size(); ++i) {
            const auto& a = t.rows[i - 1];
            const auto& b = t.rows[i];
            CHECK(std::tie(a.lambda, a.alpha) < std::tie(b.lambda, b.alpha));
        }
        for (const auto& r : t.rows) {
            CHECK(r.mode == t.mode);
            CHECK(r.rho == t.rho);
            CHECK(r.beta == t.beta);
            seen.insert(r.id);
        }
    }
    CHECK(seen.size() == 616);
}

TEST_CASE("report text layout", "[metrics]") {
    MetricsRow m;
    m.total_return = 0.5;
    m.annual_return = 0.1;
    m.sharpe = 0.05;
    m.yearly_turnover = 2.0;
    std::vector<ReportRow> rows{ReportRow{"std-b95-r5-l0-a0.5", "std", 0.0, 0.5, 5e-4, 0.95, m}};
    const auto text = format_report(rows, m);
    CHECK_THAT(text, StartsWith("# Table 1: benchmark\nTotal Return,"));
    CHECK_THAT(text, ContainsSubstring("# Table 2A: CVaR95 std rho=0.0005\n"
                                       "Strategy,Lambda,Alpha,Total Return,Annual Return,Sharpe,Sortino,Gini,STARR,DDR,Turnover\n"
                                       "std-b95-r5-l0-a0.5,0,0.5,0.5000,0.1000,0.0500,NA,NA,NA,NA,2.0000\n"));

    rows.push_back(ReportRow{"std-b95-r5-l0-a0.6", "std", 0.0, 0.6, 5e-4, 0.95, std::nullopt});
    CHECK_THAT(format_report(rows, std::nullopt), ContainsSubstring("std-b95-r5-l0-a0.6,0,0.6,FAILED"));
    CHECK_THROWS_AS(partition_report(std::vector<ReportRow>{}), ConfigError);
}
