#pragma once

// Shared vocabulary: Eigen aliases, calendar dates, the error hierarchy and
// a few numeric helpers used across the library.

#include <Eigen/Dense>

#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace esgport {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (prices, scores, weights).
struct DataError : Error {
    using Error::Error;
};

/// Invalid run configuration or violated API precondition.
struct ConfigError : Error {
    using Error::Error;
};

/// Numerical failure inside a fit or solve (singular system, non-finite value).
struct NumericError : Error {
    using Error::Error;
};

/// An iterative fit that did not converge. Carries the best point found so the
/// caller can decide whether to use it.
template <typename Params>
struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& what, Params best_found)
        : NumericError(what), best(std::move(best_found)) {}
    Params best;
};

// ---------------------------------------------------------------------------
// Dates
// ---------------------------------------------------------------------------

class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : ymd_(std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}) {}

    /// Parses `YYYY-MM-DD`. Throws DataError on anything else.
    static Date parse(std::string_view text) {
        auto field = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            const auto* first = text.data() + pos;
            auto [ptr, ec] = std::from_chars(first, first + len, v);
            if (ec != std::errc{} || ptr != first + len) {
                throw DataError("unparseable date '" + std::string(text) + "'");
            }
            return v;
        };
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
            throw DataError("unparseable date '" + std::string(text) + "'");
        }
        Date d(field(0, 4), static_cast<unsigned>(field(5, 2)),
               static_cast<unsigned>(field(8, 2)));
        if (!d.ymd_.ok()) {
            throw DataError("invalid calendar date '" + std::string(text) + "'");
        }
        return d;
    }

    std::string iso() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
        return buf;
    }

    int year() const { return static_cast<int>(ymd_.year()); }
    unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
    unsigned day() const { return static_cast<unsigned>(ymd_.day()); }
    std::chrono::sys_days sys_days() const { return std::chrono::sys_days{ymd_}; }

    Date next_day() const { return Date{std::chrono::year_month_day{sys_days() + std::chrono::days{1}}}; }
    bool is_weekend() const {
        const std::chrono::weekday wd{sys_days()};
        return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
    }

    friend constexpr auto operator<=>(const Date& a, const Date& b) {
        return a.ymd_ <=> b.ymd_;
    }
    friend constexpr bool operator==(const Date& a, const Date& b) = default;

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::January,
                                     std::chrono::day{1}};
};

// ---------------------------------------------------------------------------
// Numeric helpers
// ---------------------------------------------------------------------------

/// Shortest decimal text that reads back to the identical double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = first + text.size();
    // from_chars rejects a leading '+'
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw DataError("unparseable number '" + std::string(text) + "'");
    }
    return v;
}

inline double sample_mean(const Eigen::Ref<const Vector>& x) { return x.mean(); }

/// Unbiased (n-1) sample variance.
inline double sample_variance(const Eigen::Ref<const Vector>& x) {
    const auto n = x.size();
    if (n < 2) return 0.0;
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(n - 1);
}

/// Independent random stream for a (base seed, tag...) tuple.
template <typename... Tags>
std::mt19937_64 make_stream(std::uint64_t seed, Tags... tags) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                     static_cast<std::uint32_t>(seed >> 32)};
    (words.push_back(static_cast<std::uint32_t>(tags)), ...);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace esgport
