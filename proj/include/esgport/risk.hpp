#pragma once

// Empirical VaR / CVaR over scenario losses (loss = -portfolio return).

#include "esgport/core.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace esgport {

struct CvarResult {
    double cvar = 0.0;
    double var = 0.0;  // minimizer of the Rockafellar-Uryasev objective
};

inline void require_level(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
}

/// Lower empirical quantile: the ceil(beta q)-th smallest loss.
inline double empirical_var(std::span<const double> losses, double beta) {
    if (losses.empty()) throw ConfigError("empirical_var: no losses");
    require_level(beta);
    std::vector<double> sorted(losses.begin(), losses.end());
    const auto q = sorted.size();
    auto k = static_cast<std::size_t>(std::ceil(beta * static_cast<double>(q)));
    k = std::clamp<std::size_t>(k, 1, q);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
    return sorted[k - 1];
}

/// min over a of F(a) = a + sum_j [loss_j - a]^+ / (q (1 - beta)), scanned over
/// the sample points (the minimum of this piecewise-linear convex function sits
/// on one of them). Ties resolve to the smallest minimizer.
inline CvarResult cvar_from_objective(std::span<const double> losses, double beta) {
    if (losses.empty()) throw ConfigError("cvar_from_objective: no losses");
    require_level(beta);
    std::vector<double> sorted(losses.begin(), losses.end());
    std::sort(sorted.begin(), sorted.end());
    const auto q = sorted.size();
    const double scale = 1.0 / (static_cast<double>(q) * (1.0 - beta));

    // suffix[k] = sum of sorted[k..q)
    std::vector<double> suffix(q + 1, 0.0);
    for (std::size_t k = q; k-- > 0;) suffix[k] = suffix[k + 1] + sorted[k];

    CvarResult best{std::numeric_limits<double>::infinity(), 0.0};
    std::size_t k = 0;
    while (k < q) {
        const double a = sorted[k];
        std::size_t next = k;
        while (next < q && sorted[next] == a) ++next;  // skip ties: they add 0
        const double excess = suffix[next] - static_cast<double>(q - next) * a;
        const double f = a + scale * excess;
        if (f < best.cvar) best = CvarResult{f, a};
        k = next;
    }
    return best;
}

/// Tail-average form: (1/(1-beta)) [ (k/q - beta) VaR + (1/q) sum of losses above the k-th ].
inline double cvar_tail_average(std::span<const double> losses, double beta) {
    if (losses.empty()) throw ConfigError("cvar_tail_average: no losses");
    require_level(beta);
    std::vector<double> sorted(losses.begin(), losses.end());
    std::sort(sorted.begin(), sorted.end());
    const auto q = sorted.size();
    auto k = static_cast<std::size_t>(std::ceil(beta * static_cast<double>(q)));
    k = std::clamp<std::size_t>(k, 1, q);
    const double var = sorted[k - 1];
    double tail = 0.0;
    for (std::size_t j = k; j < q; ++j) tail += sorted[j];
    const double qd = static_cast<double>(q);
    return ((static_cast<double>(k) / qd - beta) * var + tail / qd) / (1.0 - beta);
}

/// loss_j = -w' r_j for each scenario row r_j.
inline Vector portfolio_losses(const Eigen::Ref<const Matrix>& scenarios, const Vector& weights) {
    if (scenarios.cols() != weights.size()) {
        throw ConfigError("portfolio_losses: " + std::to_string(weights.size()) +
                          " weights for " + std::to_string(scenarios.cols()) + " assets");
    }
    return -(scenarios * weights);
}

inline CvarResult portfolio_cvar(const Eigen::Ref<const Matrix>& scenarios, const Vector& weights,
                                 double beta) {
    const Vector losses = portfolio_losses(scenarios, weights);
    return cvar_from_objective(std::span<const double>(losses.data(), static_cast<std::size_t>(losses.size())), beta);
}

}  // namespace esgport
