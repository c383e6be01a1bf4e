#pragma once

#include "esgport/core.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace esgport {

struct NelderMeadOptions {
    int max_evaluations = 500;
    double f_tolerance = 1e-10;  // spread of simplex values, relative to 1 + |f|
    double x_tolerance = 1e-8;   // max coordinate distance from best vertex
};

struct NelderMeadResult {
    Vector x;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

/// Unconstrained minimization with the standard (1, 2, 0.5, 0.5) coefficients.
/// Non-finite objective values are treated as +infinity.
template <typename Objective>
NelderMeadResult nelder_mead(Objective&& f, const Vector& start, const Vector& step,
                             const NelderMeadOptions& opt = {}) {
    const auto n = start.size();
    std::vector<Vector> simplex(static_cast<std::size_t>(n + 1), start);
    std::vector<double> values(static_cast<std::size_t>(n + 1));
    NelderMeadResult res;

    auto eval = [&](const Vector& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += step(i);
    for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(simplex.size());
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        double x_spread = 0.0;
        for (const auto& v : simplex) {
            x_spread = std::max(x_spread, (v - simplex[best]).cwiseAbs().maxCoeff());
        }
        const double f_spread = values[worst] - values[best];
        if (std::isfinite(values[best]) && f_spread <= opt.f_tolerance * (1.0 + std::abs(values[best])) &&
            x_spread <= opt.x_tolerance) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= opt.max_evaluations) break;

        Vector centroid = Vector::Zero(n);
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i != worst) centroid += simplex[i];
        }
        centroid /= static_cast<double>(n);

        const Vector reflected = centroid + (centroid - simplex[worst]);
        const double f_reflected = eval(reflected);
        if (f_reflected < values[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }
        const bool outside = f_reflected < values[worst];
        const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                          : Vector(centroid + 0.5 * (simplex[worst] - centroid));
        const double f_contracted = eval(contracted);
        if (f_contracted < std::min(f_reflected, values[worst])) {
            simplex[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
            values[i] = eval(simplex[i]);
        }
    }

    const auto best_it = std::min_element(values.begin(), values.end());
    res.value = *best_it;
    res.x = simplex[static_cast<std::size_t>(best_it - values.begin())];
    return res;
}

}  // namespace esgport
