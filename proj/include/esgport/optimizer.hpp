#pragma once

// Turnover-penalized mean-CVaR allocation:
//
//   max  a w'R - (1-a) [ z + sum_j s_j / (q (1-b)) ] - rho |w - w_prev|_1
//   s.t. s_j >= -w'x_j - z,  s_j >= 0,  sum w = 1,  lo <= w <= hi
//
// The primal has q + M + 1 rows. Its dual has M + 1 rows and q + 3M + 1
// columns, which suits a revised simplex with a dense basis inverse, so the
// dual is what gets solved:
//
//   min  -w_prev'y - eta - lo sum mu + hi sum nu
//   s.t. sum_j p_j x_ji + y_i + eta + mu_i - nu_i = -a R_i    (i = 1..M)
//        sum_j p_j                               = 1 - a
//        0 <= p_j <= (1-a)/(q(1-b)),  -rho <= y_i <= rho,  eta free,  mu, nu >= 0
//
// The allocation is recovered as w_i = -sigma_i from the row multipliers, and
// the VaR as -sigma_{M+1}.

#include "esgport/core.hpp"
#include "esgport/risk.hpp"
#include "esgport/simplex.hpp"

#include <span>
#include <string>
#include <vector>

namespace esgport {

enum class WeightBounds { long_only, box };

inline WeightBounds parse_weight_bounds(std::string_view s) {
    if (s == "long_only") return WeightBounds::long_only;
    if (s == "box") return WeightBounds::box;
    throw ConfigError("unknown weight bounds '" + std::string(s) + "'");
}

inline constexpr double kBoxLower = -0.1;
inline constexpr double kBoxUpper = 1.0;

struct AllocationProblem {
    Vector expected_returns;  // R_t
    Matrix scenarios;         // q x M
    Vector prev_weights;      // drifted holdings
    double alpha = 0.5;
    double rho = 0.0;
    double beta = 0.95;
    WeightBounds bounds = WeightBounds::long_only;

    Eigen::Index assets() const { return expected_returns.size(); }

    void validate() const {
        const auto m = assets();
        if (m == 0) throw ConfigError("allocation problem has no assets");
        if (scenarios.cols() != m || prev_weights.size() != m) {
            throw ConfigError("allocation problem dimensions disagree");
        }
        if (scenarios.rows() < 100) {
            throw ConfigError("at least 100 scenarios required, got " + std::to_string(scenarios.rows()));
        }
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
        if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be finite and non-negative");
        require_level(beta);
        if (!expected_returns.allFinite() || !scenarios.allFinite() || !prev_weights.allFinite()) {
            throw ConfigError("allocation problem contains non-finite values");
        }
        const double lo = bounds == WeightBounds::box ? kBoxLower : 0.0;
        if ((prev_weights.array() < lo - 1e-12).any()) {
            throw ConfigError("previous weights violate the lower bound");
        }
        if (std::abs(prev_weights.sum() - 1.0) > 1e-9) {
            throw ConfigError("previous weights must sum to 1, got " + format_double(prev_weights.sum()));
        }
    }
};

struct AllocationSolution {
    Vector weights;
    double objective = 0.0;       // primal objective recomputed at `weights`
    double dual_objective = 0.0;  // LP optimum
    double certificate_gap = 0.0; // |objective - dual_objective|
    double expected_return = 0.0;
    double var = 0.0;
    double cvar = 0.0;
    double turnover = 0.0;
    int iterations = 0;
    std::string status;
};

struct OptimizerOptions {
    SimplexOptions simplex{};
    double certificate_tol = 1e-6;
};

/// a w'R - (1-a) CVaR_b(w) - rho |w - w_prev|_1, with CVaR from the risk module.
inline double allocation_objective(const AllocationProblem& p, const Vector& w, CvarResult* risk = nullptr) {
    const CvarResult r = portfolio_cvar(p.scenarios, w, p.beta);
    if (risk) *risk = r;
    return p.alpha * w.dot(p.expected_returns) - (1.0 - p.alpha) * r.cvar -
           p.rho * (w - p.prev_weights).lpNorm<1>();
}

inline AllocationSolution solve(const AllocationProblem& p, const OptimizerOptions& opt = {}) {
    p.validate();
    const auto m = p.assets();
    const auto q = p.scenarios.rows();
    const bool box = p.bounds == WeightBounds::box;
    const double lo = box ? kBoxLower : 0.0;
    const double hi = kBoxUpper;

    // rescale returns so the LP works with entries of order one
    double scale = p.scenarios.cwiseAbs().maxCoeff();
    scale = std::max(scale, p.expected_returns.cwiseAbs().maxCoeff());
    scale = scale > 0.0 ? 1.0 / scale : 1.0;

    const double inf = std::numeric_limits<double>::infinity();
    const Eigen::Index n_nu = box ? m : 0;
    const Eigen::Index col_y = q;
    const Eigen::Index col_eta = q + m;
    const Eigen::Index col_mu = col_eta + 1;
    const Eigen::Index col_nu = col_mu + m;
    const Eigen::Index n = col_nu + n_nu;

    LpProblem lp;
    lp.a = Matrix::Zero(m + 1, n);
    lp.b = Vector(m + 1);
    lp.c = Vector::Zero(n);
    lp.lower = Vector::Zero(n);
    lp.upper = Vector::Zero(n);

    const double cap = (1.0 - p.alpha) / (static_cast<double>(q) * (1.0 - p.beta));
    lp.a.topLeftCorner(m, q) = scale * p.scenarios.transpose();
    lp.a.row(m).head(q).setOnes();
    lp.upper.head(q).setConstant(cap);
    for (Eigen::Index i = 0; i < m; ++i) {
        lp.a(i, col_y + i) = 1.0;
        lp.c(col_y + i) = -p.prev_weights(i);
        lp.lower(col_y + i) = -scale * p.rho;
        lp.upper(col_y + i) = scale * p.rho;

        lp.a(i, col_mu + i) = 1.0;
        lp.c(col_mu + i) = -lo;
        lp.upper(col_mu + i) = inf;

        if (box) {
            lp.a(i, col_nu + i) = -1.0;
            lp.c(col_nu + i) = hi;
            lp.upper(col_nu + i) = inf;
        }
        lp.b(i) = -p.alpha * scale * p.expected_returns(i);
    }
    lp.a.col(col_eta).head(m).setOnes();
    lp.c(col_eta) = -1.0;
    lp.lower(col_eta) = -inf;
    lp.upper(col_eta) = inf;
    lp.b(m) = 1.0 - p.alpha;

    const LpResult r = solve_lp(lp, opt.simplex);
    if (r.status == LpStatus::infeasible) {
        throw NumericError("allocation LP reported infeasible; the problem was built inconsistently");
    }
    if (r.status == LpStatus::unbounded) {
        throw NumericError("allocation LP dual reported unbounded");
    }

    AllocationSolution sol;
    sol.iterations = r.iterations;
    sol.status = to_string(r.status);
    sol.dual_objective = r.objective / scale;

    Vector w(m);
    if (r.status == LpStatus::optimal) {
        for (Eigen::Index i = 0; i < m; ++i) {
            // a basic y_i, mu_i or nu_i pins w_i to the matching bound exactly
            if (r.is_basic[static_cast<std::size_t>(col_y + i)]) w(i) = p.prev_weights(i);
            else if (r.is_basic[static_cast<std::size_t>(col_mu + i)]) w(i) = lo;
            else if (box && r.is_basic[static_cast<std::size_t>(col_nu + i)]) w(i) = hi;
            else w(i) = -r.duals(i);
            // a nonbasic y_i or mu_i with zero reduced cost could enter by a
            // degenerate pivot; take that vertex
            if (std::abs(w(i) - p.prev_weights(i)) <= 1e-12) w(i) = p.prev_weights(i);
            else if (std::abs(w(i) - lo) <= 1e-12) w(i) = lo;
        }
    } else {
        w = p.prev_weights;
    }

    CvarResult risk;
    sol.weights = w;
    sol.objective = allocation_objective(p, w, &risk);
    sol.var = risk.var;
    sol.cvar = risk.cvar;
    sol.expected_return = w.dot(p.expected_returns);
    sol.turnover = (w - p.prev_weights).lpNorm<1>();
    sol.certificate_gap = std::abs(sol.objective - sol.dual_objective);

    if (r.status != LpStatus::optimal) {
        throw ConvergenceError<AllocationSolution>(
            "allocation LP stopped after " + std::to_string(r.iterations) + " iterations (" + sol.status + ")", sol);
    }
    if (sol.certificate_gap > opt.certificate_tol) {
        throw ConvergenceError<AllocationSolution>(
            "allocation optimality certificate failed: primal " + format_double(sol.objective) + " vs LP " +
                format_double(sol.dual_objective),
            sol);
    }
    return sol;
}

/// One solve per alpha on shared scenarios.
inline std::vector<AllocationSolution> pareto_sweep(AllocationProblem p, std::span<const double> alphas,
                                                    const OptimizerOptions& opt = {}) {
    std::vector<AllocationSolution> out;
    out.reserve(alphas.size());
    for (double a : alphas) {
        p.alpha = a;
        out.push_back(solve(p, opt));
    }
    return out;
}

inline std::vector<double> alpha_grid() {
    std::vector<double> a;
    for (int k = 0; k <= 10; ++k) a.push_back(k / 10.0);
    return a;
}

}  // namespace esgport
