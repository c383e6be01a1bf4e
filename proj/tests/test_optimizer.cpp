#include "catch_amalgamated.hpp"

#include "esgport/optimizer.hpp"

#include <random>

using namespace esgport;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

AllocationProblem random_problem(Eigen::Index m, Eigen::Index q, std::uint64_t seed, double alpha, double rho) {
    std::mt19937_64 rng(seed);
    std::student_t_distribution<double> t(5.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AllocationProblem p;
    p.scenarios.resize(q, m);
    p.expected_returns.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double drift = 0.0004 * static_cast<double>(i + 1);
        const double vol = 0.008 + 0.004 * static_cast<double>(i);
        for (Eigen::Index j = 0; j < q; ++j) p.scenarios(j, i) = drift + vol * t(rng);
        p.expected_returns(i) = p.scenarios.col(i).mean();
    }
    p.prev_weights.resize(m);
    for (auto& w : p.prev_weights) w = 0.2 + u(rng);
    p.prev_weights /= p.prev_weights.sum();
    p.alpha = alpha;
    p.rho = rho;
    return p;
}

struct GridBest {
    double value = -inf;
    Vector w;
};

// Every point of the 0.01-step simplex for three assets (5151 points).
GridBest brute_force(const AllocationProblem& p, std::size_t* points = nullptr) {
    GridBest best;
    std::size_t n = 0;
    Vector w(3);
    for (int a = 0; a <= 100; ++a) {
        for (int b = 0; a + b <= 100; ++b) {
            w << a / 100.0, b / 100.0, (100 - a - b) / 100.0;
            const double v = allocation_objective(p, w);
            ++n;
            if (v > best.value) best = GridBest{v, w};
        }
    }
    if (points) *points = n;
    return best;
}

}  // namespace

TEST_CASE("simplex solves a textbook LP", "[optimizer][simplex]") {
    // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
    LpProblem lp;
    lp.a.resize(3, 5);
    lp.a << 1, 0, 1, 0, 0, 0, 2, 0, 1, 0, 3, 2, 0, 0, 1;
    lp.b.resize(3);
    lp.b << 4, 12, 18;
    lp.c.resize(5);
    lp.c << -3, -5, 0, 0, 0;
    lp.lower = Vector::Zero(5);
    lp.upper = Vector::Constant(5, inf);
    const auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK_THAT(r.x(0), WithinAbs(2.0, 1e-12));
    CHECK_THAT(r.x(1), WithinAbs(6.0, 1e-12));
    CHECK_THAT(r.objective, WithinAbs(-36.0, 1e-12));
    // strong duality: b'y equals the optimum when no upper bound is active
    CHECK_THAT(lp.b.dot(r.duals), WithinAbs(-36.0, 1e-12));
    const Vector reduced = lp.c - lp.a.transpose() * r.duals;
    CHECK(reduced.minCoeff() >= -1e-12);
}

TEST_CASE("simplex honours finite upper bounds and free variables", "[optimizer][simplex]") {
    // min -x1 - 2 x2 + 0 x3  s.t. x1 + x2 + x3 = 1,  0 <= x <= 0.6, x3 free
    LpProblem lp;
    lp.a = Matrix::Ones(1, 3);
    lp.b = Vector::Ones(1);
    lp.c.resize(3);
    lp.c << -1, -2, 0;
    lp.lower.resize(3);
    lp.lower << 0, 0, -inf;
    lp.upper.resize(3);
    lp.upper << 0.6, 0.6, inf;
    const auto r = solve_lp(lp);
    // x3 is free, so x1 and x2 both sit at their upper bounds
    REQUIRE(r.status == LpStatus::optimal);
    CHECK_THAT(r.x(0), WithinAbs(0.6, 1e-12));
    CHECK_THAT(r.x(1), WithinAbs(0.6, 1e-12));
    CHECK_THAT(r.x(2), WithinAbs(-0.2, 1e-12));
    CHECK_THAT(r.objective, WithinAbs(-1.8, 1e-12));
}

TEST_CASE("simplex detects infeasible and unbounded problems", "[optimizer][simplex]") {
    LpProblem infeasible;
    infeasible.a = Matrix::Ones(1, 2);
    infeasible.b = Vector::Constant(1, 5.0);
    infeasible.c = Vector::Zero(2);
    infeasible.lower = Vector::Zero(2);
    infeasible.upper = Vector::Ones(2);
    CHECK(solve_lp(infeasible).status == LpStatus::infeasible);

    LpProblem unbounded;
    unbounded.a.resize(1, 2);
    unbounded.a << 1, -1;
    unbounded.b = Vector::Zero(1);
    unbounded.c.resize(2);
    unbounded.c << -1, 0;
    unbounded.lower = Vector::Zero(2);
    unbounded.upper = Vector::Constant(2, inf);
    CHECK(solve_lp(unbounded).status == LpStatus::unbounded);
}

TEST_CASE("LP optimum dominates the 0.01 simplex grid", "[optimizer]") {
    std::size_t combos = 0;
    for (double alpha : {0.0, 0.5, 1.0}) {
        for (double rho : {0.0, 5e-4, 4e-3}) {
            const auto p = random_problem(3, 500, 31, alpha, rho);
            std::size_t points = 0;
            const auto grid = brute_force(p, &points);
            REQUIRE(points == 5151);
            const auto sol = solve(p);
            INFO("alpha " << alpha << " rho " << rho);
            CHECK(sol.certificate_gap <= 1e-6);
            CHECK(sol.objective >= grid.value - 1e-12);
            // objective is Lipschitz in the L1 norm; any optimum lies within 0.02 (L1) of a grid point
            const double lipschitz = alpha * p.expected_returns.cwiseAbs().maxCoeff() +
                                     (1.0 - alpha) * p.scenarios.cwiseAbs().maxCoeff() + rho;
            CHECK(sol.objective - grid.value <= 0.02 * lipschitz);
            ++combos;
        }
    }
    CHECK(combos == 9);
}

TEST_CASE("certificate: LP value equals the recomputed objective", "[optimizer]") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto p = random_problem(6, 1000, seed, 0.1 * static_cast<double>(seed), 1e-3);
        const auto sol = solve(p);
        CHECK(sol.status == "optimal");
        CHECK(sol.certificate_gap <= 1e-8);
        CHECK_THAT(sol.objective, WithinAbs(allocation_objective(p, sol.weights), 0.0));
        CHECK_THAT(sol.weights.sum(), WithinAbs(1.0, 1e-12));
        CHECK(sol.weights.minCoeff() >= 0.0);
        CHECK_THAT(sol.turnover, WithinAbs((sol.weights - p.prev_weights).lpNorm<1>(), 0.0));
    }
}

TEST_CASE("pure return objective picks the best asset", "[optimizer]") {
    auto p = random_problem(4, 300, 5, 1.0, 0.0);
    p.expected_returns << 0.001, 0.004, 0.002, 0.003;
    const auto sol = solve(p);
    Vector e = Vector::Zero(4);
    e(1) = 1.0;
    CHECK(sol.weights == e);
}

TEST_CASE("a dominant penalty freezes the holdings exactly", "[optimizer]") {
    for (double alpha : {0.0, 0.5, 1.0}) {
        const auto p = random_problem(5, 800, 12, alpha, 1e3);
        const auto sol = solve(p);
        CHECK(sol.weights == p.prev_weights);
        CHECK(sol.turnover == 0.0);
    }
}

TEST_CASE("alpha = 0 gives the minimum-CVaR portfolio", "[optimizer]") {
    auto p = random_problem(3, 500, 44, 0.0, 0.0);
    const auto sol = solve(p);
    const auto grid = brute_force(p);
    CHECK(sol.cvar <= -grid.value + 1e-12);
    // expected returns do not matter
    p.expected_returns *= -50.0;
    const auto again = solve(p);
    CHECK_THAT(again.cvar, WithinAbs(sol.cvar, 1e-12));
}

TEST_CASE("alpha sweep traces a monotone frontier with convex optimal value", "[optimizer]") {
    const auto p = random_problem(5, 1000, 8, 0.0, 0.0);
    const auto alphas = alpha_grid();
    REQUIRE(alphas.size() == 11);
    const auto sols = pareto_sweep(p, alphas);
    REQUIRE(sols.size() == 11);
    for (const auto& s : sols) {
        CHECK(s.status == "optimal");
        CHECK_THAT(s.weights.sum(), WithinAbs(1.0, 1e-12));
        CHECK(s.weights.minCoeff() >= 0.0);
    }
    // the optimal value is a maximum of functions affine in alpha
    for (std::size_t k = 1; k + 1 < sols.size(); ++k) {
        const double interp = 0.5 * (sols[k - 1].objective + sols[k + 1].objective);
        CHECK(sols[k].objective <= interp + 1e-12);
    }
    CHECK(sols[5].objective <= 0.5 * (sols[0].objective + sols[10].objective) + 1e-12);
    // more weight on return buys return with risk
    for (std::size_t k = 1; k < sols.size(); ++k) {
        CHECK(sols[k].expected_return >= sols[k - 1].expected_return - 1e-12);
        CHECK(sols[k].cvar >= sols[k - 1].cvar - 1e-12);
    }
}

TEST_CASE("scaling returns and rho scales the optimum and keeps the argmax", "[optimizer]") {
    const auto p = random_problem(4, 600, 21, 0.4, 1e-3);
    auto scaled = p;
    const double c = 3.5;
    scaled.expected_returns *= c;
    scaled.scenarios *= c;
    scaled.rho *= c;
    const auto a = solve(p);
    const auto b = solve(scaled);
    CHECK_THAT(b.objective, WithinAbs(c * a.objective, 1e-12));
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("turnover is non-increasing in rho on shared scenarios", "[optimizer]") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        auto p = random_problem(6, 1000, seed, 0.7, 0.0);
        double prev = inf;
        for (double rho : {0.0, 5e-4, 10e-4, 15e-4, 20e-4, 30e-4, 40e-4, 1e-1}) {
            p.rho = rho;
            const auto sol = solve(p);
            CHECK(sol.turnover <= prev + 1e-12);
            prev = sol.turnover;
        }
    }
}

TEST_CASE("box bounds allow limited shorting", "[optimizer]") {
    auto p = random_problem(4, 500, 9, 1.0, 0.0);
    p.bounds = WeightBounds::box;
    p.expected_returns << 0.001, 0.004, -0.002, 0.003;
    const auto sol = solve(p);
    CHECK(sol.certificate_gap <= 1e-8);
    CHECK(sol.weights.minCoeff() >= kBoxLower - 1e-12);
    CHECK(sol.weights.maxCoeff() <= kBoxUpper + 1e-12);
    CHECK_THAT(sol.weights.sum(), WithinAbs(1.0, 1e-12));
    // every asset but the best sits at the lower bound, the best absorbs the rest
    CHECK_THAT(sol.weights(1), WithinAbs(1.0, 1e-12));
    CHECK(parse_weight_bounds("box") == WeightBounds::box);
    CHECK_THROWS_AS(parse_weight_bounds("short"), ConfigError);
}

TEST_CASE("allocation problems are validated", "[optimizer]") {
    auto p = random_problem(3, 500, 1, 0.5, 0.0);
    auto few = p;
    few.scenarios = p.scenarios.topRows(50);
    CHECK_THROWS_AS(solve(few), ConfigError);
    auto bad_prev = p;
    bad_prev.prev_weights(0) += 0.1;
    CHECK_THROWS_AS(solve(bad_prev), ConfigError);
    auto bad_alpha = p;
    bad_alpha.alpha = 1.5;
    CHECK_THROWS_AS(solve(bad_alpha), ConfigError);
    auto bad_rho = p;
    bad_rho.rho = -1.0;
    CHECK_THROWS_AS(solve(bad_rho), ConfigError);
}

TEST_CASE("iteration cap surfaces as a convergence error with the best point", "[optimizer]") {
    const auto p = random_problem(4, 500, 2, 0.5, 1e-3);
    OptimizerOptions opt;
    opt.simplex.max_iterations = 3;
    try {
        (void)solve(p, opt);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError<AllocationSolution>& e) {
        CHECK(e.best.status == "iteration_limit");
    }
}
