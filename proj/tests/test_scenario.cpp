#include "catch_amalgamated.hpp"

#include "esgport/scenario.hpp"

#include <random>

using namespace esgport;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Marginal> marginals(std::size_t m, double alpha = 40.0) {
    std::vector<Marginal> out;
    for (std::size_t i = 0; i < m; ++i) {
        out.push_back(Marginal{NigParams::standardized(alpha, 0.0), 0.001 * static_cast<double>(i + 1),
                               0.01 + 0.005 * static_cast<double>(i), i});
    }
    return out;
}

double column_correlation(const Matrix& x, Eigen::Index a, Eigen::Index b) {
    const Vector u = x.col(a).array() - x.col(a).mean();
    const Vector v = x.col(b).array() - x.col(b).mean();
    return u.dot(v) / std::sqrt(u.squaredNorm() * v.squaredNorm());
}

}  // namespace

TEST_CASE("residual correlation of independent columns is near identity", "[scenario]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    Matrix z(2000, 3);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
    const Matrix c = residual_correlation(z);
    CHECK(c.diagonal().isOnes(0.0));
    CHECK((c - c.transpose()).norm() == 0.0);
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) CHECK(std::abs(c(i, j)) < 0.05);
    }
}

TEST_CASE("single column correlation is one", "[scenario]") {
    const Matrix z = Matrix::Random(300, 1);
    const Matrix c = residual_correlation(z);
    REQUIRE(c.rows() == 1);
    CHECK(c(0, 0) == 1.0);
}

TEST_CASE("collinear residuals need a flagged diagonal load", "[scenario]") {
    Matrix z(300, 2);
    z.col(0) = Vector::LinSpaced(300, -1.0, 1.0);
    z.col(1) = z.col(0);
    const Matrix c = residual_correlation(z);
    CHECK_THAT(c(0, 1), WithinAbs(1.0, 1e-12));
    const auto f = mixing_factor(c);
    CHECK(f.jitter > 0.0);
    CHECK(f.lower.allFinite());
}

TEST_CASE("well-conditioned matrices factor without load", "[scenario]") {
    Matrix c(2, 2);
    c << 1.0, 0.8, 0.8, 1.0;
    const auto f = mixing_factor(c);
    CHECK(f.jitter == 0.0);
    CHECK(((f.lower * f.lower.transpose()) - c).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(f.lower(0, 1) == 0.0);
}

TEST_CASE("scenarios are the affine map of the draws", "[scenario]") {
    const auto ms = marginals(3, 1.5);
    Matrix c(3, 3);
    c << 1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0;
    const Matrix l = mixing_factor(c).lower;
    Vector m(3);
    m << 0.001, -0.0005, 0.002;
    const auto set = build_scenarios(ms, m, l, 2000, 42);
    Vector sigma(3);
    for (Eigen::Index i = 0; i < 3; ++i) sigma(i) = ms[static_cast<std::size_t>(i)].sigma;

    double worst = 0.0;
    for (Eigen::Index j = 0; j < set.scenarios.rows(); ++j) {
        const Vector y = set.draws.row(j).transpose();
        const Vector expected = sigma.asDiagonal() * (l * y) + m;
        worst = std::max(worst, (set.scenarios.row(j).transpose() - expected).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
    CHECK((set.shifted(m) - set.scenarios).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("covariance mode uses the factor as the whole affine matrix", "[scenario]") {
    const auto ms = marginals(2, 3.0);
    Matrix cov(2, 2);
    cov << 4e-4, 1e-4, 1e-4, 9e-4;
    const Matrix l = mixing_factor(cov).lower;
    const Vector m = Vector::Zero(2);
    const auto set = build_scenarios(ms, m, l, 1000, 8, false);
    CHECK((set.scenarios - set.draws * l.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("mixing reproduces the target correlation", "[scenario]") {
    const auto ms = marginals(2, 1.5);
    Matrix c(2, 2);
    c << 1.0, 0.8, 0.8, 1.0;
    const auto set = build_scenarios(ms, Vector::Zero(2), mixing_factor(c).lower, 100000, 7);
    CHECK_THAT(column_correlation(set.scenarios, 0, 1), WithinAbs(0.8, 0.03));
}

TEST_CASE("identity mixing leaves columns uncorrelated", "[scenario]") {
    const auto ms = marginals(3);
    const auto set = build_scenarios(ms, Vector::Zero(3), Matrix::Identity(3, 3), 20000, 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) CHECK(std::abs(column_correlation(set.scenarios, i, j)) < 0.03);
    }
}

TEST_CASE("column means follow the supplied mean", "[scenario]") {
    const auto ms = marginals(3);
    Vector mu(3);
    for (Eigen::Index i = 0; i < 3; ++i) mu(i) = ms[static_cast<std::size_t>(i)].mean;
    const auto set = build_scenarios(ms, mu, Matrix::Identity(3, 3), 100000, 19);
    for (Eigen::Index i = 0; i < 3; ++i) {
        const double se = ms[static_cast<std::size_t>(i)].sigma / std::sqrt(100000.0);
        CHECK_THAT(set.scenarios.col(i).mean(), WithinAbs(mu(i), 5.0 * se));
    }
}

TEST_CASE("same seed gives bit-identical scenarios", "[scenario]") {
    const auto ms = marginals(4, 2.0);
    const Matrix l = Matrix::Identity(4, 4);
    const Vector m = Vector::Constant(4, 0.001);
    const auto a = build_scenarios(ms, m, l, 1500, 77);
    const auto b = build_scenarios(ms, m, l, 1500, 77);
    const auto c = build_scenarios(ms, m, l, 1500, 78);
    CHECK(a.scenarios == b.scenarios);
    CHECK(a.scenarios != c.scenarios);
}

TEST_CASE("an asset's draws follow its stream, not its position", "[scenario]") {
    auto ms = marginals(3, 2.0);
    const auto full = build_scenarios(ms, Vector::Zero(3), Matrix::Identity(3, 3), 1000, 9);
    std::vector<Marginal> dropped{ms[0], ms[2]};
    const auto part = build_scenarios(dropped, Vector::Zero(2), Matrix::Identity(2, 2), 1000, 9);
    CHECK(part.draws.col(1) == full.draws.col(2));
}

TEST_CASE("scenario inputs are validated", "[scenario]") {
    const auto ms = marginals(2);
    CHECK_THROWS_AS(build_scenarios(ms, Vector::Zero(2), Matrix::Identity(2, 2), 999, 1), ConfigError);
    CHECK_THROWS_AS(build_scenarios(ms, Vector::Zero(3), Matrix::Identity(2, 2), 1000, 1), ConfigError);
    CHECK_THROWS_AS(residual_correlation(Matrix::Random(100, 2)), ConfigError);
}
