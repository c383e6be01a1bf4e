#pragma once

// Correlated next-day return scenarios from independent standardized NIG
// marginals (multivariate affine construction):
//
//   w_j = m + A y_j,   A = diag(sigma) L,   L L^T = residual correlation
//
// y_j holds independent standardized NIG draws, one stream per asset.

#include "esgport/core.hpp"
#include "esgport/nig.hpp"

#include <span>
#include <vector>

namespace esgport {

struct MixingFactor {
    Matrix lower;         // L, lower triangular
    double jitter = 0.0;  // diagonal load needed to factorize; 0 when none
};

/// Pearson correlation of the columns of a residual panel (rows = dates).
inline Matrix residual_correlation(const Eigen::Ref<const Matrix>& z) {
    if (z.rows() < 250) {
        throw ConfigError("residual correlation needs at least 250 rows, got " +
                          std::to_string(z.rows()));
    }
    if (!z.allFinite()) throw ConfigError("residual panel contains missing values");
    const Matrix centered = z.rowwise() - z.colwise().mean();
    Matrix cov = centered.transpose() * centered / static_cast<double>(z.rows() - 1);
    const Vector sd = cov.diagonal().cwiseSqrt();
    if ((sd.array() <= 0.0).any()) throw NumericError("residual column has zero variance");
    Matrix corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    corr = 0.5 * (corr + corr.transpose());
    corr.diagonal().setOnes();
    return corr;
}

/// Sample covariance of the columns (rows = dates).
inline Matrix sample_covariance(const Eigen::Ref<const Matrix>& x) {
    const Matrix centered = x.rowwise() - x.colwise().mean();
    Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    return 0.5 * (cov + cov.transpose());
}

/// Cholesky factor, loading the diagonal with 1e-10, 1e-9, ... 1e-6 (times the
/// mean diagonal) when the matrix is numerically singular.
inline MixingFactor mixing_factor(const Eigen::Ref<const Matrix>& sym) {
    const double scale = sym.diagonal().mean();
    const auto n = sym.rows();
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 5; ++attempt) {
        Matrix loaded = sym;
        if (jitter > 0.0) loaded.diagonal().array() += jitter * scale;
        Eigen::LLT<Matrix> llt(loaded);
        // a pivot below 1e-12 of the scale means the matrix is numerically singular
        if (llt.info() == Eigen::Success &&
            llt.matrixL().toDenseMatrix().diagonal().array().square().minCoeff() > 1e-12 * scale) {
            return MixingFactor{llt.matrixL().toDenseMatrix(), jitter};
        }
        jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    }
    throw NumericError("matrix of size " + std::to_string(n) +
                       " is not positive definite even with 1e-6 diagonal load");
}

struct Marginal {
    NigParams shape;      // standardized
    double mean = 0.0;    // one-step conditional mean forecast
    double sigma = 1.0;   // one-step conditional volatility forecast
    std::uint64_t stream = 0;  // random stream id (stable across universe changes)
};

struct ScenarioSet {
    Matrix scenarios;  // q x M
    Matrix centered;   // scenarios - m, i.e. rows of A y
    Matrix draws;      // y, independent standardized NIG, q x M
    Vector mean;       // m
    Matrix mixing;     // L
    std::vector<Marginal> marginals;
    std::uint64_t seed = 0;

    /// Same draws recentred on a different mean, with the dispersion scaled.
    Matrix shifted(const Vector& m, double dispersion = 1.0) const {
        Matrix out = dispersion == 1.0 ? centered : Matrix(centered * dispersion);
        out.rowwise() += m.transpose();
        return out;
    }
};

/// q draws per asset; each column is its own stream seeded by (seed, stream id).
inline Matrix draw_standardized(std::span<const Marginal> marginals, std::size_t q,
                                std::uint64_t seed) {
    Matrix y(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(marginals.size()));
    for (std::size_t i = 0; i < marginals.size(); ++i) {
        require_standardized(marginals[i].shape);
        auto rng = make_stream(seed, marginals[i].stream, 0x5CE7u);
        for (Eigen::Index j = 0; j < y.rows(); ++j) {
            y(j, static_cast<Eigen::Index>(i)) = draw_nig(marginals[i].shape, rng);
        }
    }
    return y;
}

/// scale_by_sigma = false uses `mixing` as the full affine matrix (covariance mode).
inline ScenarioSet build_scenarios(std::span<const Marginal> marginals, const Vector& m,
                                   const Matrix& mixing, std::size_t q, std::uint64_t seed,
                                   bool scale_by_sigma = true) {
    const auto n = static_cast<Eigen::Index>(marginals.size());
    if (n == 0) throw ConfigError("no marginals supplied");
    if (m.size() != n || mixing.rows() != n || mixing.cols() != n) {
        throw ConfigError("scenario inputs have inconsistent dimensions");
    }
    if (q < 1000) throw ConfigError("at least 1000 scenarios required, got " + std::to_string(q));

    ScenarioSet set;
    set.draws = draw_standardized(marginals, q, seed);
    set.centered = set.draws * mixing.transpose();
    if (scale_by_sigma) {
        Vector sigma(n);
        for (Eigen::Index i = 0; i < n; ++i) sigma(i) = marginals[static_cast<std::size_t>(i)].sigma;
        set.centered = set.centered * sigma.asDiagonal();
    }
    set.scenarios = set.centered.rowwise() + m.transpose();
    set.mean = m;
    set.mixing = mixing;
    set.marginals.assign(marginals.begin(), marginals.end());
    set.seed = seed;
    return set;
}

}  // namespace esgport
