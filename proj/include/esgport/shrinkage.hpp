#pragma once

// ESG shrinkage of expected returns: m_i = (1 - lambda) mu_i + lambda xi_i,
// where xi are ESG scores mapped onto the return scale.

#include "esgport/core.hpp"

#include <string_view>

namespace esgport {

enum class ScoreNormalization { minmax, zscore };

/// How the blend enters the scenario model: at the mean only, or literally per
/// observation (which also scales the dispersion by 1 - lambda).
enum class ShrinkMode { mean, observations };

struct ShrinkageSpec {
    double lambda = 0.0;
    double kappa = 0.0;  // return units per normalized score unit
    ScoreNormalization normalization = ScoreNormalization::zscore;

    void validate() const {
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
        if (!(kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
    }
};

inline ScoreNormalization parse_normalization(std::string_view s) {
    if (s == "minmax") return ScoreNormalization::minmax;
    if (s == "zscore") return ScoreNormalization::zscore;
    throw ConfigError("unknown score normalization '" + std::string(s) + "'");
}

inline ShrinkMode parse_shrink_mode(std::string_view s) {
    if (s == "mean") return ShrinkMode::mean;
    if (s == "observations") return ShrinkMode::observations;
    throw ConfigError("unknown shrink mode '" + std::string(s) + "'");
}

/// minmax: kappa (s - min) / (max - min), all kappa/2 when every score is equal.
/// zscore: kappa (s - mean) / std (population std), all 0 when std is 0.
inline Vector normalize_scores(const Vector& raw, const ShrinkageSpec& spec) {
    spec.validate();
    if ((raw.array() < 0.0).any()) throw ConfigError("ESG scores must be non-negative");
    const auto n = raw.size();
    if (n == 0) return raw;
    switch (spec.normalization) {
        case ScoreNormalization::minmax: {
            const double lo = raw.minCoeff();
            const double hi = raw.maxCoeff();
            if (hi == lo) return Vector::Constant(n, 0.5 * spec.kappa);
            return spec.kappa * (raw.array() - lo) / (hi - lo);
        }
        case ScoreNormalization::zscore: {
            if (n < 2) throw ConfigError("zscore normalization needs at least two scores");
            const double mean = raw.mean();
            const double sd = std::sqrt((raw.array() - mean).square().mean());
            if (sd == 0.0) return Vector::Zero(n);
            return spec.kappa * (raw.array() - mean) / sd;
        }
    }
    return raw;
}

inline Vector shrink_mean(const Vector& mu, const Vector& xi, double lambda) {
    if (mu.size() != xi.size()) throw ConfigError("shrink_mean: length mismatch");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    return (1.0 - lambda) * mu + lambda * xi;
}

/// Literal per-observation blend W_i = (1 - lambda) X_i + lambda xi_i (columns = assets).
inline Matrix shrink_observations(const Matrix& x, const Vector& xi, double lambda) {
    if (x.cols() != xi.size()) throw ConfigError("shrink_observations: column mismatch");
    Matrix w = (1.0 - lambda) * x;
    w.rowwise() += (lambda * xi).transpose();
    return w;
}

/// Default kappa: cross-sectional standard deviation of the window's mean returns.
inline double auto_kappa(const Eigen::Ref<const Matrix>& window_returns) {
    const Vector means = window_returns.colwise().mean().transpose();
    if (means.size() < 2) return std::abs(means.size() == 1 ? means(0) : 0.0);
    return std::sqrt((means.array() - means.mean()).square().mean());
}

}  // namespace esgport
