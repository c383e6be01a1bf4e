#pragma once

// Black-Litterman equilibrium and posterior, with ESG-blended equilibrium
// weights in place of market capitalization:
//
//   w_eq   = (1 - lambda) C / sum C + lambda xi / sum xi
//   Pi     = delta Sigma w_eq
//   mu_BL  = [(tau Sigma)^-1 + P' Omega^-1 P]^-1 [(tau Sigma)^-1 Pi + P' Omega^-1 v]
//   Sig_BL = [(tau Sigma)^-1 + P' Omega^-1 P]^-1
//
// All quantities are in daily return units.

#include "esgport/core.hpp"
#include "esgport/market_data.hpp"

#include <span>
#include <string>
#include <vector>

namespace esgport {

struct BlViews {
    Matrix pick;        // P, K x M
    Vector value;       // v, K
    Vector uncertainty; // diagonal of Omega, K

    Eigen::Index count() const { return value.size(); }

    static BlViews none(Eigen::Index assets) {
        return BlViews{Matrix(0, assets), Vector(0), Vector(0)};
    }

    void validate(Eigen::Index assets) const {
        if (pick.rows() != value.size() || uncertainty.size() != value.size()) {
            throw ConfigError("view pick matrix, values and uncertainties disagree in size");
        }
        if (pick.cols() != assets) throw ConfigError("view pick matrix has wrong asset count");
        if ((uncertainty.array() <= 0.0).any()) {
            throw ConfigError("view uncertainties must be strictly positive");
        }
        for (Eigen::Index k = 0; k < pick.rows(); ++k) {
            if (pick.row(k).cwiseAbs().maxCoeff() == 0.0) {
                throw ConfigError("view " + std::to_string(k) + " picks no asset");
            }
        }
    }
};

struct BlPosterior {
    Vector mean;        // mu_BL
    Matrix covariance;  // Sigma_BL^mu
};

/// Blend of renormalized index weights and score-proportional weights.
inline Vector equilibrium_weights(const Vector& index_weights, const Vector& raw_scores,
                                  double lambda) {
    if (index_weights.size() != raw_scores.size() || index_weights.size() == 0) {
        throw ConfigError("equilibrium_weights: inputs must be non-empty and equally sized");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    if (!raw_scores.allFinite() || (raw_scores.array() < 0.0).any()) {
        throw ConfigError("equilibrium_weights: missing or negative ESG score");
    }
    const double c_total = index_weights.sum();
    const double s_total = raw_scores.sum();
    if (!(c_total > 0.0)) throw ConfigError("equilibrium_weights: index weights sum to zero");
    const Vector w_c = index_weights / c_total;
    // all-zero scores carry no information; fall back to equal ESG weights
    const Vector w_xi = s_total > 0.0
                            ? Vector(raw_scores / s_total)
                            : Vector::Constant(raw_scores.size(), 1.0 / static_cast<double>(raw_scores.size()));
    return (1.0 - lambda) * w_c + lambda * w_xi;
}

/// Table-driven form: scores in force on the decision date before `target_row`.
inline Vector equilibrium_weights(const EsgTable& esg, std::span<const std::string> universe,
                                  Date decision_date, std::span<const Date> calendar,
                                  double lambda) {
    const Vector c = benchmark_weights(esg, universe);
    Vector s(static_cast<Eigen::Index>(universe.size()));
    for (std::size_t i = 0; i < universe.size(); ++i) {
        auto score = esg.score_at(universe[i], decision_date, calendar);
        if (!score) {
            throw ConfigError("no ESG score for " + universe[i] + " on " + decision_date.iso() +
                              "; the asset should have been excluded from the universe");
        }
        s(static_cast<Eigen::Index>(i)) = *score;
    }
    return equilibrium_weights(c, s, lambda);
}

inline Vector equilibrium_premium(double risk_aversion, const Matrix& sigma, const Vector& w_eq) {
    if (sigma.rows() != sigma.cols() || sigma.cols() != w_eq.size()) {
        throw ConfigError("equilibrium_premium: dimension mismatch");
    }
    return risk_aversion * (sigma * w_eq);
}

inline BlPosterior posterior(double tau, const Matrix& sigma, const Vector& pi, const BlViews& views) {
    const auto m = sigma.rows();
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (sigma.cols() != m || pi.size() != m) throw ConfigError("posterior: dimension mismatch");
    views.validate(m);

    if (views.count() == 0) {
        return BlPosterior{pi, tau * sigma};
    }

    const Matrix prior_cov = tau * sigma;
    Eigen::LLT<Matrix> prior(prior_cov);
    if (prior.info() != Eigen::Success) throw NumericError("tau * Sigma is not positive definite");
    const Matrix prior_precision = prior.solve(Matrix::Identity(m, m));
    const Vector omega_inv = views.uncertainty.cwiseInverse();

    Matrix precision = prior_precision + views.pick.transpose() * omega_inv.asDiagonal() * views.pick;
    precision = 0.5 * (precision + precision.transpose());
    const Vector rhs = prior.solve(pi) + views.pick.transpose() * omega_inv.cwiseProduct(views.value);

    Eigen::LLT<Matrix> post(precision);
    if (post.info() != Eigen::Success) throw NumericError("posterior precision is singular");
    BlPosterior out;
    out.mean = post.solve(rhs);
    out.covariance = post.solve(Matrix::Identity(m, m));
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    if (!out.mean.allFinite()) throw NumericError("posterior mean is not finite");
    return out;
}

}  // namespace esgport
