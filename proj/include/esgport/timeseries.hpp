#pragma once

// ARMA(1,1)-GARCH(1,1) with Gaussian innovations:
//
//   x_t     = p + phi * x_{t-1} + theta * e_{t-1} + e_t
//   s2_t    = c + a * e_{t-1}^2 + gamma * s2_{t-1}
//
// The recursion starts from a pre-sample state (x = sample mean, e = 0,
// s2 = sample variance), so with phi = theta = a = gamma = 0 every residual is
// x_t - p and every variance is c.

#include "esgport/core.hpp"
#include "esgport/nelder_mead.hpp"

#include <array>
#include <span>

namespace esgport {

struct ArmaGarchParams {
    double mean_const = 0.0;  // p
    double ar = 0.0;          // phi
    double ma = 0.0;          // theta
    double var_const = 0.0;   // c, squared return units
    double arch = 0.0;        // a
    double garch = 0.0;       // gamma
    double loglik = -std::numeric_limits<double>::infinity();

    bool feasible() const {
        return std::abs(ar) < 1.0 && var_const > 0.0 && arch >= 0.0 && garch >= 0.0 &&
               arch + garch < 1.0;
    }
};

/// Recursion state after the last observation.
struct GarchState {
    double last_x = 0.0;
    double last_eps = 0.0;
    double last_var = 0.0;
};

struct FilterResult {
    Vector innovations;  // e_t
    Vector volatility;   // s_t
    Vector standardized; // z_t = e_t / s_t
    GarchState state;
};

struct Forecast {
    double mean = 0.0;
    double sigma = 0.0;
};

struct ArmaGarchFitOptions {
    int max_evaluations = 500;  // per restart
    int restarts = 3;
    std::uint64_t jitter_seed = 7;
};

inline GarchState presample_state(std::span<const double> series) {
    const Eigen::Map<const Vector> x(series.data(), static_cast<Eigen::Index>(series.size()));
    return GarchState{x.mean(), 0.0, sample_variance(x)};
}

/// One recursion step: consumes observation x and returns the state after it.
inline GarchState advance(const ArmaGarchParams& p, const GarchState& s, double x) {
    const double mean = p.mean_const + p.ar * s.last_x + p.ma * s.last_eps;
    const double var = p.var_const + p.arch * s.last_eps * s.last_eps + p.garch * s.last_var;
    return GarchState{x, x - mean, var};
}

inline Forecast forecast_one_step(const ArmaGarchParams& p, const GarchState& s) {
    const double mean = p.mean_const + p.ar * s.last_x + p.ma * s.last_eps;
    const double var = p.var_const + p.arch * s.last_eps * s.last_eps + p.garch * s.last_var;
    return Forecast{mean, std::sqrt(var)};
}

inline FilterResult filter_residuals(const ArmaGarchParams& p, std::span<const double> series) {
    if (!p.feasible()) throw ConfigError("ARMA-GARCH parameters violate stationarity constraints");
    const auto n = static_cast<Eigen::Index>(series.size());
    FilterResult out;
    out.innovations.resize(n);
    out.volatility.resize(n);
    out.standardized.resize(n);
    GarchState s = presample_state(series);
    for (Eigen::Index t = 0; t < n; ++t) {
        const GarchState next = advance(p, s, series[static_cast<std::size_t>(t)]);
        if (!(next.last_var > 0.0) || !std::isfinite(next.last_var)) {
            throw NumericError("non-positive conditional variance at t=" + std::to_string(t));
        }
        const double sigma = std::sqrt(next.last_var);
        out.innovations(t) = next.last_eps;
        out.volatility(t) = sigma;
        out.standardized(t) = next.last_eps / sigma;
        s = next;
    }
    out.state = s;
    return out;
}

/// Gaussian conditional log-likelihood; -inf when the variance recursion breaks down.
inline double arma_garch_loglik(const ArmaGarchParams& p, std::span<const double> series) {
    constexpr double log_2pi = 1.8378770664093453;
    GarchState s = presample_state(series);
    double ll = 0.0;
    for (double x : series) {
        s = advance(p, s, x);
        if (!(s.last_var > 0.0) || !std::isfinite(s.last_var)) {
            return -std::numeric_limits<double>::infinity();
        }
        ll -= 0.5 * (log_2pi + std::log(s.last_var) + s.last_eps * s.last_eps / s.last_var);
    }
    return ll;
}

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Unconstrained coordinates:
//   u0: p = mean + sd * u0      u1: phi = tanh(u1)       u2: theta = tanh(u2)
//   u3: c = var * exp(u3)       u4: a + gamma = logistic(u4)
//   u5: a / (a + gamma) = logistic(u5)
struct GarchTransform {
    double mean;
    double sd;
    double var;

    ArmaGarchParams to_params(const Vector& u) const {
        ArmaGarchParams p;
        p.mean_const = mean + sd * u(0);
        p.ar = std::tanh(u(1));
        p.ma = std::tanh(u(2));
        p.var_const = var * std::exp(u(3));
        const double persistence = logistic(u(4));
        const double split = logistic(u(5));
        p.arch = persistence * split;
        p.garch = persistence * (1.0 - split);
        return p;
    }

    Vector from_params(const ArmaGarchParams& p) const {
        Vector u(6);
        u(0) = (p.mean_const - mean) / sd;
        u(1) = std::atanh(p.ar);
        u(2) = std::atanh(p.ma);
        u(3) = std::log(p.var_const / var);
        const double persistence = p.arch + p.garch;
        u(4) = logit(persistence);
        u(5) = logit(p.arch / persistence);
        return u;
    }
};

}  // namespace detail

enum class GarchSelection {
    full,         // always report the unrestricted ARMA(1,1)-GARCH(1,1) maximum
    parsimonious  // drop ARMA, then GARCH terms, when a likelihood-ratio test cannot reject them
};

namespace detail {

struct MaskedFit {
    ArmaGarchParams params;
    bool converged = false;
};

// Fits with phi = theta = 0 held fixed when `arma_free` is false.
inline MaskedFit fit_masked(std::span<const double> series, const GarchTransform& tf,
                            bool arma_free, const ArmaGarchFitOptions& opt) {
    const std::array<int, 6> all{0, 1, 2, 3, 4, 5};
    const std::array<int, 4> no_arma{0, 3, 4, 5};
    const std::span<const int> active =
        arma_free ? std::span<const int>(all) : std::span<const int>(no_arma);

    ArmaGarchParams initial;
    initial.mean_const = tf.mean;
    initial.arch = 0.05;
    initial.garch = 0.90;
    initial.var_const = tf.var * (1.0 - initial.arch - initial.garch);
    const Vector full_start = tf.from_params(initial);
    Vector full_step(6);
    full_step << 0.05, 0.2, 0.2, 0.5, 0.5, 0.5;

    const auto k = static_cast<Eigen::Index>(active.size());
    auto expand = [&](const Vector& v) {
        Vector u = full_start;
        u(1) = 0.0;
        u(2) = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) u(active[static_cast<std::size_t>(i)]) = v(i);
        return u;
    };
    Vector start(k), step(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        start(i) = full_start(active[static_cast<std::size_t>(i)]);
        step(i) = full_step(active[static_cast<std::size_t>(i)]);
    }
    auto objective = [&](const Vector& v) {
        return -arma_garch_loglik(tf.to_params(expand(v)), series);
    };

    NelderMeadOptions nm;
    nm.max_evaluations = opt.max_evaluations;
    nm.f_tolerance = 1e-11;
    nm.x_tolerance = 1e-4;

    std::mt19937_64 rng(opt.jitter_seed);
    std::normal_distribution<double> jitter(0.0, 0.25);

    NelderMeadResult best;
    bool converged = false;
    for (int r = 0; r < std::max(1, opt.restarts); ++r) {
        Vector from = r == 0 ? start : best.x;
        if (r > 0) {
            for (Eigen::Index i = 0; i < from.size(); ++i) from(i) += jitter(rng);
        }
        auto res = nelder_mead(objective, from, step, nm);
        if (res.value < best.value) {
            converged = res.converged ||
                        (converged && best.value - res.value <= 1e-7 * (1.0 + std::abs(res.value)));
            best = res;
        } else if (res.converged &&
                   res.value - best.value <= 1e-7 * (1.0 + std::abs(best.value))) {
            converged = true;
        }
    }
    MaskedFit out;
    out.params = tf.to_params(expand(best.x));
    out.params.loglik = -best.value;
    out.converged = converged;
    return out;
}

}  // namespace detail

/// Maximum-likelihood fit. Deterministic for identical input and options.
///
/// With GarchSelection::parsimonious (the default) the unrestricted fit is
/// compared against nested restrictions by a 2-degree-of-freedom likelihood
/// ratio test at 5%: first phi = theta = 0, then a = gamma = 0 (constant
/// variance, closed form). White noise therefore fits as white noise instead
/// of landing somewhere on the flat phi = -theta ridge.
///
/// Throws ConvergenceError<ArmaGarchParams> (with the best point found) when the
/// selected model's search did not meet the simplex tolerance.
inline ArmaGarchParams fit_arma_garch(std::span<const double> series,
                                      const ArmaGarchFitOptions& opt = {},
                                      GarchSelection selection = GarchSelection::parsimonious) {
    if (series.size() < 250) {
        throw ConfigError("ARMA-GARCH fit needs at least 250 observations, got " +
                          std::to_string(series.size()));
    }
    for (double x : series) {
        if (!std::isfinite(x)) throw ConfigError("ARMA-GARCH input contains non-finite values");
    }
    const Eigen::Map<const Vector> x(series.data(), static_cast<Eigen::Index>(series.size()));
    const double var = sample_variance(x);
    // spread at round-off level of the data counts as zero
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * x.cwiseAbs().maxCoeff();
    if (!(var > noise * noise) || var < 1e-300) throw NumericError("degenerate series: zero variance");

    constexpr double chi2_2dof_95 = 5.991464547107979;
    const detail::GarchTransform tf{x.mean(), std::sqrt(var), var};

    detail::MaskedFit chosen = detail::fit_masked(series, tf, true, opt);
    if (selection == GarchSelection::parsimonious) {
        const detail::MaskedFit no_arma = detail::fit_masked(series, tf, false, opt);
        if (2.0 * (chosen.params.loglik - no_arma.params.loglik) < chi2_2dof_95) {
            chosen = no_arma;
            ArmaGarchParams white;
            white.mean_const = x.mean();
            white.var_const = (x.array() - white.mean_const).square().mean();
            white.loglik = arma_garch_loglik(white, series);
            if (2.0 * (chosen.params.loglik - white.loglik) < chi2_2dof_95) {
                chosen = detail::MaskedFit{white, true};
            }
        }
    }

    if (!std::isfinite(chosen.params.loglik)) {
        throw NumericError("ARMA-GARCH likelihood is not finite");
    }
    if (!chosen.converged) {
        throw ConvergenceError<ArmaGarchParams>(
            "ARMA-GARCH fit did not converge within " + std::to_string(opt.max_evaluations) +
                " evaluations x " + std::to_string(opt.restarts) + " restarts",
            chosen.params);
    }
    return chosen.params;
}

/// Simulates n observations from the model, starting from `state`.
template <typename Rng>
Vector simulate_arma_garch(const ArmaGarchParams& p, std::size_t n, Rng& rng,
                           GarchState state = {}) {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (state.last_var <= 0.0) state.last_var = p.var_const / (1.0 - p.arch - p.garch);
    Vector out(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        const Forecast f = forecast_one_step(p, state);
        const double eps = f.sigma * normal(rng);
        const double x = f.mean + eps;
        out(static_cast<Eigen::Index>(t)) = x;
        state = GarchState{x, eps, f.sigma * f.sigma};
    }
    return out;
}

}  // namespace esgport
