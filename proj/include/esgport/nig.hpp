#pragma once

// Normal-inverse Gaussian distribution NIG(alpha, beta, delta, mu):
//
//   f(x) = alpha delta K1(alpha r) / (pi r) * exp(delta g + beta (x - mu)),
//   r = sqrt(delta^2 + (x - mu)^2),  g = sqrt(alpha^2 - beta^2).
//
// The density is evaluated in log space with an exponentially scaled K1 so the
// decaying Bessel factor and the growing exponential never meet in linear
// space.

#include "esgport/core.hpp"
#include "esgport/nelder_mead.hpp"

#include <array>
#include <numbers>
#include <span>

namespace esgport {

/// log K1(x) for x > 0, accurate to a few ulps of the result.
///
/// x <= 2: ascending series  K1 = 1/x + ln(x/2) I1(x) - x/4 sum (psi(k+1)+psi(k+2)) y^k/(k!(k+1)!)
/// x >  2: Steed's continued fraction (Temme/Thompson-Barnett) for K0, K1 scaled by e^x.
inline double log_bessel_k1(double x) {
    if (!(x > 0.0)) throw ConfigError("log_bessel_k1 requires x > 0");
    if (x <= 2.0) {
        const double y = 0.25 * x * x;
        double term = 1.0;
        double psi1 = -0.57721566490153286;  // psi(1)
        double psi2 = psi1 + 1.0;            // psi(2)
        double i_sum = 0.0;
        double k_sum = 0.0;
        for (int k = 0; k < 60; ++k) {
            if (k > 0) {
                term *= y / (static_cast<double>(k) * static_cast<double>(k + 1));
                psi1 += 1.0 / k;
                psi2 += 1.0 / (k + 1);
            }
            i_sum += term;
            k_sum += (psi1 + psi2) * term;
            if (term < 1e-18 * i_sum) break;
        }
        const double i1 = 0.5 * x * i_sum;
        return std::log(1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * k_sum);
    }
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25;  // 1/4 - mu^2 with mu = 0
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 10000; ++i) {
        a -= 2 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < 1e-16) break;
    }
    h *= a1;
    // K0 = sqrt(pi / 2x) e^{-x} / s ;  K1 = K0 (x + 1/2 - h) / x
    return 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s) +
           std::log((x + 0.5 - h) / x);
}

struct NigParams {
    double alpha = 1.0;  // tail heaviness
    double beta = 0.0;   // asymmetry
    double delta = 1.0;  // scale
    double mu = 0.0;     // location

    double gamma() const { return std::sqrt(alpha * alpha - beta * beta); }
    double mean() const { return mu + delta * beta / gamma(); }
    double variance() const {
        const double g = gamma();
        return delta * alpha * alpha / (g * g * g);
    }
    double skewness() const { return 3.0 * beta / (alpha * std::sqrt(delta * gamma())); }

    bool valid() const {
        return alpha > 0.0 && delta > 0.0 && std::abs(beta) < alpha && std::isfinite(alpha) &&
               std::isfinite(beta) && std::isfinite(delta) && std::isfinite(mu);
    }

    /// Unit-variance, zero-mean member with the given shape.
    static NigParams standardized(double alpha, double beta) {
        NigParams p;
        p.alpha = alpha;
        p.beta = beta;
        const double g = p.gamma();
        p.delta = g * g * g / (alpha * alpha);
        p.mu = -p.delta * beta / g;
        return p;
    }
};

inline double nig_logpdf(double x, const NigParams& p) {
    const double dx = x - p.mu;
    const double r = std::hypot(p.delta, dx);
    return std::log(p.alpha) + std::log(p.delta) + log_bessel_k1(p.alpha * r) -
           std::log(std::numbers::pi) - std::log(r) + p.delta * p.gamma() + p.beta * dx;
}

inline double nig_pdf(double x, const NigParams& p) {
    if (!p.valid()) throw ConfigError("invalid NIG parameters");
    const double f = std::exp(nig_logpdf(x, p));
    if (!std::isfinite(f)) throw NumericError("NIG density is not finite");
    return f;
}

/// One draw via the inverse-Gaussian mixture: V ~ IG(delta/gamma, delta^2),
/// X = mu + beta V + sqrt(V) Z.
template <typename Rng>
double draw_nig(const NigParams& p, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double m = p.delta / p.gamma();
    const double shape = p.delta * p.delta;
    // Michael, Schucany & Haas transformation with one chi-square(1) variate.
    const double nu = normal(rng);
    const double y = nu * nu;
    const double root = std::sqrt(4.0 * m * shape * y + m * m * y * y);
    const double x = m + m * m * y / (2.0 * shape) - m * root / (2.0 * shape);
    const double v = uniform(rng) <= m / (m + x) ? x : m * m / x;
    return p.mu + p.beta * v + std::sqrt(v) * normal(rng);
}

inline void require_standardized(const NigParams& p) {
    if (!p.valid()) throw ConfigError("invalid NIG parameters");
    if (std::abs(p.mean()) > 1e-9 || std::abs(p.variance() - 1.0) > 1e-9) {
        throw ConfigError("NIG parameters are not standardized (mean 0, variance 1)");
    }
}

inline Vector sample_standardized(const NigParams& p, std::size_t n, std::uint64_t seed) {
    require_standardized(p);
    std::mt19937_64 rng(seed);
    Vector out(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = draw_nig(p, rng);
    return out;
}

struct NigFitOptions {
    int max_evaluations = 600;
    double max_scaled_alpha = 1e4;  // cap on alpha*delta; Gaussian data runs into it
    double boundary_asymmetry = 0.999;  // |beta/alpha| beyond this is a boundary fit
};

namespace detail {

// Search coordinates (log(alpha*delta), atanh(beta/alpha)) mapped to the
// standardized member.
inline NigParams nig_from_search(const Vector& v, double max_scaled_alpha) {
    const double scaled_alpha = std::exp(std::min(v(0), std::log(max_scaled_alpha)));
    const double rho = std::tanh(v(1));
    const double one_minus = 1.0 - rho * rho;
    const double alpha = std::sqrt(scaled_alpha / (one_minus * std::sqrt(one_minus)));
    return NigParams::standardized(alpha, rho * alpha);
}

}  // namespace detail

inline double nig_loglik(const NigParams& p, std::span<const double> x) {
    double ll = 0.0;
    for (double v : x) ll += nig_logpdf(v, p);
    return ll;
}

/// MLE of (alpha, beta) with (delta, mu) tied so the fit has mean 0 and variance 1.
/// Throws ConvergenceError<NigParams> at the asymmetry boundary or on non-convergence.
inline NigParams fit_standardized(std::span<const double> z, const NigFitOptions& opt = {}) {
    if (z.size() < 250) {
        throw ConfigError("NIG fit needs at least 250 residuals, got " + std::to_string(z.size()));
    }
    const Eigen::Map<const Vector> x(z.data(), static_cast<Eigen::Index>(z.size()));
    const double var = sample_variance(x);
    if (!(var >= 0.5 && var <= 2.0)) {
        throw ConfigError("residuals are not standardized (sample variance " +
                          format_double(var) + ")");
    }

    // Method of moments on skewness / excess kurtosis:
    //   skew = 3 rho / sqrt(zeta),  exkurt = 3 (1 + 4 rho^2) / zeta,  zeta = delta * gamma
    const double m = x.mean();
    const double m2 = (x.array() - m).square().mean();
    const double skew = (x.array() - m).cube().mean() / std::pow(m2, 1.5);
    const double exkurt = (x.array() - m).square().square().mean() / (m2 * m2) - 3.0;
    double rho = 0.0;
    double zeta = 50.0;
    if (exkurt > 0.06) {
        const double denom = 3.0 * exkurt - 4.0 * skew * skew;
        if (denom > 0.0) rho = std::clamp(std::copysign(std::sqrt(skew * skew / denom), skew), -0.9, 0.9);
        zeta = std::clamp(3.0 * (1.0 + 4.0 * rho * rho) / exkurt, 0.01, opt.max_scaled_alpha);
    }
    Vector start(2);
    start << std::log(zeta / std::sqrt(1.0 - rho * rho)), std::atanh(rho);
    Vector step(2);
    step << 0.5, 0.2;

    auto objective = [&](const Vector& v) {
        return -nig_loglik(detail::nig_from_search(v, opt.max_scaled_alpha), z);
    };
    NelderMeadOptions nm;
    nm.max_evaluations = opt.max_evaluations;
    nm.f_tolerance = 1e-11;
    nm.x_tolerance = 1e-6;
    auto res = nelder_mead(objective, start, step, nm);
    if (!res.converged) {
        auto again = nelder_mead(objective, res.x, step * 0.1, nm);
        again.evaluations += res.evaluations;
        if (again.value <= res.value) res = again;
        else res.converged = again.converged;
    }

    // Newton polish on central differences. Near a flat optimum the objective
    // values alone cannot place the minimizer (differences drown in summation
    // noise); differencing across a wider stencil still can.
    const double h = 1e-3;
    for (int iter = 0; iter < 4 && res.converged; ++iter) {
        const Vector& v = res.x;
        Vector g(2);
        Eigen::Matrix2d hess;
        const double f0 = res.value;
        std::array<double, 2> fp{}, fm{};
        for (int i = 0; i < 2; ++i) {
            Vector e = Vector::Zero(2);
            e(i) = h;
            fp[static_cast<std::size_t>(i)] = objective(v + e);
            fm[static_cast<std::size_t>(i)] = objective(v - e);
            g(i) = (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]) / (2 * h);
            hess(i, i) = (fp[static_cast<std::size_t>(i)] - 2 * f0 + fm[static_cast<std::size_t>(i)]) / (h * h);
        }
        Vector d1(2), d2(2);
        d1 << h, h;
        d2 << h, -h;
        hess(0, 1) = hess(1, 0) =
            (objective(v + d1) - objective(v + d2) - objective(v - d2) + objective(v - d1)) / (4 * h * h);
        res.evaluations += 8;
        if (v(0) >= std::log(opt.max_scaled_alpha)) {
            // capped tail parameter: polish the asymmetry coordinate alone
            if (!(hess(1, 1) > 0.0)) break;
            g(0) = 0.0;
            hess(0, 1) = hess(1, 0) = 0.0;
            hess(0, 0) = 1.0;
        }
        Eigen::LLT<Eigen::Matrix2d> llt(hess);
        if (llt.info() != Eigen::Success) break;
        const Vector candidate = v - llt.solve(g);
        if ((candidate - v).cwiseAbs().maxCoeff() > 0.5) break;
        const double fc = objective(candidate);
        ++res.evaluations;
        if (!(fc <= f0 + 1e-10 * (1.0 + std::abs(f0)))) break;
        res.x = candidate;
        res.value = std::min(fc, f0);
        if ((candidate - v).cwiseAbs().maxCoeff() < 1e-12) break;
    }

    const NigParams fitted = detail::nig_from_search(res.x, opt.max_scaled_alpha);
    if (std::abs(fitted.beta) > opt.boundary_asymmetry * fitted.alpha) {
        throw ConvergenceError<NigParams>(
            "NIG fit converged to the asymmetry boundary |beta| -> alpha; "
            "residual tails may be heavier than NIG can represent",
            fitted);
    }
    if (!res.converged || !std::isfinite(res.value)) {
        throw ConvergenceError<NigParams>(
            "NIG fit did not converge after " + std::to_string(res.evaluations) + " evaluations",
            fitted);
    }
    return fitted;
}

}  // namespace esgport
