#pragma once

// Bounded-variable revised primal simplex for
//
//   minimize c'x  subject to  A x = b,  lower <= x <= upper
//
// sized for few rows and many columns (the basis inverse is dense m x m and
// pricing is one A'y product per iteration). Infinite bounds are allowed; a
// free nonbasic variable rests at zero.

#include "esgport/core.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace esgport {

struct LpProblem {
    Matrix a;
    Vector b;
    Vector c;
    Vector lower;
    Vector upper;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

struct LpResult {
    LpStatus status = LpStatus::iteration_limit;
    Vector x;
    Vector duals;       // y = c_B' B^-1, one per row
    double objective = 0.0;
    int iterations = 0;
    int phase_one_iterations = 0;
    std::vector<Eigen::Index> basis;  // structural index per row, -1 for an artificial
    std::vector<bool> is_basic;       // per structural variable
};

struct SimplexOptions {
    int max_iterations = 200000;
    double optimality_tol = 1e-10;
    double feasibility_tol = 1e-10;
    double pivot_tol = 1e-9;
    int refactor_every = 64;
    int stall_limit = 200;  // non-improving iterations before Bland's rule
};

namespace detail {

class BoundedSimplex {
public:
    BoundedSimplex(const LpProblem& p, const SimplexOptions& opt) : p_(p), opt_(opt) {
        m_ = p.a.rows();
        n_ = p.a.cols();
        if (p.b.size() != m_ || p.c.size() != n_ || p.lower.size() != n_ || p.upper.size() != n_) {
            throw ConfigError("LP dimensions are inconsistent");
        }
        total_ = n_ + m_;
        x_ = Vector::Zero(total_);
        lower_ = Vector::Zero(total_);
        upper_ = Vector::Constant(total_, inf());
        lower_.head(n_) = p.lower;
        upper_.head(n_) = p.upper;
        row_of_.assign(static_cast<std::size_t>(total_), -1);
        art_sign_ = Vector::Ones(m_);
    }

    LpResult solve() {
        for (Eigen::Index j = 0; j < n_; ++j) {
            if (lower_(j) > upper_(j)) return finish(LpStatus::infeasible);
            if (std::isfinite(lower_(j))) x_(j) = lower_(j);
            else if (std::isfinite(upper_(j))) x_(j) = upper_(j);
            else x_(j) = 0.0;
        }
        const Vector residual = p_.b - p_.a * x_.head(n_);
        basis_.resize(static_cast<std::size_t>(m_));
        for (Eigen::Index i = 0; i < m_; ++i) {
            art_sign_(i) = residual(i) < 0.0 ? -1.0 : 1.0;
            x_(n_ + i) = std::abs(residual(i));
            basis_[static_cast<std::size_t>(i)] = n_ + i;
            row_of_[static_cast<std::size_t>(n_ + i)] = i;
        }
        binv_ = art_sign_.asDiagonal();

        // phase 1: minimize the sum of artificials
        cost_ = Vector::Zero(total_);
        cost_.tail(m_).setOnes();
        LpStatus st = iterate();
        phase_one_iterations_ = iterations_;
        if (st == LpStatus::iteration_limit) return finish(st);
        if (x_.tail(m_).sum() > opt_.feasibility_tol * (1.0 + p_.b.cwiseAbs().maxCoeff())) {
            return finish(LpStatus::infeasible);
        }
        for (Eigen::Index i = 0; i < m_; ++i) {
            upper_(n_ + i) = 0.0;
            x_(n_ + i) = 0.0;
        }
        drive_out_artificials();
        recompute_basics();

        // phase 2
        cost_.head(n_) = p_.c;
        cost_.tail(m_).setZero();
        st = iterate();
        return finish(st);
    }

private:
    static double inf() { return std::numeric_limits<double>::infinity(); }

    Vector column(Eigen::Index j) const {
        if (j < n_) return p_.a.col(j);
        Vector e = Vector::Zero(m_);
        e(j - n_) = art_sign_(j - n_);
        return e;
    }

    void refactor() {
        Matrix basis_matrix(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) basis_matrix.col(i) = column(basis_[static_cast<std::size_t>(i)]);
        Eigen::PartialPivLU<Matrix> lu(basis_matrix);
        binv_ = lu.inverse();
        recompute_basics();
    }

    void recompute_basics() {
        Vector rhs = p_.b;
        for (Eigen::Index j = 0; j < total_; ++j) {
            if (row_of_[static_cast<std::size_t>(j)] < 0 && x_(j) != 0.0) rhs -= column(j) * x_(j);
        }
        const Vector xb = binv_ * rhs;
        for (Eigen::Index i = 0; i < m_; ++i) x_(basis_[static_cast<std::size_t>(i)]) = xb(i);
    }

    double objective() const { return cost_.dot(x_); }

    void pivot(Eigen::Index leave_row, Eigen::Index entering, const Vector& alpha) {
        const auto leaving = basis_[static_cast<std::size_t>(leave_row)];
        row_of_[static_cast<std::size_t>(leaving)] = -1;
        basis_[static_cast<std::size_t>(leave_row)] = entering;
        row_of_[static_cast<std::size_t>(entering)] = leave_row;
        const Eigen::RowVectorXd pivot_row = binv_.row(leave_row) / alpha(leave_row);
        binv_ -= alpha * pivot_row;
        binv_.row(leave_row) = pivot_row;
    }

    // Degenerate swaps replacing zero-level artificials by structural columns.
    // A row with no eligible column is redundant and keeps its artificial.
    void drive_out_artificials() {
        for (Eigen::Index r = 0; r < m_; ++r) {
            if (basis_[static_cast<std::size_t>(r)] < n_) continue;
            const Eigen::RowVectorXd row = binv_.row(r) * p_.a;
            Eigen::Index best = -1;
            double best_abs = opt_.pivot_tol;
            for (Eigen::Index j = 0; j < n_; ++j) {
                if (row_of_[static_cast<std::size_t>(j)] >= 0) continue;
                if (std::abs(row(j)) > best_abs) {
                    best_abs = std::abs(row(j));
                    best = j;
                }
            }
            if (best >= 0) pivot(r, best, binv_ * column(best));
        }
    }

    LpStatus iterate() {
        int since_improvement = 0;
        bool bland = false;
        double best_obj = objective();
        int since_refactor = 0;
        Vector cb(m_);
        while (true) {
            if (iterations_ >= opt_.max_iterations) return LpStatus::iteration_limit;
            if (since_refactor >= opt_.refactor_every) {
                refactor();
                since_refactor = 0;
            }
            for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost_(basis_[static_cast<std::size_t>(i)]);
            const Vector y = binv_.transpose() * cb;
            Vector reduced(total_);
            reduced.head(n_) = cost_.head(n_) - p_.a.transpose() * y;
            for (Eigen::Index i = 0; i < m_; ++i) reduced(n_ + i) = cost_(n_ + i) - art_sign_(i) * y(i);

            // pricing
            Eigen::Index entering = -1;
            double direction = 0.0;
            double best_score = 0.0;
            for (Eigen::Index j = 0; j < total_; ++j) {
                if (row_of_[static_cast<std::size_t>(j)] >= 0) continue;
                if (lower_(j) == upper_(j)) continue;
                const double d = reduced(j);
                double dir = 0.0;
                if (d < -opt_.optimality_tol && x_(j) < upper_(j)) dir = 1.0;
                else if (d > opt_.optimality_tol && x_(j) > lower_(j)) dir = -1.0;
                if (dir == 0.0) continue;
                if (bland) {
                    entering = j;
                    direction = dir;
                    break;
                }
                if (std::abs(d) > best_score) {
                    best_score = std::abs(d);
                    entering = j;
                    direction = dir;
                }
            }
            if (entering < 0) return LpStatus::optimal;

            const Vector alpha = binv_ * column(entering);
            // Harris two-pass ratio test: basic x_B moves by -direction * t * alpha
            double t_relaxed = upper_(entering) - lower_(entering);
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double rate = direction * alpha(i);
                if (std::abs(rate) <= opt_.pivot_tol) continue;
                const auto var = basis_[static_cast<std::size_t>(i)];
                const double room = rate > 0.0 ? x_(var) - lower_(var) : upper_(var) - x_(var);
                t_relaxed = std::min(t_relaxed, (std::max(room, 0.0) + opt_.feasibility_tol) / std::abs(rate));
            }
            if (!std::isfinite(t_relaxed)) return LpStatus::unbounded;

            Eigen::Index leave_row = -1;
            double step = upper_(entering) - lower_(entering);
            bool flip = std::isfinite(step) && step <= t_relaxed;
            if (!flip) {
                double best_pivot = 0.0;
                for (Eigen::Index i = 0; i < m_; ++i) {
                    const double rate = direction * alpha(i);
                    if (std::abs(rate) <= opt_.pivot_tol) continue;
                    const auto var = basis_[static_cast<std::size_t>(i)];
                    const double room = rate > 0.0 ? x_(var) - lower_(var) : upper_(var) - x_(var);
                    if (!std::isfinite(room)) continue;
                    const double ratio = std::max(room, 0.0) / std::abs(rate);
                    if (ratio > t_relaxed) continue;
                    const bool better = bland
                        ? (leave_row < 0 || var < basis_[static_cast<std::size_t>(leave_row)])
                        : std::abs(rate) > best_pivot;
                    if (better) {
                        best_pivot = std::abs(rate);
                        leave_row = i;
                        step = ratio;
                    }
                }
                if (leave_row < 0) return LpStatus::unbounded;
            }

            x_(entering) += direction * step;
            for (Eigen::Index i = 0; i < m_; ++i) {
                x_(basis_[static_cast<std::size_t>(i)]) -= direction * step * alpha(i);
            }
            if (flip) {
                x_(entering) = direction > 0.0 ? upper_(entering) : lower_(entering);
            } else {
                const auto leaving = basis_[static_cast<std::size_t>(leave_row)];
                const double rate = direction * alpha(leave_row);
                x_(leaving) = rate > 0.0 ? lower_(leaving) : upper_(leaving);
                pivot(leave_row, entering, alpha);
                ++since_refactor;
            }
            ++iterations_;

            const double obj = objective();
            if (obj < best_obj - 1e-14 * (1.0 + std::abs(best_obj))) {
                best_obj = obj;
                since_improvement = 0;
                bland = false;
            } else if (++since_improvement >= opt_.stall_limit) {
                bland = true;
            }
        }
    }

    LpResult finish(LpStatus status) {
        LpResult r;
        r.status = status;
        r.iterations = iterations_;
        r.phase_one_iterations = phase_one_iterations_;
        if (status == LpStatus::optimal) {
            refactor();
            Vector cb(m_);
            for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost_(basis_[static_cast<std::size_t>(i)]);
            r.duals = binv_.transpose() * cb;
        }
        r.x = x_.head(n_);
        r.objective = p_.c.dot(r.x);
        r.is_basic.assign(static_cast<std::size_t>(n_), false);
        for (auto v : basis_) {
            r.basis.push_back(v < n_ ? v : -1);
            if (v < n_) r.is_basic[static_cast<std::size_t>(v)] = true;
        }
        return r;
    }

    const LpProblem& p_;
    SimplexOptions opt_;
    Eigen::Index m_ = 0, n_ = 0, total_ = 0;
    Vector x_, lower_, upper_, cost_, art_sign_;
    Matrix binv_;
    std::vector<Eigen::Index> basis_;
    std::vector<Eigen::Index> row_of_;
    int iterations_ = 0;
    int phase_one_iterations_ = 0;
};

}  // namespace detail

inline LpResult solve_lp(const LpProblem& problem, const SimplexOptions& opt = {}) {
    return detail::BoundedSimplex(problem, opt).solve();
}

}  // namespace esgport
