#pragma once

// Two small dense-basis simplex codes.
//
//  * solve_standard_form: min c.x  s.t.  A x = b, x >= 0, with sparse columns.
//    Revised primal simplex on an explicit basis inverse (eta row updates,
//    periodic refactorization), two phases, Dantzig pricing with a Bland
//    fallback on degenerate streaks.
//
//  * maximize_inequality_form: max c.x  s.t.  G x <= h, x free. Active-set
//    primal simplex that walks vertices of the feasible polyhedron starting
//    from a given feasible point; coordinates not pinned by a constraint are
//    held by pseudo rows e_k until their multiplier asks for release.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hjbvd/constants.hpp"
#include "hjbvd/errors.hpp"

namespace hjbvd {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration_limit";
    }
    return "?";
}

struct SparseColumn {
    std::vector<std::pair<std::size_t, double>> entries;  // (row, value)
};

struct StandardLp {
    std::size_t rows = 0;
    std::vector<SparseColumn> cols;
    std::vector<double> cost;
    std::vector<double> rhs;
};

struct LpOptions {
    double feasibility_tol = defaults::lp_feasibility_tol;
    double optimality_tol = defaults::lp_optimality_tol;
    std::size_t max_iterations = 200000;
    std::size_t refactor_every = 64;
    std::size_t degenerate_streak = 50;
    /// Relative size of the phase 2 right-hand-side perturbation.
    double perturbation = 1e-7;
    /// Basis inverses are dense; larger problems are refused up front.
    std::size_t max_dense_dim = defaults::lp_max_dense_dim;
};

struct StandardLpResult {
    LpStatus status = LpStatus::Infeasible;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x;
    std::vector<double> duals;  // y with c - A^T y >= 0 at optimum
    std::vector<std::size_t> basis;
    std::size_t iterations = 0;
    std::size_t phase1_iterations = 0;
    double primal_residual = 0.0;
    double complementarity_residual = 0.0;
    double min_reduced_cost = 0.0;
    bool crash_used = false;
};

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class RevisedSimplex {
public:
    RevisedSimplex(const StandardLp& lp, const LpOptions& opt) : lp_(lp), opt_(opt) {
        m_ = lp.rows;
        n_ = lp.cols.size();
        if (lp.cost.size() != n_ || lp.rhs.size() != m_) throw SolverError("standard LP: inconsistent dimensions");
        if (m_ > opt.max_dense_dim) {
            throw SolverError("standard LP: " + std::to_string(m_) + " rows exceed the dense basis limit of " +
                              std::to_string(opt.max_dense_dim) + "; use a coarser grid");
        }
        sign_.assign(m_, 1.0);
        b_.resize(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) {
            sign_[i] = lp.rhs[i] < 0.0 ? -1.0 : 1.0;
            b_[static_cast<Eigen::Index>(i)] = sign_[i] * lp.rhs[i];
        }
        for (const auto& col : lp.cols) {
            for (const auto& [r, v] : col.entries) {
                if (r >= m_) throw SolverError("standard LP: column entry outside the row range");
                (void)v;
            }
        }
        cscale_ = 1.0;
        for (double c : lp.cost) cscale_ = std::max(cscale_, std::abs(c));
        bscale_ = 1.0 + b_.cwiseAbs().maxCoeff();
        b_work_ = b_;
        colnorm_.assign(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            for (const auto& e : lp.cols[j].entries) colnorm_[j] += std::abs(e.second);
        }
    }

    StandardLpResult run(const std::vector<std::size_t>* crash) {
        StandardLpResult res;
        bool have_basis = false;
        if (crash && crash->size() == m_) {
            basis_ = *crash;
            if (refactor() && x_b_.minCoeff() >= -opt_.feasibility_tol * bscale_) {
                have_basis = true;
                res.crash_used = true;
                for (Eigen::Index i = 0; i < x_b_.size(); ++i) x_b_[i] = std::max(0.0, x_b_[i]);
            }
        }
        if (!have_basis) {
            // Phase 1 on artificial columns n_ .. n_+m_-1.
            basis_.resize(m_);
            for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;
            binv_ = RowMajor::Identity(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
            x_b_ = b_;
            phase_ = 1;
            perturb(true);
            LpStatus s1 = iterate(res);
            if (s1 == LpStatus::Optimal) {
                b_work_ = b_;
                if (!refactor()) throw SolverError("standard LP: singular basis after phase 1");
                s1 = dual_cleanup(res);
            }
            res.phase1_iterations = res.iterations;
            if (s1 == LpStatus::IterationLimit) {
                res.status = s1;
                return res;
            }
            double infeas = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (basis_[i] >= n_) infeas += std::max(0.0, x_b_[static_cast<Eigen::Index>(i)]);
            }
            if (infeas > opt_.feasibility_tol * bscale_) {
                res.status = LpStatus::Infeasible;
                return res;
            }
            drive_out_artificials();
        }
        phase_ = 2;
        perturb();
        for (int attempt = 0; attempt < 4; ++attempt) {
            const LpStatus s2 = iterate(res);
            if (s2 != LpStatus::Optimal) {
                res.status = s2;
                return res;
            }
            // Back to the true right-hand side; the basis stays dual feasible.
            b_work_ = b_;
            if (!refresh()) throw SolverError("standard LP: singular basis at verification");
            const LpStatus sd = dual_cleanup(res);
            if (sd != LpStatus::Optimal) {
                res.status = sd;
                return res;
            }
            if (!refresh()) throw SolverError("standard LP: singular basis at verification");
            if (min_reduced_cost() >= -opt_.optimality_tol * cscale_) break;
        }
        res.status = LpStatus::Optimal;
        finish(res);
        return res;
    }

private:
    double column_cost(std::size_t j) const {
        if (j >= n_) return phase_ == 1 ? 1.0 : 0.0;
        return phase_ == 1 ? 0.0 : lp_.cost[j];
    }

    // A_j (row-sign adjusted) applied as  sum_k a_kj * binv.col(k).
    Eigen::VectorXd ftran(std::size_t j) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
        if (j >= n_) {
            out = binv_.col(static_cast<Eigen::Index>(j - n_));
            return out;
        }
        for (const auto& [r, v] : lp_.cols[j].entries) out += (sign_[r] * v) * binv_.col(static_cast<Eigen::Index>(r));
        return out;
    }

    double dot_column(const Eigen::VectorXd& y, std::size_t j) const {
        if (j >= n_) return y[static_cast<Eigen::Index>(j - n_)];
        double s = 0.0;
        for (const auto& [r, v] : lp_.cols[j].entries) s += sign_[r] * v * y[static_cast<Eigen::Index>(r)];
        return s;
    }

    Eigen::VectorXd duals() const {
        Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) cb[static_cast<Eigen::Index>(i)] = column_cost(basis_[i]);
        return binv_.transpose() * cb;
    }

    bool refactor() {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t j = basis_[i];
            const auto ci = static_cast<Eigen::Index>(i);
            if (j >= n_) {
                B(static_cast<Eigen::Index>(j - n_), ci) = 1.0;
            } else {
                for (const auto& [r, v] : lp_.cols[j].entries) B(static_cast<Eigen::Index>(r), ci) += sign_[r] * v;
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        const Eigen::VectorXd d = lu.matrixLU().diagonal().cwiseAbs();
        if (m_ > 0 && d.minCoeff() <= 1e-13 * std::max(1.0, d.maxCoeff())) return false;
        binv_ = lu.inverse();
        x_b_ = lu.solve(b_work_);
        since_refactor_ = 0;
        return x_b_.allFinite();
    }

    /// Basic solution for the current right-hand side; the inverse is reused
    /// when no pivot happened since it was formed.
    bool refresh() {
        if (since_refactor_ != 0) return refactor();
        x_b_ = binv_ * b_work_;
        return x_b_.allFinite();
    }

    // Rounding level of c_j - y^T A_j; with duals of size 1/lambda this
    // dominates any absolute optimality tolerance.
    double rounding_allowance(double ynorm, std::size_t j) const {
        return 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(column_cost(j)) + ynorm * colnorm_[j]);
    }

    double min_reduced_cost() const {
        const Eigen::VectorXd y = duals();
        double mn = std::numeric_limits<double>::infinity();
        const double ynorm = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            // Shifted by the rounding allowance so the caller compares against otol.
            mn = std::min(mn, column_cost(j) - dot_column(y, j) + rounding_allowance(ynorm, j));
        }
        return n_ ? mn : 0.0;
    }

    LpStatus iterate(StandardLpResult& res) {
        std::vector<char> in_basis(n_ + m_, 0);
        for (std::size_t j : basis_) in_basis[j] = 1;
        std::size_t degenerate = 0;
        bool bland = false;
        const double otol = opt_.optimality_tol * (phase_ == 1 ? 1.0 : cscale_);

        while (true) {
            if (res.iterations >= opt_.max_iterations) return LpStatus::IterationLimit;
            const Eigen::VectorXd y = duals();
            const double ynorm = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;

            std::size_t q = n_ + m_;
            double best = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                if (in_basis[j]) continue;
                const double d = column_cost(j) - dot_column(y, j);
                if (d >= -otol - rounding_allowance(ynorm, j)) continue;
                if (d < best) {
                    q = j;
                    best = d;
                    if (bland) break;
                }
            }
            if (q == n_ + m_) return LpStatus::Optimal;

            const Eigen::VectorXd alpha = ftran(q);
            const double amax = alpha.cwiseAbs().maxCoeff();
            const double piv_tol = 1e-9 * std::max(1.0, amax);
            const double zero_tol = 1e-13 * bscale_;
            const double harris_tol = 1e-11 * bscale_;
            std::size_t r = m_;
            double ratio = std::numeric_limits<double>::infinity();
            // Harris pass: the largest step allowed with values relaxed by harris_tol.
            double bound = std::numeric_limits<double>::infinity();
            if (!bland) {
                for (std::size_t i = 0; i < m_; ++i) {
                    const double ai = alpha[static_cast<Eigen::Index>(i)];
                    if (ai > piv_tol) bound = std::min(bound, (std::max(0.0, x_b_[static_cast<Eigen::Index>(i)]) + harris_tol) / ai);
                }
            }
            for (std::size_t i = 0; i < m_; ++i) {
                const double ai = alpha[static_cast<Eigen::Index>(i)];
                if (ai <= piv_tol) continue;
                // Values at rounding level count as exact zeros so degenerate ties stay ties.
                const double xi = x_b_[static_cast<Eigen::Index>(i)];
                const double t = (xi <= zero_tol ? 0.0 : xi) / ai;
                if (!bland) {
                    // Among rows within the Harris bound take artificials first, then the largest pivot.
                    if (t > bound) continue;
                    const bool art_i = basis_[i] >= n_;
                    const bool art_r = r < m_ && basis_[r] >= n_;
                    if (r == m_ || (art_i && !art_r) || (art_i == art_r && ai > alpha[static_cast<Eigen::Index>(r)])) {
                        r = i;
                        ratio = std::max(0.0, t);
                    }
                    continue;
                }
                const double tie = r == m_ ? 0.0 : 1e-12 * std::max(1.0, ratio);
                if (r == m_ || t < ratio - tie) {
                    ratio = t;
                    r = i;
                } else if (t <= ratio + tie && r < m_) {
                    const bool art_i = basis_[i] >= n_, art_r = basis_[r] >= n_;
                    if (art_i != art_r) {
                        if (art_i) r = i;
                    } else if (basis_[i] < basis_[r]) {
                        r = i;
                    }
                }
            }
            if (r == m_) return LpStatus::Unbounded;

            in_basis[basis_[r]] = 0;
            in_basis[q] = 1;
            pivot(r, q, alpha, ratio);
            ++res.iterations;

            if (ratio <= 1e-14) {
                if (++degenerate >= opt_.degenerate_streak) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
            if (++since_refactor_ >= opt_.refactor_every) {
                if (!refactor()) throw SolverError("standard LP: basis became singular");
                for (Eigen::Index i = 0; i < x_b_.size(); ++i) {
                    if (x_b_[i] < 0.0 && x_b_[i] > -opt_.feasibility_tol * bscale_) x_b_[i] = 0.0;
                }
            }
        }
    }

    // Lifts every structural basic value by a small deterministic amount,
    // i.e. solves with b + B xi, so that phase 2 pivots are nondegenerate.
    void perturb(bool artificials = false) {
        std::uint64_t state = 0x9e3779b97f4a7c15ULL;
        Eigen::VectorXd shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
            if (artificials || basis_[i] < n_) shift[static_cast<Eigen::Index>(i)] = opt_.perturbation * bscale_ * (1.0 + u);
        }
        Eigen::VectorXd bshift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t j = basis_[i];
            if (j >= n_) {
                bshift[static_cast<Eigen::Index>(j - n_)] += shift[static_cast<Eigen::Index>(i)];
                continue;
            }
            for (const auto& [r, v] : lp_.cols[j].entries) bshift[static_cast<Eigen::Index>(r)] += sign_[r] * v * shift[static_cast<Eigen::Index>(i)];
        }
        b_work_ = b_ + bshift;
        x_b_ += shift;
    }

    // Dual simplex on a dual feasible basis until x_B >= 0.
    LpStatus dual_cleanup(StandardLpResult& res) {
        std::vector<char> in_basis(n_ + m_, 0);
        for (std::size_t j : basis_) in_basis[j] = 1;
        const double ftol = opt_.feasibility_tol * bscale_;
        while (true) {
            if (res.iterations >= opt_.max_iterations) return LpStatus::IterationLimit;
            Eigen::Index r = 0;
            const double xmin = x_b_.minCoeff(&r);
            if (xmin >= -ftol) break;
            const Eigen::RowVectorXd rho = binv_.row(r);
            const Eigen::VectorXd y = duals();
            const double dtol = opt_.optimality_tol * (phase_ == 1 ? 1.0 : cscale_);
            std::vector<std::pair<double, double>> cand(n_, {0.0, 0.0});  // (d_j, a_j)
            double amax = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                if (in_basis[j]) continue;
                double a = 0.0;
                for (const auto& [k, v] : lp_.cols[j].entries) a += rho[static_cast<Eigen::Index>(k)] * sign_[k] * v;
                cand[j] = {std::max(0.0, column_cost(j) - dot_column(y, j)), a};
                amax = std::max(amax, -a);
            }
            // Harris pass on the dual ratios, then the largest |a| inside the bound.
            const double atol = 1e-9 * std::max(1.0, amax);
            double bound = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n_; ++j) {
                if (!in_basis[j] && cand[j].second < -atol) bound = std::min(bound, (cand[j].first + dtol) / -cand[j].second);
            }
            std::size_t q = n_;
            double best = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                const auto [d, a] = cand[j];
                if (in_basis[j] || a >= -atol || d / -a > bound) continue;
                if (-a > best) {
                    best = -a;
                    q = j;
                }
            }
            if (q == n_) return LpStatus::Infeasible;
            const Eigen::VectorXd alpha = ftran(q);
            in_basis[basis_[static_cast<std::size_t>(r)]] = 0;
            in_basis[q] = 1;
            pivot(static_cast<std::size_t>(r), q, alpha, x_b_[r] / alpha[r]);
            ++res.iterations;
            if (++since_refactor_ >= opt_.refactor_every && !refactor()) {
                throw SolverError("standard LP: basis became singular");
            }
        }
        for (Eigen::Index i = 0; i < x_b_.size(); ++i) x_b_[i] = std::max(0.0, x_b_[i]);
        return LpStatus::Optimal;
    }

    void pivot(std::size_t r, std::size_t q, const Eigen::VectorXd& alpha, double step) {
        const auto rr = static_cast<Eigen::Index>(r);
        const double ar = alpha[rr];
        x_b_ -= step * alpha;
        x_b_[rr] = step;
        const Eigen::RowVectorXd row = binv_.row(rr) / ar;
        binv_.noalias() -= alpha * row;
        binv_.row(rr) = row;
        basis_[r] = q;
    }

    void drive_out_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            const Eigen::RowVectorXd brow = binv_.row(static_cast<Eigen::Index>(i));
            std::size_t best_j = n_;
            double best_v = 1e-9;
            for (std::size_t j = 0; j < n_; ++j) {
                if (std::find(basis_.begin(), basis_.end(), j) != basis_.end()) continue;
                double v = 0.0;
                for (const auto& [r, a] : lp_.cols[j].entries) v += brow[static_cast<Eigen::Index>(r)] * sign_[r] * a;
                if (std::abs(v) > best_v) {
                    best_v = std::abs(v);
                    best_j = j;
                }
            }
            // No candidate: the row is redundant and its artificial stays basic at zero.
            if (best_j == n_) continue;
            const Eigen::VectorXd alpha = ftran(best_j);
            pivot(i, best_j, alpha, x_b_[static_cast<Eigen::Index>(i)] / alpha[static_cast<Eigen::Index>(i)]);
        }
        if (!refactor()) throw SolverError("standard LP: singular basis after phase 1");
        for (Eigen::Index i = 0; i < x_b_.size(); ++i) x_b_[i] = std::max(0.0, x_b_[i]);
    }

    void finish(StandardLpResult& res) const {
        res.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) res.x[basis_[i]] = std::max(0.0, x_b_[static_cast<Eigen::Index>(i)]);
        }
        const Eigen::VectorXd y = duals();
        res.duals.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) res.duals[i] = sign_[i] * y[static_cast<Eigen::Index>(i)];
        res.basis = basis_;

        double obj = 0.0;
        for (std::size_t j = 0; j < n_; ++j) obj += lp_.cost[j] * res.x[j];
        res.objective = obj;

        std::vector<double> ax(m_, 0.0);
        double cs = 0.0, mind = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n_; ++j) {
            double dj = lp_.cost[j];
            for (const auto& [r, v] : lp_.cols[j].entries) {
                ax[r] += v * res.x[j];
                dj -= v * res.duals[r];
            }
            cs = std::max(cs, std::abs(res.x[j] * dj));
            mind = std::min(mind, dj);
        }
        double pr = 0.0;
        for (std::size_t i = 0; i < m_; ++i) pr = std::max(pr, std::abs(ax[i] - lp_.rhs[i]));
        res.primal_residual = pr;
        res.complementarity_residual = cs;
        res.min_reduced_cost = n_ ? mind : 0.0;
    }

    const StandardLp& lp_;
    LpOptions opt_;
    std::size_t m_ = 0, n_ = 0;
    std::vector<double> sign_;
    Eigen::VectorXd b_;
    Eigen::VectorXd b_work_;
    std::vector<double> colnorm_;  // right-hand side the current x_B refers to
    Eigen::VectorXd x_b_;
    RowMajor binv_;
    std::vector<std::size_t> basis_;
    int phase_ = 2;
    std::size_t since_refactor_ = 0;
    double cscale_ = 1.0, bscale_ = 1.0;
};

}  // namespace detail

/// `crash` optionally names m columns forming a primal feasible basis; when
/// it is singular or infeasible the solver falls back to phase 1.
inline StandardLpResult solve_standard_form(const StandardLp& lp, const LpOptions& opt = {},
                                            const std::vector<std::size_t>* crash = nullptr) {
    detail::RevisedSimplex s(lp, opt);
    return s.run(crash);
}

// ---------------------------------------------------------------------------

struct InequalityLp {
    std::size_t vars = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;  // sparse G rows
    std::vector<double> rhs;                                        // h
    std::vector<double> objective;                                  // c (maximized)
    /// Variables held at their start value; gauges a lineality direction.
    std::vector<std::size_t> pinned;
};

struct InequalityLpResult {
    LpStatus status = LpStatus::Unbounded;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x;
    /// Nonnegative multipliers of the active constraints: c = G_W^T y.
    std::vector<std::pair<std::size_t, double>> multipliers;
    std::size_t iterations = 0;
    std::size_t pseudo_rows_left = 0;  // dimension of the lineality the objective ignores
    double max_violation = 0.0;
};

namespace detail {

class ActiveSetSimplex {
public:
    ActiveSetSimplex(const InequalityLp& lp, const LpOptions& opt) : lp_(lp), opt_(opt), n_(lp.vars) {
        if (lp.rows.size() != lp.rhs.size() || lp.objective.size() != n_) {
            throw SolverError("inequality LP: inconsistent dimensions");
        }
        if (n_ > opt.max_dense_dim) {
            throw SolverError("inequality LP: " + std::to_string(n_) + " variables exceed the dense basis limit of " +
                              std::to_string(opt.max_dense_dim) + "; use a coarser grid");
        }
    }

    InequalityLpResult run(std::vector<double> x0) {
        InequalityLpResult res;
        const std::size_t m = lp_.rows.size();
        if (x0.size() != n_) throw SolverError("inequality LP: start point has the wrong size");
        x_ = Eigen::Map<Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(n_));
        hscale_ = 1.0;
        for (double h : lp_.rhs) hscale_ = std::max(hscale_, std::abs(h));
        for (std::size_t i = 0; i < m; ++i) {
            if (slack(i) < -opt_.feasibility_tol * hscale_) throw SolverError("inequality LP: start point is infeasible");
        }
        c_ = Eigen::Map<const Eigen::VectorXd>(lp_.objective.data(), static_cast<Eigen::Index>(n_));
        // Active set entries: index < m is a real row, m + k is the pseudo row e_k.
        active_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) active_[k] = m + k;
        minv_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        is_active_.assign(m, 0);

        std::size_t degenerate = 0;
        bool bland = false;
        const double cnorm = std::max(1.0, c_.cwiseAbs().maxCoeff());
        const double ytol = opt_.optimality_tol * cnorm;
        std::vector<char> frozen(n_, 0);
        std::vector<char> pinned(n_, 0);
        for (std::size_t k : lp_.pinned) {
            if (k >= n_) throw SolverError("inequality LP: pinned index out of range");
            pinned[k] = 1;
        }
        while (true) {
            if (res.iterations >= opt_.max_iterations) {
                res.status = LpStatus::IterationLimit;
                return res;
            }
            const Eigen::VectorXd y = minv_.transpose() * c_;
            // Choose the constraint to release.
            std::size_t r = n_;
            double score = 0.0;
            double s = 0.0;
            for (std::size_t k = 0; k < n_; ++k) {
                const double yk = y[static_cast<Eigen::Index>(k)];
                const bool pseudo = active_[k] >= m;
                double sc = 0.0, dir = 0.0;
                if (pseudo && std::abs(yk) > ytol) {
                    sc = std::abs(yk);
                    dir = yk > 0 ? 1.0 : -1.0;
                } else if (!pseudo && yk < -ytol) {
                    sc = -yk;
                    dir = -1.0;
                }
                if (sc == 0.0 || frozen[k] || (pseudo && pinned[active_[k] - m])) continue;
                // Pseudo rows go first: they carry no constraint.
                const bool better = bland ? (r == n_ || active_[k] < active_[r])
                                          : (r == n_ || (pseudo && active_[r] < m) ||
                                             ((pseudo == (active_[r] >= m)) && sc > score));
                if (better) {
                    r = k;
                    score = sc;
                    s = dir;
                }
            }
            if (r == n_) break;

            const Eigen::VectorXd d = s * minv_.col(static_cast<Eigen::Index>(r));
            // Ratio test over inactive rows.
            std::size_t q = m;
            double step = std::numeric_limits<double>::infinity();
            double qg = 0.0;
            const double dnorm = d.cwiseAbs().maxCoeff();
            for (std::size_t i = 0; i < m; ++i) {
                if (is_active_[i]) continue;
                double gd = 0.0, gn = 0.0;
                for (const auto& [k, v] : lp_.rows[i]) {
                    gd += v * d[static_cast<Eigen::Index>(k)];
                    gn = std::max(gn, std::abs(v));
                }
                if (gd <= 1e-11 * gn * dnorm) continue;
                const double t = std::max(0.0, slack(i)) / gd;
                const double tie = q == m ? 0.0 : 1e-12 * std::max(1.0, step);
                if (q == m || t < step - tie || (t <= step + tie && (bland ? i < q : gd > qg))) {
                    step = t;
                    q = i;
                    qg = gd;
                }
            }
            if (q == m) {
                // An unblocked ray whose gain is at rounding level is a
                // recession direction of zero cost picked up by noise in y.
                if (score <= std::sqrt(std::numeric_limits<double>::epsilon()) * cnorm * std::max(1.0, dnorm)) {
                    frozen[r] = 1;
                    continue;
                }
                res.status = LpStatus::Unbounded;
                return res;
            }
            std::fill(frozen.begin(), frozen.end(), 0);
            x_ += step * d;

            // Replace row r of the active matrix by g_q (Sherman-Morrison).
            Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n_));
            for (const auto& [k, v] : lp_.rows[q]) g[static_cast<Eigen::Index>(k)] += v;
            const Eigen::RowVectorXd gm = g * minv_;
            const double denom = gm[static_cast<Eigen::Index>(r)];
            if (std::abs(denom) < 1e-14) throw SolverError("inequality LP: degenerate pivot");
            Eigen::RowVectorXd u = gm;
            u[static_cast<Eigen::Index>(r)] -= 1.0;
            const Eigen::VectorXd mr = minv_.col(static_cast<Eigen::Index>(r));
            minv_.noalias() -= (mr / denom) * u;

            if (active_[r] < m) is_active_[active_[r]] = 0;
            active_[r] = q;
            is_active_[q] = 1;
            ++res.iterations;

            if (step * dnorm <= 1e-14 * (1.0 + x_.cwiseAbs().maxCoeff())) {
                if (++degenerate >= opt_.degenerate_streak) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
            if (res.iterations % opt_.refactor_every == 0) refactor();
        }

        refactor();
        const Eigen::VectorXd y = minv_.transpose() * c_;
        res.status = LpStatus::Optimal;
        res.x.assign(x_.data(), x_.data() + x_.size());
        res.objective = c_.dot(x_);
        for (std::size_t k = 0; k < n_; ++k) {
            if (active_[k] < m) {
                res.multipliers.emplace_back(active_[k], std::max(0.0, y[static_cast<Eigen::Index>(k)]));
            } else {
                ++res.pseudo_rows_left;
            }
        }
        for (std::size_t i = 0; i < m; ++i) res.max_violation = std::max(res.max_violation, -slack(i));
        return res;
    }

private:
    double slack(std::size_t i) const {
        double s = lp_.rhs[i];
        for (const auto& [k, v] : lp_.rows[i]) s -= v * x_[static_cast<Eigen::Index>(k)];
        return s;
    }

    void refactor() {
        const std::size_t m = lp_.rows.size();
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        for (std::size_t k = 0; k < n_; ++k) {
            const auto rk = static_cast<Eigen::Index>(k);
            if (active_[k] >= m) {
                M(rk, static_cast<Eigen::Index>(active_[k] - m)) = 1.0;
            } else {
                for (const auto& [j, v] : lp_.rows[active_[k]]) M(rk, static_cast<Eigen::Index>(j)) += v;
            }
        }
        minv_ = M.partialPivLu().inverse();
        if (!minv_.allFinite()) throw SolverError("inequality LP: singular active set");
        // Re-solve the vertex so update drift does not leave the feasible set.
        Eigen::VectorXd b(static_cast<Eigen::Index>(n_));
        for (std::size_t k = 0; k < n_; ++k) {
            b[static_cast<Eigen::Index>(k)] = active_[k] >= m ? x_[static_cast<Eigen::Index>(active_[k] - m)] : lp_.rhs[active_[k]];
        }
        x_ = minv_ * b;
    }

    const InequalityLp& lp_;
    LpOptions opt_;
    std::size_t n_;
    Eigen::VectorXd x_, c_;
    Eigen::MatrixXd minv_;
    std::vector<std::size_t> active_;
    std::vector<char> is_active_;
    double hscale_ = 1.0;
};

}  // namespace detail

/// Requires a feasible start point x0.
inline InequalityLpResult maximize_inequality_form(const InequalityLp& lp, std::vector<double> x0, const LpOptions& opt = {}) {
    detail::ActiveSetSimplex s(lp, opt);
    return s.run(std::move(x0));
}

}  // namespace hjbvd
