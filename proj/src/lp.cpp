#include "suphedge/lp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace suphedge {

std::string_view to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

namespace {

// Gaussian elimination with partial pivoting; M is consumed.
std::optional<Vec> solve_square(Matrix M, Vec rhs, double floor) {
    const std::size_t n = M.rows;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(M(i, k)) > std::abs(M(p, k))) p = i;
        if (std::abs(M(p, k)) < floor) return std::nullopt;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(M(k, j), M(p, j));
            std::swap(rhs[k], rhs[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = M(i, k) / M(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) M(i, j) -= f * M(k, j);
            rhs[i] -= f * rhs[k];
        }
    }
    Vec x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = rhs[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= M(k, j) * x[j];
        x[k] = s / M(k, k);
    }
    return x;
}

class Tableau {
public:
    Tableau(const LinearProgram& lp, const LpTolerances& tol) : lp_(lp), tol_(tol) {
        const std::size_t n = lp.num_vars();
        m_ = lp.num_rows();
        pos_.resize(n);
        neg_.assign(n, npos);
        for (std::size_t j = 0; j < n; ++j) {
            pos_[j] = n_struct_++;
            if (!lp.nonneg[j]) neg_[j] = n_struct_++;
        }
        width_ = n_struct_ + m_ + 1;
        T_.assign(m_ * width_, 0.0);
        sign_.assign(m_, 1.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (lp.rhs[i] < 0.0) sign_[i] = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double a = sign_[i] * lp.A(i, j);
                at(i, pos_[j]) = a;
                if (neg_[j] != npos) at(i, neg_[j]) = -a;
            }
            at(i, n_struct_ + i) = 1.0;
            at(i, width_ - 1) = sign_[i] * lp.rhs[i];
            basis_.push_back(n_struct_ + i);
            rows_.push_back(i);
        }
        // rows owning a unit sign-constrained column (typically a slack) start
        // with it in the basis instead of their artificial
        for (std::size_t j = 0; j < n; ++j) {
            if (!lp.nonneg[j]) continue;
            std::size_t owner = npos;
            bool unit = true;
            for (std::size_t i = 0; i < m_ && unit; ++i) {
                const double a = at(i, pos_[j]);
                if (a == 0.0) continue;
                if (a == 1.0 && owner == npos) owner = i;
                else unit = false;
            }
            if (unit && owner != npos && basis_[owner] >= n_struct_) basis_[owner] = pos_[j];
        }
        b_scale_ = 1.0 + norm_inf(lp.rhs);
        c_scale_ = std::max(1.0, norm_inf(lp.objective));
    }

    LpSolution run() {
        LpSolution sol;
        // phase 1: maximise -sum(artificials)
        Vec cost(n_struct_ + m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) cost[n_struct_ + i] = -1.0;
        auto st = iterate(cost, n_struct_ + m_, 1.0, true, sol.iterations);
        if (st == Step::failure) return fail(sol);
        double infeas = 0.0;
        for (std::size_t r = 0; r < basis_.size(); ++r)
            if (basis_[r] >= n_struct_) infeas += rhs(r);
        if (infeas > tol_.feasibility * b_scale_) {
            sol.status = LpStatus::infeasible;
            return sol;
        }
        drive_out_artificials();

        Vec cost2(n_struct_ + m_, 0.0);
        for (std::size_t j = 0; j < lp_.num_vars(); ++j) {
            cost2[pos_[j]] = lp_.objective[j];
            if (neg_[j] != npos) cost2[neg_[j]] = -lp_.objective[j];
        }
        st = iterate(cost2, n_struct_, c_scale_, false, sol.iterations);
        if (st == Step::failure) return fail(sol);
        if (st == Step::unbounded) {
            sol.status = LpStatus::unbounded;
            return sol;
        }
        return finish(sol, cost2);
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    enum class Step { optimal, unbounded, failure };

    double& at(std::size_t r, std::size_t j) { return T_[r * width_ + j]; }
    double rhs(std::size_t r) const { return T_[r * width_ + width_ - 1]; }

    void pivot(std::size_t p, std::size_t q, Vec& red) {
        const double piv = at(p, q);
        for (std::size_t j = 0; j < width_; ++j) at(p, j) /= piv;
        at(p, q) = 1.0;
        for (std::size_t r = 0; r < basis_.size(); ++r) {
            if (r == p) continue;
            const double f = at(r, q);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width_; ++j) at(r, j) -= f * at(p, j);
            at(r, q) = 0.0;
            if (std::abs(at(r, width_ - 1)) < 1e-15 * b_scale_) at(r, width_ - 1) = 0.0;
        }
        const double f = red[q];
        if (f != 0.0) {
            for (std::size_t j = 0; j + 1 < width_; ++j) red[j] -= f * at(p, j);
            red[q] = 0.0;
        }
        basis_[p] = q;
    }

    // Bland's rule: lowest-index improving column, ratio ties to lowest basic index.
    // A column with no usable pivot is a ray only when it is clearly improving
    // in a program that may be unbounded; otherwise it is numerical noise and
    // is passed over until the next pivot.
    Step iterate(const Vec& cost, std::size_t allowed, double scale, bool bounded, std::size_t& iters) {
        Vec red(width_ - 1, 0.0);
        for (std::size_t j = 0; j + 1 < width_; ++j) {
            double s = cost[j];
            for (std::size_t r = 0; r < basis_.size(); ++r) s -= cost[basis_[r]] * at(r, j);
            red[j] = s;
        }
        const double enter_tol = tol_.optimality * scale * 1e-3;
        std::vector<bool> passed(allowed, false);
        while (true) {
            if (++iters > tol_.max_iterations) return Step::failure;
            std::size_t q = npos;
            for (std::size_t j = 0; j < allowed; ++j) {
                if (red[j] > enter_tol && !passed[j] && !is_basic(j)) {
                    q = j;
                    break;
                }
            }
            if (q == npos) return Step::optimal;
            double amax = 0.0;
            for (std::size_t r = 0; r < basis_.size(); ++r) amax = std::max(amax, at(r, q));
            // tiny pivots relative to the column are skipped for stability
            const double floor = std::max(tol_.ratio_pivot, 1e-9 * amax);
            double best = 0.0;
            bool any = false;
            for (std::size_t r = 0; r < basis_.size(); ++r) {
                const double a = at(r, q);
                if (a <= floor) continue;
                const double ratio = std::max(rhs(r), 0.0) / a;
                if (!any || ratio < best) best = ratio;
                any = true;
            }
            std::size_t p = npos;
            if (any) {
                const double cut = best + 1e-12 * (1.0 + best);
                for (std::size_t r = 0; r < basis_.size(); ++r) {
                    const double a = at(r, q);
                    if (a <= floor) continue;
                    if (std::max(rhs(r), 0.0) / a <= cut && (p == npos || basis_[r] < basis_[p]))
                        p = r;
                }
            }
            if (p == npos) {
                if (!bounded && red[q] > tol_.optimality * scale) return Step::unbounded;
                passed[q] = true;
                continue;
            }
            if (std::abs(at(p, q)) < tol_.pivot_floor) return Step::failure;
            pivot(p, q, red);
            std::fill(passed.begin(), passed.end(), false);
        }
    }

    bool is_basic(std::size_t j) const {
        return std::find(basis_.begin(), basis_.end(), j) != basis_.end();
    }

    void drive_out_artificials() {
        Vec dummy(width_ - 1, 0.0);
        for (std::size_t r = 0; r < basis_.size();) {
            if (basis_[r] < n_struct_) {
                ++r;
                continue;
            }
            std::size_t q = npos;
            double best = 1e-9;
            for (std::size_t j = 0; j < n_struct_; ++j) {
                if (is_basic(j)) continue;
                if (std::abs(at(r, j)) > best) {
                    best = std::abs(at(r, j));
                    q = j;
                }
            }
            if (q != npos) {
                pivot(r, q, dummy);
                ++r;
            } else {
                // redundant row
                T_.erase(T_.begin() + static_cast<std::ptrdiff_t>(r * width_),
                         T_.begin() + static_cast<std::ptrdiff_t>((r + 1) * width_));
                basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
                rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(r));
            }
        }
    }

    LpSolution& fail(LpSolution& sol) {
        sol.status = LpStatus::numerical_failure;
        return sol;
    }

    // Recompute primal and dual from the final basis by direct solves.
    LpSolution& finish(LpSolution& sol, const Vec& cost) {
        const std::size_t k = basis_.size();
        const std::size_t n = lp_.num_vars();
        std::vector<std::size_t> var_of(n_struct_, npos);
        std::vector<double> var_sign(n_struct_, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            var_of[pos_[j]] = j;
            var_sign[pos_[j]] = 1.0;
            if (neg_[j] != npos) {
                var_of[neg_[j]] = j;
                var_sign[neg_[j]] = -1.0;
            }
        }
        auto column = [&](std::size_t row, std::size_t col) -> double {
            if (col >= n_struct_) return (col - n_struct_ == row) ? 1.0 : 0.0;
            if (var_of[col] == npos) return 0.0;
            return var_sign[col] * sign_[row] * lp_.A(row, var_of[col]);
        };
        Matrix B(k, k), Bt(k, k);
        Vec b(k), cb(k);
        for (std::size_t r = 0; r < k; ++r) {
            b[r] = sign_[rows_[r]] * lp_.rhs[rows_[r]];
            cb[r] = cost[basis_[r]];
            for (std::size_t c = 0; c < k; ++c) {
                B(r, c) = column(rows_[r], basis_[c]);
                Bt(c, r) = B(r, c);
            }
        }
        Vec xb, y;
        if (k > 0) {
            auto xs = solve_square(B, b, 1e-14);
            auto ys = solve_square(Bt, cb, 1e-14);
            if (!xs || !ys) return fail(sol);
            xb = std::move(*xs);
            y = std::move(*ys);
        }
        Vec xi(n_struct_ + m_, 0.0);
        for (std::size_t r = 0; r < k; ++r) xi[basis_[r]] = xb[r];
        sol.primal.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            sol.primal[j] = xi[pos_[j]] - (neg_[j] != npos ? xi[neg_[j]] : 0.0);
        }
        sol.dual.assign(m_, 0.0);
        for (std::size_t r = 0; r < k; ++r) sol.dual[rows_[r]] = sign_[rows_[r]] * y[r];
        sol.value = dot(lp_.objective, sol.primal);

        if (!certify(sol)) return fail(sol);
        sol.status = LpStatus::optimal;
        return sol;
    }

    bool certify(const LpSolution& sol) const {
        const std::size_t n = lp_.num_vars();
        const double ptol = tol_.feasibility * b_scale_;
        const double dtol = tol_.feasibility * c_scale_;
        for (std::size_t i = 0; i < m_; ++i) {
            double s = -lp_.rhs[i];
            for (std::size_t j = 0; j < n; ++j) s += lp_.A(i, j) * sol.primal[j];
            if (std::abs(s) > ptol) return false;
        }
        const double xscale = 1.0 + norm_inf(sol.primal);
        for (std::size_t j = 0; j < n; ++j) {
            if (lp_.nonneg[j] && sol.primal[j] < -ptol) return false;
            double aty = -lp_.objective[j];
            for (std::size_t i = 0; i < m_; ++i) aty += lp_.A(i, j) * sol.dual[i];
            if (lp_.nonneg[j]) {
                if (aty < -dtol) return false;
                if (std::abs(aty * sol.primal[j]) > dtol * xscale) return false;
            } else if (std::abs(aty) > dtol) {
                return false;
            }
        }
        const double dual_value = dot(lp_.rhs, sol.dual);
        return std::abs(dual_value - sol.value) <= tol_.feasibility * (1.0 + std::abs(sol.value));
    }

    const LinearProgram& lp_;
    const LpTolerances& tol_;
    std::size_t m_ = 0;
    std::size_t n_struct_ = 0;
    std::size_t width_ = 0;
    std::vector<std::size_t> pos_, neg_;
    std::vector<double> T_;
    Vec sign_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> rows_;
    double b_scale_ = 1.0;
    double c_scale_ = 1.0;
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const LpTolerances& tol) {
    const std::size_t n = lp.num_vars();
    if (lp.nonneg.size() != n || lp.A.cols != n || lp.A.rows != lp.num_rows())
        throw std::invalid_argument("LinearProgram: inconsistent dimensions");
    Tableau t(lp, tol);
    return t.run();
}

std::size_t LpBuilder::add_var(double cost, bool nonneg) {
    costs_.push_back(cost);
    nonneg_.push_back(nonneg);
    return costs_.size() - 1;
}

std::size_t LpBuilder::add_row(std::vector<std::pair<std::size_t, double>> coeffs, Sense sense,
                               double rhs) {
    rows_.push_back({std::move(coeffs), sense, rhs});
    return rows_.size() - 1;
}

LinearProgram LpBuilder::build() const {
    std::size_t slacks = 0;
    for (const auto& r : rows_)
        if (r.sense != Sense::eq) ++slacks;
    const std::size_t n = costs_.size() + slacks;
    LinearProgram lp;
    lp.objective = costs_;
    lp.objective.resize(n, 0.0);
    lp.nonneg = nonneg_;
    lp.nonneg.resize(n, true);
    lp.A = Matrix(rows_.size(), n);
    lp.rhs.resize(rows_.size());
    std::size_t s = costs_.size();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (auto [j, a] : rows_[i].coeffs) lp.A(i, j) += a;
        if (rows_[i].sense == Sense::le) lp.A(i, s++) = 1.0;
        if (rows_[i].sense == Sense::ge) lp.A(i, s++) = -1.0;
        lp.rhs[i] = rows_[i].rhs;
    }
    return lp;
}

}  // namespace suphedge
