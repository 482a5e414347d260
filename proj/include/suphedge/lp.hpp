#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "suphedge/linalg.hpp"

namespace suphedge {

/// Central tolerances for the simplex kernel.
struct LpTolerances {
    double feasibility = 1e-9;
    double optimality = 1e-9;
    double pivot_floor = 1e-13;
    double ratio_pivot = 1e-11;
    std::size_t max_iterations = 200000;
};

/// maximize c'x  s.t.  A x = b,  x_j >= 0 where nonneg[j], otherwise free.
struct LinearProgram {
    Vec objective;
    Matrix A;
    Vec rhs;
    std::vector<bool> nonneg;

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rhs.size(); }
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_failure };

std::string_view to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::numerical_failure;
    double value = 0.0;
    Vec primal;
    /// one multiplier per equality row; dual program is min b'y s.t. A'y >= c
    /// (with equality on free columns)
    Vec dual;
    std::size_t iterations = 0;

    bool optimal() const { return status == LpStatus::optimal; }
};

/// Two-phase dense tableau simplex with Bland's rule. Optimal results are
/// certified (primal/dual residuals, complementarity, duality gap) before being
/// returned; a failed certificate is reported as numerical_failure.
LpSolution solve(const LinearProgram& lp, const LpTolerances& tol = {});

/// Row-wise builder for programs with inequality rows. Slack columns are
/// appended after the structural variables; the dual of an inequality row
/// is the multiplier of its slack-augmented equality.
class LpBuilder {
public:
    enum class Sense { le, ge, eq };

    std::size_t add_var(double cost, bool nonneg);
    std::size_t add_row(std::vector<std::pair<std::size_t, double>> coeffs, Sense sense,
                        double rhs);

    std::size_t num_vars() const { return costs_.size(); }
    std::size_t num_rows() const { return rows_.size(); }

    LinearProgram build() const;

private:
    struct Row {
        std::vector<std::pair<std::size_t, double>> coeffs;
        Sense sense;
        double rhs;
    };
    Vec costs_;
    std::vector<bool> nonneg_;
    std::vector<Row> rows_;
};

}  // namespace suphedge
