#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "suphedge/linalg.hpp"
#include "suphedge/utility.hpp"

namespace suphedge {

/// Concave non-decreasing function of wealth with a lower domain bound;
/// -inf below it. Either a shifted utility w -> u(w - shift) or a
/// piecewise-linear interpolant on a wealth grid, flat beyond its last point.
class ConcaveFunction {
public:
    static ConcaveFunction shifted_utility(const Utility& u, double shift);
    /// Throws ValidationError unless xs increases and the data is concave and
    /// non-decreasing (second differences within 1e-8).
    static ConcaveFunction interpolant(Vec xs, Vec vs);

    double lower() const { return lower_; }
    double value(double w) const;
    /// Right derivative, the supergradient used for cuts.
    double slope(double w) const;

    const Vec& xs() const { return xs_; }
    const Vec& vs() const { return vs_; }

private:
    ConcaveFunction() = default;
    const Utility* utility() const { return has_utility_ ? &utility_ : nullptr; }

    bool has_utility_ = false;
    Utility utility_ = Utility::linear(0.0);
    double lower_ = 0.0;
    Vec xs_, vs_;
};

/// Upper concave, non-decreasing majorant of grid data: the smallest concave
/// function above the points, then made monotone by a running maximum.
Vec concave_monotone_fit(std::span<const double> xs, std::span<const double> vs);

/// Orthonormal basis of the span L of the one-step increments; hedges are
/// optimised in these coordinates, which keeps the feasible set bounded.
struct HedgeSpan {
    std::vector<Vec> basis;
    std::size_t dimension = 0;

    std::size_t rank() const { return basis.size(); }
    Vec embed(std::span<const double> coords) const;
    Vec project(std::span<const double> H) const;
};

HedgeSpan compactify(const std::vector<Vec>& increments, std::size_t dimension);

/// One node of the robust consumption problem:
///   maximise  min_k sum_i P^k_i g_i(x - c + H.(y_i - s)) + u(c)
///   over H in R^d and c >= 0 (c = 0 when `consumption` is null),
///   subject to x - c + H.(y_i - s) >= g_i.lower() for every successor.
struct OneStepProblem {
    Vec price;
    std::vector<Vec> support;
    std::vector<ConcaveFunction> continuation;
    std::vector<Vec> priors;
    const Utility* consumption = nullptr;
};

struct MaxminOptions {
    double tol = 1e-9;
    int max_iterations = 600;
    /// random initial cut points per successor
    int multistarts = 5;
    std::uint64_t seed = 1;
    /// also solve the inner-measure-fixed problem at the worst mixture
    bool compute_gap = true;
};

struct MaxminResult {
    bool feasible = false;
    bool converged = false;
    double value = 0.0;  // -inf when infeasible
    double upper_bound = 0.0;
    Vec hedge;
    double consumption = 0.0;
    Vec successor_wealth;
    /// optimal weights over the prior list (attains the inner infimum)
    Vec worst_mixture;
    std::size_t worst_index = 0;
    /// sup over (H,c) at the worst mixture minus the max-min value
    double gap = 0.0;
    int iterations = 0;
};

MaxminResult one_step_maxmin(const OneStepProblem& problem, double wealth,
                             const MaxminOptions& options = {});

/// Objective value of a given (H, c) for the problem; -inf when infeasible.
double maxmin_objective(const OneStepProblem& problem, double wealth, std::span<const double> H,
                        double c);

}  // namespace suphedge
