#pragma once

#include <span>
#include <utility>
#include <vector>

#include "suphedge/linalg.hpp"

namespace suphedge {

/// One-step superhedging data at a node: value of the concave envelope of
/// the continuation values at the current price, a hedge in its
/// superdifferential and an optimal one-step martingale measure.
struct EnvelopeResult {
    double value = 0.0;
    double primal_value = 0.0;  // min x s.t. x + H.(y_i - s) >= f_i
    double dual_value = 0.0;    // max sum q_i f_i over martingale weights
    Vec hedge;                  // representative in span{y_i - s}
    Vec weights;                // optimal q, barycentre s
};

/// Solves the primal and the dual one-step programs and checks that their
/// values agree to 1e-9 (1 + |value|). Throws ArbitrageError when 0 is not in
/// the relative interior of conv{y_i - s}, NumericalError on LP breakdown.
EnvelopeResult envelope_at(std::span<const Vec> points, std::span<const double> values,
                           std::span<const double> s);

/// Binomial step alpha * pi_up + (1 - alpha) * pi_down, alpha = (1-d)/(u-d).
/// Throws std::domain_error unless d < 1 < u.
double crr_step(double pi_up, double pi_down, double u, double d);

/// Set of all minimal one-step hedges, restricted to the span L of the
/// increments (hedges are canonical only modulo the orthogonal complement).
struct SuperdifferentialFace {
    double value = 0.0;
    /// coordinate-wise [min, max] of optimal hedges in L
    std::vector<std::pair<double, double>> ranges;
    /// support points whose constraint is tight for every optimal hedge
    std::vector<std::size_t> always_active;
    /// orthonormal basis of L
    std::vector<Vec> span_basis;

    /// membership test: H (projected to L) is optimal within tol
    bool contains(std::span<const double> H, std::span<const Vec> points,
                  std::span<const double> values, std::span<const double> s,
                  double tol = 1e-9) const;
};

SuperdifferentialFace superdifferential_box(std::span<const Vec> points,
                                            std::span<const double> values,
                                            std::span<const double> s);

}  // namespace suphedge
