#include "suphedge/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "suphedge/errors.hpp"
#include "suphedge/lp.hpp"
#include "suphedge/na_check.hpp"

namespace suphedge {

namespace {

void check_inputs(std::span<const Vec> points, std::span<const double> values,
                  std::span<const double> s) {
    if (points.empty() || points.size() != values.size())
        throw ValidationError("envelope: need one value per support point");
    for (double f : values)
        if (!std::isfinite(f)) throw ValidationError("envelope: non-finite continuation value");
    for (const Vec& y : points)
        if (y.size() != s.size()) throw ValidationError("envelope: dimension mismatch");
    if (!check_node(points, s).ok)
        throw ArbitrageError(
            "one-step arbitrage: envelope value is −∞/unbounded below is impossible, price undefined",
            {});
}

Vec project(std::span<const double> H, const std::vector<Vec>& basis, std::size_t d) {
    Vec out(d, 0.0);
    for (const Vec& b : basis) {
        const double c = dot(H, b);
        for (std::size_t k = 0; k < d; ++k) out[k] += c * b[k];
    }
    return out;
}

std::vector<Vec> increments(std::span<const Vec> points, std::span<const double> s) {
    std::vector<Vec> z;
    for (const Vec& y : points) z.push_back(sub(y, s));
    return z;
}

}  // namespace

EnvelopeResult envelope_at(std::span<const Vec> points, std::span<const double> values,
                           std::span<const double> s) {
    check_inputs(points, values, s);
    const std::size_t n = points.size();
    const std::size_t d = s.size();
    const auto z = increments(points, s);

    // both programs see values relative to their maximum, so adding a
    // constant to the data leaves the pivot sequence and the hedge unchanged
    double shift = values[0];
    for (double f : values) shift = std::max(shift, f);

    // primal: max -x  s.t.  x + H.z_i >= f_i
    LpBuilder pb;
    pb.add_var(-1.0, false);
    for (std::size_t k = 0; k < d; ++k) pb.add_var(0.0, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<std::size_t, double>> row{{0, 1.0}};
        for (std::size_t k = 0; k < d; ++k)
            if (z[i][k] != 0.0) row.emplace_back(k + 1, z[i][k]);
        pb.add_row(std::move(row), LpBuilder::Sense::ge, values[i] - shift);
    }
    const LpSolution primal = solve(pb.build());
    if (!primal.optimal())
        throw NumericalError(std::string("envelope primal LP: ") + std::string(to_string(primal.status)));

    // dual: max sum q_i f_i  s.t.  sum q_i z_i = 0, sum q_i = 1, q >= 0
    LinearProgram dl;
    for (double f : values) dl.objective.push_back(f - shift);
    dl.nonneg.assign(n, true);
    dl.A = Matrix(d + 1, n);
    dl.rhs.assign(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) dl.A(k, i) = z[i][k];
        dl.A(d, i) = 1.0;
    }
    dl.rhs[d] = 1.0;
    const LpSolution dual = solve(dl);
    if (!dual.optimal())
        throw NumericalError(std::string("envelope dual LP: ") + std::string(to_string(dual.status)));

    EnvelopeResult out;
    out.primal_value = primal.primal[0] + shift;
    out.dual_value = dual.value + shift;
    if (std::abs(out.primal_value - out.dual_value) > 1e-9 * (1.0 + std::abs(out.dual_value)))
        throw NumericalError("envelope: primal and dual values disagree");
    out.value = out.primal_value;
    const Vec H(primal.primal.begin() + 1, primal.primal.begin() + 1 + static_cast<std::ptrdiff_t>(d));
    out.hedge = project(H, orthonormal_basis(z, d), d);
    out.weights = dual.primal;
    return out;
}

double crr_step(double pi_up, double pi_down, double u, double d) {
    if (!(d < 1.0 && 1.0 < u)) throw std::domain_error("crr_step requires d < 1 < u");
    const double alpha = (1.0 - d) / (u - d);
    return alpha * pi_up + (1.0 - alpha) * pi_down;
}

bool SuperdifferentialFace::contains(std::span<const double> H, std::span<const Vec> points,
                                     std::span<const double> values, std::span<const double> s,
                                     double tol) const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec z = sub(points[i], s);
        if (value + dot(H, z) < values[i] - tol) return false;
    }
    return true;
}

SuperdifferentialFace superdifferential_box(std::span<const Vec> points,
                                            std::span<const double> values,
                                            std::span<const double> s) {
    const EnvelopeResult env = envelope_at(points, values, s);
    const std::size_t n = points.size();
    const std::size_t d = s.size();
    const auto z = increments(points, s);

    SuperdifferentialFace face;
    face.value = env.value;
    face.span_basis = orthonormal_basis(z, d);
    const std::size_t r = face.span_basis.size();
    const double level = env.value + 1e-11 * (1.0 + std::abs(env.value));

    // H = sum_b theta_b basis_b; rows: level + theta.(B' z_i) >= f_i
    std::vector<Vec> g(n, Vec(r, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < r; ++b) g[i][b] = dot(face.span_basis[b], z[i]);

    auto optimise = [&](const Vec& cost) {
        LpBuilder lb;
        for (std::size_t b = 0; b < r; ++b) lb.add_var(cost[b], false);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::pair<std::size_t, double>> row;
            for (std::size_t b = 0; b < r; ++b) row.emplace_back(b, g[i][b]);
            lb.add_row(std::move(row), LpBuilder::Sense::ge, values[i] - level);
        }
        const LpSolution sol = solve(lb.build());
        if (!sol.optimal()) throw NumericalError("superdifferential LP failed");
        return sol.value;
    };

    for (std::size_t k = 0; k < d; ++k) {
        Vec cost(r);
        for (std::size_t b = 0; b < r; ++b) cost[b] = face.span_basis[b][k];
        const double hi = r ? optimise(cost) : 0.0;
        for (double& c : cost) c = -c;
        const double lo = r ? -optimise(cost) : 0.0;
        face.ranges.emplace_back(lo, hi);
    }
    for (std::size_t i = 0; i < n; ++i) {
        // largest slack of constraint i over the optimal face
        const double slack = (r ? optimise(g[i]) : 0.0) + level - values[i];
        if (slack <= 1e-9 * (1.0 + std::abs(env.value))) face.always_active.push_back(i);
    }
    return face;
}

}  // namespace suphedge
