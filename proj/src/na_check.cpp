#include "suphedge/na_check.hpp"

#include <algorithm>
#include <cmath>

#include "suphedge/errors.hpp"
#include "suphedge/lp.hpp"
#include "suphedge/parallel.hpp"

namespace suphedge {

namespace {

// Increments scaled to unit max-norm; the verdict is invariant under this.
std::vector<Vec> scaled_increments(std::span<const Vec> support, std::span<const double> s,
                                   double& scale) {
    std::vector<Vec> z;
    scale = 0.0;
    for (const Vec& y : support) {
        z.push_back(sub(y, s));
        scale = std::max(scale, norm_inf(z.back()));
    }
    if (scale > 0.0)
        for (Vec& v : z)
            for (double& x : v) x /= scale;
    return z;
}

}  // namespace

bool certificate_valid(std::span<const Vec> support, std::span<const double> current,
                       std::span<const double> H) {
    double scale = 0.0;
    const auto z = scaled_increments(support, current, scale);
    if (scale == 0.0) return false;
    double best = 0.0;
    for (const Vec& v : z) {
        const double g = dot(H, v);
        if (g < -1e-12) return false;
        best = std::max(best, g);
    }
    return best > 1e-9;
}

NodeCheck check_node(std::span<const Vec> support, std::span<const double> current) {
    if (support.empty()) throw ValidationError("check_node: empty support");
    const std::size_t n = support.size();
    const std::size_t d = current.size();
    double scale = 0.0;
    const auto z = scaled_increments(support, current, scale);
    NodeCheck out;
    if (scale == 0.0) {
        out.margin = 1.0 / static_cast<double>(n);
        return out;
    }

    // max eps  s.t.  sum_i (eps + mu_i) z_i = 0,  n eps + sum_i mu_i = 1,  mu >= 0
    {
        LinearProgram lp;
        lp.objective.assign(n + 1, 0.0);
        lp.objective[0] = 1.0;
        lp.nonneg.assign(n + 1, true);
        lp.nonneg[0] = false;
        lp.A = Matrix(d + 1, n + 1);
        lp.rhs.assign(d + 1, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                lp.A(k, 0) += z[i][k];
                lp.A(k, i + 1) = z[i][k];
            }
        }
        lp.A(d, 0) = static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) lp.A(d, i + 1) = 1.0;
        lp.rhs[d] = 1.0;
        const LpSolution sol = solve(lp);
        if (sol.status == LpStatus::numerical_failure)
            throw NumericalError("check_node: interior LP failed");
        if (sol.optimal()) {
            out.margin = sol.value;
            out.ok = sol.value > kInteriorThreshold;
        } else {
            // 0 is not even in the affine hull
            out.margin = -1.0;
            out.ok = false;
        }
    }
    if (out.ok) return out;

    // certificate: max sum_i H.z_i  s.t.  H.z_i >= 0,  -1 <= H <= 1
    LpBuilder b;
    Vec total(d, 0.0);
    for (const Vec& v : z)
        for (std::size_t k = 0; k < d; ++k) total[k] += v[k];
    for (std::size_t k = 0; k < d; ++k) b.add_var(total[k], false);
    for (const Vec& v : z) {
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t k = 0; k < d; ++k) row.emplace_back(k, v[k]);
        b.add_row(std::move(row), LpBuilder::Sense::ge, 0.0);
    }
    for (std::size_t k = 0; k < d; ++k) {
        b.add_row({{k, 1.0}}, LpBuilder::Sense::le, 1.0);
        b.add_row({{k, 1.0}}, LpBuilder::Sense::ge, -1.0);
    }
    const LpSolution sol = solve(b.build());
    if (!sol.optimal()) throw NumericalError("check_node: certificate LP failed");
    Vec H(sol.primal.begin(), sol.primal.begin() + static_cast<std::ptrdiff_t>(d));
    out.certificate = H;
    out.borderline = !certificate_valid(support, current, H);
    return out;
}

NaReport check_lattice(const ScenarioLattice& lattice) {
    const std::size_t n = lattice.size();
    std::vector<NodeCheck> checks(n);
    parallel_for(n, [&](NodeIndex i) {
        if (lattice.is_terminal(i)) return;
        const auto support = lattice.successor_prices(i);
        checks[i] = check_node(support, lattice.node(i).price);
    });
    NaReport report;
    for (NodeIndex i = 0; i < n; ++i) {
        if (checks[i].ok) continue;
        report.global_ok = false;
        report.failures.push_back(
            {i, lattice.node(i).id, checks[i].certificate.value_or(Vec{}), checks[i].borderline});
    }
    return report;
}

}  // namespace suphedge
