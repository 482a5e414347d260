#pragma once

// Independent reference computations used only by the tests. None of these
// call into the LP kernel or the envelope code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "suphedge/model.hpp"

namespace oracle {

using suphedge::Vec;

/// Binomial recursion alpha * up + (1 - alpha) * down on the non-recombining
/// tree, payoff evaluated on the full price path.
inline double crr_price(int T, double u, double d, double s0,
                        const std::function<double(const std::vector<double>&)>& payoff) {
    const double alpha = (1.0 - d) / (u - d);
    std::function<double(std::vector<double>&)> rec = [&](std::vector<double>& path) -> double {
        if (static_cast<int>(path.size()) == T + 1) return payoff(path);
        const double s = path.back();
        path.push_back(s * u);
        const double up = rec(path);
        path.back() = s * d;
        const double down = rec(path);
        path.pop_back();
        return alpha * up + (1.0 - alpha) * down;
    };
    std::vector<double> path{s0};
    return rec(path);
}

/// Exact 1-d concave envelope at s: the best mixture over points on either
/// side of s (two-point martingale measures) or a point sitting at s.
inline double envelope_1d(const std::vector<double>& y, const std::vector<double>& f, double s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == s) best = std::max(best, f[i]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[i] < s && y[j] > s) {
                const double w = (s - y[i]) / (y[j] - y[i]);
                best = std::max(best, (1.0 - w) * f[i] + w * f[j]);
            }
        }
    }
    return best;
}

/// Dense Gaussian elimination for small square systems; nullopt if singular.
inline std::optional<Vec> gauss(std::vector<Vec> A, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[p][k])) p = i;
        if (std::abs(A[p][k]) < 1e-12) return std::nullopt;
        std::swap(A[k], A[p]);
        std::swap(b[k], b[p]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = A[i][k] / A[k][k];
            for (std::size_t j = k; j < n; ++j) A[i][j] -= m * A[k][j];
            b[i] -= m * b[k];
        }
    }
    Vec x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= A[k][j] * x[j];
        x[k] = s / A[k][k];
    }
    return x;
}

/// Vertices of {q >= 0, sum q_i (y_i - s) = 0, sum q = 1}: every basic
/// feasible solution is supported on an affinely independent subset.
inline std::vector<Vec> martingale_vertices(const std::vector<Vec>& y, const Vec& s) {
    const std::size_t n = y.size();
    const std::size_t d = s.size();
    std::vector<Vec> out;
    auto add_unique = [&](const Vec& q) {
        for (const auto& v : out) {
            double diff = 0.0;
            for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(v[i] - q[i]));
            if (diff < 1e-10) return;
        }
        out.push_back(q);
    };
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) idx.push_back(i);
        const std::size_t k = idx.size();
        if (k > d + 1) continue;
        // least-squares normal equations of the (d+1) x k system
        std::vector<Vec> M(d + 1, Vec(k, 0.0));
        Vec rhs(d + 1, 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t r = 0; r < d; ++r) M[r][c] = y[idx[c]][r] - s[r];
            M[d][c] = 1.0;
        }
        rhs[d] = 1.0;
        std::vector<Vec> N(k, Vec(k, 0.0));
        Vec nb(k, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b)
                for (std::size_t r = 0; r <= d; ++r) N[a][b] += M[r][a] * M[r][b];
            for (std::size_t r = 0; r <= d; ++r) nb[a] += M[r][a] * rhs[r];
        }
        auto sol = gauss(N, nb);
        if (!sol) continue;
        bool ok = true;
        for (double w : *sol) ok = ok && w > 1e-12;
        for (std::size_t r = 0; r <= d && ok; ++r) {
            double res = -rhs[r];
            for (std::size_t c = 0; c < k; ++c) res += M[r][c] * (*sol)[c];
            ok = std::abs(res) < 1e-9;
        }
        if (!ok) continue;
        Vec q(n, 0.0);
        for (std::size_t c = 0; c < k; ++c) q[idx[c]] = (*sol)[c];
        add_unique(q);
    }
    return out;
}

/// max over product martingale measures (one vertex per node) of E_Q[xi],
/// enumerated explicitly as full path measures. Returns nullopt if the
/// number of combinations exceeds `cap`.
inline std::optional<double> max_product_martingale(const suphedge::ScenarioLattice& L,
                                                    const std::vector<double>& terminal,
                                                    double cap = 2e5) {
    using suphedge::NodeIndex;
    std::vector<NodeIndex> inner;
    std::vector<std::vector<Vec>> verts(L.size());
    double combos = 1.0;
    for (NodeIndex i = 0; i < L.size(); ++i) {
        if (L.is_terminal(i)) continue;
        inner.push_back(i);
        verts[i] = martingale_vertices(L.successor_prices(i), L.node(i).price);
        if (verts[i].empty()) return std::nullopt;
        combos *= static_cast<double>(verts[i].size());
        if (combos > cap) return std::nullopt;
    }
    const auto paths = suphedge::enumerate_paths(L);
    std::vector<std::size_t> choice(L.size(), 0);
    double best = -std::numeric_limits<double>::infinity();
    while (true) {
        double e = 0.0;
        for (const auto& p : paths) {
            double prob = 1.0;
            for (std::size_t k = 0; k + 1 < p.size(); ++k) {
                const auto& succ = L.node(p[k]).successors;
                const std::size_t slot = static_cast<std::size_t>(
                    std::find(succ.begin(), succ.end(), p[k + 1]) - succ.begin());
                prob *= verts[p[k]][choice[p[k]]][slot];
            }
            e += prob * terminal[p.back()];
        }
        best = std::max(best, e);
        std::size_t pos = 0;
        while (pos < inner.size()) {
            const NodeIndex i = inner[pos];
            if (++choice[i] < verts[i].size()) break;
            choice[i] = 0;
            ++pos;
        }
        if (pos == inner.size()) break;
    }
    return best;
}

/// Random lattice with NA at every node: each node gets 1..max_succ support
/// points around its price, with opposite-signed directions added so that 0
/// lies in the relative interior.
inline suphedge::ScenarioLattice random_na_lattice(std::mt19937_64& rng, std::size_t d, int T,
                                                   int max_succ) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> nsucc(1, max_succ);
    std::vector<suphedge::NodeSpec> specs;
    Vec s0(d);
    for (auto& v : s0) v = 50.0 + 100.0 * U(rng);
    specs.push_back({"n0", 0, s0, {}});
    std::vector<std::size_t> frontier{0};
    int counter = 1;
    for (int t = 0; t < T; ++t) {
        std::vector<std::size_t> next;
        for (std::size_t k : frontier) {
            const Vec s = specs[k].price;
            int m = nsucc(rng);
            std::vector<Vec> pts;
            if (m == 1) {
                pts.push_back(s);
            } else {
                // pairs of opposite moves with random magnitudes, plus extra points
                const int pairs = m / 2;
                for (int p = 0; p < pairs; ++p) {
                    Vec dir(d);
                    for (auto& v : dir) v = U(rng) - 0.5;
                    const double a = 0.05 + 0.25 * U(rng), b = 0.05 + 0.25 * U(rng);
                    Vec up(d), dn(d);
                    for (std::size_t j = 0; j < d; ++j) {
                        up[j] = s[j] * (1.0 + a * dir[j]);
                        dn[j] = s[j] * (1.0 - b * dir[j]);
                    }
                    pts.push_back(up);
                    pts.push_back(dn);
                }
                if (m % 2) {
                    // stays on the first pair's line so the span does not grow
                    const double c = 2.0 * U(rng) - 1.0;
                    Vec extra(d);
                    for (std::size_t j = 0; j < d; ++j) extra[j] = s[j] + c * (pts[0][j] - s[j]);
                    pts.push_back(extra);
                }
            }
            for (const auto& p : pts) {
                const std::string id = "n" + std::to_string(counter++);
                specs[k].successors.push_back(id);
                specs.push_back({id, t + 1, p, {}});
                next.push_back(specs.size() - 1);
            }
        }
        frontier = std::move(next);
    }
    return suphedge::ScenarioLattice::from_specs(T, d, s0, std::move(specs)).lattice;
}


/// Golden-section maximisation of a concave function on [a, b].
template <typename F>
double golden_max(F&& f, double a, double b, int iterations = 80) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int k = 0; k < iterations; ++k) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        }
    }
    return std::max({f(a), f(b), fc, fd});
}

/// One-dimensional one-step robust consumption problem, solved by nested
/// golden sections over (c, H) with the feasible hedge interval computed in
/// closed form. `lowers` are the successor domain bounds, `g(i, w)` the
/// continuation values, `u` the consumption utility (null: c = 0).
struct ScalarNode {
    double s;
    std::vector<double> y;
    std::vector<double> lowers;
    std::function<double(std::size_t, double)> g;
    std::function<double(double)> u;  // empty: no consumption

    // hedge interval keeping x - c + H (y_i - s) >= lower_i; empty when lo > hi
    std::pair<double, double> hedge_range(double x, double c) const {
        double lo = -1e300, hi = 1e300;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double z = y[i] - s, need = lowers[i] - x + c;
            if (z > 0) lo = std::max(lo, need / z);
            else if (z < 0) hi = std::min(hi, need / z);
            else if (need > 1e-12) return {1.0, 0.0};
        }
        if (lo < -1e299) lo = hi = 0.0;  // only zero increments
        return {lo, hi};
    }

    double objective(double x, double c, double H, const std::vector<std::vector<double>>& priors) const {
        double worst = 1e300;
        for (const auto& P : priors) {
            double e = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (P[i] == 0.0) continue;
                const double w = std::max(x - c + H * (y[i] - s), lowers[i]);
                e += P[i] * g(i, w);
            }
            worst = std::min(worst, e);
        }
        return worst + (u ? u(c) : 0.0);
    }

    double solve(double x, const std::vector<std::vector<double>>& priors) const {
        auto best_h = [&](double c) {
            auto [lo, hi] = hedge_range(x, c);
            if (lo > hi + 1e-12) return -1e300 * (1.0 + c);
            hi = std::max(lo, hi);
            if (hi - lo < 1e-14) return objective(x, c, lo, priors);
            return golden_max([&](double H) { return objective(x, c, H, priors); }, lo, hi);
        };
        if (!u) return best_h(0.0);
        // largest c with a non-empty hedge interval, by bisection
        double a = 0.0, b = 1.0;
        while (true) {
            auto [lo, hi] = hedge_range(x, b);
            if (lo > hi) break;
            b *= 2.0;
        }
        for (int k = 0; k < 200; ++k) {
            const double m = 0.5 * (a + b);
            auto [lo, hi] = hedge_range(x, m);
            (lo <= hi ? a : b) = m;
        }
        return golden_max(best_h, 0.0, a);
    }
};

}  // namespace oracle
