#include "suphedge/maxmin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "suphedge/envelope.hpp"
#include "suphedge/errors.hpp"
#include "suphedge/lp.hpp"

namespace suphedge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double domain_slack(double lower) { return 1e-9 * (1.0 + std::abs(lower)); }

// accumulated cuts can leave a basis whose exact solve is infeasible by a few ulps
// of the data scale; the retry accepts that
LpTolerances loose_tolerances() {
    LpTolerances t;
    t.feasibility = 1e-7;
    t.optimality = 1e-7;
    return t;
}

}  // namespace

ConcaveFunction ConcaveFunction::shifted_utility(const Utility& u, double shift) {
    ConcaveFunction f;
    f.has_utility_ = true;
    f.utility_ = u;
    f.lower_ = shift;
    return f;
}

ConcaveFunction ConcaveFunction::interpolant(Vec xs, Vec vs) {
    if (xs.empty() || xs.size() != vs.size())
        throw ValidationError("continuation grid needs matching, non-empty wealth and value arrays");
    for (double v : vs)
        if (!std::isfinite(v)) throw ValidationError("continuation grid has a non-finite value");
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        if (!(xs[k + 1] > xs[k])) throw ValidationError("continuation grid must be increasing");
        const double s = (vs[k + 1] - vs[k]) / (xs[k + 1] - xs[k]);
        const double scale = 1e-8 * (1.0 + std::abs(s));
        if (s < -scale) throw ValidationError("continuation must be non-decreasing");
        if (s > prev + scale) throw ValidationError("continuation must be concave");
        prev = s;
    }
    ConcaveFunction f;
    f.lower_ = xs.front();
    f.xs_ = std::move(xs);
    f.vs_ = std::move(vs);
    return f;
}

double ConcaveFunction::value(double w) const {
    if (w < lower_) return kNegInf;
    if (const Utility* u = utility()) return u->value(w - lower_);
    if (w >= xs_.back()) return vs_.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), w) - xs_.begin()) - 1;
    const double t = (w - xs_[k]) / (xs_[k + 1] - xs_[k]);
    return vs_[k] + t * (vs_[k + 1] - vs_[k]);
}

double ConcaveFunction::slope(double w) const {
    w = std::max(w, lower_);
    if (const Utility* u = utility()) return u->slope(w - lower_);
    if (w >= xs_.back()) return 0.0;
    const auto k = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), w) - xs_.begin()) - 1;
    return (vs_[k + 1] - vs_[k]) / (xs_[k + 1] - xs_[k]);
}

Vec concave_monotone_fit(std::span<const double> xs, std::span<const double> vs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull.back();
            // drop b when it lies on or below the chord a -> i
            const double cross = (xs[b] - xs[a]) * (vs[i] - vs[a]) - (vs[b] - vs[a]) * (xs[i] - xs[a]);
            if (cross >= 0.0) hull.pop_back();
            else break;
        }
        hull.push_back(i);
    }
    Vec out(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && xs[hull[seg + 1]] < xs[i]) ++seg;
        if (seg + 1 == hull.size()) {
            out[i] = vs[hull[seg]];
        } else {
            const std::size_t a = hull[seg], b = hull[seg + 1];
            out[i] = vs[a] + (vs[b] - vs[a]) * (xs[i] - xs[a]) / (xs[b] - xs[a]);
        }
        if (i > 0) out[i] = std::max(out[i], out[i - 1]);
    }
    return out;
}

Vec HedgeSpan::embed(std::span<const double> coords) const {
    Vec H(dimension, 0.0);
    for (std::size_t b = 0; b < basis.size(); ++b)
        for (std::size_t k = 0; k < dimension; ++k) H[k] += coords[b] * basis[b][k];
    return H;
}

Vec HedgeSpan::project(std::span<const double> H) const {
    Vec c(basis.size());
    for (std::size_t b = 0; b < basis.size(); ++b) c[b] = dot(H, basis[b]);
    return embed(c);
}

HedgeSpan compactify(const std::vector<Vec>& increments, std::size_t dimension) {
    if (increments.empty()) throw ValidationError("compactify needs at least one increment");
    return {orthonormal_basis(increments, dimension), dimension};
}

double maxmin_objective(const OneStepProblem& p, double x, std::span<const double> H, double c) {
    if (c < 0.0 || (!p.consumption && c != 0.0)) return kNegInf;
    const std::size_t n = p.support.size();
    Vec g(n);
    for (std::size_t i = 0; i < n; ++i) {
        double w = x - c + dot(H, sub(p.support[i], p.price));
        const double lo = p.continuation[i].lower();
        if (w < lo) {
            if (w < lo - domain_slack(lo)) return kNegInf;
            w = lo;
        }
        g[i] = p.continuation[i].value(w);
    }
    double worst = std::numeric_limits<double>::infinity();
    for (const Vec& P : p.priors) {
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (P[i] != 0.0) e += P[i] * g[i];
        worst = std::min(worst, e);
    }
    return worst + (p.consumption ? p.consumption->value(c) : 0.0);
}

namespace {

struct Cut {
    double slope;
    double intercept;  // value - slope * point
    double point;
};

// true when a cut at `point` is new; the master can violate an existing cut
// by its own rounding, and repeating that cut would not tighten anything
bool fresh(const std::vector<Cut>& cuts, double point) {
    for (const Cut& k : cuts)
        if (std::abs(k.point - point) <= 1e-12 * (1.0 + std::abs(point))) return false;
    return true;
}

/// Kelley cutting planes on the epigraph form of the node problem.
class KelleySolver {
public:
    KelleySolver(const OneStepProblem& p, double x, const MaxminOptions& opt)
        : p_(p), x_(x), opt_(opt), n_(p.support.size()) {
        std::vector<Vec> z;
        for (const Vec& y : p.support) z.push_back(sub(y, p.price));
        span_ = compactify(z, p.price.size());
        r_ = span_.rank();
        G_.assign(n_, Vec(r_, 0.0));
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t b = 0; b < r_; ++b) G_[i][b] = dot(span_.basis[b], z[i]);
        for (std::size_t i = 0; i < n_; ++i) {
            bool charged = false;
            for (const Vec& P : p.priors) charged = charged || P[i] > 0.0;
            if (charged) charged_.push_back(i);
        }
        cuts_.resize(charged_.size());
    }

    MaxminResult run() {
        seed_cuts();
        MaxminResult res;
        res.feasible = true;
        double best = kNegInf;
        Vec best_theta(r_, 0.0);
        double best_c = 0.0;
        double ub = std::numeric_limits<double>::infinity();
        LpSolution last;
        int it = 0;
        for (; it < opt_.max_iterations; ++it) {
            const LinearProgram master = build();
            LpSolution sol = solve(master);
            if (sol.status == LpStatus::numerical_failure) sol = solve(master, loose_tolerances());
            if (!sol.optimal()) {
                if (sol.status == LpStatus::infeasible) {
                    res.feasible = false;
                    res.value = kNegInf;
                    return res;
                }
                // later masters only refine the bound; keep the best point so far
                if (it > 0 && sol.status == LpStatus::numerical_failure) {
                    res.converged = ub - best <= 1e-7 * (1.0 + std::abs(ub));
                    break;
                }
                throw NumericalError(std::string("maxmin master LP: ") + std::string(to_string(sol.status)));
            }
            last = sol;
            ub = std::min(ub, sol.value);
            const Vec theta(sol.primal.begin(), sol.primal.begin() + static_cast<std::ptrdiff_t>(r_));
            const double c = has_c() ? std::max(0.0, sol.primal[c_col()]) : 0.0;
            const double phi = maxmin_objective(p_, x_, span_.embed(theta), c);
            if (phi > best) {
                best = phi;
                best_theta = theta;
                best_c = c;
            }
            if (ub - best <= opt_.tol * (1.0 + std::abs(ub))) {
                res.converged = true;
                break;
            }
            if (!add_cuts(sol, theta, c)) {
                // nothing left to separate: the model is exact at this point
                res.converged = ub - best <= 1e-7 * (1.0 + std::abs(ub));
                break;
            }
        }
        res.iterations = it + 1;
        res.value = best;
        res.upper_bound = ub;
        res.consumption = best_c;

        pick_on_face(best_theta, best_c);
        res.hedge = span_.embed(best_theta);
        // rounding below a successor's domain is lifted onto it
        for (std::size_t i = 0; i < n_; ++i) {
            const double lo = p_.continuation[i].lower();
            const double w = wealth(best_theta, best_c, i);
            res.successor_wealth.push_back(w < lo && w >= lo - domain_slack(lo) ? lo : w);
        }

        const std::size_t K = p_.priors.size();
        res.worst_mixture.assign(K, 0.0);
        double mass = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            res.worst_mixture[k] = std::max(0.0, last.dual[k]);
            mass += res.worst_mixture[k];
        }
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            double e = 0.0;
            for (std::size_t i = 0; i < n_; ++i)
                if (p_.priors[k][i] != 0.0)
                    e += p_.priors[k][i] * p_.continuation[i].value(std::max(res.successor_wealth[i], p_.continuation[i].lower()));
            if (e < worst) {
                worst = e;
                res.worst_index = k;
            }
        }
        if (mass > 0.0) {
            for (double& l : res.worst_mixture) l /= mass;
        } else {
            res.worst_mixture.assign(K, 0.0);
            res.worst_mixture[res.worst_index] = 1.0;
        }
        return res;
    }

private:
    bool has_c() const { return p_.consumption != nullptr; }
    std::size_t c_col() const { return r_; }
    std::size_t z_col(std::size_t j) const { return r_ + (has_c() ? 1 : 0) + j; }
    std::size_t tau_col() const { return z_col(charged_.size()); }
    std::size_t v_col() const { return tau_col() + 1; }

    double wealth(const Vec& theta, double c, std::size_t i) const {
        double w = x_ - c;
        for (std::size_t b = 0; b < r_; ++b) w += theta[b] * G_[i][b];
        return w;
    }

    static Cut cut_at(const ConcaveFunction& f, double w) {
        const double s = f.slope(w);
        return {s, f.value(w) - s * w, w};
    }

    static Cut utility_cut(const Utility& u, double c) {
        const double s = u.slope(c);
        return {s, u.value(c) - s * c, c};
    }

    void seed_cuts() {
        std::mt19937_64 rng(opt_.seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (std::size_t j = 0; j < charged_.size(); ++j) {
            const ConcaveFunction& f = p_.continuation[charged_[j]];
            const double lo = f.lower();
            const double spread = 1.0 + 2.0 * std::abs(x_ - lo);
            cuts_[j].push_back(cut_at(f, lo));
            cuts_[j].push_back(cut_at(f, std::max(lo, x_)));
            for (int m = 0; m < opt_.multistarts; ++m) cuts_[j].push_back(cut_at(f, lo + spread * U(rng)));
        }
        if (has_c()) {
            const double spread = 1.0 + std::abs(x_);
            ucuts_.push_back(utility_cut(*p_.consumption, 0.0));
            for (int m = 0; m < opt_.multistarts; ++m)
                ucuts_.push_back(utility_cut(*p_.consumption, spread * U(rng)));
        }
    }

    LinearProgram build() const {
        LpBuilder b;
        for (std::size_t k = 0; k < r_; ++k) b.add_var(0.0, false);
        if (has_c()) b.add_var(0.0, true);
        for (std::size_t j = 0; j < charged_.size(); ++j) b.add_var(0.0, false);
        b.add_var(1.0, false);  // tau
        if (has_c()) b.add_var(1.0, false);

        using S = LpBuilder::Sense;
        // tau <= E_{P^k}[z]; their duals are the worst-case mixture weights
        for (const Vec& P : p_.priors) {
            std::vector<std::pair<std::size_t, double>> row{{tau_col(), 1.0}};
            for (std::size_t j = 0; j < charged_.size(); ++j)
                if (P[charged_[j]] != 0.0) row.emplace_back(z_col(j), -P[charged_[j]]);
            b.add_row(std::move(row), S::le, 0.0);
        }
        // x - c + theta.G_i >= lower_i
        for (std::size_t i = 0; i < n_; ++i) {
            std::vector<std::pair<std::size_t, double>> row;
            for (std::size_t k = 0; k < r_; ++k)
                if (G_[i][k] != 0.0) row.emplace_back(k, -G_[i][k]);
            if (has_c()) row.emplace_back(c_col(), 1.0);
            b.add_row(std::move(row), S::le, x_ - p_.continuation[i].lower());
        }
        // z_j <= a + s (x - c + theta.G_j)
        for (std::size_t j = 0; j < charged_.size(); ++j) {
            const std::size_t i = charged_[j];
            for (const Cut& cut : cuts_[j]) {
                std::vector<std::pair<std::size_t, double>> row{{z_col(j), 1.0}};
                for (std::size_t k = 0; k < r_; ++k)
                    if (G_[i][k] != 0.0 && cut.slope != 0.0) row.emplace_back(k, -cut.slope * G_[i][k]);
                if (has_c() && cut.slope != 0.0) row.emplace_back(c_col(), cut.slope);
                b.add_row(std::move(row), S::le, cut.intercept + cut.slope * x_);
            }
        }
        for (const Cut& cut : ucuts_) {
            std::vector<std::pair<std::size_t, double>> row{{v_col(), 1.0}};
            if (cut.slope != 0.0) row.emplace_back(c_col(), -cut.slope);
            b.add_row(std::move(row), S::le, cut.intercept);
        }
        return b.build();
    }

    // Cuts violated by less than a tenth of the tolerance cannot move the
    // bound by more than the stopping gap, so they are not added.
    bool add_cuts(const LpSolution& sol, const Vec& theta, double c) {
        const double slack = 0.1 * opt_.tol;
        bool added = false;
        for (std::size_t j = 0; j < charged_.size(); ++j) {
            const ConcaveFunction& f = p_.continuation[charged_[j]];
            const double w = std::max(wealth(theta, c, charged_[j]), f.lower());
            const double g = f.value(w);
            if (sol.primal[z_col(j)] > g + slack * (1.0 + std::abs(g)) && fresh(cuts_[j], w)) {
                cuts_[j].push_back(cut_at(f, w));
                added = true;
            }
        }
        if (has_c()) {
            const double u = p_.consumption->value(c);
            if (sol.primal[v_col()] > u + slack * (1.0 + std::abs(u)) && fresh(ucuts_, c)) {
                ucuts_.push_back(utility_cut(*p_.consumption, c));
                added = true;
            }
        }
        return added;
    }

    /// Moves theta along the set that leaves every charged successor's wealth
    /// and all feasibility rows intact, towards a seed-dependent direction.
    void pick_on_face(Vec& theta, double c) const {
        if (r_ == 0) return;
        std::mt19937_64 rng(opt_.seed ^ 0x9e3779b97f4a7c15ULL);
        std::normal_distribution<double> N(0.0, 1.0);
        LpBuilder b;
        for (std::size_t k = 0; k < r_; ++k) b.add_var(N(rng), false);
        using S = LpBuilder::Sense;
        std::vector<bool> is_charged(n_, false);
        for (std::size_t i : charged_) is_charged[i] = true;
        for (std::size_t i = 0; i < n_; ++i) {
            std::vector<std::pair<std::size_t, double>> row;
            double gain = 0.0;
            for (std::size_t k = 0; k < r_; ++k) {
                if (G_[i][k] != 0.0) row.emplace_back(k, G_[i][k]);
                gain += theta[k] * G_[i][k];
            }
            if (row.empty()) continue;
            if (is_charged[i])
                b.add_row(std::move(row), S::eq, gain);
            else
                b.add_row(std::move(row), S::ge, std::min(gain, p_.continuation[i].lower() - x_ + c));
        }
        const LpSolution sol = solve(b.build());
        if (!sol.optimal()) return;  // unbounded cannot happen under NA; keep the Kelley point otherwise
        Vec moved(sol.primal.begin(), sol.primal.begin() + static_cast<std::ptrdiff_t>(r_));
        const double before = maxmin_objective(p_, x_, span_.embed(theta), c);
        const double after = maxmin_objective(p_, x_, span_.embed(moved), c);
        if (after >= before - 1e-12 * (1.0 + std::abs(before))) theta = std::move(moved);
    }

    const OneStepProblem& p_;
    double x_;
    MaxminOptions opt_;
    std::size_t n_;
    HedgeSpan span_;
    std::size_t r_ = 0;
    std::vector<Vec> G_;
    std::vector<std::size_t> charged_;
    std::vector<std::vector<Cut>> cuts_;
    std::vector<Cut> ucuts_;
};

void validate(const OneStepProblem& p) {
    const std::size_t n = p.support.size();
    if (n == 0) throw ValidationError("one-step problem needs successors");
    if (p.continuation.size() != n) throw ValidationError("one continuation function per successor");
    if (p.priors.empty()) throw ValidationError("prior list must be non-empty");
    for (const Vec& y : p.support)
        if (y.size() != p.price.size()) throw ValidationError("support dimension mismatch");
    for (const Vec& P : p.priors) {
        if (P.size() != n) throw ValidationError("prior length must match the successor count");
        double mass = 0.0;
        for (double q : P) {
            if (q < 0.0) throw ValidationError("prior weights must be non-negative");
            mass += q;
        }
        if (std::abs(mass - 1.0) > 1e-12) throw ValidationError("prior weights must sum to 1");
    }
}

}  // namespace

MaxminResult one_step_maxmin(const OneStepProblem& problem, double x, const MaxminOptions& opt) {
    validate(problem);
    // cheapest wealth from which the successor domains are reachable
    Vec lowers;
    for (const auto& f : problem.continuation) lowers.push_back(f.lower());
    const double required = envelope_at(problem.support, lowers, problem.price).value;
    if (x < required) {
        if (x < required - 1e-12 * (1.0 + std::abs(required))) {
            MaxminResult out;
            out.value = kNegInf;
            out.upper_bound = kNegInf;
            return out;
        }
        x = required;
    }

    MaxminResult res = KelleySolver(problem, x, opt).run();
    if (!res.feasible || !opt.compute_gap || problem.priors.size() < 2) return res;

    OneStepProblem fixed = problem;
    Vec mix(problem.support.size(), 0.0);
    for (std::size_t k = 0; k < problem.priors.size(); ++k)
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += res.worst_mixture[k] * problem.priors[k][i];
    double mass = 0.0;
    for (double q : mix) mass += q;
    for (double& q : mix) q /= mass;
    fixed.priors = {mix};
    MaxminOptions inner = opt;
    inner.compute_gap = false;
    const MaxminResult at_mix = KelleySolver(fixed, x, inner).run();
    res.gap = at_mix.value - res.value;
    res.converged = res.converged && at_mix.converged;
    return res;
}

}  // namespace suphedge
