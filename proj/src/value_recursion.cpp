#include "suphedge/value_recursion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "suphedge/errors.hpp"
#include "suphedge/parallel.hpp"

namespace suphedge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <typename Fn>
void run_jobs(std::size_t n, bool serial, Fn&& fn) {
    if (serial) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
    } else {
        parallel_for(n, fn);
    }
}

class Recursion {
public:
    Recursion(const ScenarioLattice& lattice, std::span<const double> terminal, const PriorFamily& priors,
              const UtilityProfile& utilities, const RecursionOptions& opt)
        : L_(lattice), xi_(terminal), priors_(priors), u_(utilities), opt_(opt) {}

    RecursionResult run() {
        validate();
        RecursionResult res;
        res.prices = opt_.serial ? price_serial(L_, xi_) : price(L_, xi_);
        const double pi0 = res.prices.root_price();
        res.initial_wealth = opt_.initial_wealth.value_or(pi0);
        res.wealth_span = opt_.wealth_span > 0.0
                              ? opt_.wealth_span
                              : std::max({pi0, res.initial_wealth - pi0, 0.0}) + 10.0;

        const std::size_t n = L_.size();
        continuation_.assign(n, std::nullopt);
        res.surface.grid.assign(n, {});
        res.surface.values.assign(n, {});
        for (NodeIndex leaf : L_.leaves())
            continuation_[leaf] = ConcaveFunction::shifted_utility(u_.at(L_, leaf), xi_[leaf]);

        const auto grid_n = static_cast<std::size_t>(opt_.grid_n);
        for (int t = L_.horizon() - 1; t >= 0; --t) {
            const auto& slice = L_.slice(t);
            for (NodeIndex i : slice) {
                Vec& xs = res.surface.grid[i];
                xs.resize(grid_n);
                for (std::size_t k = 0; k < grid_n; ++k)
                    xs[k] = res.prices.pi[i] + res.wealth_span * static_cast<double>(k) / static_cast<double>(grid_n - 1);
                res.surface.values[i].assign(grid_n, 0.0);
            }
            std::vector<char> converged(slice.size() * grid_n, 1);
            run_jobs(slice.size() * grid_n, opt_.serial, [&](std::size_t job) {
                const NodeIndex i = slice[job / grid_n];
                const std::size_t k = job % grid_n;
                const MaxminResult r = one_step_maxmin(problem(i), res.surface.grid[i][k], opt_.maxmin);
                if (!r.feasible) throw NumericalError("value grid point below the superhedging price");
                res.surface.values[i][k] = r.value;
                converged[job] = r.converged;
            });
            res.solves += converged.size();
            res.unconverged += static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));
            for (NodeIndex i : slice) {
                res.surface.values[i] = concave_monotone_fit(res.surface.grid[i], res.surface.values[i]);
                if (t > 0) continuation_[i] = ConcaveFunction::interpolant(res.surface.grid[i], res.surface.values[i]);
            }
        }

        forward(res);
        res.policy_value = robust_policy_value(L_, xi_, priors_, u_, res.policy);
        return res;
    }

private:
    void validate() const {
        if (opt_.grid_n < 2) throw ValidationError("grid_n must be at least 2");
        if (L_.recombined()) throw ValidationError("utility optimisation needs a non-recombined lattice");
        if (xi_.size() != L_.size()) throw ValidationError("terminal values must be indexed by node");
        if (priors_.per_node.size() != L_.size()) throw ValidationError("prior family does not match the lattice");
        if (u_.per_time.size() != static_cast<std::size_t>(L_.horizon()) + 1)
            throw ValidationError("utility profile needs horizon + 1 entries");
    }

    OneStepProblem problem(NodeIndex i) const {
        const Node& node = L_.node(i);
        OneStepProblem p;
        p.price = node.price;
        for (NodeIndex j : node.successors) {
            p.support.push_back(L_.node(j).price);
            p.continuation.push_back(*continuation_[j]);
        }
        p.priors = priors_.at(i);
        p.consumption = node.time > 0 ? &u_.at(L_, i) : nullptr;
        return p;
    }

    void forward(RecursionResult& res) const {
        const std::size_t n = L_.size();
        OptimalPolicy& pol = res.policy;
        pol.wealth.assign(n, 0.0);
        pol.consumption.assign(n, 0.0);
        pol.hedge.assign(n, {});
        WorstCaseMeasure& w = res.worst;
        w.mixture.assign(n, {});
        w.index.assign(n, 0);
        w.kernel.assign(n, {});
        pol.wealth[L_.root()] = res.initial_wealth;

        std::vector<double> gaps(n, 0.0);
        for (int t = 0; t < L_.horizon(); ++t) {
            const auto& slice = L_.slice(t);
            std::vector<char> converged(slice.size(), 1);
            run_jobs(slice.size(), opt_.serial, [&](std::size_t job) {
                const NodeIndex i = slice[job];
                const OneStepProblem p = problem(i);
                const MaxminResult r = one_step_maxmin(p, pol.wealth[i], opt_.maxmin);
                if (!r.feasible) throw ValidationError("initial wealth is below the superhedging price");
                if (t == 0) res.value = r.value;
                converged[job] = r.converged;
                gaps[i] = std::abs(r.gap);
                pol.consumption[i] = r.consumption;
                pol.hedge[i] = r.hedge;
                const auto& succ = L_.node(i).successors;
                for (std::size_t s = 0; s < succ.size(); ++s) pol.wealth[succ[s]] = r.successor_wealth[s];
                w.mixture[i] = r.worst_mixture;
                w.index[i] = r.worst_index;
                Vec kernel(succ.size(), 0.0);
                for (std::size_t k = 0; k < p.priors.size(); ++k)
                    for (std::size_t s = 0; s < succ.size(); ++s) kernel[s] += r.worst_mixture[k] * p.priors[k][s];
                double mass = 0.0;
                for (double q : kernel) mass += q;
                for (double& q : kernel) q /= mass;
                w.kernel[i] = std::move(kernel);
            });
            res.solves += converged.size();
            res.unconverged += static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));
        }
        for (NodeIndex leaf : L_.leaves()) pol.consumption[leaf] = pol.wealth[leaf] - xi_[leaf];
        for (NodeIndex i = 1; i < n; ++i)
            if (!L_.is_terminal(i) && pol.wealth[i] > res.surface.grid[i].back()) ++res.beyond_grid;
        res.max_gap = *std::max_element(gaps.begin(), gaps.end());
    }

    const ScenarioLattice& L_;
    std::span<const double> xi_;
    const PriorFamily& priors_;
    const UtilityProfile& u_;
    const RecursionOptions& opt_;
    std::vector<std::optional<ConcaveFunction>> continuation_;
};

}  // namespace

PriorFamily WorstCaseMeasure::as_family() const {
    PriorFamily f;
    f.per_node.resize(kernel.size());
    for (std::size_t i = 0; i < kernel.size(); ++i)
        if (!kernel[i].empty()) f.per_node[i] = {kernel[i]};
    return f;
}

RecursionResult value_recursion(const ScenarioLattice& lattice, std::span<const double> terminal,
                                const PriorFamily& priors, const UtilityProfile& utilities,
                                const RecursionOptions& options) {
    return Recursion(lattice, terminal, priors, utilities, options).run();
}

double robust_policy_value(const ScenarioLattice& lattice, std::span<const double> terminal,
                           const PriorFamily& priors, const UtilityProfile& utilities,
                           const OptimalPolicy& policy) {
    const std::size_t n = lattice.size();
    // wealth is rebuilt from the initial capital, consumption and hedges
    Vec wealth(n, 0.0), consumed(n, 0.0);
    wealth[lattice.root()] = policy.wealth[lattice.root()];
    for (int t = 0; t <= lattice.horizon(); ++t) {
        for (NodeIndex i : lattice.slice(t)) {
            const Node& node = lattice.node(i);
            if (lattice.is_terminal(i)) {
                consumed[i] = wealth[i] - terminal[i];
                continue;
            }
            consumed[i] = t == 0 ? 0.0 : policy.consumption[i];
            for (NodeIndex j : node.successors)
                wealth[j] = wealth[i] - consumed[i] + dot(policy.hedge[i], sub(lattice.node(j).price, node.price));
        }
    }
    Vec value(n, 0.0);
    for (int t = lattice.horizon(); t >= 0; --t) {
        for (NodeIndex i : lattice.slice(t)) {
            double c = consumed[i];
            if (c < 0.0) {
                if (c < -1e-9 * (1.0 + std::abs(wealth[i]))) return kNegInf;
                c = 0.0;
            }
            const double own = t == 0 ? 0.0 : utilities.at(lattice, i).value(c);
            if (lattice.is_terminal(i)) {
                value[i] = own;
                continue;
            }
            const auto& succ = lattice.node(i).successors;
            double worst = std::numeric_limits<double>::infinity();
            for (const Vec& P : priors.at(i)) {
                double e = 0.0;
                for (std::size_t s = 0; s < succ.size(); ++s)
                    if (P[s] != 0.0) e += P[s] * value[succ[s]];
                worst = std::min(worst, e);
            }
            value[i] = own + worst;
        }
    }
    return value[lattice.root()];
}

UniquenessReport uniqueness_probe(const ScenarioLattice& lattice, const UtilityProfile& utilities,
                                  const RecursionResult& first, const RecursionResult& second,
                                  double tol) {
    UniquenessReport rep;
    rep.guaranteed = utilities.strictly_concave();
    // nodes reached with positive worst-case probability
    std::vector<char> charged(lattice.size(), 0);
    charged[lattice.root()] = 1;
    for (int t = 0; t <= lattice.horizon(); ++t) {
        for (NodeIndex i : lattice.slice(t)) {
            if (!charged[i]) continue;
            rep.max_consumption_diff = std::max(
                rep.max_consumption_diff, std::abs(first.policy.consumption[i] - second.policy.consumption[i]));
            if (lattice.is_terminal(i)) continue;
            const Node& node = lattice.node(i);
            for (std::size_t s = 0; s < node.successors.size(); ++s) {
                if (first.worst.kernel[i][s] <= 0.0) continue;
                const NodeIndex j = node.successors[s];
                charged[j] = 1;
                const Vec dS = sub(lattice.node(j).price, node.price);
                rep.max_gain_diff = std::max(
                    rep.max_gain_diff, std::abs(dot(first.policy.hedge[i], dS) - dot(second.policy.hedge[i], dS)));
            }
        }
    }
    const bool agree = rep.max_consumption_diff <= tol && rep.max_gain_diff <= tol;
    std::ostringstream msg;
    if (!rep.guaranteed) {
        rep.pass = true;
        msg << "uniqueness not guaranteed: utilities are not strictly concave";
    } else {
        rep.pass = agree;
        msg << (agree ? "consumption and hedge gains agree" : "runs disagree");
    }
    msg << " (consumption diff " << rep.max_consumption_diff << ", gain diff " << rep.max_gain_diff << ")";
    rep.message = msg.str();
    return rep;
}

}  // namespace suphedge
