#include "suphedge/superhedge.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "suphedge/envelope.hpp"
#include "suphedge/errors.hpp"
#include "suphedge/na_check.hpp"
#include "suphedge/parallel.hpp"

namespace suphedge {

namespace {

void require_na(const ScenarioLattice& lattice) {
    const NaReport report = check_lattice(lattice);
    if (report.global_ok) return;
    std::vector<std::string> ids;
    std::string list;
    for (const auto& f : report.failures) {
        ids.push_back(f.id);
        if (!list.empty()) list += ", ";
        list += f.id;
    }
    throw ArbitrageError("one-step arbitrage at node(s): " + list, std::move(ids));
}

PriceSurface empty_surface(const ScenarioLattice& lattice, std::span<const double> terminal) {
    if (terminal.size() != lattice.size())
        throw ValidationError("terminal values must be indexed by node");
    PriceSurface s;
    s.pi.assign(lattice.size(), 0.0);
    s.dual.assign(lattice.size(), 0.0);
    s.hedge.assign(lattice.size(), Vec{});
    s.weights.assign(lattice.size(), Vec{});
    for (NodeIndex leaf : lattice.leaves()) {
        s.pi[leaf] = terminal[leaf];
        s.dual[leaf] = terminal[leaf];
    }
    return s;
}

void fill_node(const ScenarioLattice& lattice, PriceSurface& s, NodeIndex i) {
    const Node& n = lattice.node(i);
    std::vector<Vec> pts;
    Vec vals;
    for (NodeIndex c : n.successors) {
        pts.push_back(lattice.node(c).price);
        vals.push_back(s.pi[c]);
    }
    const EnvelopeResult env = envelope_at(pts, vals, n.price);
    s.pi[i] = env.primal_value;
    s.dual[i] = env.dual_value;
    s.hedge[i] = env.hedge;
    s.weights[i] = env.weights;
}

}  // namespace

PriceSurface price(const ScenarioLattice& lattice, const PayoffSpec& payoff) {
    const auto terminal = terminal_values(payoff, lattice);
    return price(lattice, terminal);
}

PriceSurface price(const ScenarioLattice& lattice, std::span<const double> terminal) {
    require_na(lattice);
    PriceSurface s = empty_surface(lattice, terminal);
    for (int t = lattice.horizon() - 1; t >= 0; --t) {
        const auto& slice = lattice.slice(t);
        parallel_for(slice.size(), [&](std::size_t k) { fill_node(lattice, s, slice[k]); });
    }
    return s;
}

PriceSurface price_serial(const ScenarioLattice& lattice, std::span<const double> terminal) {
    require_na(lattice);
    PriceSurface s = empty_surface(lattice, terminal);
    std::vector<bool> done(lattice.size(), false);
    std::function<void(NodeIndex)> visit = [&](NodeIndex i) {
        if (done[i] || lattice.is_terminal(i)) return;
        for (NodeIndex c : lattice.node(i).successors) visit(c);
        fill_node(lattice, s, i);
        done[i] = true;
    };
    visit(lattice.root());
    return s;
}

HedgePlan minimal_strategy(const ScenarioLattice& lattice, const PriceSurface& surface) {
    if (lattice.recombined())
        throw ValidationError("hedge plans need a non-recombining lattice");
    HedgePlan plan;
    plan.initial_capital = surface.pi[lattice.root()];
    plan.strategy.hedge = surface.hedge;
    plan.strategy.consumption.assign(lattice.size(), 0.0);
    plan.wealth = surface.pi;
    for (int t = 0; t < lattice.horizon(); ++t) {
        for (NodeIndex i : lattice.slice(t)) {
            const Node& n = lattice.node(i);
            for (NodeIndex c : n.successors) {
                const double gain = dot(surface.hedge[i], sub(lattice.node(c).price, n.price));
                plan.strategy.consumption[c] =
                    plan.strategy.consumption[i] + surface.pi[i] + gain - surface.pi[c];
            }
        }
    }
    return plan;
}

HedgePlan minimal_strategy(const ScenarioLattice& lattice, const PayoffSpec& payoff) {
    return minimal_strategy(lattice, price(lattice, payoff));
}

std::vector<double> wealth_path(const ScenarioLattice& lattice, double x, const Strategy& strategy,
                                std::span<const NodeIndex> path) {
    auto cons = [&](NodeIndex i) {
        return strategy.consumption.empty() ? 0.0 : strategy.consumption[i];
    };
    std::vector<double> v{x - cons(path.front())};
    for (std::size_t k = 1; k < path.size(); ++k) {
        const Node& prev = lattice.node(path[k - 1]);
        const Node& cur = lattice.node(path[k]);
        const Vec& H = strategy.hedge[path[k - 1]];
        const double gain = H.empty() ? 0.0 : dot(H, sub(cur.price, prev.price));
        v.push_back(v.back() + gain - (cons(path[k]) - cons(path[k - 1])));
    }
    return v;
}

VerifyReport verify_superhedge(const ScenarioLattice& lattice, std::span<const double> terminal,
                               double x, const Strategy& strategy) {
    VerifyReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    rep.min_consumption_step = std::numeric_limits<double>::infinity();
    for (const Path& p : enumerate_paths(lattice)) {
        const auto v = wealth_path(lattice, x, strategy, p);
        const double slack = v.back() - terminal[p.back()];
        if (slack < rep.min_slack) {
            rep.min_slack = slack;
            rep.worst_path = p;
        }
        if (!strategy.consumption.empty()) {
            for (std::size_t k = 1; k < p.size(); ++k) {
                const double step = strategy.consumption[p[k]] - strategy.consumption[p[k - 1]];
                rep.min_consumption_step = std::min(rep.min_consumption_step, step);
            }
        }
    }
    if (strategy.consumption.empty()) rep.min_consumption_step = 0.0;
    rep.consumption_ok = rep.min_consumption_step >= -1e-10;
    rep.pass = rep.min_slack >= -1e-9 && rep.consumption_ok;
    return rep;
}

}  // namespace suphedge
