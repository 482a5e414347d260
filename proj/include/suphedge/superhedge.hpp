#pragma once

#include <span>
#include <vector>

#include "suphedge/linalg.hpp"
#include "suphedge/model.hpp"

namespace suphedge {

/// Superhedging prices per node by backward induction. `pi` comes from the
/// hedging (primal) programs, `dual` from the martingale-measure programs;
/// both are kept so callers can audit the duality.
struct PriceSurface {
    std::vector<double> pi;
    std::vector<double> dual;
    std::vector<Vec> hedge;    // H_{t+1} chosen at each non-terminal node
    std::vector<Vec> weights;  // optimal one-step martingale weights

    double root_price() const { return pi.front(); }
};

/// Slice-parallel backward sweep. Throws ArbitrageError listing the failing
/// nodes when one-step no-arbitrage does not hold everywhere.
PriceSurface price(const ScenarioLattice& lattice, const PayoffSpec& payoff);
PriceSurface price(const ScenarioLattice& lattice, std::span<const double> terminal);

/// Single-threaded recursive reference of the same sweep.
PriceSurface price_serial(const ScenarioLattice& lattice, std::span<const double> terminal);

/// Self-financing-with-consumption strategy: hedge per non-terminal node and
/// cumulative consumption per node (empty = no consumption).
struct Strategy {
    std::vector<Vec> hedge;
    std::vector<double> consumption;
};

/// Minimal superhedging strategy: x = pi_0, hedges from the envelopes and
/// cumulative consumption C_t = pi_0 + sum H_u dS_u - pi_t.
struct HedgePlan {
    double initial_capital = 0.0;
    Strategy strategy;
    std::vector<double> wealth;  // equals pi node-wise
};

HedgePlan minimal_strategy(const ScenarioLattice& lattice, const PriceSurface& surface);
HedgePlan minimal_strategy(const ScenarioLattice& lattice, const PayoffSpec& payoff);

/// V_0 .. V_T along `path` from V_t = V_{t-1} + H_t dS_t - dC_t.
std::vector<double> wealth_path(const ScenarioLattice& lattice, double x, const Strategy& strategy,
                                std::span<const NodeIndex> path);

struct VerifyReport {
    bool pass = false;
    double min_slack = 0.0;  // min over paths of V_T - xi
    Path worst_path;
    bool consumption_ok = true;
    double min_consumption_step = 0.0;
};

VerifyReport verify_superhedge(const ScenarioLattice& lattice, std::span<const double> terminal,
                               double x, const Strategy& strategy);

}  // namespace suphedge
