#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suphedge/linalg.hpp"
#include "suphedge/maxmin.hpp"
#include "suphedge/model.hpp"
#include "suphedge/superhedge.hpp"

namespace suphedge {

struct RecursionOptions {
    /// width of each node's wealth grid above its superhedging price;
    /// <= 0 selects max(pi_0, x_0 - pi_0, 0) + 10
    double wealth_span = 0.0;
    int grid_n = 129;
    /// start of the forward pass; pi_0 when unset
    std::optional<double> initial_wealth;
    MaxminOptions maxmin;
    bool serial = false;
};

/// Per node, concave non-decreasing value of wealth on a uniform grid over
/// [pi_t, pi_t + wealth_span]. Leaves carry no grid.
struct ValueSurface {
    std::vector<Vec> grid;
    std::vector<Vec> values;
};

/// Forward-pass policy. `wealth` is the wealth on arrival at a node,
/// `consumption` the amount consumed there (zero at the root, the surplus
/// over the claim at a leaf), `hedge` the position carried to the successors.
struct OptimalPolicy {
    std::vector<double> wealth;
    std::vector<double> consumption;
    std::vector<Vec> hedge;
};

/// Per non-terminal node: weights over the node's prior list attaining the
/// inner infimum at the policy, and the resulting successor probabilities.
struct WorstCaseMeasure {
    std::vector<Vec> mixture;
    std::vector<std::size_t> index;
    std::vector<Vec> kernel;

    PriorFamily as_family() const;
};

struct RecursionResult {
    double initial_wealth = 0.0;
    double wealth_span = 0.0;
    /// U_0 at the initial wealth
    double value = 0.0;
    /// exact robust expected utility of the extracted policy
    double policy_value = 0.0;
    PriceSurface prices;
    ValueSurface surface;
    OptimalPolicy policy;
    WorstCaseMeasure worst;
    /// largest one-step minimax gap seen in the forward pass
    double max_gap = 0.0;
    std::size_t solves = 0;
    std::size_t unconverged = 0;
    /// nodes the forward pass reached above their grid, where the value
    /// function was extended flat
    std::size_t beyond_grid = 0;
};

/// Backward sweep of one-step max-min problems on wealth grids, then a
/// forward pass re-solving each node at its actual wealth. Requires a tree.
RecursionResult value_recursion(const ScenarioLattice& lattice, std::span<const double> terminal,
                                const PriorFamily& priors, const UtilityProfile& utilities,
                                const RecursionOptions& options = {});

/// inf over product selections from the prior lists of the expected utility
/// of the policy's consumption stream; -inf if the policy is infeasible.
double robust_policy_value(const ScenarioLattice& lattice, std::span<const double> terminal,
                           const PriorFamily& priors, const UtilityProfile& utilities,
                           const OptimalPolicy& policy);

struct UniquenessReport {
    /// false when some consumption utility is not strictly concave; the
    /// comparisons are then informational only
    bool guaranteed = true;
    bool pass = true;
    double max_consumption_diff = 0.0;
    /// over successors charged by the worst-case kernel of the first run
    double max_gain_diff = 0.0;
    std::string message;
};

UniquenessReport uniqueness_probe(const ScenarioLattice& lattice, const UtilityProfile& utilities,
                                  const RecursionResult& first, const RecursionResult& second,
                                  double tol = 1e-4);

}  // namespace suphedge
