#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "suphedge/linalg.hpp"
#include "suphedge/utility.hpp"

namespace suphedge {

using NodeIndex = std::size_t;
inline constexpr NodeIndex no_node = static_cast<NodeIndex>(-1);

struct Node {
    std::string id;
    int time = 0;
    Vec price;
    std::vector<NodeIndex> successors;
    NodeIndex parent = no_node;
    std::size_t in_degree = 0;

    bool operator==(const Node&) const = default;
};

/// Raw node record as it appears in a model document.
struct NodeSpec {
    std::string id;
    int time = 0;
    Vec price;
    std::vector<std::string> successors;
};

/// Time-indexed scenario tree. Immutable after construction.
///
/// Successor sets are the finite supports of the one-step prior families: a
/// node's successors list every price vector deemed possible next period.
/// Non-recombining by default so that every node is identified with its full
/// price history; a recombined lattice is a DAG and only supports
/// terminal-price payoffs.
class ScenarioLattice {
public:
    struct Build;

    /// Validates and indexes the records; sibling successors with equal prices
    /// (1e-12 relative) are merged, their subtrees united. With `recombine`,
    /// all nodes of one time slice with equal prices are merged as well.
    static Build from_specs(int horizon, std::size_t dimension, const Vec& root_price,
                            std::vector<NodeSpec> specs, bool recombine = false);

    int horizon() const { return horizon_; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return nodes_.size(); }
    NodeIndex root() const { return 0; }
    bool recombined() const { return recombined_; }

    const Node& node(NodeIndex i) const { return nodes_[i]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    bool is_terminal(NodeIndex i) const { return nodes_[i].time == horizon_; }
    const std::vector<NodeIndex>& slice(int t) const { return slices_[static_cast<std::size_t>(t)]; }
    std::vector<NodeIndex> leaves() const { return slices_.back(); }

    std::optional<NodeIndex> find(const std::string& id) const;
    std::vector<Vec> successor_prices(NodeIndex i) const;

    bool operator==(const ScenarioLattice& o) const {
        return horizon_ == o.horizon_ && dimension_ == o.dimension_ && nodes_ == o.nodes_ &&
               recombined_ == o.recombined_;
    }

private:
    int horizon_ = 0;
    std::size_t dimension_ = 0;
    bool recombined_ = false;
    std::vector<Node> nodes_;
    std::vector<std::vector<NodeIndex>> slices_;
    std::unordered_map<std::string, NodeIndex> index_;
};

struct ScenarioLattice::Build {
    ScenarioLattice lattice;
    /// merged-away node id -> surviving node id
    std::map<std::string, std::string> aliases;
};

using Path = std::vector<NodeIndex>;

/// All root-to-leaf paths in depth-first order (successor order).
std::vector<Path> enumerate_paths(const ScenarioLattice& lattice);

/// Root-to-node path; requires a tree.
Path path_to(const ScenarioLattice& lattice, NodeIndex node);

struct PayoffSpec {
    enum class Kind {
        call,
        put,
        straddle,
        linear,
        min,
        max,
        running_min,
        running_max,
        constant,
        table
    };

    Kind kind = Kind::constant;
    double strike = 0.0;
    std::size_t asset = 0;
    Vec weights;
    double intercept = 0.0;
    double value = 0.0;
    /// leaf node id -> payoff (kind == table)
    std::map<std::string, double> table;

    bool path_dependent() const {
        return kind == Kind::running_min || kind == Kind::running_max || kind == Kind::table;
    }

    static PayoffSpec call(double strike, std::size_t asset = 0);
    static PayoffSpec put(double strike, std::size_t asset = 0);
    static PayoffSpec straddle(double strike, std::size_t asset = 0);
    static PayoffSpec linear(Vec weights, double intercept);
    static PayoffSpec constant(double value);

    bool operator==(const PayoffSpec&) const = default;
};

std::string_view to_string(PayoffSpec::Kind k);

double evaluate_payoff(const PayoffSpec& payoff, const ScenarioLattice& lattice,
                       std::span<const NodeIndex> path);

/// Payoff per leaf; requires a tree (or a terminal-price payoff on a DAG).
std::vector<double> terminal_values(const PayoffSpec& payoff, const ScenarioLattice& lattice);

/// Finite subjective prior lists, one per non-terminal node, over that
/// node's successors.
struct PriorFamily {
    std::vector<std::vector<Vec>> per_node;

    static PriorFamily uniform(const ScenarioLattice& lattice);
    const std::vector<Vec>& at(NodeIndex i) const { return per_node[i]; }

    bool operator==(const PriorFamily&) const = default;
};

struct UtilityProfile {
    std::vector<Utility> per_time;
    std::map<NodeIndex, Utility> overrides;

    static UtilityProfile uniform(int horizon, const Utility& u);
    const Utility& at(const ScenarioLattice& lattice, NodeIndex i) const;
    bool strictly_concave() const;

    bool operator==(const UtilityProfile&) const = default;
};

struct Model {
    ScenarioLattice lattice;
    std::optional<PayoffSpec> payoff;
    std::optional<PriorFamily> priors;
    std::optional<UtilityProfile> utility;

    bool operator==(const Model&) const = default;
};

Model load_model(const nlohmann::json& doc);
Model load_model_file(const std::string& path);
nlohmann::json serialize_model(const Model& model);

/// Binomial (Cox-Ross-Rubinstein) tree with S_{t+1} in {u S_t, d S_t}.
ScenarioLattice make_crr_lattice(int horizon, double u, double d, double s0,
                                 bool recombine = false);

/// Each node's successors are `points` evenly spaced prices in [d S_t, u S_t].
ScenarioLattice make_interval_grid_lattice(int horizon, double u, double d, double s0,
                                           int points);

}  // namespace suphedge
