#include "suphedge/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "suphedge/errors.hpp"

namespace suphedge {

using nlohmann::json;

namespace {

bool same_price(const Vec& a, const Vec& b) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double tol = 1e-12 * std::max(std::abs(a[k]), std::abs(b[k]));
        if (std::abs(a[k] - b[k]) > tol) return false;
    }
    return true;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

ScenarioLattice::Build ScenarioLattice::from_specs(int horizon, std::size_t dimension,
                                                   const Vec& root_price,
                                                   std::vector<NodeSpec> specs, bool recombine) {
    if (horizon < 1) throw ValidationError("horizon must be ≥ 1");
    if (dimension < 1) throw ValidationError("dimension must be ≥ 1");
    if (root_price.size() != dimension)
        throw ValidationError("root_price has " + std::to_string(root_price.size()) +
                              " coordinates, expected " + std::to_string(dimension));

    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& s = specs[k];
        if (!by_id.emplace(s.id, k).second) throw ValidationError("duplicate node id '" + s.id + "'");
        if (s.time < 0 || s.time > horizon)
            throw ValidationError("node '" + s.id + "' has time " + std::to_string(s.time) +
                                  " outside [0, horizon]");
        if (s.price.size() != dimension)
            throw ValidationError("node '" + s.id + "' price has wrong dimension");
        for (double p : s.price) {
            if (!std::isfinite(p)) throw ValidationError("non-finite price at node '" + s.id + "'");
            if (p < 0.0) throw ValidationError("negative price at node '" + s.id + "'");
        }
    }
    std::size_t root_spec = specs.size();
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (specs[k].time != 0) continue;
        if (root_spec != specs.size()) throw ValidationError("more than one node at time 0");
        root_spec = k;
    }
    if (root_spec == specs.size()) throw ValidationError("no root node at time 0");
    for (double p : root_price)
        if (!(p > 0.0)) throw ValidationError("root price must be positive");
    if (!same_price(specs[root_spec].price, root_price))
        throw ValidationError("root node price differs from root_price");

    for (const auto& s : specs) {
        for (const auto& c : s.successors) {
            auto it = by_id.find(c);
            if (it == by_id.end())
                throw ValidationError("dangling successor id '" + c + "' at node '" + s.id + "'");
            if (specs[it->second].time != s.time + 1)
                throw ValidationError("successor '" + c + "' of node '" + s.id +
                                      "' is not one period ahead");
        }
    }

    std::map<std::string, std::string> alias;
    std::vector<bool> alive(specs.size(), true);
    auto resolve = [&](std::string id) {
        for (auto it = alias.find(id); it != alias.end(); it = alias.find(id)) id = it->second;
        return id;
    };
    auto normalise_successors = [&](NodeSpec& s) {
        std::vector<std::string> out;
        for (const auto& c : s.successors) {
            auto r = resolve(c);
            if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(std::move(r));
        }
        s.successors = std::move(out);
    };
    auto absorb = [&](std::size_t keep, std::size_t dup) {
        auto& kept = specs[keep].successors;
        kept.insert(kept.end(), specs[dup].successors.begin(), specs[dup].successors.end());
        alive[dup] = false;
        alias[specs[dup].id] = specs[keep].id;
    };

    for (int t = 0; t < horizon; ++t) {
        for (std::size_t k = 0; k < specs.size(); ++k) {
            if (!alive[k] || specs[k].time != t) continue;
            normalise_successors(specs[k]);
            auto& succ = specs[k].successors;
            for (std::size_t a = 0; a < succ.size(); ++a) {
                for (std::size_t b = a + 1; b < succ.size();) {
                    const std::size_t ia = by_id.at(succ[a]);
                    const std::size_t ib = by_id.at(succ[b]);
                    if (same_price(specs[ia].price, specs[ib].price)) {
                        absorb(ia, ib);
                        succ.erase(succ.begin() + static_cast<std::ptrdiff_t>(b));
                    } else {
                        ++b;
                    }
                }
            }
        }
        if (recombine) {
            std::vector<std::size_t> level;
            for (std::size_t k = 0; k < specs.size(); ++k)
                if (alive[k] && specs[k].time == t + 1) level.push_back(k);
            for (std::size_t a = 0; a < level.size(); ++a) {
                if (!alive[level[a]]) continue;
                for (std::size_t b = a + 1; b < level.size(); ++b) {
                    if (alive[level[b]] && same_price(specs[level[a]].price, specs[level[b]].price))
                        absorb(level[a], level[b]);
                }
            }
            for (std::size_t k = 0; k < specs.size(); ++k)
                if (alive[k] && specs[k].time == t) normalise_successors(specs[k]);
        }
    }
    for (std::size_t k = 0; k < specs.size(); ++k)
        if (alive[k]) normalise_successors(specs[k]);

    Build out;
    ScenarioLattice& L = out.lattice;
    L.horizon_ = horizon;
    L.dimension_ = dimension;
    L.recombined_ = recombine;
    L.slices_.resize(static_cast<std::size_t>(horizon) + 1);

    std::vector<NodeIndex> spec_to_node(specs.size(), no_node);
    std::deque<std::size_t> queue{root_spec};
    spec_to_node[root_spec] = 0;
    L.nodes_.push_back({specs[root_spec].id, 0, specs[root_spec].price, {}, no_node, 0});
    while (!queue.empty()) {
        const std::size_t k = queue.front();
        queue.pop_front();
        const NodeIndex self = spec_to_node[k];
        for (const auto& c : specs[k].successors) {
            const std::size_t ck = by_id.at(c);
            if (spec_to_node[ck] == no_node) {
                spec_to_node[ck] = L.nodes_.size();
                L.nodes_.push_back({specs[ck].id, specs[ck].time, specs[ck].price, {}, self, 0});
                queue.push_back(ck);
            }
            const NodeIndex child = spec_to_node[ck];
            L.nodes_[self].successors.push_back(child);
            if (++L.nodes_[child].in_degree > 1 && !recombine)
                throw ValidationError("node '" + specs[ck].id + "' has more than one predecessor");
        }
    }
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (alive[k] && spec_to_node[k] == no_node)
            throw ValidationError("node '" + specs[k].id + "' is unreachable from the root");
    }
    for (NodeIndex i = 0; i < L.nodes_.size(); ++i) {
        const Node& n = L.nodes_[i];
        if (n.time < horizon && n.successors.empty())
            throw ValidationError("node '" + n.id + "' at time " + std::to_string(n.time) +
                                  " has no successors");
        L.slices_[static_cast<std::size_t>(n.time)].push_back(i);
        L.index_.emplace(n.id, i);
    }
    out.aliases = std::move(alias);
    return out;
}

std::optional<NodeIndex> ScenarioLattice::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<Vec> ScenarioLattice::successor_prices(NodeIndex i) const {
    std::vector<Vec> out;
    for (NodeIndex c : nodes_[i].successors) out.push_back(nodes_[c].price);
    return out;
}

std::vector<Path> enumerate_paths(const ScenarioLattice& lattice) {
    std::vector<Path> paths;
    Path current{lattice.root()};
    // explicit stack of (node, next successor slot)
    std::vector<std::size_t> slot{0};
    while (!current.empty()) {
        const Node& n = lattice.node(current.back());
        if (n.successors.empty()) {
            paths.push_back(current);
            current.pop_back();
            slot.pop_back();
            continue;
        }
        std::size_t& s = slot.back();
        if (s == n.successors.size()) {
            current.pop_back();
            slot.pop_back();
            continue;
        }
        current.push_back(n.successors[s++]);
        slot.push_back(0);
    }
    return paths;
}

Path path_to(const ScenarioLattice& lattice, NodeIndex node) {
    Path p;
    for (NodeIndex i = node; i != no_node; i = lattice.node(i).parent) p.push_back(i);
    std::reverse(p.begin(), p.end());
    return p;
}

// ---- payoffs --------------------------------------------------------------

PayoffSpec PayoffSpec::call(double strike, std::size_t asset) {
    PayoffSpec p;
    p.kind = Kind::call;
    p.strike = strike;
    p.asset = asset;
    return p;
}

PayoffSpec PayoffSpec::put(double strike, std::size_t asset) {
    auto p = call(strike, asset);
    p.kind = Kind::put;
    return p;
}

PayoffSpec PayoffSpec::straddle(double strike, std::size_t asset) {
    auto p = call(strike, asset);
    p.kind = Kind::straddle;
    return p;
}

PayoffSpec PayoffSpec::linear(Vec weights, double intercept) {
    PayoffSpec p;
    p.kind = Kind::linear;
    p.weights = std::move(weights);
    p.intercept = intercept;
    return p;
}

PayoffSpec PayoffSpec::constant(double value) {
    PayoffSpec p;
    p.kind = Kind::constant;
    p.value = value;
    return p;
}

namespace {

constexpr std::pair<PayoffSpec::Kind, const char*> kPayoffNames[] = {
    {PayoffSpec::Kind::call, "call"},
    {PayoffSpec::Kind::put, "put"},
    {PayoffSpec::Kind::straddle, "straddle"},
    {PayoffSpec::Kind::linear, "linear"},
    {PayoffSpec::Kind::min, "min"},
    {PayoffSpec::Kind::max, "max"},
    {PayoffSpec::Kind::running_min, "running_min"},
    {PayoffSpec::Kind::running_max, "running_max"},
    {PayoffSpec::Kind::constant, "constant"},
    {PayoffSpec::Kind::table, "table"},
};

}  // namespace

std::string_view to_string(PayoffSpec::Kind k) {
    for (auto [kind, name] : kPayoffNames)
        if (kind == k) return name;
    return "unknown";
}

double evaluate_payoff(const PayoffSpec& payoff, const ScenarioLattice& lattice,
                       std::span<const NodeIndex> path) {
    const Node& leaf = lattice.node(path.back());
    const Vec& s = leaf.price;
    using K = PayoffSpec::Kind;
    auto asset_price = [&](const Vec& v) {
        if (payoff.asset >= v.size()) throw ValidationError("payoff asset index out of range");
        return v[payoff.asset];
    };
    switch (payoff.kind) {
        case K::call: return std::max(asset_price(s) - payoff.strike, 0.0);
        case K::put: return std::max(payoff.strike - asset_price(s), 0.0);
        case K::straddle: return std::abs(asset_price(s) - payoff.strike);
        case K::linear:
            if (payoff.weights.size() != s.size())
                throw ValidationError("linear payoff weights have wrong dimension");
            return dot(payoff.weights, s) + payoff.intercept;
        case K::min: return *std::min_element(s.begin(), s.end());
        case K::max: return *std::max_element(s.begin(), s.end());
        case K::running_min:
        case K::running_max: {
            double m = asset_price(lattice.node(path.front()).price);
            for (NodeIndex i : path) {
                const double v = asset_price(lattice.node(i).price);
                m = payoff.kind == K::running_min ? std::min(m, v) : std::max(m, v);
            }
            return m;
        }
        case K::constant: return payoff.value;
        case K::table: {
            auto it = payoff.table.find(leaf.id);
            if (it == payoff.table.end())
                throw ValidationError("payoff missing for terminal path '" + leaf.id + "'");
            return it->second;
        }
    }
    return 0.0;
}

std::vector<double> terminal_values(const PayoffSpec& payoff, const ScenarioLattice& lattice) {
    if (lattice.recombined() && payoff.path_dependent())
        throw ValidationError("path-dependent payoff on a recombined lattice");
    std::vector<double> out(lattice.size(), 0.0);
    for (NodeIndex leaf : lattice.leaves()) {
        double v;
        if (lattice.recombined()) {
            const NodeIndex one[] = {leaf};
            v = evaluate_payoff(payoff, lattice, one);
        } else {
            v = evaluate_payoff(payoff, lattice, path_to(lattice, leaf));
        }
        if (!std::isfinite(v))
            throw ValidationError("non-finite payoff at leaf '" + lattice.node(leaf).id + "'");
        out[leaf] = v;
    }
    return out;
}

// ---- priors / utilities ---------------------------------------------------

PriorFamily PriorFamily::uniform(const ScenarioLattice& lattice) {
    PriorFamily f;
    f.per_node.resize(lattice.size());
    for (NodeIndex i = 0; i < lattice.size(); ++i) {
        const std::size_t k = lattice.node(i).successors.size();
        if (k == 0) continue;
        f.per_node[i].push_back(Vec(k, 1.0 / static_cast<double>(k)));
    }
    return f;
}

UtilityProfile UtilityProfile::uniform(int horizon, const Utility& u) {
    UtilityProfile p;
    p.per_time.assign(static_cast<std::size_t>(horizon) + 1, u);
    return p;
}

const Utility& UtilityProfile::at(const ScenarioLattice& lattice, NodeIndex i) const {
    auto it = overrides.find(i);
    if (it != overrides.end()) return it->second;
    return per_time[static_cast<std::size_t>(lattice.node(i).time)];
}

bool UtilityProfile::strictly_concave() const {
    // time 0 carries no consumption
    for (std::size_t t = 1; t < per_time.size(); ++t)
        if (!per_time[t].strictly_concave()) return false;
    for (const auto& [node, u] : overrides)
        if (!u.strictly_concave()) return false;
    return true;
}

// ---- documents ------------------------------------------------------------

namespace {

double require_number(const json& params, const char* key, std::string_view what) {
    if (!params.is_object() || !params.contains(key))
        throw ValidationError("unbound symbol '" + std::string(key) + "' in " + std::string(what));
    if (!params[key].is_number())
        throw ValidationError("'" + std::string(key) + "' in " + std::string(what) + " must be a number");
    return params[key].get<double>();
}

double optional_number(const json& params, const char* key, double fallback) {
    if (params.is_object() && params.contains(key)) {
        if (!params[key].is_number())
            throw ValidationError("'" + std::string(key) + "' must be a number");
        return params[key].get<double>();
    }
    return fallback;
}

Vec number_array(const json& j, std::string_view what) {
    if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array");
    Vec v;
    for (const auto& x : j) {
        if (!x.is_number()) throw ValidationError(std::string(what) + " must contain numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

PayoffSpec parse_payoff(const json& j, const std::map<std::string, std::string>& aliases) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ValidationError("payoff needs a string 'kind'");
    const std::string kind = j["kind"];
    PayoffSpec p;
    bool known = false;
    for (auto [k, name] : kPayoffNames) {
        if (kind == name) {
            p.kind = k;
            known = true;
        }
    }
    if (!known) throw ValidationError("unknown payoff kind '" + kind + "'");
    const json params = j.value("params", json::object());
    const std::string what = "payoff '" + kind + "'";
    using K = PayoffSpec::Kind;
    switch (p.kind) {
        case K::call:
        case K::put:
        case K::straddle:
            p.strike = require_number(params, "strike", what);
            p.asset = static_cast<std::size_t>(optional_number(params, "asset", 0));
            break;
        case K::running_min:
        case K::running_max:
            p.asset = static_cast<std::size_t>(optional_number(params, "asset", 0));
            break;
        case K::linear:
            if (!params.contains("weights")) throw ValidationError("unbound symbol 'weights' in " + what);
            p.weights = number_array(params["weights"], "linear payoff weights");
            p.intercept = optional_number(params, "intercept", 0.0);
            break;
        case K::constant: p.value = require_number(params, "value", what); break;
        case K::min:
        case K::max: break;
        case K::table: {
            if (!j.contains("values") || !j["values"].is_object())
                throw ValidationError("table payoff needs an object 'values'");
            for (const auto& [key, v] : j["values"].items()) {
                if (!v.is_number()) throw ValidationError("table payoff values must be numbers");
                std::string id = key;
                for (auto it = aliases.find(id); it != aliases.end(); it = aliases.find(id))
                    id = it->second;
                const double val = v.get<double>();
                auto [pos, inserted] = p.table.emplace(id, val);
                if (!inserted && pos->second != val)
                    throw ValidationError("conflicting payoff values for merged path '" + id + "'");
            }
            break;
        }
    }
    return p;
}

json payoff_to_json(const PayoffSpec& p) {
    using K = PayoffSpec::Kind;
    json j;
    j["kind"] = std::string(to_string(p.kind));
    json params = json::object();
    switch (p.kind) {
        case K::call:
        case K::put:
        case K::straddle:
            params["strike"] = p.strike;
            params["asset"] = p.asset;
            break;
        case K::running_min:
        case K::running_max: params["asset"] = p.asset; break;
        case K::linear:
            params["weights"] = p.weights;
            params["intercept"] = p.intercept;
            break;
        case K::constant: params["value"] = p.value; break;
        case K::min:
        case K::max: break;
        case K::table: {
            json values = json::object();
            for (const auto& [k, v] : p.table) values[k] = v;
            j["values"] = values;
            return j;
        }
    }
    j["params"] = params;
    return j;
}

Utility parse_utility(const std::string& family, const json& params) {
    const std::string what = "utility '" + family + "'";
    if (family == "exponential") return Utility::exponential(require_number(params, "gamma", what));
    if (family == "power_bounded") return Utility::power_bounded(optional_number(params, "scale", 1.0));
    if (family == "linear") return Utility::linear(optional_number(params, "slope", 1.0));
    if (family == "piecewise_linear") {
        if (!params.contains("x")) throw ValidationError("unbound symbol 'x' in " + what);
        if (!params.contains("y")) throw ValidationError("unbound symbol 'y' in " + what);
        return Utility::piecewise_linear(number_array(params["x"], "utility x"),
                                         number_array(params["y"], "utility y"));
    }
    throw ValidationError("unknown utility family '" + family + "'");
}

Utility parse_utility(const json& j) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
        throw ValidationError("utility entry needs a string 'family'");
    return parse_utility(j["family"].get<std::string>(), j.value("params", json::object()));
}

json utility_to_json(const Utility& u) {
    json params = json::object();
    switch (u.family()) {
        case Utility::Family::exponential: params["gamma"] = u.gamma(); break;
        case Utility::Family::power_bounded: params["scale"] = u.scale(); break;
        case Utility::Family::linear: params["slope"] = u.scale(); break;
        case Utility::Family::piecewise_linear:
            params["x"] = u.xs();
            params["y"] = u.ys();
            break;
    }
    return {{"family", std::string(u.family_name())}, {"params", params}};
}

UtilityProfile parse_utility_profile(const json& j, const ScenarioLattice& lattice,
                                     const std::map<std::string, std::string>& aliases) {
    if (!j.is_object()) throw ValidationError("utility must be an object");
    const std::size_t times = static_cast<std::size_t>(lattice.horizon()) + 1;
    UtilityProfile prof;
    if (j.contains("per_time")) {
        if (!j["per_time"].is_array() || j["per_time"].size() != times)
            throw ValidationError("utility per_time needs horizon + 1 entries");
        for (const auto& e : j["per_time"]) prof.per_time.push_back(parse_utility(e));
    } else {
        if (!j.contains("family") || !j["family"].is_string())
            throw ValidationError("utility needs a string 'family'");
        const std::string family = j["family"];
        const json params = j.value("params", json::object());
        if (params.is_array()) {
            if (params.size() != times)
                throw ValidationError("utility params per time need horizon + 1 entries");
            for (const auto& p : params) prof.per_time.push_back(parse_utility(family, p));
        } else {
            prof.per_time.assign(times, parse_utility(family, params));
        }
    }
    if (prof.per_time.front().value(0.0) != 0.0)
        throw ValidationError("time-0 utility must satisfy u(0) = 0");
    if (j.contains("overrides")) {
        if (!j["overrides"].is_object()) throw ValidationError("utility overrides must be an object");
        for (const auto& [key, v] : j["overrides"].items()) {
            std::string id = key;
            for (auto it = aliases.find(id); it != aliases.end(); it = aliases.find(id)) id = it->second;
            auto idx = lattice.find(id);
            if (!idx) throw ValidationError("utility override for unknown node '" + key + "'");
            prof.overrides.insert_or_assign(*idx, parse_utility(v));
        }
    }
    return prof;
}

PriorFamily parse_priors(const json& j, const ScenarioLattice& lattice,
                         const std::map<std::string, std::string>& aliases,
                         const std::map<std::string, std::vector<std::string>>& doc_successors) {
    if (!j.is_object()) throw ValidationError("priors_u must be an object");
    PriorFamily fam = PriorFamily::uniform(lattice);
    auto resolve = [&](std::string id) {
        for (auto it = aliases.find(id); it != aliases.end(); it = aliases.find(id)) id = it->second;
        return id;
    };
    for (const auto& [key, lists] : j.items()) {
        if (aliases.count(key))
            throw ValidationError("priors given for merged duplicate node '" + key + "'");
        auto idx = lattice.find(key);
        if (!idx) throw ValidationError("priors for unknown node '" + key + "'");
        const Node& n = lattice.node(*idx);
        if (n.successors.empty()) throw ValidationError("priors given for terminal node '" + key + "'");
        if (!lists.is_array() || lists.empty())
            throw ValidationError("priors for node '" + key + "' must be a non-empty array");
        const auto ds = doc_successors.find(key);
        const std::vector<std::string>* original = ds != doc_successors.end() ? &ds->second : nullptr;
        std::vector<Vec> out;
        for (const auto& pj : lists) {
            const Vec p = number_array(pj, "prior vector");
            const std::size_t expected = original ? original->size() : n.successors.size();
            if (p.size() != expected)
                throw ValidationError("prior vector at node '" + key + "' has " +
                                      std::to_string(p.size()) + " entries, expected " +
                                      std::to_string(expected));
            double mass = 0.0;
            for (double q : p) {
                if (!std::isfinite(q) || q < 0.0)
                    throw ValidationError("negative probability at node '" + key + "'");
                mass += q;
            }
            if (std::abs(mass - 1.0) > 1e-12)
                throw ValidationError("probability mass " + fmt(mass) + " ≠ 1 at node '" + key + "'");
            Vec merged(n.successors.size(), 0.0);
            for (std::size_t k = 0; k < p.size(); ++k) {
                const std::string target = original ? resolve((*original)[k])
                                                    : lattice.node(n.successors[k]).id;
                for (std::size_t c = 0; c < n.successors.size(); ++c)
                    if (lattice.node(n.successors[c]).id == target) merged[c] += p[k];
            }
            out.push_back(std::move(merged));
        }
        fam.per_node[*idx] = std::move(out);
    }
    return fam;
}

std::vector<NodeSpec> crr_specs(int horizon, double u, double d, double s0) {
    std::vector<NodeSpec> specs{{"r", 0, {s0}, {}}};
    std::vector<std::size_t> frontier{0};
    for (int t = 0; t < horizon; ++t) {
        std::vector<std::size_t> next;
        for (std::size_t k : frontier) {
            const std::string id = specs[k].id;
            const double s = specs[k].price[0];
            specs[k].successors = {id + "u", id + "d"};
            specs.push_back({id + "u", t + 1, {s * u}, {}});
            next.push_back(specs.size() - 1);
            specs.push_back({id + "d", t + 1, {s * d}, {}});
            next.push_back(specs.size() - 1);
        }
        frontier = std::move(next);
    }
    return specs;
}

void check_generator_params(int horizon, double u, double d, double s0) {
    if (horizon < 1) throw ValidationError("horizon must be ≥ 1");
    if (!(s0 > 0.0)) throw ValidationError("generator needs s0 > 0");
    if (!(d >= 0.0) || !(u >= d)) throw ValidationError("generator needs 0 ≤ d ≤ u");
}

}  // namespace

ScenarioLattice make_crr_lattice(int horizon, double u, double d, double s0, bool recombine) {
    check_generator_params(horizon, u, d, s0);
    return ScenarioLattice::from_specs(horizon, 1, {s0}, crr_specs(horizon, u, d, s0), recombine)
        .lattice;
}

ScenarioLattice make_interval_grid_lattice(int horizon, double u, double d, double s0,
                                           int points) {
    check_generator_params(horizon, u, d, s0);
    if (points < 2) throw ValidationError("interval grid needs at least 2 points");
    std::vector<NodeSpec> specs{{"r", 0, {s0}, {}}};
    std::vector<std::size_t> frontier{0};
    for (int t = 0; t < horizon; ++t) {
        std::vector<std::size_t> next;
        for (std::size_t k : frontier) {
            const std::string id = specs[k].id;
            const double s = specs[k].price[0];
            for (int j = 0; j < points; ++j) {
                const double y = s * (d + (u - d) * j / (points - 1));
                const std::string cid = id + "." + std::to_string(j);
                specs[k].successors.push_back(cid);
                specs.push_back({cid, t + 1, {y}, {}});
                next.push_back(specs.size() - 1);
            }
        }
        frontier = std::move(next);
    }
    return ScenarioLattice::from_specs(horizon, 1, {s0}, std::move(specs)).lattice;
}

Model load_model(const json& doc) {
    if (!doc.is_object()) throw ValidationError("model document must be a JSON object");
    ScenarioLattice::Build built;
    std::map<std::string, std::vector<std::string>> doc_successors;
    const bool recombine = doc.value("recombine", false);
    if (doc.contains("generator")) {
        const std::string gen = doc["generator"].is_string() ? doc["generator"].get<std::string>() : "";
        const std::string what = "generator '" + gen + "'";
        const int T = static_cast<int>(require_number(doc, "T", what));
        const double u = require_number(doc, "u", what);
        const double d = require_number(doc, "d", what);
        const double s0 = require_number(doc, "s0", what);
        check_generator_params(T, u, d, s0);
        if (gen == "crr") {
            built = ScenarioLattice::from_specs(T, 1, {s0}, crr_specs(T, u, d, s0), recombine);
        } else if (gen == "interval_grid") {
            const int points = static_cast<int>(require_number(doc, "points", what));
            built.lattice = make_interval_grid_lattice(T, u, d, s0, points);
        } else {
            throw ValidationError("unknown generator '" + gen + "'");
        }
    } else {
        for (const char* key : {"horizon", "dimension", "root_price", "nodes"})
            if (!doc.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
        if (!doc["horizon"].is_number_integer()) throw ValidationError("horizon must be an integer");
        if (!doc["dimension"].is_number_integer()) throw ValidationError("dimension must be an integer");
        const int horizon = doc["horizon"].get<int>();
        const long dim = doc["dimension"].get<long>();
        if (dim < 1) throw ValidationError("dimension must be ≥ 1");
        const Vec root = number_array(doc["root_price"], "root_price");
        if (!doc["nodes"].is_array()) throw ValidationError("nodes must be an array");
        std::vector<NodeSpec> specs;
        for (const auto& nj : doc["nodes"]) {
            if (!nj.is_object() || !nj.contains("id") || !nj.contains("time") || !nj.contains("price"))
                throw ValidationError("node entries need id, time and price");
            NodeSpec s;
            s.id = nj["id"].is_string() ? nj["id"].get<std::string>() : nj["id"].dump();
            if (!nj["time"].is_number_integer()) throw ValidationError("node time must be an integer");
            s.time = nj["time"].get<int>();
            s.price = number_array(nj["price"], "node price");
            if (nj.contains("successors")) {
                if (!nj["successors"].is_array()) throw ValidationError("successors must be an array");
                for (const auto& c : nj["successors"])
                    s.successors.push_back(c.is_string() ? c.get<std::string>() : c.dump());
            }
            doc_successors[s.id] = s.successors;
            specs.push_back(std::move(s));
        }
        built = ScenarioLattice::from_specs(horizon, static_cast<std::size_t>(dim), root,
                                            std::move(specs), recombine);
    }

    Model m{std::move(built.lattice), std::nullopt, std::nullopt, std::nullopt};
    if (doc.contains("payoff")) {
        m.payoff = parse_payoff(doc["payoff"], built.aliases);
        terminal_values(*m.payoff, m.lattice);  // every leaf must evaluate
    }
    if (doc.contains("priors_u"))
        m.priors = parse_priors(doc["priors_u"], m.lattice, built.aliases, doc_successors);
    if (doc.contains("utility"))
        m.utility = parse_utility_profile(doc["utility"], m.lattice, built.aliases);
    return m;
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
    }
    return load_model(doc);
}

json serialize_model(const Model& model) {
    const ScenarioLattice& L = model.lattice;
    json doc;
    doc["horizon"] = L.horizon();
    doc["dimension"] = L.dimension();
    doc["root_price"] = L.node(L.root()).price;
    if (L.recombined()) doc["recombine"] = true;
    json nodes = json::array();
    for (const Node& n : L.nodes()) {
        json succ = json::array();
        for (NodeIndex c : n.successors) succ.push_back(L.node(c).id);
        nodes.push_back({{"id", n.id}, {"time", n.time}, {"price", n.price}, {"successors", succ}});
    }
    doc["nodes"] = nodes;
    if (model.payoff) doc["payoff"] = payoff_to_json(*model.payoff);
    if (model.priors) {
        json pj = json::object();
        for (NodeIndex i = 0; i < L.size(); ++i)
            if (!model.priors->at(i).empty()) pj[L.node(i).id] = model.priors->at(i);
        doc["priors_u"] = pj;
    }
    if (model.utility) {
        json per = json::array();
        for (const auto& u : model.utility->per_time) per.push_back(utility_to_json(u));
        json uj{{"per_time", per}};
        if (!model.utility->overrides.empty()) {
            json ov = json::object();
            for (const auto& [i, u] : model.utility->overrides) ov[L.node(i).id] = utility_to_json(u);
            uj["overrides"] = ov;
        }
        doc["utility"] = uj;
    }
    return doc;
}

}  // namespace suphedge
