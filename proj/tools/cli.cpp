#include "cli.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "suphedge/errors.hpp"
#include "suphedge/model.hpp"
#include "suphedge/na_check.hpp"
#include "suphedge/parallel.hpp"
#include "suphedge/superhedge.hpp"
#include "suphedge/value_recursion.hpp"

namespace suphedge::cli {

namespace {

using json = nlohmann::json;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + '"';
}

class Table {
public:
    explicit Table(std::vector<std::string> header) { row(std::move(header)); }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << field(cells[k]);
        out_ << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ValidationError("cannot write '" + tmp + "'");
        f << content;
        f.flush();
        if (!f) throw ValidationError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ValidationError("cannot move report into '" + path + "': " + ec.message());
    }
}

std::vector<std::string> indexed(const std::string& stem, std::size_t d) {
    std::vector<std::string> names;
    for (std::size_t k = 1; k <= d; ++k) names.push_back(stem + std::to_string(k));
    return names;
}

void append(std::vector<std::string>& row, const Vec& values, std::size_t d) {
    for (std::size_t k = 0; k < d; ++k) row.push_back(k < values.size() ? num(values[k]) : "");
}

void require_tree(const ScenarioLattice& L, const std::string& command) {
    if (L.recombined()) throw ValidationError("'" + command + "' needs a non-recombined lattice");
}

struct Context {
    const RunConfig& cfg;
    Model model;
    json summary;
    std::vector<double> terminal;

    const ScenarioLattice& L() const { return model.lattice; }

    void load_terminal() {
        if (!model.payoff) throw ValidationError("model has no payoff");
        terminal = terminal_values(*model.payoff, L());
    }
};

std::string check_na_table(Context& ctx, bool& all_ok) {
    const ScenarioLattice& L = ctx.L();
    const std::size_t d = L.dimension();
    std::vector<std::string> header{"node_id", "time", "ok", "margin", "borderline"};
    for (auto& h : indexed("certificate_", d)) header.push_back(h);
    Table t(header);
    std::vector<NodeIndex> inner;
    for (NodeIndex i = 0; i < L.size(); ++i)
        if (!L.is_terminal(i)) inner.push_back(i);
    std::vector<NodeCheck> checks(inner.size());
    parallel_for(inner.size(), [&](std::size_t k) {
        const auto pts = L.successor_prices(inner[k]);
        checks[k] = check_node(pts, L.node(inner[k]).price);
    });
    all_ok = true;
    json failures = json::array();
    for (std::size_t k = 0; k < inner.size(); ++k) {
        const Node& n = L.node(inner[k]);
        const NodeCheck& c = checks[k];
        std::vector<std::string> row{n.id, std::to_string(n.time), c.ok ? "1" : "0", num(c.margin),
                                     c.borderline ? "1" : "0"};
        append(row, c.certificate.value_or(Vec{}), d);
        t.row(row);
        if (c.ok) continue;
        all_ok = false;
        const auto pts = L.successor_prices(inner[k]);
        const bool verified = c.certificate && certificate_valid(pts, n.price, *c.certificate);
        std::ostringstream msg;
        msg << "arbitrage at node '" << n.id << "': certificate H = (";
        for (std::size_t j = 0; c.certificate && j < c.certificate->size(); ++j)
            msg << (j ? ", " : "") << num((*c.certificate)[j]);
        msg << ")" << (verified ? " verified" : " NOT verified");
        std::cerr << msg.str() << '\n';
        failures.push_back({{"node", n.id}, {"certificate", c.certificate.value_or(Vec{})}, {"verified", verified}});
    }
    ctx.summary["na_ok"] = all_ok;
    ctx.summary["failures"] = failures;
    return t.str();
}

std::string price_table(Context& ctx, const PriceSurface& s) {
    const ScenarioLattice& L = ctx.L();
    const std::size_t d = L.dimension();
    std::vector<std::string> header{"node_id", "time"};
    for (auto& h : indexed("S_", d)) header.push_back(h);
    header.push_back("pi");
    header.push_back("dual");
    for (auto& h : indexed("H_", d)) header.push_back(h);
    Table t(header);
    for (NodeIndex i = 0; i < L.size(); ++i) {
        const Node& n = L.node(i);
        std::vector<std::string> row{n.id, std::to_string(n.time)};
        append(row, n.price, d);
        row.push_back(num(s.pi[i]));
        row.push_back(num(s.dual[i]));
        append(row, s.hedge[i], L.is_terminal(i) ? 0 : d);
        for (std::size_t k = L.is_terminal(i) ? 0 : d; k < d; ++k) row.push_back("");
        t.row(row);
    }
    return t.str();
}

std::string hedge_table(Context& ctx, const PriceSurface& surface, const HedgePlan& plan) {
    const ScenarioLattice& L = ctx.L();
    const std::size_t d = L.dimension();
    std::vector<std::string> header{"node_id", "time"};
    for (auto& h : indexed("S_", d)) header.push_back(h);
    header.push_back("pi");
    for (auto& h : indexed("H_", d)) header.push_back(h);
    header.push_back("V");
    header.push_back("C");
    Table t(header);
    for (NodeIndex i = 0; i < L.size(); ++i) {
        const Node& n = L.node(i);
        std::vector<std::string> row{n.id, std::to_string(n.time)};
        append(row, n.price, d);
        row.push_back(num(surface.pi[i]));
        const bool leaf = L.is_terminal(i);
        for (std::size_t k = 0; k < d; ++k) row.push_back(leaf ? "" : num(plan.strategy.hedge[i][k]));
        row.push_back(num(plan.wealth[i]));
        row.push_back(num(plan.strategy.consumption[i]));
        t.row(row);
    }
    return t.str();
}

std::string dual_table(Context& ctx, const PriceSurface& s) {
    const ScenarioLattice& L = ctx.L();
    Table t({"node_id", "time", "pi", "dual", "successor_id", "weight"});
    double worst = 0.0;
    for (NodeIndex i = 0; i < L.size(); ++i) {
        if (L.is_terminal(i)) continue;
        const Node& n = L.node(i);
        worst = std::max(worst, std::abs(s.pi[i] - s.dual[i]));
        for (std::size_t k = 0; k < n.successors.size(); ++k)
            t.row({n.id, std::to_string(n.time), num(s.pi[i]), num(s.dual[i]), L.node(n.successors[k]).id,
                   num(s.weights[i][k])});
    }
    ctx.summary["max_primal_dual_diff"] = worst;
    return t.str();
}

RecursionResult optimize(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    Model& m = ctx.model;
    if (!m.priors) {
        std::cerr << "note: model has no priors_u; using uniform priors\n";
        m.priors = PriorFamily::uniform(m.lattice);
    }
    if (!m.utility) {
        std::cerr << "note: model has no utility; using exponential utility with gamma 1\n";
        m.utility = UtilityProfile::uniform(m.lattice.horizon(), Utility::exponential(1.0));
    }
    RecursionOptions o;
    o.grid_n = cfg.grid_n;
    o.wealth_span = cfg.wmax.value_or(0.0);
    o.initial_wealth = cfg.x;
    o.maxmin.seed = cfg.seed;
    o.maxmin.multistarts = cfg.multistarts;
    if (cfg.tol) o.maxmin.tol = *cfg.tol;
    if (cfg.max_iterations) o.maxmin.max_iterations = *cfg.max_iterations;
    RecursionResult r = value_recursion(m.lattice, ctx.terminal, *m.priors, *m.utility, o);
    ctx.summary["pi0"] = r.prices.root_price();
    ctx.summary["initial_wealth"] = r.initial_wealth;
    ctx.summary["wealth_span"] = r.wealth_span;
    ctx.summary["value"] = r.value;
    ctx.summary["policy_value"] = r.policy_value;
    ctx.summary["gap"] = r.max_gap;
    ctx.summary["solves"] = r.solves;
    ctx.summary["unconverged"] = r.unconverged;
    ctx.summary["beyond_grid"] = r.beyond_grid;
    if (r.beyond_grid > 0)
        std::cerr << "warning: " << r.beyond_grid << " nodes reached wealth above their grid; raise --wmax\n";
    return r;
}

std::string optimize_table(Context& ctx, const RecursionResult& r) {
    const ScenarioLattice& L = ctx.L();
    const std::size_t d = L.dimension();
    std::vector<std::string> header{"node_id", "time", "pi", "grid_min", "grid_max", "value_min", "value_max",
                                    "wealth", "consumption"};
    for (auto& h : indexed("H_", d)) header.push_back(h);
    header.push_back("worst_index");
    Table t(header);
    for (NodeIndex i = 0; i < L.size(); ++i) {
        const Node& n = L.node(i);
        const bool leaf = L.is_terminal(i);
        std::vector<std::string> row{n.id, std::to_string(n.time), num(r.prices.pi[i])};
        if (leaf) {
            row.insert(row.end(), 4, "");
        } else {
            const Vec& xs = r.surface.grid[i];
            const Vec& vs = r.surface.values[i];
            row.push_back(num(xs.front()));
            row.push_back(num(xs.back()));
            row.push_back(num(vs.front()));
            row.push_back(num(vs.back()));
        }
        row.push_back(num(r.policy.wealth[i]));
        row.push_back(num(r.policy.consumption[i]));
        for (std::size_t k = 0; k < d; ++k) row.push_back(leaf ? "" : num(r.policy.hedge[i][k]));
        row.push_back(leaf ? "" : std::to_string(r.worst.index[i]));
        t.row(row);
    }
    return t.str();
}

int dispatch(Context& ctx, std::string& csv) {
    const std::string& cmd = ctx.cfg.command;
    if (cmd == "check-na") {
        bool ok = true;
        csv = check_na_table(ctx, ok);
        std::cout << (ok ? "no arbitrage" : "arbitrage detected") << '\n';
        return ok ? exit_ok : exit_arbitrage;
    }
    ctx.load_terminal();
    if (cmd == "price" || cmd == "dual") {
        const PriceSurface s = price(ctx.L(), ctx.terminal);
        ctx.summary["pi0"] = s.root_price();
        csv = cmd == "price" ? price_table(ctx, s) : dual_table(ctx, s);
        std::cout << "pi0 = " << num(s.root_price()) << '\n';
        return exit_ok;
    }
    require_tree(ctx.L(), cmd);
    if (cmd == "hedge") {
        const PriceSurface s = price(ctx.L(), ctx.terminal);
        const HedgePlan plan = minimal_strategy(ctx.L(), s);
        ctx.summary["pi0"] = plan.initial_capital;
        csv = hedge_table(ctx, s, plan);
        std::cout << "pi0 = " << num(plan.initial_capital) << '\n';
        return exit_ok;
    }
    if (cmd == "verify") {
        const HedgePlan plan = minimal_strategy(ctx.L(), price(ctx.L(), ctx.terminal));
        const double x = ctx.cfg.x.value_or(plan.initial_capital);
        const VerifyReport rep = verify_superhedge(ctx.L(), ctx.terminal, x, plan.strategy);
        const ScenarioLattice& L = ctx.L();
        Table t({"leaf_id", "wealth", "payoff", "slack"});
        for (NodeIndex leaf : L.leaves()) {
            const auto v = wealth_path(L, x, plan.strategy, path_to(L, leaf));
            t.row({L.node(leaf).id, num(v.back()), num(ctx.terminal[leaf]), num(v.back() - ctx.terminal[leaf])});
        }
        csv = t.str();
        const std::string verdict = rep.pass ? "PASS" : "FAIL";
        ctx.summary["pi0"] = plan.initial_capital;
        ctx.summary["x"] = x;
        ctx.summary["verdict"] = verdict;
        ctx.summary["worst_slack"] = rep.min_slack;
        ctx.summary["worst_leaf"] = L.node(rep.worst_path.back()).id;
        ctx.summary["consumption_ok"] = rep.consumption_ok;
        std::cout << verdict << ", worst slack " << num(rep.min_slack) << '\n';
        return exit_ok;
    }
    if (cmd == "optimize" || cmd == "report") {
        const RecursionResult r = optimize(ctx);
        if (cmd == "optimize") {
            csv = optimize_table(ctx, r);
        } else {
            csv = "# price\n" + price_table(ctx, r.prices) + "\n# hedge\n" +
                  hedge_table(ctx, r.prices, minimal_strategy(ctx.L(), r.prices)) + "\n# optimize\n" + optimize_table(ctx, r);
        }
        std::cout << "U0 = " << num(r.value) << ", policy value " << num(r.policy_value) << ", minimax gap "
                  << num(r.max_gap) << '\n';
        if (r.unconverged > 0) {
            std::cerr << r.unconverged << " of " << r.solves << " one-step solves did not converge\n";
            return exit_not_converged;
        }
        return exit_ok;
    }
    throw ValidationError("unknown command '" + cmd + "'");
}

const char* status_name(int code) {
    switch (code) {
        case exit_ok: return "ok";
        case exit_arbitrage: return "arbitrage";
        case exit_invalid: return "invalid";
        case exit_not_converged: return "not_converged";
        default: return "error";
    }
}

}  // namespace

int run(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.threads < 0) {
        std::cerr << "error: --threads must be >= 0\n";
        return exit_invalid;
    }
    set_num_threads(cfg.threads);
    Context ctx{cfg, {}, json::object(), {}};
    ctx.summary["command"] = cfg.command;
    std::string csv;
    int code = exit_ok;
    try {
        if (cfg.out_path.empty()) throw ValidationError("--out is required");
        if (cfg.grid_n < 2) throw ValidationError("--grid-n must be at least 2");
        if (cfg.multistarts < 0) throw ValidationError("--multistarts must be >= 0");
        if (cfg.tol && !(*cfg.tol > 0.0)) throw ValidationError("--tol must be positive");
        if (cfg.wmax && !(*cfg.wmax > 0.0)) throw ValidationError("--wmax must be positive");
        if (cfg.max_iterations && *cfg.max_iterations < 1) throw ValidationError("--max-iter must be >= 1");
        ctx.model = load_model_file(cfg.model_path);
        code = dispatch(ctx, csv);
    } catch (const ArbitrageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        for (const auto& id : e.nodes()) std::cerr << "  arbitrage at node '" << id << "'\n";
        ctx.summary["arbitrage_nodes"] = e.nodes();
        code = exit_arbitrage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        ctx.summary["message"] = e.what();
        code = exit_invalid;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        ctx.summary["message"] = e.what();
        code = exit_not_converged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        ctx.summary["message"] = e.what();
        code = exit_failure;
    }
    ctx.summary["status"] = status_name(code);
    if (cfg.timings)
        ctx.summary["timings"] = {
            {"total_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
            {"threads", num_threads()}};
    if (cfg.out_path.empty()) return code;
    try {
        if (!csv.empty()) write_atomic(cfg.out_path, csv);
        write_atomic(cfg.out_path + ".summary.json", ctx.summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return code;
}

}  // namespace suphedge::cli
