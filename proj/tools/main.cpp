#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
    suphedge::cli::RunConfig cfg;
    CLI::App app{"Superhedging prices, hedges and robust utility optimisation on scenario lattices"};
    app.add_option("--cmd", cfg.command, "check-na | price | hedge | verify | dual | optimize | report")
        ->required()
        ->check(CLI::IsMember({"check-na", "price", "hedge", "verify", "dual", "optimize", "report"}));
    app.add_option("--model", cfg.model_path, "model JSON document")->required();
    app.add_option("--out", cfg.out_path, "CSV report path; the run summary goes to <out>.summary.json")->required();
    app.add_option("--tol", cfg.tol, "optimizer stopping tolerance");
    app.add_option("--grid-n", cfg.grid_n, "wealth grid points per node")->capture_default_str();
    app.add_option("--wmax", cfg.wmax, "wealth grid width above each node's price (default max(pi_0, x - pi_0, 0) + 10)");
    app.add_option("--seed", cfg.seed, "optimizer seed")->capture_default_str();
    app.add_option("--threads", cfg.threads, "OpenMP threads, 0 = all cores")->capture_default_str();
    app.add_option("--multistarts", cfg.multistarts, "random initial cuts per successor")->capture_default_str();
    app.add_option("--max-iter", cfg.max_iterations, "cutting-plane rounds per one-step solve (default 600)");
    app.add_option("--x", cfg.x, "initial wealth for verify and optimize (default pi_0)");
    app.add_flag("--timings", cfg.timings, "record wall-clock timings in the run summary");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : suphedge::cli::exit_invalid;
    }
    return suphedge::cli::run(cfg);
}
