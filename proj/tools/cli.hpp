#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace suphedge::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_arbitrage = 2,
    exit_invalid = 3,
    exit_not_converged = 4,
};

struct RunConfig {
    std::string command;
    std::string model_path;
    std::string out_path;
    std::optional<double> tol;
    int grid_n = 129;
    std::optional<double> wmax;
    std::uint64_t seed = 1;
    int threads = 0;
    int multistarts = 5;
    /// cutting-plane rounds per one-step solve
    std::optional<int> max_iterations;
    /// initial wealth for verify and optimize; pi_0 when unset
    std::optional<double> x;
    /// add wall-clock timings to the run summary
    bool timings = false;
};

/// Executes one command. Writes the CSV to `out_path` and the run summary to
/// `out_path + ".summary.json"`, each through a temporary file and a rename.
/// Diagnostics go to stderr, one-line results to stdout.
int run(const RunConfig& config);

}  // namespace suphedge::cli
