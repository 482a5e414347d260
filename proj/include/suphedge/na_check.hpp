#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suphedge/linalg.hpp"
#include "suphedge/model.hpp"

namespace suphedge {

/// Verdict for one node: is 0 in the relative interior of conv{y_i - s}?
struct NodeCheck {
    bool ok = true;
    /// optimal minimum weight of a strictly positive barycentric representation
    double margin = 0.0;
    /// H with H.(y_i - s) >= 0 for all i, > 0 for some; present when !ok
    std::optional<Vec> certificate;
    /// 0 sits (numerically) on the relative boundary; the certificate may be weak
    bool borderline = false;
};

struct NaReport {
    struct Failure {
        NodeIndex node;
        std::string id;
        Vec certificate;
        bool borderline;
    };
    bool global_ok = true;
    std::vector<Failure> failures;
};

inline constexpr double kInteriorThreshold = 1e-10;

NodeCheck check_node(std::span<const Vec> support, std::span<const double> current);

/// Arithmetic re-check of a certificate, independent of any LP.
bool certificate_valid(std::span<const Vec> support, std::span<const double> current,
                       std::span<const double> H);

/// Checks every non-terminal node; nodes are examined in parallel.
NaReport check_lattice(const ScenarioLattice& lattice);

}  // namespace suphedge
