#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace suphedge {

/// Malformed model document or a violated model invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One-step no-arbitrage fails at the listed nodes; prices are undefined there.
class ArbitrageError : public std::runtime_error {
public:
    ArbitrageError(const std::string& what, std::vector<std::string> nodes)
        : std::runtime_error(what), nodes_(std::move(nodes)) {}
    const std::vector<std::string>& nodes() const { return nodes_; }

private:
    std::vector<std::string> nodes_;
};

/// LP breakdown or an optimizer that did not reach its stopping tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace suphedge
