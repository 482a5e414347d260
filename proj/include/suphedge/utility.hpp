#pragma once

#include <string>
#include <string_view>

#include "suphedge/linalg.hpp"

namespace suphedge {

/// Concave non-decreasing utility on [0, inf), -inf below zero.
class Utility {
public:
    enum class Family { exponential, power_bounded, piecewise_linear, linear };

    static Utility exponential(double gamma);
    /// scale * x / (1 + x)
    static Utility power_bounded(double scale = 1.0);
    /// Breakpoints must start at x = 0; beyond the last breakpoint the last slope continues.
    static Utility piecewise_linear(Vec xs, Vec ys);
    static Utility linear(double slope);

    Family family() const { return family_; }
    std::string_view family_name() const;

    double value(double x) const;
    /// A supergradient at x >= 0 (right derivative at kinks).
    double slope(double x) const;
    bool strictly_concave() const;
    bool bounded_above() const;

    double gamma() const { return a_; }
    double scale() const { return a_; }
    const Vec& xs() const { return xs_; }
    const Vec& ys() const { return ys_; }

    bool operator==(const Utility&) const = default;

private:
    Utility() = default;
    Family family_ = Family::linear;
    double a_ = 1.0;
    Vec xs_, ys_;
};

}  // namespace suphedge
