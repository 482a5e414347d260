#include "suphedge/utility.hpp"

#include <cmath>
#include <limits>

#include "suphedge/errors.hpp"

namespace suphedge {

Utility Utility::exponential(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ValidationError("exponential utility needs gamma > 0");
    Utility u;
    u.family_ = Family::exponential;
    u.a_ = gamma;
    return u;
}

Utility Utility::power_bounded(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw ValidationError("power_bounded utility needs scale > 0");
    Utility u;
    u.family_ = Family::power_bounded;
    u.a_ = scale;
    return u;
}

Utility Utility::piecewise_linear(Vec xs, Vec ys) {
    if (xs.size() < 2 || xs.size() != ys.size())
        throw ValidationError("piecewise_linear utility needs >= 2 matching breakpoints");
    if (xs.front() != 0.0) throw ValidationError("piecewise_linear utility must start at x = 0");
    double prev_slope = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        if (!(xs[k + 1] > xs[k])) throw ValidationError("piecewise_linear breakpoints must increase");
        const double s = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        if (s < 0.0) throw ValidationError("piecewise_linear utility must be non-decreasing");
        if (s > prev_slope + 1e-12) throw ValidationError("piecewise_linear utility must be concave");
        prev_slope = s;
    }
    Utility u;
    u.family_ = Family::piecewise_linear;
    u.xs_ = std::move(xs);
    u.ys_ = std::move(ys);
    return u;
}

Utility Utility::linear(double slope) {
    if (!(slope >= 0.0)) throw ValidationError("linear utility needs slope >= 0");
    Utility u;
    u.family_ = Family::linear;
    u.a_ = slope;
    return u;
}

std::string_view Utility::family_name() const {
    switch (family_) {
        case Family::exponential: return "exponential";
        case Family::power_bounded: return "power_bounded";
        case Family::piecewise_linear: return "piecewise_linear";
        case Family::linear: return "linear";
    }
    return "unknown";
}

double Utility::value(double x) const {
    if (x < 0.0) return -std::numeric_limits<double>::infinity();
    switch (family_) {
        case Family::exponential: return -std::expm1(-a_ * x);
        case Family::power_bounded: return a_ * x / (1.0 + x);
        case Family::linear: return a_ * x;
        case Family::piecewise_linear: {
            std::size_t k = 0;
            while (k + 2 < xs_.size() && x > xs_[k + 1]) ++k;
            const double s = (ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]);
            return ys_[k] + s * (x - xs_[k]);
        }
    }
    return 0.0;
}

double Utility::slope(double x) const {
    x = std::max(x, 0.0);
    switch (family_) {
        case Family::exponential: return a_ * std::exp(-a_ * x);
        case Family::power_bounded: return a_ / ((1.0 + x) * (1.0 + x));
        case Family::linear: return a_;
        case Family::piecewise_linear: {
            std::size_t k = 0;
            while (k + 2 < xs_.size() && x >= xs_[k + 1]) ++k;
            return (ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]);
        }
    }
    return 0.0;
}

bool Utility::strictly_concave() const {
    return family_ == Family::exponential || family_ == Family::power_bounded;
}

bool Utility::bounded_above() const {
    switch (family_) {
        case Family::exponential:
        case Family::power_bounded: return true;
        case Family::linear: return a_ == 0.0;
        case Family::piecewise_linear:
            return ys_[ys_.size() - 1] == ys_[ys_.size() - 2];
    }
    return false;
}

}  // namespace suphedge
