#include "suphedge/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace suphedge {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vec sub(std::span<const double> a, std::span<const double> b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

std::vector<Vec> orthonormal_basis(const std::vector<Vec>& vectors, std::size_t dim,
                                   double rel_tol) {
    double scale = 0.0;
    for (const auto& v : vectors) scale = std::max(scale, norm2(v));
    std::vector<Vec> basis;
    if (scale == 0.0) return basis;

    for (const auto& v : vectors) {
        Vec r = v;
        // two passes keep the basis orthogonal to machine precision
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double proj = dot(r, q);
                for (std::size_t k = 0; k < dim; ++k) r[k] -= proj * q[k];
            }
        }
        const double n = norm2(r);
        if (n > rel_tol * scale) {
            for (double& x : r) x /= n;
            basis.push_back(std::move(r));
            if (basis.size() == dim) break;
        }
    }
    return basis;
}

}  // namespace suphedge
