#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace suphedge {

using Vec = std::vector<double>;

/// Row-major dense matrix. Node-scale problems only (tens of rows/columns).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> a);
double norm2(std::span<const double> a);

/// a - b, elementwise.
Vec sub(std::span<const double> a, std::span<const double> b);

/// Orthonormal basis of span(vectors) by modified Gram-Schmidt with
/// re-orthogonalisation. Directions whose residual norm falls below
/// rel_tol times the largest input norm are treated as dependent.
std::vector<Vec> orthonormal_basis(const std::vector<Vec>& vectors, std::size_t dim,
                                   double rel_tol = 1e-10);

}  // namespace suphedge
