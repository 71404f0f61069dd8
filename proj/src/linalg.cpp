#include "cocoa/linalg.hpp"

#include <cmath>
#include <string>

namespace cocoa {

std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw ShapeError("solve_spd: matrix/vector size mismatch");
    // In-place Cholesky A = L·Lᵀ (lower triangle).
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0))
            throw NumericalError("matrix is not positive definite (pivot " + std::to_string(j) +
                                 ")");
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    // Forward then back substitution.
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return b;
}

std::vector<double> lstsq(const std::vector<double>& a, std::size_t rows, std::size_t cols,
                          const std::vector<double>& b) {
    if (a.size() != rows * cols || b.size() != rows)
        throw ShapeError("lstsq: design matrix size mismatch");
    if (rows < cols) throw ShapeError("lstsq: underdetermined system");
    std::vector<double> ata(cols * cols, 0.0), atb(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a.data() + r * cols;
        for (std::size_t i = 0; i < cols; ++i) {
            atb[i] += row[i] * b[r];
            for (std::size_t j = i; j < cols; ++j) ata[i * cols + j] += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < i; ++j) ata[i * cols + j] = ata[j * cols + i];
    return solve_spd(std::move(ata), std::move(atb));
}

}  // namespace cocoa
