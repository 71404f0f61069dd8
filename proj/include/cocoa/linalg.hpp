#pragma once

// Minimal dense solvers for small least-squares systems (Zernike fits,
// piecewise-linear fits). Row-major storage throughout.

#include <cstddef>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

// Solve A·x = b for symmetric positive-definite A (n×n) via Cholesky.
// Throws NumericalError when a pivot is not positive.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b);

// Least squares min ‖A·x − b‖² via normal equations; A is rows×cols.
std::vector<double> lstsq(const std::vector<double>& a, std::size_t rows, std::size_t cols,
                          const std::vector<double>& b);

}  // namespace cocoa
