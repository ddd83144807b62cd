#pragma once

#include <array>
#include <span>
#include <vector>

namespace cbct {

/// Shape of a 1-, 2- or 3-D array stored with axis 0 fastest. Unused axes are 1.
using TvDims = std::array<int, 3>;

/// Sum over axes of the l1 norm of forward differences (replicate boundary,
/// so the last difference along each axis is zero).
double tv_norm(std::span<const double> x, const TvDims& dims);

/// Approximate argmin_x 0.5 |x - y|^2 + mu * tv_norm(x) by projected gradient
/// on the dual (per-axis clipping). `dual` holds 3 * size values and is used
/// as warm start when non-empty; it is resized and updated on return.
std::vector<double> tv_prox(std::span<const double> y, const TvDims& dims, double mu, int iterations,
                            std::vector<double>* dual = nullptr);

}  // namespace cbct
