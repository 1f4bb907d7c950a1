#pragma once

#include <cstddef>
#include <vector>

namespace timelab {

/// Uniform 1-D spatial grid with the matching momentum grid.
///
/// Units: hbar = 1 everywhere; all quantities dimensionless.
///
/// Position samples  x_j = x_min + j*dx,             j = 0..n-1
/// Momentum samples  p_k = dp*(k - n/2 + 1/2),       k = 0..n-1
///
/// The half-bin offset keeps p = 0 off the grid, so kernels carrying
/// 1/sqrt|p| stay finite without ad hoc cutoffs.
struct Grid1D {
    std::size_t n_points = 0;
    double x_min = 0.0;
    double x_max = 0.0;
    double dx = 0.0;
    double dp = 0.0;

    double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx; }
    double p(std::size_t k) const {
        return dp * (static_cast<double>(k) - 0.5 * static_cast<double>(n_points) + 0.5);
    }
    double p_max_abs() const { return dp * (0.5 * static_cast<double>(n_points) - 0.5); }

    bool operator==(const Grid1D& o) const {
        return n_points == o.n_points && x_min == o.x_min && x_max == o.x_max;
    }

    std::vector<double> x_samples() const;
    std::vector<double> p_samples() const;
};

/// Builds a grid; n_points must be a power of two >= 8 and x_min < x_max.
Grid1D make_grid(std::size_t n_points, double x_min, double x_max);

}  // namespace timelab
