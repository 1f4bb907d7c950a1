#include "timelab/grid.hpp"

#include <numbers>

#include "timelab/errors.hpp"

namespace timelab {

std::vector<double> Grid1D::x_samples() const {
    std::vector<double> out(n_points);
    for (std::size_t j = 0; j < n_points; ++j) out[j] = x(j);
    return out;
}

std::vector<double> Grid1D::p_samples() const {
    std::vector<double> out(n_points);
    for (std::size_t k = 0; k < n_points; ++k) out[k] = p(k);
    return out;
}

Grid1D make_grid(std::size_t n_points, double x_min, double x_max) {
    if (n_points < 8 || (n_points & (n_points - 1)) != 0)
        throw config_error("make_grid: n_points must be a power of two >= 8");
    if (!(x_min < x_max))
        throw config_error("make_grid: need x_min < x_max");

    Grid1D g;
    g.n_points = n_points;
    g.x_min = x_min;
    g.x_max = x_max;
    g.dx = (x_max - x_min) / static_cast<double>(n_points);
    g.dp = 2.0 * std::numbers::pi / (static_cast<double>(n_points) * g.dx);
    return g;
}

}  // namespace timelab
