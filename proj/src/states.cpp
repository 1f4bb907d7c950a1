#include "timelab/states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "timelab/errors.hpp"

namespace timelab {

WaveState gaussian_packet(const Grid1D& grid, double x0, double p0, double sigma) {
    if (!(sigma > 0.0)) throw config_error("gaussian_packet: sigma must be positive");

    WaveState psi;
    psi.grid = grid;
    psi.basis = Basis::position;
    psi.amp.resize(grid.n_points);
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        const double x = grid.x(j);
        const double d = x - x0;
        const double env = std::exp(-d * d / (4.0 * sigma * sigma));
        psi.amp[j] = env * cplx(std::cos(p0 * x), std::sin(p0 * x));
    }
    psi.normalize();

    const double sigma_p = 0.5 / sigma;
    if (x0 - 6.0 * sigma < grid.x_min || x0 + 6.0 * sigma > grid.x_max ||
        std::abs(p0) + 6.0 * sigma_p > grid.p_max_abs())
        psi.truncated = true;
    return psi;
}

WaveState ab_eigenfunction(const ArrivalEigenfunction& spec, const Grid1D& grid) {
    if (!(spec.m > 0.0)) throw config_error("ab_eigenfunction: mass must be positive");

    WaveState phi;
    phi.grid = grid;
    phi.basis = Basis::momentum;
    phi.generalized = true;
    phi.amp.assign(grid.n_points, cplx{0.0, 0.0});
    const double a = static_cast<double>(spec.alpha);
    for (std::size_t k = 0; k < grid.n_points; ++k) {
        const double p = grid.p(k);
        if (a * p <= 0.0) continue;
        const double mag = std::sqrt(std::abs(p) / spec.m);
        const double phase = spec.T * p * p / (2.0 * spec.m);
        phi.amp[k] = mag * cplx(std::cos(phase), std::sin(phase));
    }
    return phi;
}

WaveState ab_packet(const Grid1D& grid, double T_center, double deltaT, Sector alpha,
                    double m) {
    if (!(deltaT > 0.0)) throw config_error("ab_packet: deltaT must be positive");
    if (!(m > 0.0)) throw config_error("ab_packet: mass must be positive");

    constexpr std::size_t n_nodes = 201;
    const double half = 4.0 * deltaT;
    const double dT = 2.0 * half / static_cast<double>(n_nodes - 1);
    // the T'-grid resolves phases only up to its Nyquist energy; beyond it
    // the quadrature would alias (the true envelope there is ~ e^{-3000})
    const double E_nyquist = std::numbers::pi / dT;

    WaveState psi;
    psi.grid = grid;
    psi.basis = Basis::momentum;
    psi.amp.assign(grid.n_points, cplx{0.0, 0.0});

    const double a = static_cast<double>(alpha);
    for (std::size_t k = 0; k < grid.n_points; ++k) {
        const double p = grid.p(k);
        if (a * p <= 0.0) continue;
        const double E = p * p / (2.0 * m);
        if (E >= E_nyquist) continue;
        // sum_j G(T_j) exp(i T_j E) dT, Gaussian weight e^{-dT'^2/(2 deltaT^2)}
        // (3.4e-4 at the +-4 deltaT boundary)
        cplx acc{0.0, 0.0};
        for (std::size_t j = 0; j < n_nodes; ++j) {
            const double Tj = T_center - half + static_cast<double>(j) * dT;
            const double u = (Tj - T_center) / deltaT;
            const double w = std::exp(-0.5 * u * u);
            const double ph = Tj * E;
            acc += w * cplx(std::cos(ph), std::sin(ph));
        }
        psi.amp[k] = std::sqrt(std::abs(p) / m) * acc * dT;
    }
    psi.normalize();

    // Momentum support check: the envelope must have died off well before
    // the largest sampled |p| in the sector.
    double peak = 0.0;
    for (const cplx& c : psi.amp) peak = std::max(peak, std::abs(c));
    const std::size_t edge = (alpha == Sector::plus) ? grid.n_points - 1 : 0;
    if (std::abs(psi.amp[edge]) > 1e-6 * peak) psi.truncated = true;
    return psi;
}

}  // namespace timelab
