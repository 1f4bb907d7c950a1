#pragma once

#include "timelab/grid.hpp"
#include "timelab/wave.hpp"

namespace timelab {

/// Direction sector of an arrival-time eigenfunction.
enum class Sector : int { plus = +1, minus = -1 };

/// Parameters of an arrival-time eigenfunction Phi_{T,alpha}:
/// momentum-basis amplitude Theta(alpha p) sqrt(|p|/m) exp(i T p^2 / 2m).
struct ArrivalEigenfunction {
    double T = 0.0;
    Sector alpha = Sector::plus;
    double m = 1.0;
};

/// Normalized Gaussian packet, psi(x) ∝ exp(-(x-x0)^2/(4 sigma^2) + i p0 x),
/// so Delta x = sigma and Delta p = 1/(2 sigma).
/// The truncated flag is set when the +-6 sigma support (in x or p)
/// escapes the grid.
WaveState gaussian_packet(const Grid1D& grid, double x0, double p0, double sigma);

/// Samples Phi_{T,alpha} on the momentum grid. The result is generalized
/// (non-normalizable); norm-requiring operations reject it.
WaveState ab_eigenfunction(const ArrivalEigenfunction& spec, const Grid1D& grid);

/// Normalized Gaussian-in-T superposition of arrival eigenfunctions,
/// centered at T_center with amplitude width deltaT. The T'-quadrature uses
/// 201 uniform nodes over +-4*deltaT (Gaussian weight < 3e-4 at the edge;
/// node count validated by doubling). Sets truncated when the packet's
/// momentum support reaches the grid boundary.
WaveState ab_packet(const Grid1D& grid, double T_center, double deltaT, Sector alpha,
                    double m);

}  // namespace timelab
