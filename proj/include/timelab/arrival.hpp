#pragma once

#include <string>
#include <vector>

#include "timelab/states.hpp"
#include "timelab/wave.hpp"

namespace timelab {

/// Closed interval of arrival times sampled uniformly.
struct TRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Sampled arrival-time density Pi(T) = (1/2pi) sum_alpha |<phi|T,alpha>|^2.
///
/// The 1/(2pi) puts the eigenfunction kernel in the normalization where the
/// direction-sector POVM resolves the identity, so the captured mass
/// int Pi dT tends to 1 as the momentum grid refines and the window grows.
struct ArrivalDistribution {
    std::vector<double> T;        // strictly increasing, uniform
    std::vector<double> density;  // nonnegative
    double mass = 1.0;            // particle mass used by the kernel
    double captured_mass = 0.0;   // trapezoid of density over T
    double sector_mass_plus = 0.0;   // alpha = +1 contribution to the capture
    double sector_mass_minus = 0.0;  // alpha = -1 contribution
    bool coverage_ok = true;      // captured mass in [0.99, 1 + 1e-3]
    std::string source;           // human-readable state descriptor
    std::size_t n_points = 0;     // momentum grid size used
    TRange window;

    double dT() const { return T.size() > 1 ? T[1] - T[0] : 0.0; }
};

/// Arrival statistics of a normalized state over an explicit T window.
/// Throws config_error for generalized states. Sets coverage_ok = false
/// (rather than throwing) when the captured mass is below 0.99.
ArrivalDistribution arrival_density(const WaveState& phi, double m, TRange window,
                                    std::size_t n_T);

/// Default window: classical momentum-ensemble estimate of the arrival mean
/// and spread (mean +- 10 spreads), clamped to the grid's alias horizon
/// (images of the packet one box-length away must stay outside the window).
TRange estimate_T_window(const WaveState& phi, double m, double spread_factor = 10.0);

/// Overlap kernel of two arrival eigenfunctions smeared against a normalized
/// Gaussian test function of width w: momentum quadrature of
///   (1/2pi) Theta-sector integral of (|p|/m) e^{-i(T-T')p^2/2m} e^{-w^2 p^4/8m^2}.
/// Mass-independent (energy substitution); sectors are exactly orthogonal.
cplx smeared_overlap(double T, double Tp, Sector alpha, Sector alphap, double w);

struct ArrivalMoments {
    double mean = 0.0;
    double tau = 0.0;  // sqrt of second moment about t_ref
};

/// Windowed moments, renormalized by the captured mass.
ArrivalMoments moments(const ArrivalDistribution& dist, double t_ref);

/// tau(t_ref) * <E> with <E> = <p^2>/2m of the source state (hbar = 1).
/// The time-energy relation holds when the return value exceeds 1.
double wigner_margin(const WaveState& phi, const ArrivalDistribution& dist, double t_ref,
                     double m);

/// max_T |Pi_{phi(t)}(T) - Pi_{phi(0)}(T + t)| / max_T Pi_{phi(t)}(T),
/// with phi(t) the free-evolved state. Zero up to roundoff: the
/// eigenfunction phase forces exp(iHt) Phi_T = Phi_{T+t} sample-wise.
double covariance_residual(const WaveState& phi, double t, double m, TRange window,
                           std::size_t n_T);

}  // namespace timelab
