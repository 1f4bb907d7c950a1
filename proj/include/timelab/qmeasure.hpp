#pragma once

#include <limits>
#include <vector>

#include "timelab/wave.hpp"

namespace timelab {

/// Exact spectral free propagation: momentum amplitudes pick up
/// exp(-i p^2 t / 2m). The returned state keeps the input basis.
WaveState free_evolve(const WaveState& psi, double t, double m);

/// Impulsive measurement coupling between a grid-diagonal system observable
/// and the pointer momentum. The kick applies the unitary that shifts the
/// pointer by +lambda * A conditional on the system value (phase
/// exp(-i lambda A(x) pi_z) on the diagonal representation).
struct KickSpec {
    double lambda = 1.0;
    Basis diagonal_in = Basis::position;  // basis in which A is diagonal
    std::vector<double> values;           // A sampled on the system grid
    Axis pointer_axis = Axis::z;
};

TwoBodyState impulsive_kick(const TwoBodyState& psi, const KickSpec& kick);

/// Clock-pointer evolution under H = p^2/2m + lambda * Theta(-x) pi_z
/// [+ pi_z^2/2M when the pointer mass is finite], by symmetric (Strang)
/// operator splitting. The step function is applied sharply on the grid.
/// Throws step_size_error when dt * max kinetic phase >= pi.
struct ThetaClockParams {
    double m = 1.0;
    double pointer_mass = std::numeric_limits<double>::infinity();
    double lambda = 1.0;  // coupling strength; 0 disables the clock term
};

TwoBodyState evolve_theta_clock(const TwoBodyState& psi, const ThetaClockParams& params,
                                double dt, std::size_t n_steps);

struct PointerMarginal {
    std::vector<double> z;
    std::vector<double> density;
    double mean = 0.0;
    double spread = 0.0;
    double mass = 0.0;
};

/// Marginal density over the pointer coordinate (z in position basis).
PointerMarginal pointer_marginal(const TwoBodyState& psi);

/// Absorbing half-line potential of the Allcock detection model. The
/// non-unitary factor exp(-V dt Theta(x)) uses the decaying sign, so the
/// norm is nonincreasing and 1 - |psi|^2 counts detected (absorbed) weight.
struct AbsorbingPotential {
    double V = 1.0;  // strength, > 0
};

struct AbsorbResult {
    WaveState state;
    std::vector<double> t;
    std::vector<double> absorbed_fraction;  // nondecreasing
};

AbsorbResult absorb_evolve(const WaveState& psi, const AbsorbingPotential& pot, double m,
                           double dt, std::size_t n_steps);

/// One row of the energy/pointer-resolution study of the theta clock.
struct ResolutionRow {
    double E = 0.0;              // initial kinetic energy scale p0^2/2m
    double pointer_width = 0.0;  // initial pointer spread Delta z (~ Delta t)
    double product = 0.0;        // E * Delta t
    double record_mean = 0.0;    // pointer mean shift
    double record_spread = 0.0;  // pointer marginal spread at t_final
    double record_blur = 0.0;    // sqrt(max(spread^2 - width^2, 0))
    double classical_t0 = 0.0;   // m |x0| / p0
};

struct ResolutionSweepParams {
    double m = 1.0;
    double x0 = -3.0;
    double sigma_x = 1.0;
    double t_final_over_t0 = 1.4;
    Grid1D grid_x;
    Grid1D grid_z;
    double dt = 0.0;  // 0: choose from the splitting precondition
};

/// Runs the theta clock over the Cartesian product of energies and pointer
/// widths; rows ordered by (E, width).
std::vector<ResolutionRow> resolution_sweep(const std::vector<double>& E_list,
                                            const std::vector<double>& pointer_width_list,
                                            const ResolutionSweepParams& params);

/// Largest kinetic phase on the grid, used by the dt precondition.
double max_kinetic_phase(const Grid1D& grid, double m);

}  // namespace timelab
