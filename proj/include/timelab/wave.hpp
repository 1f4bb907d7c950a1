#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "timelab/grid.hpp"

namespace timelab {

using cplx = std::complex<double>;

enum class Basis { position, momentum };

/// One-particle complex amplitudes on a Grid1D, in either representation.
///
/// Norms carry the quadrature measure (dx or dp), so they are independent
/// of grid resolution. `generalized` marks non-normalizable states
/// (plane-wave-like eigenfunctions); norm-requiring operations reject them.
struct WaveState {
    Grid1D grid;
    Basis basis = Basis::position;
    std::vector<cplx> amp;
    bool generalized = false;
    bool truncated = false;  // constructor support escaped the grid

    double measure() const { return basis == Basis::position ? grid.dx : grid.dp; }
    double norm_sq() const;
    double norm() const;
    void normalize();  // throws config_error on generalized or null states
};

/// Unitary change of representation (half-bin offset convention).
/// A same-basis call returns the state unchanged. Round trip is the
/// identity to machine precision; the norm is preserved (Parseval).
WaveState transform(const WaveState& psi, Basis target);

/// <phi|psi>, conjugate-linear in the first argument. The second state is
/// transformed to the basis of the first when the bases differ.
/// Throws shape_error when the grids differ.
cplx inner_product(const WaveState& phi, const WaveState& psi);

enum class Observable { x, p, kinetic };

/// <psi|O|psi> for O in {x, p, p^2/2m}. `mass` is only read for kinetic.
double expectation(const WaveState& psi, Observable obs, double mass = 1.0);

/// Position-density summary used by peaking diagnostics: location of the
/// density maximum and the interquartile width (length of the central
/// 50%-mass interval). Robust against the slow spatial tails of
/// spectral-edge packets, unlike the second moment.
struct DensityStats {
    double argmax = 0.0;
    double iqr_width = 0.0;
    double mean = 0.0;
};
DensityStats position_density_stats(const WaveState& psi);

/// Two particles (x ⊗ z) with independent basis tags per axis.
/// Amplitudes are row-major with x fastest: amp[k*nx + j].
struct TwoBodyState {
    Grid1D grid_x, grid_z;
    Basis basis_x = Basis::position;
    Basis basis_z = Basis::position;
    std::vector<cplx> amp;

    double measure() const;
    double norm_sq() const;
    void normalize();
};

/// Product state psi_x ⊗ psi_z.
TwoBodyState tensor_product(const WaveState& x_state, const WaveState& z_state);

enum class Axis { x, z };

/// Per-axis change of representation for a two-body state.
TwoBodyState transform_axis(const TwoBodyState& s, Axis axis, Basis target);

}  // namespace timelab
