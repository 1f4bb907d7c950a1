#include "timelab/wave.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"
#include "timelab/errors.hpp"

namespace timelab {

double WaveState::norm_sq() const {
    double s = 0.0;
    for (const cplx& a : amp) s += std::norm(a);
    return s * measure();
}

double WaveState::norm() const { return std::sqrt(norm_sq()); }

void WaveState::normalize() {
    if (generalized)
        throw config_error("normalize: state is generalized (non-normalizable)");
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw config_error("normalize: state has no finite positive norm");
    const double s = 1.0 / n;
    for (cplx& a : amp) a *= s;
}

WaveState transform(const WaveState& psi, Basis target) {
    if (psi.basis == target) return psi;
    WaveState out = psi;
    out.basis = target;
    const bool forward = (target == Basis::momentum);
    detail::centered_dft(psi.amp.data(), out.amp.data(), psi.grid.n_points,
                         psi.grid.x_min, psi.grid.dx, psi.grid.dp, forward);
    return out;
}

cplx inner_product(const WaveState& phi, const WaveState& psi) {
    if (!(phi.grid == psi.grid))
        throw shape_error("inner_product: states live on different grids");
    const WaveState& a = phi;
    WaveState b = (psi.basis == phi.basis) ? psi : transform(psi, phi.basis);
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.amp.size(); ++i) s += std::conj(a.amp[i]) * b.amp[i];
    return s * a.measure();
}

double expectation(const WaveState& psi, Observable obs, double mass) {
    switch (obs) {
        case Observable::x: {
            WaveState pos = transform(psi, Basis::position);
            double s = 0.0;
            for (std::size_t j = 0; j < pos.amp.size(); ++j)
                s += pos.grid.x(j) * std::norm(pos.amp[j]);
            return s * pos.grid.dx;
        }
        case Observable::p: {
            WaveState mom = transform(psi, Basis::momentum);
            double s = 0.0;
            for (std::size_t k = 0; k < mom.amp.size(); ++k)
                s += mom.grid.p(k) * std::norm(mom.amp[k]);
            return s * mom.grid.dp;
        }
        case Observable::kinetic: {
            if (!(mass > 0.0)) throw config_error("expectation: mass must be positive");
            WaveState mom = transform(psi, Basis::momentum);
            double s = 0.0;
            for (std::size_t k = 0; k < mom.amp.size(); ++k) {
                const double p = mom.grid.p(k);
                s += (p * p / (2.0 * mass)) * std::norm(mom.amp[k]);
            }
            return s * mom.grid.dp;
        }
    }
    throw config_error("expectation: unknown observable");
}

DensityStats position_density_stats(const WaveState& psi) {
    WaveState pos = transform(psi, Basis::position);
    const std::size_t n = pos.amp.size();
    std::vector<double> rho(n);
    double mass = 0.0, mean = 0.0;
    std::size_t jmax = 0;
    for (std::size_t j = 0; j < n; ++j) {
        rho[j] = std::norm(pos.amp[j]);
        mass += rho[j];
        mean += rho[j] * pos.grid.x(j);
        if (rho[j] > rho[jmax]) jmax = j;
    }
    DensityStats st;
    st.argmax = pos.grid.x(jmax);
    st.mean = (mass > 0.0) ? mean / mass : 0.0;

    // Interquartile width from the cumulative mass.
    double cum = 0.0;
    double q1 = pos.grid.x_min, q3 = pos.grid.x_max;
    bool got1 = false;
    for (std::size_t j = 0; j < n; ++j) {
        cum += rho[j];
        if (!got1 && cum >= 0.25 * mass) {
            q1 = pos.grid.x(j);
            got1 = true;
        }
        if (cum >= 0.75 * mass) {
            q3 = pos.grid.x(j);
            break;
        }
    }
    st.iqr_width = q3 - q1;
    return st;
}

double TwoBodyState::measure() const {
    const double mx = (basis_x == Basis::position) ? grid_x.dx : grid_x.dp;
    const double mz = (basis_z == Basis::position) ? grid_z.dx : grid_z.dp;
    return mx * mz;
}

double TwoBodyState::norm_sq() const {
    double s = 0.0;
    for (const cplx& a : amp) s += std::norm(a);
    return s * measure();
}

void TwoBodyState::normalize() {
    const double n = std::sqrt(norm_sq());
    if (!(n > 0.0) || !std::isfinite(n))
        throw config_error("TwoBodyState::normalize: no finite positive norm");
    const double s = 1.0 / n;
    for (cplx& a : amp) a *= s;
}

TwoBodyState tensor_product(const WaveState& x_state, const WaveState& z_state) {
    TwoBodyState out;
    out.grid_x = x_state.grid;
    out.grid_z = z_state.grid;
    out.basis_x = x_state.basis;
    out.basis_z = z_state.basis;
    const std::size_t nx = x_state.amp.size(), nz = z_state.amp.size();
    out.amp.resize(nx * nz);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < nx; ++j) out.amp[k * nx + j] = z_state.amp[k] * x_state.amp[j];
    return out;
}

TwoBodyState transform_axis(const TwoBodyState& s, Axis axis, Basis target) {
    const std::size_t nx = s.grid_x.n_points, nz = s.grid_z.n_points;
    if (axis == Axis::x) {
        if (s.basis_x == target) return s;
        TwoBodyState out = s;
        out.basis_x = target;
        detail::centered_dft(s.amp.data(), out.amp.data(), nx, s.grid_x.x_min, s.grid_x.dx,
                             s.grid_x.dp, target == Basis::momentum,
                             /*howmany=*/nz, /*stride=*/1, /*dist=*/nx);
        return out;
    }
    if (s.basis_z == target) return s;
    TwoBodyState out = s;
    out.basis_z = target;
    detail::centered_dft(s.amp.data(), out.amp.data(), nz, s.grid_z.x_min, s.grid_z.dx,
                         s.grid_z.dp, target == Basis::momentum,
                         /*howmany=*/nx, /*stride=*/nx, /*dist=*/1);
    return out;
}

}  // namespace timelab
