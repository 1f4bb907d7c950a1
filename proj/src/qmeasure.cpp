#include "timelab/qmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "timelab/errors.hpp"
#include "timelab/states.hpp"

namespace timelab {

using std::numbers::pi;

double max_kinetic_phase(const Grid1D& grid, double m) {
    const double pm = grid.p_max_abs();
    return pm * pm / (2.0 * m);
}

WaveState free_evolve(const WaveState& psi, double t, double m) {
    if (!(m > 0.0)) throw config_error("free_evolve: mass must be positive");
    const Basis original = psi.basis;
    WaveState mom = transform(psi, Basis::momentum);
    for (std::size_t k = 0; k < mom.amp.size(); ++k) {
        const double p = mom.grid.p(k);
        const double ph = -p * p * t / (2.0 * m);
        mom.amp[k] *= cplx(std::cos(ph), std::sin(ph));
    }
    return transform(mom, original);
}

TwoBodyState impulsive_kick(const TwoBodyState& psi, const KickSpec& kick) {
    if (kick.pointer_axis != Axis::z)
        throw config_error("impulsive_kick: the pointer lives on the z axis");
    if (kick.values.size() != psi.grid_x.n_points)
        throw shape_error("impulsive_kick: observable table does not match the system grid");
    for (double v : kick.values)
        if (!std::isfinite(v))
            throw config_error("impulsive_kick: observable values must be finite");

    const Basis bx0 = psi.basis_x, bz0 = psi.basis_z;
    TwoBodyState s = transform_axis(psi, Axis::x, kick.diagonal_in);
    s = transform_axis(s, Axis::z, Basis::momentum);

    const std::size_t nx = s.grid_x.n_points, nz = s.grid_z.n_points;
    for (std::size_t k = 0; k < nz; ++k) {
        const double piz = s.grid_z.p(k);
        for (std::size_t j = 0; j < nx; ++j) {
            const double ph = -kick.lambda * kick.values[j] * piz;
            s.amp[k * nx + j] *= cplx(std::cos(ph), std::sin(ph));
        }
    }
    s = transform_axis(s, Axis::x, bx0);
    return transform_axis(s, Axis::z, bz0);
}

TwoBodyState evolve_theta_clock(const TwoBodyState& psi, const ThetaClockParams& params,
                                double dt, std::size_t n_steps) {
    if (!(params.m > 0.0)) throw config_error("evolve_theta_clock: mass must be positive");
    if (!(dt > 0.0)) throw config_error("evolve_theta_clock: dt must be positive");

    double phase_max = max_kinetic_phase(psi.grid_x, params.m);
    const bool finite_M = std::isfinite(params.pointer_mass);
    if (finite_M) {
        if (!(params.pointer_mass > 0.0))
            throw config_error("evolve_theta_clock: pointer mass must be positive");
        phase_max += max_kinetic_phase(psi.grid_z, params.pointer_mass);
    }
    if (dt * phase_max >= pi)
        throw step_size_error("evolve_theta_clock: dt * max kinetic phase must stay below pi");

    // Work representation: x in momentum for the kinetic factor, z in
    // momentum throughout (every term is diagonal in pi_z).
    TwoBodyState s = transform_axis(psi, Axis::z, Basis::momentum);
    s = transform_axis(s, Axis::x, Basis::momentum);

    const std::size_t nx = s.grid_x.n_points, nz = s.grid_z.n_points;

    std::vector<cplx> half_kin(nx);
    for (std::size_t j = 0; j < nx; ++j) {
        const double p = s.grid_x.p(j);
        const double ph = -0.5 * dt * p * p / (2.0 * params.m);
        half_kin[j] = cplx(std::cos(ph), std::sin(ph));
    }
    std::vector<cplx> half_kin_z(nz, cplx{1.0, 0.0});
    if (finite_M)
        for (std::size_t k = 0; k < nz; ++k) {
            const double q = s.grid_z.p(k);
            const double ph = -0.5 * dt * q * q / (2.0 * params.pointer_mass);
            half_kin_z[k] = cplx(std::cos(ph), std::sin(ph));
        }

    // Coupling phase exp(-i dt lambda Theta(-x) pi_z), diagonal in
    // (x position, z momentum); the step is sharp on the grid.
    std::vector<cplx> couple(nz);
    for (std::size_t k = 0; k < nz; ++k) {
        const double ph = -dt * params.lambda * s.grid_z.p(k);
        couple[k] = cplx(std::cos(ph), std::sin(ph));
    }
    std::vector<bool> in_region(nx);
    for (std::size_t j = 0; j < nx; ++j) in_region[j] = s.grid_x.x(j) < 0.0;

    auto apply_half_kinetic = [&] {
        for (std::size_t k = 0; k < nz; ++k) {
            const cplx fz = half_kin_z[k];
            cplx* row = &s.amp[k * nx];
            for (std::size_t j = 0; j < nx; ++j) row[j] *= half_kin[j] * fz;
        }
    };

    for (std::size_t step = 0; step < n_steps; ++step) {
        apply_half_kinetic();
        s = transform_axis(s, Axis::x, Basis::position);
        if (params.lambda != 0.0)
            for (std::size_t k = 0; k < nz; ++k) {
                const cplx f = couple[k];
                cplx* row = &s.amp[k * nx];
                for (std::size_t j = 0; j < nx; ++j)
                    if (in_region[j]) row[j] *= f;
            }
        s = transform_axis(s, Axis::x, Basis::momentum);
        apply_half_kinetic();
    }

    s = transform_axis(s, Axis::x, psi.basis_x);
    return transform_axis(s, Axis::z, psi.basis_z);
}

PointerMarginal pointer_marginal(const TwoBodyState& psi) {
    TwoBodyState s = transform_axis(psi, Axis::z, Basis::position);
    const std::size_t nx = s.grid_x.n_points, nz = s.grid_z.n_points;
    const double mx = (s.basis_x == Basis::position) ? s.grid_x.dx : s.grid_x.dp;

    PointerMarginal out;
    out.z.resize(nz);
    out.density.assign(nz, 0.0);
    for (std::size_t k = 0; k < nz; ++k) {
        out.z[k] = s.grid_z.x(k);
        double row = 0.0;
        for (std::size_t j = 0; j < nx; ++j) row += std::norm(s.amp[k * nx + j]);
        out.density[k] = row * mx;
    }

    double m0 = 0.0, m1 = 0.0;
    for (std::size_t k = 0; k < nz; ++k) {
        m0 += out.density[k];
        m1 += out.density[k] * out.z[k];
    }
    out.mass = m0 * s.grid_z.dx;
    out.mean = m1 / m0;
    double m2 = 0.0;
    for (std::size_t k = 0; k < nz; ++k) {
        const double d = out.z[k] - out.mean;
        m2 += out.density[k] * d * d;
    }
    out.spread = std::sqrt(m2 / m0);
    return out;
}

AbsorbResult absorb_evolve(const WaveState& psi, const AbsorbingPotential& pot, double m,
                           double dt, std::size_t n_steps) {
    if (!(pot.V > 0.0)) throw config_error("absorb_evolve: V must be positive");
    if (!(m > 0.0)) throw config_error("absorb_evolve: mass must be positive");
    if (dt * max_kinetic_phase(psi.grid, m) >= pi)
        throw step_size_error("absorb_evolve: dt * max kinetic phase must stay below pi");

    AbsorbResult out;
    out.t.reserve(n_steps + 1);
    out.absorbed_fraction.reserve(n_steps + 1);
    out.t.push_back(0.0);
    out.absorbed_fraction.push_back(0.0);

    WaveState s = transform(psi, Basis::momentum);
    const Grid1D& g = s.grid;
    const std::size_t n = g.n_points;

    std::vector<cplx> half_kin(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double p = g.p(k);
        const double ph = -0.5 * dt * p * p / (2.0 * m);
        half_kin[k] = cplx(std::cos(ph), std::sin(ph));
    }
    std::vector<double> damp(n);
    for (std::size_t j = 0; j < n; ++j)
        damp[j] = (g.x(j) > 0.0) ? std::exp(-pot.V * dt) : 1.0;

    const double norm0 = s.norm_sq();
    for (std::size_t step = 0; step < n_steps; ++step) {
        for (std::size_t k = 0; k < n; ++k) s.amp[k] *= half_kin[k];
        s = transform(s, Basis::position);
        for (std::size_t j = 0; j < n; ++j) s.amp[j] *= damp[j];
        s = transform(s, Basis::momentum);
        for (std::size_t k = 0; k < n; ++k) s.amp[k] *= half_kin[k];
        out.t.push_back(static_cast<double>(step + 1) * dt);
        out.absorbed_fraction.push_back(1.0 - s.norm_sq() / norm0);
    }
    out.state = transform(s, psi.basis);
    return out;
}

std::vector<ResolutionRow> resolution_sweep(const std::vector<double>& E_list,
                                            const std::vector<double>& pointer_width_list,
                                            const ResolutionSweepParams& params) {
    if (E_list.empty() || pointer_width_list.empty())
        throw config_error("resolution_sweep: empty axis");

    std::vector<ResolutionRow> rows;
    for (double E : E_list) {
        if (!(E > 0.0)) throw config_error("resolution_sweep: energies must be positive");
        const double p0 = std::sqrt(2.0 * params.m * E);
        for (double width : pointer_width_list) {
            if (!(width > 0.0))
                throw config_error("resolution_sweep: pointer widths must be positive");

            WaveState part = gaussian_packet(params.grid_x, params.x0, p0, params.sigma_x);
            WaveState pointer = gaussian_packet(params.grid_z, 0.0, 0.0, width);
            TwoBodyState psi = tensor_product(part, pointer);

            const double t0 = params.m * std::abs(params.x0) / p0;
            const double t_final = params.t_final_over_t0 * t0;
            double dt = params.dt;
            if (dt <= 0.0) dt = 0.5 * pi / max_kinetic_phase(params.grid_x, params.m);
            const std::size_t n_steps =
                static_cast<std::size_t>(std::ceil(t_final / dt));
            dt = t_final / static_cast<double>(n_steps);

            ThetaClockParams tc;
            tc.m = params.m;
            TwoBodyState fin = evolve_theta_clock(psi, tc, dt, n_steps);
            const PointerMarginal marg = pointer_marginal(fin);

            ResolutionRow row;
            row.E = E;
            row.pointer_width = width;
            row.product = E * width;  // Delta t ~ Delta z for the theta clock
            row.record_mean = marg.mean;
            row.record_spread = marg.spread;
            row.record_blur =
                std::sqrt(std::max(marg.spread * marg.spread - width * width, 0.0));
            row.classical_t0 = t0;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace timelab
