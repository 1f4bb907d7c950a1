// Independent oracles for the test suite. Everything here is computed from
// closed forms or from quadratures that share no discretization or code path
// with the library implementation (own momentum grids, own rules).
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

// Analytic momentum amplitude of the Gaussian packet
// psi(x) = (2 pi s^2)^{-1/4} exp(-(x-x0)^2/(4 s^2) + i p0 x).
inline cplx gaussian_momentum_amp(double p, double x0, double p0, double s) {
    const double mag = std::pow(2.0 * s * s / pi, 0.25) * std::exp(-s * s * (p - p0) * (p - p0));
    const double ph = -(p - p0) * x0;  // carrier exp(i p0 x) leaves a shift phase
    // full phase: exp(-i p x0) exp(i p0 x0) = exp(-i (p - p0) x0)
    return mag * cplx(std::cos(ph), std::sin(ph));
}

struct GaussianMoments {
    double mean_x, mean_p, kinetic, sigma_x, sigma_p;
};

inline GaussianMoments gaussian_moments(double x0, double p0, double s, double m) {
    GaussianMoments g;
    g.mean_x = x0;
    g.mean_p = p0;
    g.sigma_x = s;
    g.sigma_p = 0.5 / s;
    g.kinetic = (p0 * p0 + g.sigma_p * g.sigma_p) / (2.0 * m);
    return g;
}

// Free-evolution spreading of the Gaussian width.
inline double gaussian_sigma_t(double s, double t, double m) {
    const double r = t / (2.0 * m * s * s);
    return s * std::sqrt(1.0 + r * r);
}

// psi(x, t) for the free Gaussian, by direct quadrature of the analytic
// momentum amplitude on an oracle-owned grid.
inline cplx free_gaussian_psi(double x, double t, double x0, double p0, double s, double m) {
    const double sp = 0.5 / s;
    const double plo = p0 - 10.0 * sp, phi = p0 + 10.0 * sp;
    const std::size_t n = 8000;
    const double dp = (phi - plo) / static_cast<double>(n);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i <= n; ++i) {
        const double p = plo + dp * static_cast<double>(i);
        const double ph = p * x - p * p * t / (2.0 * m);
        cplx f = gaussian_momentum_amp(p, x0, p0, s) * cplx(std::cos(ph), std::sin(ph));
        if (i == 0 || i == n) f *= 0.5;
        acc += f;
    }
    return acc * dp / std::sqrt(2.0 * pi);
}

// Probability flux of the free Gaussian at x, time t (central difference on
// the analytic quadrature).
inline double free_gaussian_flux(double x, double t, double x0, double p0, double s, double m) {
    const double h = 1e-5;
    const cplx psi = free_gaussian_psi(x, t, x0, p0, s, m);
    const cplx dpsi =
        (free_gaussian_psi(x + h, t, x0, p0, s, m) - free_gaussian_psi(x - h, t, x0, p0, s, m)) /
        (2.0 * h);
    return std::imag(std::conj(psi) * dpsi) / m;
}

// Arrival density Pi(T) of a Gaussian packet by direct fine quadrature of
// the POVM amplitudes on an oracle-owned momentum grid.
struct ArrivalOracle {
    double x0, p0, s, m;
    std::size_t n = 40000;
    double span_sigmas = 9.0;

    double density(double T) const {
        const double sp = 0.5 / s;
        double total = 0.0;
        for (int alpha : {+1, -1}) {
            const double plo = std::max(1e-9, alpha > 0 ? 1e-9 : 1e-9);
            // sector integration range intersected with the packet support
            double a = p0 - span_sigmas * sp, b = p0 + span_sigmas * sp;
            if (alpha > 0) a = std::max(a, 1e-9);
            else b = std::min(b, -1e-9);
            if (!(a < b)) continue;
            const double dp = (b - a) / static_cast<double>(n);
            cplx acc{0.0, 0.0};
            for (std::size_t i = 0; i <= n; ++i) {
                const double p = a + dp * static_cast<double>(i);
                const double E = p * p / (2.0 * m);
                cplx f = std::conj(gaussian_momentum_amp(p, x0, p0, s)) *
                         std::sqrt(std::abs(p) / m) * cplx(std::cos(T * E), std::sin(T * E));
                if (i == 0 || i == n) f *= 0.5;
                acc += f;
            }
            (void)plo;
            total += std::norm(acc * dp) / (2.0 * pi);
        }
        return total;
    }

    // windowed moments by Simpson on an oracle-owned T grid
    void moments(double Tlo, double Thi, std::size_t nT, double& mass, double& mean,
                 double& tau_about_mean) const {
        std::vector<double> Ts(nT), f(nT);
        const double dT = (Thi - Tlo) / static_cast<double>(nT - 1);
        for (std::size_t i = 0; i < nT; ++i) {
            Ts[i] = Tlo + dT * static_cast<double>(i);
            f[i] = density(Ts[i]);
        }
        double m0 = 0, m1 = 0;
        for (std::size_t i = 0; i < nT; ++i) {
            const double w = (i == 0 || i + 1 == nT) ? 0.5 : 1.0;
            m0 += w * f[i];
            m1 += w * f[i] * Ts[i];
        }
        mass = m0 * dT;
        mean = m1 / m0;
        double m2 = 0;
        for (std::size_t i = 0; i < nT; ++i) {
            const double w = (i == 0 || i + 1 == nT) ? 0.5 : 1.0;
            m2 += w * f[i] * (Ts[i] - mean) * (Ts[i] - mean);
        }
        tau_about_mean = std::sqrt(m2 / m0);
    }
};

// Smeared eigenfunction overlap in the energy representation:
// (1/2pi) int_0^inf exp(-i Delta E) exp(-w^2 E^2 / 2) dE  (Simpson).
inline cplx smeared_overlap_energy(double delta, double w) {
    const double Emax = 14.0 / w;
    const std::size_t n = 200000;  // even
    const double h = Emax / static_cast<double>(n);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i <= n; ++i) {
        const double E = h * static_cast<double>(i);
        const double env = std::exp(-0.5 * w * w * E * E);
        const cplx f = env * cplx(std::cos(delta * E), -std::sin(delta * E));
        const double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += wgt * f;
    }
    return acc * (h / 3.0) / (2.0 * pi);
}

// Harmonic oscillator closed form (m, omega), initial (q0, p0).
inline void sho_solution(double m, double omega, double q0, double p0, double t, double& q,
                         double& p) {
    const double c = std::cos(omega * t), s = std::sin(omega * t);
    q = q0 * c + (p0 / (m * omega)) * s;
    p = p0 * c - m * omega * q0 * s;
}

// Two point masses at +-a with packet width s: variance a^2 + s^2.
inline double two_point_spread(double a, double s) { return std::sqrt(a * a + s * s); }

// 4th-order central difference d f / d x.
inline double fd4(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

}  // namespace oracle
