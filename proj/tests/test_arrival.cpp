#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "timelab/arrival.hpp"
#include "timelab/errors.hpp"
#include "timelab/qmeasure.hpp"
#include "timelab/states.hpp"

using namespace timelab;

TEST_CASE("arrival density of the reference Gaussian against the quadrature oracle") {
    const Grid1D g = make_grid(4096, -204.8, 204.8);
    const double m = 1.0, x0 = -10.0, p0 = 2.0, sigma = 1.0;
    const WaveState phi = gaussian_packet(g, x0, p0, sigma);

    // the +-10-spread default leaves ~2e-3 of dispersive late tail outside;
    // completeness-grade runs widen the window (still inside the horizon)
    const TRange window = estimate_T_window(phi, m, 45.0);
    const ArrivalDistribution dist = arrival_density(phi, m, window, 2048);

    CHECK(std::abs(dist.captured_mass - 1.0) < 1e-3);
    CHECK(dist.coverage_ok);

    // oracle: independent fine quadrature of the same statistics
    oracle::ArrivalOracle orc{x0, p0, sigma, m};
    double omass, omean, otau;
    orc.moments(window.lo, window.hi, 1601, omass, omean, otau);

    const ArrivalMoments mom = moments(dist, 0.0);
    CHECK(std::abs(mom.mean - omean) / std::abs(omean) < 0.02);
    // the ensemble mean sits above the classical m|x0|/p0 = 5.0 because
    // E[1/p] > 1/E[p]; anchor the classical value loosely
    CHECK(std::abs(mom.mean - 5.0) / 5.0 < 0.10);
    CHECK(mom.mean == doctest::Approx(5.371).epsilon(0.01));

    // pointwise density against the oracle at a few T values
    for (double T : {3.0, 5.0, 7.0, 9.0}) {
        const std::size_t j = static_cast<std::size_t>((T - window.lo) / dist.dT());
        const double interp =
            dist.density[j] +
            (dist.density[j + 1] - dist.density[j]) * ((T - dist.T[j]) / dist.dT());
        CHECK(interp == doctest::Approx(orc.density(T)).epsilon(5e-3));
    }
}

TEST_CASE("right mover leaves the minus sector empty") {
    const Grid1D g = make_grid(2048, -102.4, 102.4);
    // sigma_p = 0.42, so negative momenta carry ~1e-13 of the weight
    const WaveState phi = gaussian_packet(g, -8.0, 3.0, 1.2);
    const ArrivalDistribution dist = arrival_density(phi, 1.0, TRange{0.0, 8.0}, 512);
    CHECK(dist.sector_mass_minus < 1e-10);
    CHECK(dist.sector_mass_plus > 0.9);
}

TEST_CASE("arrival density rejects bad inputs") {
    const Grid1D g = make_grid(256, -30.0, 30.0);
    const WaveState gen = ab_eigenfunction({0.0, Sector::plus, 1.0}, g);
    CHECK_THROWS_AS(arrival_density(gen, 1.0, TRange{-1.0, 1.0}, 64), config_error);
    const WaveState ok = gaussian_packet(g, -5.0, 2.0, 0.8);
    CHECK_THROWS_AS(arrival_density(ok, -1.0, TRange{-1.0, 1.0}, 64), config_error);
    CHECK_THROWS_AS(arrival_density(ok, 1.0, TRange{1.0, -1.0}, 64), config_error);
}

TEST_CASE("coverage warning for an undersized window") {
    const Grid1D g = make_grid(2048, -102.4, 102.4);
    const WaveState phi = gaussian_packet(g, -10.0, 2.0, 1.0);
    const ArrivalDistribution dist = arrival_density(phi, 1.0, TRange{4.0, 6.0}, 256);
    CHECK_FALSE(dist.coverage_ok);
    CHECK(dist.captured_mass < 0.99);
}

TEST_CASE("POVM completeness error at least halves when the momentum grid refines") {
    // The slow-component tail of Pi(T) falls off like T^(-3/2), so the
    // captured-mass deficit scales as W^(-1/2) with the window half-width W.
    // The window therefore grows superlinearly with the refining momentum
    // grid (0.4 x alias horizon at 4096, full horizon at 8192: a 5x wider
    // window), which shrinks the deficit by 5^(-1/2) ~ 0.45 per doubling.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int rep = 0; rep < 2; ++rep) {
        const double sigma = 0.7 + 0.4 * u01(rng);
        const double rho = 3.2 + 2.0 * u01(rng);
        const double p0 = rho * 0.5 / sigma;
        const double t_flight = 1.5 + 2.0 * u01(rng);
        const double x0 = -t_flight * p0;
        const double dx = 0.62 * sigma;
        const double p_hi = p0 + 4.8 * 0.5 / sigma;

        double err[2];
        int idx = 0;
        for (std::size_t n : {4096ul, 8192ul}) {
            const double L = dx * static_cast<double>(n);
            const Grid1D g = make_grid(n, -L / 2, L / 2);
            const WaveState phi = gaussian_packet(g, x0, p0, sigma);
            const double horizon = 0.85 * (L - std::abs(x0) - 6.0 * sigma) / p_hi;
            const double W = horizon * (n == 4096 ? 0.4 : 1.0);
            const double Tc = std::abs(x0) / p0;
            const double E_hi = 0.5 * p_hi * p_hi;
            const std::size_t nT = static_cast<std::size_t>(
                std::clamp(2.0 * W * E_hi / 2.0, 2048.0, 20000.0));
            const ArrivalDistribution d =
                arrival_density(phi, 1.0, TRange{Tc - W, Tc + W}, nT);
            err[idx++] = std::abs(d.captured_mass - 1.0);
        }
        CHECK(err[0] < 1e-3);
        CHECK(err[1] <= 0.5 * err[0] + 1e-12);
    }
}

TEST_CASE("moments of simple densities") {
    ArrivalDistribution d;
    d.mass = 1.0;
    const std::size_t n = 4001;
    d.T.resize(n);
    d.density.resize(n);

    // uniform on [0, 1]
    for (std::size_t i = 0; i < n; ++i) {
        d.T[i] = static_cast<double>(i) / static_cast<double>(n - 1);
        d.density[i] = 1.0;
    }
    d.captured_mass = 1.0;
    CHECK(moments(d, 0.5).tau == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-6));

    // symmetric Gaussian about T = 3 with width 0.4
    for (std::size_t i = 0; i < n; ++i) {
        d.T[i] = 3.0 + 8.0 * (static_cast<double>(i) / static_cast<double>(n - 1) - 0.5);
        const double u = (d.T[i] - 3.0) / 0.4;
        d.density[i] = std::exp(-0.5 * u * u);
    }
    d.captured_mass = 1.0;
    const ArrivalMoments mm = moments(d, 3.0);
    CHECK(mm.mean == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(mm.tau == doctest::Approx(0.4).epsilon(1e-6));

    ArrivalDistribution empty;
    empty.captured_mass = 0.0;
    empty.T = {0.0, 1.0};
    empty.density = {0.0, 0.0};
    CHECK_THROWS_AS(moments(empty, 0.0), undefined_moments_error);
}

TEST_CASE("wigner margin exceeds one and is minimized at the mean") {
    const Grid1D g = make_grid(4096, -204.8, 204.8);
    const double m = 1.0;
    const WaveState phi = gaussian_packet(g, 0.0, 2.0, 1.0);
    const TRange w = estimate_T_window(phi, m);
    const ArrivalDistribution dist = arrival_density(phi, m, w, 2048);
    const double mean = moments(dist, 0.0).mean;

    const double margin = wigner_margin(phi, dist, mean, m);
    CHECK(margin > 1.0);
    CHECK(moments(dist, mean + 10.0).tau > moments(dist, mean).tau);
    CHECK(moments(dist, mean - 10.0).tau > moments(dist, mean).tau);
    CHECK(wigner_margin(phi, dist, mean + 10.0, m) > margin);
}

TEST_CASE("time covariance residual") {
    const Grid1D g = make_grid(2048, -102.4, 102.4);
    const double m = 1.0;
    const WaveState phi = gaussian_packet(g, -10.0, 2.0, 1.0);
    const TRange w{-2.0, 14.0};
    CHECK(covariance_residual(phi, 0.0, m, w, 1024) < 1e-14);
    CHECK(covariance_residual(phi, 1.0, m, w, 1024) < 1e-6);
    CHECK(covariance_residual(phi, -2.0, m, w, 1024) < 1e-6);
}

TEST_CASE("smeared overlap kernel") {
    const double w = 0.05;
    // sector orthogonality
    CHECK(std::abs(smeared_overlap(0.3, -0.2, Sector::plus, Sector::minus, w)) < 1e-10);

    // real part at coincidence: half the Gaussian test function at zero
    const double g0 = 1.0 / (w * std::sqrt(2.0 * oracle::pi));
    const cplx at0 = smeared_overlap(1.0, 1.0, Sector::plus, Sector::plus, w);
    CHECK(std::abs(at0.real() - 0.5 * g0) / (0.5 * g0) < 0.02);

    // antisymmetric imaginary part, symmetric real part
    const cplx fwd = smeared_overlap(0.9, 0.5, Sector::plus, Sector::plus, w);
    const cplx rev = smeared_overlap(0.5, 0.9, Sector::plus, Sector::plus, w);
    CHECK(fwd.imag() == doctest::Approx(-rev.imag()).epsilon(1e-8));
    CHECK(fwd.real() == doctest::Approx(rev.real()).epsilon(1e-8));

    // momentum quadrature against the independent energy-representation rule
    for (double delta : {0.0, 0.1, 0.4}) {
        const cplx got = smeared_overlap(delta, 0.0, Sector::minus, Sector::minus, w);
        const cplx want = oracle::smeared_overlap_energy(delta, w);
        CHECK(std::abs(got - want) < 2e-4 * std::abs(want) + 1e-9);
    }
}

TEST_CASE("POVM density is nonnegative for random states") {
    const Grid1D g = make_grid(1024, -51.2, 51.2);
    std::mt19937 rng(5);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 5; ++rep) {
        WaveState s;
        s.grid = g;
        s.basis = Basis::position;
        s.amp.resize(g.n_points);
        for (auto& a : s.amp) a = cplx(n01(rng), n01(rng));
        s.normalize();
        const ArrivalDistribution d = arrival_density(s, 1.0, TRange{-20.0, 20.0}, 512);
        for (double v : d.density) CHECK(v >= 0.0);
    }
}
