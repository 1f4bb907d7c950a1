#include "timelab/arrival.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "timelab/errors.hpp"
#include "timelab/qmeasure.hpp"

namespace timelab {

namespace {

using std::numbers::pi;

// Adds |sum_k c_k exp(i T_j E_k)|^2 / (2pi) to density for one sector.
// Uniform T grid, so the per-k phase advances by a fixed rotation; the
// inner loop is a complex multiply-add recurrence.
void accumulate_sector(const WaveState& mom, double m, int alpha_sign,
                       const std::vector<double>& T, std::vector<cplx>& amp_buf,
                       std::vector<double>& density) {
    const Grid1D& g = mom.grid;
    const std::size_t nT = T.size();
    const double dT = nT > 1 ? T[1] - T[0] : 0.0;
    std::fill(amp_buf.begin(), amp_buf.end(), cplx{0.0, 0.0});

    for (std::size_t k = 0; k < g.n_points; ++k) {
        const double p = g.p(k);
        if (alpha_sign * p <= 0.0) continue;
        const double E = p * p / (2.0 * m);
        const cplx c = std::conj(mom.amp[k]) * std::sqrt(std::abs(p) / m) * g.dp;
        cplx cur = c * cplx(std::cos(T[0] * E), std::sin(T[0] * E));
        const cplx step(std::cos(dT * E), std::sin(dT * E));
        for (std::size_t j = 0; j < nT; ++j) {
            amp_buf[j] += cur;
            cur *= step;
        }
    }
    for (std::size_t j = 0; j < nT; ++j) density[j] += std::norm(amp_buf[j]) / (2.0 * pi);
}

double trapezoid(const std::vector<double>& f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

}  // namespace

ArrivalDistribution arrival_density(const WaveState& phi, double m, TRange window,
                                    std::size_t n_T) {
    if (phi.generalized)
        throw config_error("arrival_density: generalized states have no arrival statistics");
    if (!(m > 0.0)) throw config_error("arrival_density: mass must be positive");
    if (!(window.lo < window.hi)) throw config_error("arrival_density: empty T window");
    if (n_T < 2) throw config_error("arrival_density: need at least two T samples");

    const WaveState mom = transform(phi, Basis::momentum);

    ArrivalDistribution dist;
    dist.mass = m;
    dist.n_points = phi.grid.n_points;
    dist.window = window;
    dist.T.resize(n_T);
    const double dT = (window.hi - window.lo) / static_cast<double>(n_T - 1);
    for (std::size_t j = 0; j < n_T; ++j) dist.T[j] = window.lo + static_cast<double>(j) * dT;
    dist.density.assign(n_T, 0.0);

    std::vector<cplx> amp_buf(n_T);
    std::vector<double> sector(n_T, 0.0);
    accumulate_sector(mom, m, +1, dist.T, amp_buf, sector);
    dist.sector_mass_plus = trapezoid(sector, dT);
    for (std::size_t j = 0; j < n_T; ++j) dist.density[j] += sector[j];
    std::fill(sector.begin(), sector.end(), 0.0);
    accumulate_sector(mom, m, -1, dist.T, amp_buf, sector);
    dist.sector_mass_minus = trapezoid(sector, dT);
    for (std::size_t j = 0; j < n_T; ++j) dist.density[j] += sector[j];

    dist.captured_mass = trapezoid(dist.density, dT);
    dist.coverage_ok = dist.captured_mass >= 0.99 && dist.captured_mass <= 1.0 + 1e-3;

    std::ostringstream os;
    os << "state on n=" << phi.grid.n_points << " grid [" << phi.grid.x_min << ","
       << phi.grid.x_max << "]";
    dist.source = os.str();
    return dist;
}

TRange estimate_T_window(const WaveState& phi, double m, double spread_factor) {
    const WaveState mom = transform(phi, Basis::momentum);
    const Grid1D& g = mom.grid;

    const double x_mean = expectation(phi, Observable::x);

    // Classical ensemble: weight |phi(p)|^2 dp, arrival time -m*x_mean/p.
    // Robust spread via weighted mean absolute deviation about the weighted
    // mean of the bulk (|p| above the 1e-3 weight quantile floor).
    std::vector<double> w(g.n_points);
    double wsum = 0.0;
    for (std::size_t k = 0; k < g.n_points; ++k) {
        w[k] = std::norm(mom.amp[k]) * g.dp;
        wsum += w[k];
    }
    // momentum magnitude below which 0.1% of the weight lives
    std::vector<std::size_t> order(g.n_points);
    for (std::size_t k = 0; k < g.n_points; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(g.p(a)) < std::abs(g.p(b));
    });
    double acc = 0.0, p_floor = std::abs(g.p(order.front()));
    for (std::size_t idx : order) {
        acc += w[idx];
        p_floor = std::abs(g.p(idx));
        if (acc > 1e-3 * wsum) break;
    }
    p_floor = std::max(p_floor, 0.5 * g.dp);

    double tw = 0.0, tmean = 0.0;
    for (std::size_t k = 0; k < g.n_points; ++k) {
        const double p = g.p(k);
        if (std::abs(p) < p_floor) continue;
        tmean += w[k] * (-m * x_mean / p);
        tw += w[k];
    }
    tmean = (tw > 0.0) ? tmean / tw : 0.0;
    double tdev = 0.0;
    for (std::size_t k = 0; k < g.n_points; ++k) {
        const double p = g.p(k);
        if (std::abs(p) < p_floor) continue;
        tdev += w[k] * std::abs(-m * x_mean / p - tmean);
    }
    tdev = (tw > 0.0) ? tdev / tw : 1.0;

    // Crossing duration floor from the spatial width.
    double p_typ = 0.0;
    for (std::size_t k = 0; k < g.n_points; ++k) p_typ += w[k] * std::abs(g.p(k));
    p_typ = std::max(p_typ / std::max(wsum, 1e-300), p_floor);
    const double x2 = [&] {
        WaveState pos = transform(phi, Basis::position);
        double s = 0.0;
        for (std::size_t j = 0; j < g.n_points; ++j) {
            const double d = g.x(j) - x_mean;
            s += d * d * std::norm(pos.amp[j]);
        }
        return s * g.dx;
    }();
    const double sigma_x = std::sqrt(std::max(x2, 0.0));
    const double crossing = m * std::max(sigma_x, g.dx) / p_typ;

    double half = spread_factor * std::max(tdev, crossing);

    // Alias horizon: the periodized image of the packet sits one box length
    // away; its fastest components must not arrive inside the window.
    const double L = g.x_max - g.x_min;
    double p_hi = p_typ;
    for (std::size_t k = 0; k < g.n_points; ++k)
        if (w[k] > 1e-10 * wsum) p_hi = std::max(p_hi, std::abs(g.p(k)));
    const double horizon = 0.85 * m * std::max(L - std::abs(x_mean) - 6.0 * sigma_x, 0.1 * L) / p_hi;
    half = std::min(half, horizon);

    return TRange{tmean - half, tmean + half};
}

cplx smeared_overlap(double T, double Tp, Sector alpha, Sector alphap, double w) {
    if (!(w > 0.0)) throw config_error("smeared_overlap: test width must be positive");
    if (alpha != alphap) return cplx{0.0, 0.0};  // disjoint momentum supports

    const double delta = T - Tp;
    // Internal momentum grid (m = 1; the integral is mass-free in energy
    // variables). Envelope exp(-w^2 p^4 / 8) dies by p ~ (360/w^2)^(1/4).
    const double p_max = std::pow(420.0 / (w * w), 0.25);
    const std::size_t n = 20000;
    const double dp = p_max / static_cast<double>(n);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i <= n; ++i) {
        const double p = dp * static_cast<double>(i);
        const double E = 0.5 * p * p;
        const double env = p * std::exp(-0.5 * w * w * E * E);
        const double ph = -delta * E;
        cplx f = env * cplx(std::cos(ph), std::sin(ph));
        if (i == 0 || i == n) f *= 0.5;
        acc += f;
    }
    return acc * dp / (2.0 * pi);
}

ArrivalMoments moments(const ArrivalDistribution& dist, double t_ref) {
    if (!(dist.captured_mass > 1e-12))
        throw undefined_moments_error("moments: distribution carries no mass");
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < dist.T.size(); ++j) {
        const double wgt = (j == 0 || j + 1 == dist.T.size()) ? 0.5 : 1.0;
        const double f = wgt * dist.density[j];
        m0 += f;
        m1 += f * dist.T[j];
        const double d = dist.T[j] - t_ref;
        m2 += f * d * d;
    }
    ArrivalMoments out;
    out.mean = m1 / m0;
    out.tau = std::sqrt(m2 / m0);
    return out;
}

double wigner_margin(const WaveState& phi, const ArrivalDistribution& dist, double t_ref,
                     double m) {
    const double E = expectation(phi, Observable::kinetic, m);
    if (!(E > 0.0)) throw undefined_moments_error("wigner_margin: state has no energy");
    return moments(dist, t_ref).tau * E;
}

double covariance_residual(const WaveState& phi, double t, double m, TRange window,
                           std::size_t n_T) {
    const WaveState evolved = free_evolve(phi, t, m);
    const ArrivalDistribution a = arrival_density(evolved, m, window, n_T);
    const ArrivalDistribution b =
        arrival_density(phi, m, TRange{window.lo + t, window.hi + t}, n_T);

    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n_T; ++j) {
        num = std::max(num, std::abs(a.density[j] - b.density[j]));
        den = std::max(den, a.density[j]);
    }
    if (!(den > 0.0)) return 0.0;
    return num / den;
}

}  // namespace timelab
