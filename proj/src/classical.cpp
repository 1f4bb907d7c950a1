#include "timelab/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "timelab/errors.hpp"

namespace timelab::classical {

namespace {

// ------------------------------------------------------------ phase algebra

PhasePoint pp_axpy(const PhasePoint& a, double s, const PhasePoint& b) {
    PhasePoint r = a;
    r.q += s * b.q;
    r.p += s * b.p;
    r.x += s * b.x;
    r.Px += s * b.Px;
    r.y += s * b.y;
    r.Py += s * b.Py;
    r.z += s * b.z;
    r.Pz += s * b.Pz;
    r.t += s * b.t;
    r.pt += s * b.pt;
    return r;
}

double inv_mass(double M) {
    if (!(M > 0.0)) throw config_error("masses must be positive");
    return std::isfinite(M) ? 1.0 / M : 0.0;
}

// 15-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 15> kGLx = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601700,
    -0.5709721726085388, -0.3941513470775634, -0.2011940939974345, 0.0,
    0.2011940939974345,  0.3941513470775634,  0.5709721726085388,  0.7244177313601700,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr std::array<double, 15> kGLw = {
    0.03075324199611727, 0.07036604748810812, 0.10715922046717194, 0.13957067792615432,
    0.16626920581699392, 0.18616100001556221, 0.19843148532711158, 0.20257824192556127,
    0.19843148532711158, 0.18616100001556221, 0.16626920581699392, 0.13957067792615432,
    0.10715922046717194, 0.07036604748810812, 0.03075324199611727};

double gl15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < kGLx.size(); ++i) s += kGLw[i] * f(c + h * kGLx[i]);
    return s * h;
}

// Integrates f over [a, b]: splits at the coupling breakpoints, then
// subdivides every piece so single panels stay short (composite GL15).
double quad_breakaware(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& breaks) {
    std::vector<double> cuts{a, b};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    const double target = (b - a) / 256.0;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        const std::size_t panels =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / target)));
        const double h = (hi - lo) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p)
            s += gl15(f, lo + h * static_cast<double>(p), lo + h * static_cast<double>(p + 1));
    }
    return s;
}

}  // namespace

// ----------------------------------------------------------------- coupling

CouplingFunction CouplingFunction::step() {
    CouplingFunction g;
    g.kind_ = Kind::step;
    g.breaks_ = {0.0};
    return g;
}

CouplingFunction CouplingFunction::box(double width) {
    if (!(width > 0.0)) throw config_error("box coupling: width must be positive");
    CouplingFunction g;
    g.kind_ = Kind::box;
    g.width_ = width;
    g.breaks_ = {0.0, width};
    return g;
}

CouplingFunction CouplingFunction::bump(double eps) {
    if (!(eps > 0.0)) throw config_error("bump coupling: width must be positive");
    CouplingFunction g;
    g.kind_ = Kind::bump;
    g.width_ = eps;
    g.breaks_ = {0.0, eps};  // support edges, as quadrature split points
    // mollifier normalization: int_{-1}^{1} exp(-1/(1-u^2)) du
    static const double I = [] {
        const std::size_t n = 1 << 14;
        const double h = 2.0 / static_cast<double>(n);
        double s = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double u = -1.0 + h * static_cast<double>(i);
            const double v = 1.0 - u * u;
            const double f = (v > 0.0) ? std::exp(-1.0 / v) : 0.0;
            s += (i == 0 || i == n) ? 0.5 * f : f;
        }
        return s * h;
    }();
    g.bump_norm_ = 2.0 / (I * eps);
    return g;
}

CouplingFunction CouplingFunction::tabulated(std::vector<double> xs, std::vector<double> gs) {
    if (xs.size() != gs.size() || xs.size() < 2)
        throw config_error("tabulated coupling: need matching sample arrays");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw config_error("tabulated coupling: samples must be strictly increasing");
    CouplingFunction g;
    g.kind_ = Kind::tabulated;
    g.tab_x_ = std::move(xs);
    g.tab_g_ = std::move(gs);
    g.breaks_ = g.tab_x_;  // slope kinks, as quadrature split points
    return g;
}

double CouplingFunction::value(double x) const {
    switch (kind_) {
        case Kind::step:
            return x < 0.0 ? 1.0 : 0.0;
        case Kind::box:
            return (x >= 0.0 && x < width_) ? 1.0 / width_ : 0.0;
        case Kind::bump: {
            const double u = 2.0 * x / width_ - 1.0;
            const double v = 1.0 - u * u;
            return v > 0.0 ? bump_norm_ * std::exp(-1.0 / v) : 0.0;
        }
        case Kind::tabulated: {
            if (x <= tab_x_.front()) return tab_g_.front();
            if (x >= tab_x_.back()) return tab_g_.back();
            const auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - tab_x_.begin());
            const double w = (x - tab_x_[i - 1]) / (tab_x_[i] - tab_x_[i - 1]);
            return tab_g_[i - 1] * (1.0 - w) + tab_g_[i] * w;
        }
    }
    return 0.0;
}

double CouplingFunction::derivative(double x) const {
    switch (kind_) {
        case Kind::step:
        case Kind::box:
            return 0.0;  // piecewise constant away from the breakpoints
        case Kind::bump: {
            const double u = 2.0 * x / width_ - 1.0;
            const double v = 1.0 - u * u;
            if (!(v > 0.0)) return 0.0;
            const double g = bump_norm_ * std::exp(-1.0 / v);
            return g * (-2.0 * u / (v * v)) * (2.0 / width_);
        }
        case Kind::tabulated: {
            if (x <= tab_x_.front() || x >= tab_x_.back()) return 0.0;
            const auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - tab_x_.begin());
            return (tab_g_[i] - tab_g_[i - 1]) / (tab_x_[i] - tab_x_[i - 1]);
        }
    }
    return 0.0;
}

double CouplingFunction::integral(double lo, double hi) const {
    if (!(lo < hi)) return 0.0;
    switch (kind_) {
        case Kind::step:
            return std::max(0.0, std::min(hi, 0.0) - lo);
        case Kind::box:
            return std::max(0.0, std::min(hi, width_) - std::max(lo, 0.0)) / width_;
        default:
            return quad_breakaware([this](double x) { return value(x); }, lo, hi, breaks_);
    }
}

// -------------------------------------------------------------- descriptors

double h0_value(const H0Descriptor& h0, double q, double p) {
    return std::visit(
        [&](const auto& h) -> double {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, FreeH0>) {
                (void)q;
                return p * p / (2.0 * h.m);
            } else {
                return p * p / (2.0 * h.m) + 0.5 * h.m * h.omega * h.omega * q * q;
            }
        },
        h0);
}

double h0_mass(const H0Descriptor& h0) {
    return std::visit([](const auto& h) { return h.m; }, h0);
}

double observable_value(const ADescriptor& a, double q, double p) {
    switch (a.kind) {
        case ObsKind::position:
            return q;
        case ObsKind::momentum:
            return p;
        case ObsKind::arrival_time:
            if (p == 0.0) throw undefined_margin_error("arrival-time observable at p = 0");
            return (q - a.x0) * a.m / p;
    }
    return 0.0;
}

namespace {

void h0_gradient(const H0Descriptor& h0, double q, double p, double& dq, double& dp) {
    std::visit(
        [&](const auto& h) {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, FreeH0>) {
                dq = 0.0;
                dp = p / h.m;
            } else {
                dq = h.m * h.omega * h.omega * q;
                dp = p / h.m;
            }
        },
        h0);
}

void observable_gradient(const ADescriptor& a, double q, double p, double& dq, double& dp) {
    switch (a.kind) {
        case ObsKind::position:
            dq = 1.0;
            dp = 0.0;
            return;
        case ObsKind::momentum:
            dq = 0.0;
            dp = 1.0;
            return;
        case ObsKind::arrival_time:
            dq = a.m / p;
            dp = -(q - a.x0) * a.m / (p * p);
            return;
    }
}

}  // namespace

// ------------------------------------------------------------------- models

std::vector<Pair> used_pairs(const ScenarioModel& model) {
    return std::visit(
        [](const auto& m) -> std::vector<Pair> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Bare>)
                return {Pair::qp};
            else if constexpr (std::is_same_v<T, InstantKick>)
                return {Pair::qp, Pair::yPy};
            else if constexpr (std::is_same_v<T, ThetaClock> ||
                               std::is_same_v<T, GeneralCoupling>)
                return {Pair::xPx, Pair::yPy};
            else if constexpr (std::is_same_v<T, InternalObservable>)
                return {Pair::qp, Pair::xPx, Pair::yPy};
            else
                return {Pair::xPx, Pair::zPz};
        },
        model);
}

double hamiltonian(const ScenarioModel& model, const PhasePoint& s) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Bare>) {
                return h0_value(m.h0, s.q, s.p);
            } else if constexpr (std::is_same_v<T, InstantKick>) {
                return h0_value(m.h0, s.q, s.p) + 0.5 * inv_mass(m.M) * s.Py * s.Py;
            } else if constexpr (std::is_same_v<T, ThetaClock>) {
                const double g = s.x < 0.0 ? 1.0 : 0.0;
                return s.Px * s.Px / (2.0 * m.m) + 0.5 * inv_mass(m.M) * s.Py * s.Py +
                       g * s.Py;
            } else if constexpr (std::is_same_v<T, GeneralCoupling>) {
                return s.Px * s.Px / (2.0 * m.m) + 0.5 * inv_mass(m.M) * s.Py * s.Py +
                       m.g.value(s.x) * s.Py;
            } else if constexpr (std::is_same_v<T, InternalObservable>) {
                return h0_value(m.h0, s.q, s.p) + 0.5 * inv_mass(m.M) * s.Py * s.Py +
                       s.Px * s.Px / (2.0 * m.m) +
                       m.g.value(s.x) * observable_value(m.A, s.q, s.p) * s.Py;
            } else if constexpr (std::is_same_v<T, TotalEnergyIdeal>) {
                return (m.h_box0 + s.Px) * (1.0 + m.g.value(s.x) * s.z);
            } else {
                return (m.h_box0 + s.Px * s.Px / (2.0 * m.m)) * (1.0 + m.g.value(s.x) * s.z);
            }
        },
        model);
}

namespace {

const CouplingFunction* model_coupling(const ScenarioModel& model) {
    if (const auto* g = std::get_if<GeneralCoupling>(&model)) return &g->g;
    if (const auto* o = std::get_if<InternalObservable>(&model)) return &o->g;
    return nullptr;
}

bool has_sharp_coupling(const ScenarioModel& model) {
    if (std::holds_alternative<ThetaClock>(model)) return true;
    const CouplingFunction* g = model_coupling(model);
    return g != nullptr && g->piecewise_constant();
}

// Breakpoints of the sharp coupling (theta clock behaves as a step).
std::vector<double> coupling_breaks(const ScenarioModel& model) {
    if (std::holds_alternative<ThetaClock>(model)) return {0.0};
    const CouplingFunction* g = model_coupling(model);
    return g ? g->breakpoints() : std::vector<double>{};
}

// g value inside region r (regions are the intervals between breakpoints).
double region_g_value(const ScenarioModel& model, const std::vector<double>& breaks,
                      std::size_t r) {
    double probe;
    if (breaks.empty()) probe = 0.0;
    else if (r == 0) probe = breaks.front() - 1.0;
    else if (r == breaks.size()) probe = breaks.back() + 1.0;
    else probe = 0.5 * (breaks[r - 1] + breaks[r]);
    if (std::holds_alternative<ThetaClock>(model)) return probe < 0.0 ? 1.0 : 0.0;
    const CouplingFunction* g = model_coupling(model);
    return g ? g->value(probe) : 0.0;
}

std::size_t region_of(const std::vector<double>& breaks, double x) {
    std::size_t r = 0;
    while (r < breaks.size() && x >= breaks[r]) ++r;
    return r;
}

// Canonical equations; for sharp couplings g is frozen to the region value
// (piecewise-smooth integration, the jump is handled at the event).
struct RhsContext {
    const ScenarioModel* model;
    bool sharp = false;
    double g_frozen = 0.0;
};

PhasePoint rhs(const RhsContext& ctx, const PhasePoint& s) {
    PhasePoint d;  // zero-initialized derivatives
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Bare>) {
                double hq, hp;
                h0_gradient(m.h0, s.q, s.p, hq, hp);
                d.q = hp;
                d.p = -hq;
            } else if constexpr (std::is_same_v<T, InstantKick>) {
                double hq, hp;
                h0_gradient(m.h0, s.q, s.p, hq, hp);
                d.q = hp;
                d.p = -hq;
                d.y = inv_mass(m.M) * s.Py;
            } else if constexpr (std::is_same_v<T, ThetaClock>) {
                const double g = ctx.sharp ? ctx.g_frozen : (s.x < 0.0 ? 1.0 : 0.0);
                d.x = s.Px / m.m;
                d.y = inv_mass(m.M) * s.Py + g;
            } else if constexpr (std::is_same_v<T, GeneralCoupling>) {
                const double g = ctx.sharp ? ctx.g_frozen : m.g.value(s.x);
                const double gp = ctx.sharp ? 0.0 : m.g.derivative(s.x);
                d.x = s.Px / m.m;
                d.Px = -gp * s.Py;
                d.y = inv_mass(m.M) * s.Py + g;
            } else if constexpr (std::is_same_v<T, InternalObservable>) {
                const double g = ctx.sharp ? ctx.g_frozen : m.g.value(s.x);
                const double gp = ctx.sharp ? 0.0 : m.g.derivative(s.x);
                double hq, hp, aq = 0.0, ap = 0.0;
                h0_gradient(m.h0, s.q, s.p, hq, hp);
                observable_gradient(m.A, s.q, s.p, aq, ap);
                const double A = observable_value(m.A, s.q, s.p);
                d.q = hp + g * s.Py * ap;
                d.p = -hq - g * s.Py * aq;
                d.x = s.Px / m.m;
                d.Px = -gp * A * s.Py;
                d.y = inv_mass(m.M) * s.Py + g * A;
            } else {
                throw method_error("integrate: total-energy models are solved by quadrature");
            }
        },
        *ctx.model);
    return d;
}

PhasePoint rk4_step(const RhsContext& ctx, const PhasePoint& s, double h) {
    const PhasePoint k1 = rhs(ctx, s);
    const PhasePoint k2 = rhs(ctx, pp_axpy(s, 0.5 * h, k1));
    const PhasePoint k3 = rhs(ctx, pp_axpy(s, 0.5 * h, k2));
    const PhasePoint k4 = rhs(ctx, pp_axpy(s, h, k3));
    PhasePoint r = pp_axpy(s, h / 6.0, k1);
    r = pp_axpy(r, h / 3.0, k2);
    r = pp_axpy(r, h / 3.0, k3);
    r = pp_axpy(r, h / 6.0, k4);
    return r;
}

// Particle mass of the coupling coordinate (for the crossing jump).
double coupling_mass(const ScenarioModel& model) {
    if (const auto* t = std::get_if<ThetaClock>(&model)) return t->m;
    if (const auto* g = std::get_if<GeneralCoupling>(&model)) return g->m;
    if (const auto* o = std::get_if<InternalObservable>(&model)) return o->m;
    return 1.0;
}

// Coefficient multiplying g in the potential seen by the clock particle.
double coupling_charge(const ScenarioModel& model, const PhasePoint& s) {
    if (const auto* o = std::get_if<InternalObservable>(&model))
        return observable_value(o->A, s.q, s.p) * s.Py;
    return s.Py;
}

}  // namespace

Trajectory integrate(const ScenarioModel& model, const PhasePoint& start, double span,
                     double dt, Method method) {
    if (!(span > 0.0) || !(dt > 0.0))
        throw config_error("integrate: span and dt must be positive");

    const bool sharp = has_sharp_coupling(model);
    if (sharp && method != Method::event_rk4)
        throw method_error("integrate: step couplings require event_rk4");
    if (method == Method::verlet && !std::holds_alternative<Bare>(model) &&
        !std::holds_alternative<InstantKick>(model))
        throw method_error("integrate: verlet only applies to separable models");
    if (std::holds_alternative<TotalEnergyIdeal>(model) ||
        std::holds_alternative<TotalEnergyReal>(model))
        throw method_error("integrate: total-energy models are solved by quadrature");

    const std::vector<double> breaks = coupling_breaks(model);
    const double cmass = coupling_mass(model);

    Trajectory traj;
    traj.param_kind = Trajectory::ParamKind::external_t;
    traj.pairs = used_pairs(model);

    RhsContext ctx{&model, sharp, 0.0};
    std::size_t region = sharp ? region_of(breaks, start.x) : 0;
    if (sharp) ctx.g_frozen = region_g_value(model, breaks, region);

    const InstantKick* kick = std::get_if<InstantKick>(&model);
    bool kick_pending = kick != nullptr && kick->t0 >= 0.0 && kick->t0 <= span;

    PhasePoint s = start;
    double t = 0.0;
    auto push = [&](double tt, const PhasePoint& st) {
        traj.param.push_back(tt);
        traj.points.push_back(st);
        traj.H.push_back(hamiltonian(model, st));
    };
    push(t, s);

    if (kick_pending && kick->t0 == 0.0) {
        s = classical_kick(s, kick->A, kick->lambda, kick->t0);
        traj.events.push_back({EventKind::kick, 0.0, 0.0});
        push(t, s);  // same parameter, post-kick state
        kick_pending = false;
    }

    const double t_end = span;
    const double eps = 1e-14 * std::max(1.0, span);

    // velocity Verlet (separable H0 + pointer drift)
    if (method == Method::verlet) {
        const H0Descriptor& h0 = std::holds_alternative<Bare>(model)
                                     ? std::get<Bare>(model).h0
                                     : std::get<InstantKick>(model).h0;
        const double m0 = h0_mass(h0);
        const double invM = kick ? inv_mass(kick->M) : 0.0;
        auto force = [&](double q) {
            double hq, hp;
            h0_gradient(h0, q, 0.0, hq, hp);
            return -hq;
        };
        while (t < t_end - eps) {
            double h = std::min(dt, t_end - t);
            if (kick_pending && kick->t0 > t && kick->t0 <= t + h) h = kick->t0 - t;
            const double a0 = force(s.q) / m0;
            s.q += (s.p / m0) * h + 0.5 * a0 * h * h;
            const double a1 = force(s.q) / m0;
            s.p += 0.5 * (a0 * m0 + a1 * m0) * h;
            s.y += invM * s.Py * h;
            t += h;
            push(t, s);
            if (kick_pending && std::abs(t - kick->t0) <= eps) {
                s = classical_kick(s, kick->A, kick->lambda, kick->t0);
                traj.events.push_back({EventKind::kick, t, 0.0});
                push(t, s);
                kick_pending = false;
            }
        }
        return traj;
    }

    while (t < t_end - eps) {
        double h = std::min(dt, t_end - t);
        if (kick_pending && kick->t0 > t && kick->t0 <= t + h) h = kick->t0 - t;

        PhasePoint trial = rk4_step(ctx, s, h);

        if (sharp) {
            // earliest breakpoint crossing within this step, by bisection on
            // the step size (parameter tolerance 1e-12)
            double h_cross = -1.0;
            double b_cross = 0.0;
            for (double b : breaks) {
                const double f0 = s.x - b;
                const double f1 = trial.x - b;
                if (f0 == 0.0 || !(f0 * f1 < 0.0)) continue;
                double lo = 0.0, hi = h;
                for (int it = 0; it < 200 && (hi - lo) > 1e-12; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const PhasePoint sm = rk4_step(ctx, s, mid);
                    if ((sm.x - b) * f0 > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                }
                const double hc = 0.5 * (lo + hi);
                if (h_cross < 0.0 || hc < h_cross) {
                    h_cross = hc;
                    b_cross = b;
                }
            }
            if (h_cross >= 0.0) {
                PhasePoint ev = rk4_step(ctx, s, h_cross);
                const bool upward = trial.x > s.x;
                ev.x = b_cross;  // snap to the located surface
                t += h_cross;

                const std::size_t new_region = upward ? region + 1 : region - 1;
                const double g_old = ctx.g_frozen;
                const double g_new = region_g_value(model, breaks, new_region);
                const double charge = coupling_charge(model, ev);
                const double px2 =
                    ev.Px * ev.Px - 2.0 * cmass * charge * (g_new - g_old);
                if (px2 > 0.0) {
                    ev.Px = (ev.Px >= 0.0 ? 1.0 : -1.0) * std::sqrt(px2);
                    region = new_region;
                    ctx.g_frozen = g_new;
                    traj.events.push_back(
                        {upward ? EventKind::crossing_up : EventKind::crossing_down, t,
                         b_cross});
                } else {
                    ev.Px = -ev.Px;  // reflection off the potential step
                    traj.events.push_back({EventKind::reflection, t, b_cross});
                }
                s = ev;
                push(t, s);
                continue;
            }
        }

        s = trial;
        t += h;
        push(t, s);

        if (kick_pending && std::abs(t - kick->t0) <= eps) {
            s = classical_kick(s, kick->A, kick->lambda, kick->t0);
            traj.events.push_back({EventKind::kick, t, 0.0});
            push(t, s);
            kick_pending = false;
        }
    }
    return traj;
}

PhasePoint classical_kick(const PhasePoint& state, const ADescriptor& A, double lambda,
                          double t0) {
    (void)t0;  // the kick instant is bookkeeping; the map itself is autonomous
    PhasePoint s = state;
    const double a0 = observable_value(A, s.q, s.p);
    s.y += lambda * a0;  // A is conserved along the flow it generates
    switch (A.kind) {
        case ObsKind::position:
            s.p -= lambda * s.Py;
            break;
        case ObsKind::momentum:
            s.q += lambda * s.Py;
            break;
        case ObsKind::arrival_time: {
            // flow of lambda Py (q - x0) m / p: p^2 decreases linearly,
            // (q - x0)/p is invariant
            const double rad = s.p * s.p - 2.0 * lambda * s.Py * A.m;
            if (!(rad > 0.0))
                throw turning_point_error("classical_kick: arrival-time flow hits p = 0");
            const double p1 = (s.p >= 0.0 ? 1.0 : -1.0) * std::sqrt(rad);
            s.q = A.x0 + (a0 / A.m) * p1;
            s.p = p1;
            break;
        }
    }
    return s;
}

ThetaRecord theta_arrival_record(double m, double x0, double Px0, double Py0, double M) {
    if (!(m > 0.0)) throw config_error("theta_arrival_record: mass must be positive");
    if (!(x0 < 0.0)) throw config_error("theta_arrival_record: need x0 < 0");
    if (!(Px0 > 0.0))
        throw no_arrival_error("theta_arrival_record: particle moves away from the detector");

    const double t_free = m * (-x0) / Px0;
    ScenarioModel model = ThetaClock{m, M};
    PhasePoint start;
    start.x = x0;
    start.Px = Px0;
    start.Py = Py0;

    const double span = 1.5 * t_free;
    Trajectory traj = integrate(model, start, span, t_free / 256.0, Method::event_rk4);

    for (const Event& ev : traj.events) {
        if (ev.kind == EventKind::reflection)
            throw no_arrival_error("theta_arrival_record: reflected off the coupling step");
        if (ev.kind == EventKind::crossing_up) {
            // sample right after the event carries the post-jump state
            std::size_t idx = 0;
            while (idx < traj.param.size() && traj.param[idx] < ev.param) ++idx;
            const PhasePoint& st = traj.points[idx];
            ThetaRecord rec;
            rec.t_event = ev.param;
            rec.px_out = st.Px;
            const double drift = std::isfinite(M) ? (Py0 / M) * ev.param : 0.0;
            rec.record = st.y - start.y - drift;
            const double benchmark = m * (-x0) / rec.px_out;
            rec.relative_error_estimate = std::abs(rec.record - benchmark) / rec.record;
            return rec;
        }
    }
    throw no_arrival_error("theta_arrival_record: no detector crossing within the horizon");
}

namespace {

// Breakpoint-aware cumulative integral of f over uniform samples.
SampledMap cumulative(const std::function<double(double)>& f, const std::vector<double>& breaks,
                      double x_lo, double x_hi, std::size_t n) {
    if (!(x_lo < x_hi)) throw config_error("cumulative quadrature: need x_lo < x_hi");
    if (n < 2) throw config_error("cumulative quadrature: need at least two samples");
    SampledMap map;
    map.x.resize(n);
    map.values.resize(n);
    const double h = (x_hi - x_lo) / static_cast<double>(n - 1);
    double acc = 0.0;
    map.x[0] = x_lo;
    map.values[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double a = x_lo + static_cast<double>(i - 1) * h;
        const double b = x_lo + static_cast<double>(i) * h;
        acc += quad_breakaware(f, a, b, breaks);
        map.x[i] = b;
        map.values[i] = acc;
    }
    return map;
}

}  // namespace

SampledMap internal_time_map(const CouplingFunction& g, double m, double Py0, double C1,
                             double x_lo, double x_hi, std::size_t n_samples) {
    if (!(m > 0.0)) throw config_error("internal_time_map: mass must be positive");
    auto radicand = [&](double x) { return C1 - 2.0 * Py0 * g.value(x) / m; };
    // turning-point scan at quadrature resolution
    const std::size_t scan = 4 * n_samples;
    for (std::size_t i = 0; i <= scan; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(scan);
        if (!(radicand(x) > 0.0))
            throw turning_point_error("internal_time_map: radicand vanishes on the range");
    }
    return cumulative([&](double x) { return 1.0 / std::sqrt(radicand(x)); }, g.breakpoints(),
                      x_lo, x_hi, n_samples);
}

namespace {

SampledCurve curve_from(const std::function<double(double)>& dydx,
                        const std::function<double(double)>& radicand,
                        const std::vector<double>& breaks, double x_lo, double x_hi,
                        std::size_t n, const char* who) {
    const std::size_t scan = 4 * n;
    for (std::size_t i = 0; i <= scan; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(scan);
        if (!(radicand(x) > 0.0))
            throw turning_point_error(std::string(who) + ": radicand vanishes on the range");
    }
    SampledMap integral = cumulative(dydx, breaks, x_lo, x_hi, n);
    SampledCurve out;
    out.x = integral.x;
    out.y = integral.values;
    out.dydx.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.dydx[i] = dydx(out.x[i]);
    return out;
}

}  // namespace

SampledCurve internal_pointer_curve(const GeneralCoupling& model, double C1, double Py0,
                                    double x_lo, double x_hi, std::size_t n_samples) {
    if (!(model.m > 0.0)) throw config_error("internal_pointer_curve: mass must be positive");
    const double invM = inv_mass(model.M);
    auto rad = [&](double x) { return C1 - 2.0 * Py0 * model.g.value(x) / model.m; };
    auto dydx = [&, invM](double x) {
        return (invM * Py0 + model.g.value(x)) / std::sqrt(rad(x));
    };
    return curve_from(dydx, rad, model.g.breakpoints(), x_lo, x_hi, n_samples,
                      "internal_pointer_curve");
}

SampledCurve internal_pointer_curve_observable(const CouplingFunction& g, double A, double C,
                                               double Py0, double m, double x_lo, double x_hi,
                                               std::size_t n_samples) {
    if (!(m > 0.0)) throw config_error("internal_pointer_curve_observable: mass must be positive");
    auto rad = [&](double x) { return C - 2.0 * A * Py0 * g.value(x) / m; };
    auto dydx = [&](double x) { return g.value(x) * A / std::sqrt(rad(x)); };
    return curve_from(dydx, rad, g.breakpoints(), x_lo, x_hi, n_samples,
                      "internal_pointer_curve_observable");
}

double arnold_compare(const H0Descriptor& h1, double x_start, double px_start, double x_end,
                      double dt) {
    if (x_end == x_start) throw config_error("arnold_compare: empty segment");
    const double m = h0_mass(h1);
    const double E = h0_value(h1, x_start, px_start);
    const double dir = (x_end > x_start) ? 1.0 : -1.0;
    if (px_start * dir <= 0.0)
        throw monotonicity_error("arnold_compare: motion starts against the segment");

    auto potential = [&](double q) { return h0_value(h1, q, 0.0); };
    auto K = [&](double q) {
        const double rad = 2.0 * m * (E - potential(q));
        if (!(rad > 0.0))
            throw monotonicity_error("arnold_compare: turning point inside the segment");
        return (px_start >= 0.0 ? 1.0 : -1.0) * std::sqrt(rad);
    };

    // Reduced equations on the constraint surface h = pt + H1 with pt = -E:
    // dt/dq = -dK/dpt = m/K, dpt/dq = dK/dt = 0. Integrated in q by RK4.
    const std::size_t n_red = 20000;
    const double hq = (x_end - x_start) / static_cast<double>(n_red);
    std::vector<double> q_red(n_red + 1), t_red(n_red + 1);
    q_red[0] = x_start;
    t_red[0] = 0.0;
    double pt_red = -E;
    for (std::size_t i = 0; i < n_red; ++i) {
        const double q = q_red[i];
        auto f = [&](double qq) { return m / K(qq); };
        const double k1 = f(q);
        const double k2 = f(q + 0.5 * hq);
        const double k3 = f(q + 0.5 * hq);
        const double k4 = f(q + hq);
        t_red[i + 1] = t_red[i] + hq * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        q_red[i + 1] = q + hq;
    }
    (void)pt_red;

    // Direct t-parametrized trajectory, stored densely for Hermite evaluation.
    ScenarioModel bare = Bare{h1};
    const double t_total = t_red.back();
    Trajectory direct = integrate(bare, [&] {
        PhasePoint s;
        s.q = x_start;
        s.p = px_start;
        return s;
    }(), t_total, dt, Method::rk4);

    for (std::size_t i = 1; i < direct.points.size(); ++i)
        if ((direct.points[i].q - direct.points[i - 1].q) * dir <= 0.0)
            throw monotonicity_error("arnold_compare: direct trajectory turns inside the segment");

    auto eval_direct = [&](double tt, double& q, double& p) {
        // cubic Hermite between stored samples
        std::size_t i = static_cast<std::size_t>(
            std::min<double>(static_cast<double>(direct.param.size() - 2),
                             std::max(0.0, std::floor(tt / dt))));
        while (i + 2 < direct.param.size() && direct.param[i + 1] < tt) ++i;
        const double t0 = direct.param[i], t1 = direct.param[i + 1];
        const double h = t1 - t0;
        const double u = (tt - t0) / h;
        const PhasePoint &a = direct.points[i], &b = direct.points[i + 1];
        double hqa, hpa, hqb, hpb;
        h0_gradient(h1, a.q, a.p, hqa, hpa);
        h0_gradient(h1, b.q, b.p, hqb, hpb);
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        const double h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u);
        const double h11 = u * u * (u - 1);
        q = h00 * a.q + h10 * h * hpa + h01 * b.q + h11 * h * hpb;
        p = h00 * a.p + h10 * h * (-hqa) + h01 * b.p + h11 * h * (-hqb);
    };

    double dev = 0.0;
    for (std::size_t i = 0; i <= n_red; i += 16) {
        double qd, pd;
        eval_direct(std::min(t_red[i], t_total), qd, pd);
        dev = std::max(dev, std::abs(qd - q_red[i]));
        dev = std::max(dev, std::abs(pd - K(q_red[i])));
    }
    return dev;
}

TotalEnergyResult total_energy_ideal(const TotalEnergyIdeal& model, double x_lo, double x_hi) {
    const CouplingFunction& g = model.g;
    const double unit = g.integral(x_lo, x_hi);
    // g == 0 is the trivial no-measurement limit; anything else must be
    // normalized over the range.
    if (std::abs(unit - 1.0) > 1e-9 && std::abs(unit) > 1e-12)
        throw config_error("total_energy_ideal: g must integrate to 1 over the range");

    const double H = model.h_box0 + model.px0;  // C = H - H0 = px0
    double margin = 0.0;
    const std::size_t scan = 4096;
    for (std::size_t i = 0; i <= scan; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(scan);
        const double d = 1.0 + g.value(x) * model.z0;
        if (!(d > 0.0))
            throw config_error("total_energy_ideal: 1 + g z0 must stay positive");
        margin = std::max(margin, std::abs(g.value(x) * model.z0));
    }
    auto f = [&](double x) {
        const double gv = g.value(x);
        const double d = 1.0 + gv * model.z0;
        return -gv * H / (d * d);
    };
    TotalEnergyResult out;
    out.delta_pz = quad_breakaware(f, x_lo, x_hi, g.breakpoints());
    out.margin = margin;
    out.H = H;
    return out;
}

TotalEnergyResult total_energy_real(const TotalEnergyReal& model, double x_lo, double x_hi) {
    if (!(model.m > 0.0)) throw config_error("total_energy_real: mass must be positive");
    const CouplingFunction& g = model.g;
    const double unit = g.integral(x_lo, x_hi);
    if (std::abs(unit - 1.0) > 1e-9 && std::abs(unit) > 1e-12)
        throw config_error("total_energy_real: g must integrate to 1 over the range");

    const double H0 = model.h_box0;
    const double H = H0 + model.px * model.px / (2.0 * model.m);
    const double C = 2.0 * model.m * (H - H0);  // = px^2
    double margin = 0.0;
    const std::size_t scan = 4096;
    for (std::size_t i = 0; i <= scan; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(scan);
        const double gv = g.value(x);
        if (!(1.0 + gv * model.z0 > 0.0))
            throw config_error("total_energy_real: 1 + g z0 must stay positive");
        if (!(C - 2.0 * model.m * H0 * model.z0 * gv > 0.0))
            throw turning_point_error("total_energy_real: radicand vanishes on the range");
        margin = std::max(margin, std::abs(gv * model.z0));
    }
    auto f = [&](double x) {
        const double gv = g.value(x);
        const double d = 1.0 + gv * model.z0;
        const double rad = C - 2.0 * model.m * H0 * model.z0 * gv;
        return -gv / std::pow(d, 1.5) * (C + 2.0 * model.m * H0) / (2.0 * std::sqrt(rad));
    };
    TotalEnergyResult out;
    out.delta_pz = quad_breakaware(f, x_lo, x_hi, g.breakpoints());
    out.margin = margin;
    out.velocity_condition = model.px / model.m;
    out.H = H;
    return out;
}

bool MeasurementReport::all_good() const {
    for (const MarginEntry& e : margins)
        if (!e.good) return false;
    return true;
}

namespace {
double checked_ratio(double num, double den, const char* who) {
    if (den == 0.0 || !std::isfinite(den))
        throw undefined_margin_error(std::string(who) + ": vanishing denominator");
    return num / den;
}
}  // namespace

double margin_general_coupling(double g, double dPy0, double m, double C1) {
    return std::abs(checked_ratio(g * dPy0, m * C1, "margin_general_coupling"));
}

double margin_internal_observable(double A, double Py0, double g, double m, double C) {
    return std::abs(checked_ratio(A * Py0 * g, m * C, "margin_internal_observable"));
}

double margin_spread_product(double dy, double dPy0, double sqrtC, double m, double x0,
                             double dA_over_A) {
    return std::abs(
        checked_ratio(dy * dPy0, sqrtC * m * x0 * dA_over_A, "margin_spread_product"));
}

double margin_total_energy(double g, double z0) { return std::abs(g * z0); }

double margin_pointer_energy(double dz, double dPz, double x0, double H) {
    return std::abs(checked_ratio(dz * dPz, x0 * H, "margin_pointer_energy"));
}

MeasurementReport measurement_margins(const MarginInputs& in, double threshold) {
    MeasurementReport rep;
    rep.threshold = threshold;
    auto add = [&](const std::string& name, double v) {
        rep.margins.push_back({name, v, v < threshold});
    };
    if (in.general_coupling) {
        const auto& a = *in.general_coupling;
        add("general_coupling", margin_general_coupling(a.g, a.dPy0, a.m, a.C1));
    }
    if (in.internal_observable) {
        const auto& a = *in.internal_observable;
        add("internal_observable", margin_internal_observable(a.A, a.Py0, a.g, a.m, a.C));
    }
    if (in.spread_product) {
        const auto& a = *in.spread_product;
        add("spread_product",
            margin_spread_product(a.dy, a.dPy0, a.sqrtC, a.m, a.x0, a.dA_over_A));
    }
    if (in.total_energy) {
        const auto& a = *in.total_energy;
        add("total_energy", margin_total_energy(a.g, a.z0));
    }
    if (in.pointer_energy) {
        const auto& a = *in.pointer_energy;
        add("pointer_energy", margin_pointer_energy(a.dz, a.dPz, a.x0, a.H));
    }
    return rep;
}

}  // namespace timelab::classical
