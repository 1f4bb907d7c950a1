#pragma once

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace timelab::classical {

constexpr double infinite_mass = std::numeric_limits<double>::infinity();

/// Canonical coordinates. Each model declares which pairs it uses; unused
/// slots are ignored. (q,p) is the measured system, (x,Px) the clock
/// particle, (y,Py) and (z,Pz) pointers, (t,pt) the parametrized-time pair.
struct PhasePoint {
    double q = 0.0, p = 0.0;
    double x = 0.0, Px = 0.0;
    double y = 0.0, Py = 0.0;
    double z = 0.0, Pz = 0.0;
    double t = 0.0, pt = 0.0;
};

enum class Pair { qp, xPx, yPy, zPz, tpt };

// ---------------------------------------------------------------- couplings

/// Interaction profile g(.). step = Theta(-x); box has height 1/width on
/// [0, width]; bump is a smooth compactly supported mollifier on [0, eps]
/// with unit integral; tabulated interpolates samples linearly.
class CouplingFunction {
public:
    enum class Kind { step, box, bump, tabulated };

    static CouplingFunction step();
    static CouplingFunction box(double width);
    static CouplingFunction bump(double eps);
    static CouplingFunction tabulated(std::vector<double> xs, std::vector<double> gs);

    Kind kind() const { return kind_; }
    double value(double x) const;
    double derivative(double x) const;
    /// Discontinuity locations (step and box only).
    const std::vector<double>& breakpoints() const { return breaks_; }
    /// g is constant between breakpoints (step and box).
    bool piecewise_constant() const { return kind_ == Kind::step || kind_ == Kind::box; }
    /// integral of g over the real line (1 for box and bump by construction).
    double integral(double lo, double hi) const;
    double width() const { return width_; }

private:
    CouplingFunction() = default;
    Kind kind_ = Kind::step;
    double width_ = 0.0;       // box width or bump eps
    double bump_norm_ = 0.0;   // mollifier normalization
    std::vector<double> breaks_;
    std::vector<double> tab_x_, tab_g_;
};

// -------------------------------------------------------------- descriptors

struct FreeH0 {
    double m = 1.0;
};
struct HarmonicH0 {
    double m = 1.0;
    double omega = 1.0;
};
using H0Descriptor = std::variant<FreeH0, HarmonicH0>;

double h0_value(const H0Descriptor& h0, double q, double p);
double h0_mass(const H0Descriptor& h0);

/// Measured observable A(q,p).
enum class ObsKind { position, momentum, arrival_time };
struct ADescriptor {
    ObsKind kind = ObsKind::position;
    double x0 = 0.0;  // arrival_time: A = (q - x0) m / p
    double m = 1.0;
};
double observable_value(const ADescriptor& a, double q, double p);

// ------------------------------------------------------------------- models

struct Bare {
    H0Descriptor h0;
};
/// H = H0(q,p) + Py^2/2M + delta(t - t0) lambda A(q,p) Py
struct InstantKick {
    H0Descriptor h0;
    ADescriptor A;
    double t0 = 0.0;
    double lambda = 1.0;
    double M = infinite_mass;
};
/// H = Px^2/2m + Py^2/2M + Theta(-x) Py
struct ThetaClock {
    double m = 1.0;
    double M = infinite_mass;
};
/// H = Px^2/2m + Py^2/2M + g(x) Py
struct GeneralCoupling {
    double m = 1.0;
    double M = infinite_mass;
    CouplingFunction g = CouplingFunction::step();
};
/// H = H0(q,p) + Py^2/2M + Px^2/2m + g(x) A(q,p) Py
struct InternalObservable {
    H0Descriptor h0;
    ADescriptor A;
    CouplingFunction g = CouplingFunction::step();
    double m = 1.0;
    double M = infinite_mass;
};
/// Ideal-clock total-energy model, solved by quadrature (not integrate()).
struct TotalEnergyIdeal {
    double h_box0 = 0.0;
    double px0 = 1.0;
    CouplingFunction g = CouplingFunction::box(1.0);
    double z0 = 0.0;
};
/// Real-clock total-energy model, solved by quadrature.
struct TotalEnergyReal {
    double m = 1.0;
    double h_box0 = 0.0;
    double px = 1.0;
    CouplingFunction g = CouplingFunction::box(1.0);
    double z0 = 0.0;
};

using ScenarioModel = std::variant<Bare, InstantKick, ThetaClock, GeneralCoupling,
                                   InternalObservable, TotalEnergyIdeal, TotalEnergyReal>;

std::vector<Pair> used_pairs(const ScenarioModel& model);
double hamiltonian(const ScenarioModel& model, const PhasePoint& s);

// --------------------------------------------------------------- trajectory

enum class EventKind { crossing_up, crossing_down, reflection, kick };

struct Event {
    EventKind kind = EventKind::crossing_up;
    double param = 0.0;  // parameter value, bracketed by adjacent samples
    double where = 0.0;  // breakpoint location (crossings)
};

struct Trajectory {
    enum class ParamKind { external_t, internal_x };
    ParamKind param_kind = ParamKind::external_t;
    std::vector<double> param;  // strictly increasing
    std::vector<PhasePoint> points;
    std::vector<double> H;
    std::vector<Event> events;
    std::vector<Pair> pairs;
};

enum class Method { rk4, verlet, event_rk4 };

/// Fixed-step integration of the canonical equations over [0, span].
/// event_rk4 locates every coupling-breakpoint crossing of x by bisection
/// (parameter tolerance 1e-12), applies the sharp-step momentum jump
/// demanded by energy conservation, logs the event and restarts there.
/// verlet is accepted only for separable models (method_error otherwise).
Trajectory integrate(const ScenarioModel& model, const PhasePoint& start, double span,
                     double dt, Method method);

// --------------------------------------------------------------------- kick

/// Exact time-1 flow of the generator lambda * A(q,p) * Py: y jumps by
/// lambda * A (A is conserved along its own flow), (q,p) move under the
/// flow of A scaled by lambda * Py, Py is unchanged. Closed form for all
/// supported observables, hence exactly symplectic.
PhasePoint classical_kick(const PhasePoint& state, const ADescriptor& A, double lambda,
                          double t0);

// ------------------------------------------------------------- theta record

struct ThetaRecord {
    double record = 0.0;  // pointer shift attributable to the coupling
    double relative_error_estimate = 0.0;  // back-action: |record - m|x0|/Px_out| / record
    double t_event = 0.0;
    double px_out = 0.0;
};

/// Integrates the theta clock with event detection from (x0 < 0, Px0 > 0)
/// until the detector crossing. At Py0 = 0 the record is m(-x0)/Px0 exactly.
/// For Py0 != 0 the record still times the coupled particle, while the
/// free-flight benchmark reconstructed from the outgoing momentum differs
/// at first order Py0 g/(m C1); relative_error_estimate reports the
/// measured deviation. Throws no_arrival_error if the particle never
/// reaches x = 0 (Px0 <= 0, or reflection off the coupling step).
ThetaRecord theta_arrival_record(double m, double x0, double Px0, double Py0,
                                 double M = infinite_mass);

// ---------------------------------------------------------- internal time

struct SampledMap {
    std::vector<double> x;
    std::vector<double> values;  // t(x) or y(x)
};

struct SampledCurve {
    std::vector<double> x;
    std::vector<double> dydx;
    std::vector<double> y;
};

/// External time as a function of the clock coordinate:
/// t(x) = int dx' / sqrt(C1 - 2 Py0 g(x')/m), with t(x_lo) = 0.
/// Throws turning_point_error when the radicand is not positive.
SampledMap internal_time_map(const CouplingFunction& g, double m, double Py0, double C1,
                             double x_lo, double x_hi, std::size_t n_samples = 513);

/// dy/dx = (Py0/M + g(x)) / sqrt(C1 - 2 Py0 g(x)/m) and its cumulative
/// integral, for the general-coupling pointer.
SampledCurve internal_pointer_curve(const GeneralCoupling& model, double C1, double Py0,
                                    double x_lo, double x_hi, std::size_t n_samples = 513);

/// dy/dx = g(x) A / sqrt(C - 2 A Py0 g(x)/m) for the internal-time
/// measurement of an observable with conserved value A (M -> infinity).
SampledCurve internal_pointer_curve_observable(const CouplingFunction& g, double A, double C,
                                               double Py0, double m, double x_lo, double x_hi,
                                               std::size_t n_samples = 513);

// ------------------------------------------------------------------ arnold

/// Integrates the t-parametrized canonical equations for H1 and the
/// x-parametrized reduced equations on the constraint surface of
/// H2 = pt + H1, then returns the maximal phase-space deviation after
/// aligning the parameters. The segment [x_start, x_end] must be monotone
/// (no turning point), else monotonicity_error.
double arnold_compare(const H0Descriptor& h1, double x_start, double px_start, double x_end,
                      double dt = 1e-4);

// ------------------------------------------------------------ total energy

struct TotalEnergyResult {
    double delta_pz = 0.0;
    double margin = 0.0;              // max g(x) z0 over the range
    double velocity_condition = 0.0;  // Px/m (real clock only)
    double H = 0.0;                   // measured total energy
};

/// Ideal clock: dPz/dx = -g(x) H / (1 + g(x) z0)^2; at z0 = 0 the pointer
/// momentum records -H exactly (g has unit integral).
TotalEnergyResult total_energy_ideal(const TotalEnergyIdeal& model, double x_lo, double x_hi);

/// Real clock: dPz/dx = -g/(1+g z0)^{3/2} (C + 2 m H0)/(2 sqrt(C - 2 m H0 z0 g)),
/// C = 2m(H - H0) = Px^2. Records -H only when the clock moves at unit
/// velocity (Px = m).
TotalEnergyResult total_energy_real(const TotalEnergyReal& model, double x_lo, double x_hi);

// ----------------------------------------------------------------- margins

struct MarginEntry {
    std::string name;
    double value = 0.0;
    bool good = false;
};

struct MeasurementReport {
    double threshold = 0.1;
    std::vector<MarginEntry> margins;
    bool all_good() const;
};

/// Dimensionless good-measurement conditions, evaluated as printed.
/// Throws undefined_margin_error on vanishing denominators.
double margin_general_coupling(double g, double dPy0, double m, double C1);
double margin_internal_observable(double A, double Py0, double g, double m, double C);
double margin_spread_product(double dy, double dPy0, double sqrtC, double m, double x0,
                             double dA_over_A);
double margin_total_energy(double g, double z0);
double margin_pointer_energy(double dz, double dPz, double x0, double H);

struct MarginInputs {
    struct GeneralCouplingIn {
        double g, dPy0, m, C1;
    };
    struct InternalObservableIn {
        double A, Py0, g, m, C;
    };
    struct SpreadProductIn {
        double dy, dPy0, sqrtC, m, x0, dA_over_A;
    };
    struct TotalEnergyIn {
        double g, z0;
    };
    struct PointerEnergyIn {
        double dz, dPz, x0, H;
    };
    std::optional<GeneralCouplingIn> general_coupling;
    std::optional<InternalObservableIn> internal_observable;
    std::optional<SpreadProductIn> spread_product;
    std::optional<TotalEnergyIn> total_energy;
    std::optional<PointerEnergyIn> pointer_energy;
};

MeasurementReport measurement_margins(const MarginInputs& in, double threshold = 0.1);

}  // namespace timelab::classical
