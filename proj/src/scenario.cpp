#include "timelab/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>

#include "timelab/arrival.hpp"
#include "timelab/classical.hpp"
#include "timelab/errors.hpp"
#include "timelab/qmeasure.hpp"
#include "timelab/states.hpp"

namespace timelab::report {

namespace cl = timelab::classical;
using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

namespace {

// ------------------------------------------------------------ json helpers

[[noreturn]] void missing(const std::string& field) {
    throw config_error("scenario: missing or invalid field \"" + field + "\"");
}

// key is the JSON member name; label (default: key) names the field in
// errors, with the enclosing object spelled out ("pointer.sigma").
double req_double(const json& j, const std::string& key, const std::string& label = "") {
    if (!j.contains(key) || !j.at(key).is_number()) missing(label.empty() ? key : label);
    return j.at(key).get<double>();
}

double opt_double(const json& j, const std::string& key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) missing(key);
    return j.at(key).get<double>();
}

std::size_t req_size(const json& j, const std::string& key, const std::string& label = "") {
    if (!j.contains(key) || !j.at(key).is_number_unsigned()) missing(label.empty() ? key : label);
    return j.at(key).get<std::size_t>();
}

std::string req_string(const json& j, const std::string& key, const std::string& label = "") {
    if (!j.contains(key) || !j.at(key).is_string()) missing(label.empty() ? key : label);
    return j.at(key).get<std::string>();
}

std::string opt_string(const json& j, const std::string& field, const std::string& dflt) {
    if (!j.contains(field)) return dflt;
    if (!j.at(field).is_string()) missing(field);
    return j.at(field).get<std::string>();
}

double positive(double v, const std::string& field) {
    if (!(v > 0.0)) throw config_error("scenario: field \"" + field + "\" must be positive");
    return v;
}

Grid1D parse_grid(const json& j, const std::string& field, std::size_t dflt_n = 4096,
                  double dflt_lo = -204.8, double dflt_hi = 204.8) {
    if (!j.contains(field)) return make_grid(dflt_n, dflt_lo, dflt_hi);
    const json& g = j.at(field);
    const std::size_t n = g.contains("n") ? req_size(g, "n") : dflt_n;
    const double lo = opt_double(g, "min", dflt_lo);
    const double hi = opt_double(g, "max", dflt_hi);
    return make_grid(n, lo, hi);
}

struct PacketSpec {
    double x0 = 0.0, p0 = 0.0, sigma = 1.0, weight = 1.0;
};

PacketSpec parse_packet(const json& j, const std::string& field) {
    if (!j.contains(field)) missing(field);
    const json& p = j.at(field);
    PacketSpec ps;
    ps.x0 = req_double(p, "x0", field + ".x0");
    ps.p0 = req_double(p, "p0", field + ".p0");
    ps.sigma = positive(req_double(p, "sigma", field + ".sigma"), field + ".sigma");
    ps.weight = opt_double(p, "weight", 1.0);
    return ps;
}

cl::CouplingFunction parse_coupling(const json& j, const std::string& field) {
    if (!j.contains(field)) missing(field);
    const json& g = j.at(field);
    const std::string type = req_string(g, "type");
    if (type == "step") return cl::CouplingFunction::step();
    if (type == "box") return cl::CouplingFunction::box(positive(req_double(g, "width"), field + ".width"));
    if (type == "bump") return cl::CouplingFunction::bump(positive(req_double(g, "width"), field + ".width"));
    if (type == "tabulated") {
        if (!g.contains("x") || !g.contains("g")) missing(field + ".x/.g");
        return cl::CouplingFunction::tabulated(g.at("x").get<std::vector<double>>(),
                                               g.at("g").get<std::vector<double>>());
    }
    throw config_error("scenario: unknown coupling type \"" + type + "\" in \"" + field + "\"");
}

cl::H0Descriptor parse_h0(const json& j, const std::string& field) {
    if (!j.contains(field)) missing(field);
    const json& h = j.at(field);
    const std::string type = req_string(h, "type");
    const double m = positive(opt_double(h, "m", 1.0), field + ".m");
    if (type == "free") return cl::FreeH0{m};
    if (type == "harmonic")
        return cl::HarmonicH0{m, positive(opt_double(h, "omega", 1.0), field + ".omega")};
    throw config_error("scenario: unknown h0 type \"" + type + "\"");
}

cl::ADescriptor parse_observable(const json& j, const std::string& field) {
    if (!j.contains(field)) missing(field);
    const json& a = j.at(field);
    const std::string type = req_string(a, "type");
    cl::ADescriptor d;
    if (type == "q" || type == "position")
        d.kind = cl::ObsKind::position;
    else if (type == "p" || type == "momentum")
        d.kind = cl::ObsKind::momentum;
    else if (type == "arrival_time") {
        d.kind = cl::ObsKind::arrival_time;
        d.x0 = opt_double(a, "x0", 0.0);
        d.m = positive(opt_double(a, "m", 1.0), field + ".m");
    } else
        throw unsupported_observable_error("scenario: observable \"" + type +
                                           "\" is not diagonal in any supported basis");
    return d;
}

double parse_pointer_mass(const json& j, const std::string& field) {
    if (!j.contains(field)) return cl::infinite_mass;
    if (j.at(field).is_string()) {
        if (j.at(field).get<std::string>() == "inf") return cl::infinite_mass;
        missing(field);
    }
    return positive(req_double(j, field), field);
}

// --------------------------------------------------------------- assembly

void put_provenance(RunResult& r, std::initializer_list<std::pair<std::string, std::string>> kv) {
    r.provenance["artifact_version"] = artifact_version;
    r.provenance["kind"] = r.kind;
    r.provenance["units"] = "dimensionless, hbar = 1";
    for (const auto& [k, v] : kv) r.provenance[k] = v;
}

Table trajectory_table(const cl::Trajectory& traj) {
    Table t;
    t.name = "trajectory";
    t.columns = {"param"};
    for (cl::Pair pr : traj.pairs) {
        switch (pr) {
            case cl::Pair::qp: t.columns.insert(t.columns.end(), {"q", "p"}); break;
            case cl::Pair::xPx: t.columns.insert(t.columns.end(), {"x", "P_x"}); break;
            case cl::Pair::yPy: t.columns.insert(t.columns.end(), {"y", "P_y"}); break;
            case cl::Pair::zPz: t.columns.insert(t.columns.end(), {"z", "P_z"}); break;
            case cl::Pair::tpt: t.columns.insert(t.columns.end(), {"t", "p_t"}); break;
        }
    }
    for (std::size_t i = 0; i < traj.param.size(); ++i) {
        std::vector<double> row{traj.param[i]};
        const cl::PhasePoint& s = traj.points[i];
        for (cl::Pair pr : traj.pairs) {
            switch (pr) {
                case cl::Pair::qp: row.push_back(s.q); row.push_back(s.p); break;
                case cl::Pair::xPx: row.push_back(s.x); row.push_back(s.Px); break;
                case cl::Pair::yPy: row.push_back(s.y); row.push_back(s.Py); break;
                case cl::Pair::zPz: row.push_back(s.z); row.push_back(s.Pz); break;
                case cl::Pair::tpt: row.push_back(s.t); row.push_back(s.pt); break;
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

TextTable event_table(const cl::Trajectory& traj) {
    TextTable t;
    t.name = "events";
    t.columns = {"kind", "param", "where"};
    for (const cl::Event& e : traj.events) {
        const char* kind = "";
        switch (e.kind) {
            case cl::EventKind::crossing_up: kind = "crossing_up"; break;
            case cl::EventKind::crossing_down: kind = "crossing_down"; break;
            case cl::EventKind::reflection: kind = "reflection"; break;
            case cl::EventKind::kick: kind = "kick"; break;
        }
        t.rows.push_back({kind, format_double(e.param), format_double(e.where)});
    }
    return t;
}

// Sweep axes address base parameters with dotted paths ("pointer.sigma").
json::json_pointer axis_pointer(const std::string& param) {
    std::string p = "/" + param;
    for (char& c : p)
        if (c == '.') c = '/';
    return json::json_pointer(p);
}

// ------------------------------------------------------------ kind handlers

struct ArrivalPovmParams {
    double m;
    PacketSpec packet;
    Grid1D grid;
    bool have_window = false;
    TRange window;
    std::size_t n_T = 2048;
    bool t_ref_mean = true;
    double t_ref = 0.0;
};

ArrivalPovmParams parse_arrival_povm(const json& j) {
    ArrivalPovmParams p;
    p.m = positive(req_double(j, "m"), "m");
    p.packet = parse_packet(j, "packet");
    p.grid = parse_grid(j, "grid");
    if (j.contains("T")) {
        const json& T = j.at("T");
        p.have_window = true;
        p.window = TRange{req_double(T, "lo", "T.lo"), req_double(T, "hi", "T.hi")};
        if (!(p.window.lo < p.window.hi)) missing("T.lo < T.hi");
        p.n_T = T.contains("n") ? req_size(T, "n") : p.n_T;
    }
    if (j.contains("t_ref") && j.at("t_ref").is_number()) {
        p.t_ref_mean = false;
        p.t_ref = j.at("t_ref").get<double>();
    }
    return p;
}

RunResult exec_arrival_povm(const ArrivalPovmParams& p, RunResult r) {
    WaveState phi = gaussian_packet(p.grid, p.packet.x0, p.packet.p0, p.packet.sigma);
    const TRange window = p.have_window ? p.window : estimate_T_window(phi, p.m);
    ArrivalDistribution dist = arrival_density(phi, p.m, window, p.n_T);
    ArrivalMoments mom = moments(dist, 0.0);
    const double t_ref = p.t_ref_mean ? mom.mean : p.t_ref;
    mom = moments(dist, t_ref);

    r.summary["captured_mass"] = dist.captured_mass;
    r.summary["mean_arrival"] = mom.mean;
    r.summary["tau"] = mom.tau;
    r.summary["kinetic_energy"] = expectation(phi, Observable::kinetic, p.m);
    r.summary["wigner_margin"] = wigner_margin(phi, dist, t_ref, p.m);
    r.summary["coverage_ok"] = dist.coverage_ok ? 1.0 : 0.0;

    Table t;
    t.name = "arrival";
    t.columns = {"T", "density"};
    for (std::size_t i = 0; i < dist.T.size(); ++i)
        t.rows.push_back({dist.T[i], dist.density[i]});
    r.tables.push_back(std::move(t));

    put_provenance(r, {{"n_points", std::to_string(p.grid.n_points)},
                       {"x_min", format_double(p.grid.x_min)},
                       {"x_max", format_double(p.grid.x_max)},
                       {"n_T", std::to_string(p.n_T)},
                       {"T_lo", format_double(window.lo)},
                       {"T_hi", format_double(window.hi)},
                       {"t_ref", format_double(t_ref)},
                       {"coverage_tolerance", "0.99"}});
    return r;
}

struct ThetaQuantumParams {
    double m, lambda, t_final, dt;
    PacketSpec packet;
    double pointer_z0, pointer_sigma, pointer_mass;
    Grid1D grid_x, grid_z;
};

ThetaQuantumParams parse_theta_quantum(const json& j) {
    ThetaQuantumParams p;
    p.m = positive(req_double(j, "m"), "m");
    p.lambda = opt_double(j, "lambda", 1.0);
    p.packet = parse_packet(j, "packet");
    p.grid_x = parse_grid(j, "grid_x", 1024, -40.0, 40.0);
    p.grid_z = parse_grid(j, "grid_z", 512, -25.0, 25.0);
    if (!j.contains("pointer")) missing("pointer");
    p.pointer_z0 = opt_double(j.at("pointer"), "z0", 0.0);
    p.pointer_sigma = positive(req_double(j.at("pointer"), "sigma", "pointer.sigma"), "pointer.sigma");
    p.pointer_mass = parse_pointer_mass(j, "pointer_mass");
    p.t_final = positive(req_double(j, "t_final"), "t_final");
    p.dt = opt_double(j, "dt", 0.0);
    return p;
}

RunResult exec_theta_quantum(const ThetaQuantumParams& p, RunResult r) {
    WaveState part = gaussian_packet(p.grid_x, p.packet.x0, p.packet.p0, p.packet.sigma);
    WaveState pointer = gaussian_packet(p.grid_z, p.pointer_z0, 0.0, p.pointer_sigma);
    TwoBodyState psi = tensor_product(part, pointer);

    double dt = p.dt;
    double phase = max_kinetic_phase(p.grid_x, p.m);
    if (std::isfinite(p.pointer_mass)) phase += max_kinetic_phase(p.grid_z, p.pointer_mass);
    if (dt <= 0.0) dt = 0.5 * std::numbers::pi / phase;
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(p.t_final / dt));
    dt = p.t_final / static_cast<double>(n_steps);

    ThetaClockParams tc;
    tc.m = p.m;
    tc.pointer_mass = p.pointer_mass;
    tc.lambda = p.lambda;
    const double norm0 = psi.norm_sq();
    TwoBodyState fin = evolve_theta_clock(psi, tc, dt, n_steps);
    PointerMarginal marg = pointer_marginal(fin);

    const double shift = marg.mean - p.pointer_z0;
    const double blur =
        std::sqrt(std::max(marg.spread * marg.spread - p.pointer_sigma * p.pointer_sigma, 0.0));
    const double E = expectation(part, Observable::kinetic, p.m);

    r.summary["pointer_mean_shift"] = shift;
    r.summary["pointer_spread"] = marg.spread;
    r.summary["record_blur"] = blur;
    r.summary["classical_arrival"] = p.m * std::abs(p.packet.x0) / std::abs(p.packet.p0);
    r.summary["kinetic_energy"] = E;
    r.summary["E_dt_product"] = E * p.pointer_sigma;  // Delta t ~ Delta z
    r.summary["norm_drift"] = std::abs(fin.norm_sq() - norm0);

    Table t;
    t.name = "pointer_marginal";
    t.columns = {"z", "density"};
    for (std::size_t i = 0; i < marg.z.size(); ++i) t.rows.push_back({marg.z[i], marg.density[i]});
    r.tables.push_back(std::move(t));

    put_provenance(r, {{"n_x", std::to_string(p.grid_x.n_points)},
                       {"n_z", std::to_string(p.grid_z.n_points)},
                       {"dt", format_double(dt)},
                       {"n_steps", std::to_string(n_steps)},
                       {"t_final", format_double(p.t_final)},
                       {"pointer_mass", std::isfinite(p.pointer_mass)
                                            ? format_double(p.pointer_mass)
                                            : std::string("inf")}});
    return r;
}

struct AllcockParams {
    double m, V, t_final, dt;
    PacketSpec packet;
    Grid1D grid;
};

AllcockParams parse_allcock(const json& j) {
    AllcockParams p;
    p.m = positive(req_double(j, "m"), "m");
    p.V = positive(req_double(j, "V"), "V");
    p.packet = parse_packet(j, "packet");
    p.grid = parse_grid(j, "grid", 2048, -102.4, 102.4);
    p.t_final = positive(req_double(j, "t_final"), "t_final");
    p.dt = opt_double(j, "dt", 0.0);
    return p;
}

RunResult exec_allcock(const AllcockParams& p, RunResult r) {
    WaveState psi = gaussian_packet(p.grid, p.packet.x0, p.packet.p0, p.packet.sigma);
    double dt = p.dt;
    if (dt <= 0.0) dt = 0.5 * std::numbers::pi / max_kinetic_phase(p.grid, p.m);
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(p.t_final / dt));
    dt = p.t_final / static_cast<double>(n_steps);

    AbsorbResult res = absorb_evolve(psi, AbsorbingPotential{p.V}, p.m, dt, n_steps);
    r.summary["absorbed_fraction_final"] = res.absorbed_fraction.back();
    r.summary["norm_final"] = res.state.norm();

    Table t;
    t.name = "absorbed";
    t.columns = {"t", "absorbed_fraction"};
    for (std::size_t i = 0; i < res.t.size(); ++i)
        t.rows.push_back({res.t[i], res.absorbed_fraction[i]});
    r.tables.push_back(std::move(t));

    put_provenance(r, {{"n_points", std::to_string(p.grid.n_points)},
                       {"dt", format_double(dt)},
                       {"V", format_double(p.V)}});
    return r;
}

struct KickQuantumParams {
    double lambda;
    std::string observable;  // "x" or "p"
    std::vector<PacketSpec> system;
    Grid1D grid_x, grid_z;
    double pointer_z0, pointer_sigma;
};

KickQuantumParams parse_kick_quantum(const json& j) {
    KickQuantumParams p;
    p.lambda = req_double(j, "lambda");
    p.observable = opt_string(j, "observable", "x");
    if (p.observable != "x" && p.observable != "p")
        throw unsupported_observable_error(
            "scenario: impulsive_kick observable must be diagonal (\"x\" or \"p\")");
    if (!j.contains("system")) missing("system");
    const json& sys = j.at("system");
    if (sys.contains("packets")) {
        for (const json& pk : sys.at("packets")) {
            PacketSpec ps;
            ps.x0 = req_double(pk, "x0", "system.packets.x0");
            ps.p0 = req_double(pk, "p0", "system.packets.p0");
            ps.sigma = positive(req_double(pk, "sigma", "system.packets.sigma"), "system.packets.sigma");
            ps.weight = opt_double(pk, "weight", 1.0);
            p.system.push_back(ps);
        }
        if (p.system.empty()) missing("system.packets");
    } else {
        PacketSpec ps;
        ps.x0 = req_double(sys, "x0", "system.x0");
        ps.p0 = req_double(sys, "p0", "system.p0");
        ps.sigma = positive(req_double(sys, "sigma", "system.sigma"), "system.sigma");
        p.system.push_back(ps);
    }
    p.grid_x = parse_grid(j, "grid_x", 512, -20.0, 20.0);
    p.grid_z = parse_grid(j, "grid_z", 512, -20.0, 20.0);
    if (!j.contains("pointer")) missing("pointer");
    p.pointer_z0 = opt_double(j.at("pointer"), "z0", 0.0);
    p.pointer_sigma = positive(req_double(j.at("pointer"), "sigma", "pointer.sigma"), "pointer.sigma");
    return p;
}

RunResult exec_kick_quantum(const KickQuantumParams& p, RunResult r) {
    WaveState sys;
    sys.grid = p.grid_x;
    sys.basis = Basis::position;
    sys.amp.assign(p.grid_x.n_points, cplx{0.0, 0.0});
    for (const PacketSpec& ps : p.system) {
        WaveState part = gaussian_packet(p.grid_x, ps.x0, ps.p0, ps.sigma);
        for (std::size_t i = 0; i < sys.amp.size(); ++i) sys.amp[i] += ps.weight * part.amp[i];
    }
    sys.normalize();
    WaveState pointer = gaussian_packet(p.grid_z, p.pointer_z0, 0.0, p.pointer_sigma);
    TwoBodyState psi = tensor_product(sys, pointer);

    KickSpec kick;
    kick.lambda = p.lambda;
    kick.diagonal_in = (p.observable == "x") ? Basis::position : Basis::momentum;
    kick.values = (p.observable == "x") ? p.grid_x.x_samples() : p.grid_x.p_samples();
    TwoBodyState fin = impulsive_kick(psi, kick);
    PointerMarginal marg = pointer_marginal(fin);

    r.summary["pointer_mean_shift"] = marg.mean - p.pointer_z0;
    r.summary["pointer_spread"] = marg.spread;
    r.summary["pointer_mass_captured"] = marg.mass;

    Table t;
    t.name = "pointer_marginal";
    t.columns = {"z", "density"};
    for (std::size_t i = 0; i < marg.z.size(); ++i) t.rows.push_back({marg.z[i], marg.density[i]});
    r.tables.push_back(std::move(t));

    put_provenance(r, {{"n_x", std::to_string(p.grid_x.n_points)},
                       {"n_z", std::to_string(p.grid_z.n_points)},
                       {"lambda", format_double(p.lambda)},
                       {"observable", p.observable}});
    return r;
}

struct ThetaClassicalParams {
    double m, M, x0, Px0, Py0;
};

ThetaClassicalParams parse_theta_classical(const json& j) {
    ThetaClassicalParams p;
    p.m = positive(req_double(j, "m"), "m");
    p.M = parse_pointer_mass(j, "M");
    p.x0 = req_double(j, "x0");
    p.Px0 = req_double(j, "Px0");
    p.Py0 = opt_double(j, "Py0", 0.0);
    return p;
}

RunResult exec_theta_classical(const ThetaClassicalParams& p, RunResult r) {
    cl::ThetaRecord rec = cl::theta_arrival_record(p.m, p.x0, p.Px0, p.Py0, p.M);
    r.summary["record"] = rec.record;
    r.summary["relative_error_estimate"] = rec.relative_error_estimate;
    r.summary["t_event"] = rec.t_event;
    r.summary["px_out"] = rec.px_out;

    const double C1 = (rec.px_out / p.m) * (rec.px_out / p.m);
    cl::MarginInputs mi;
    mi.general_coupling = cl::MarginInputs::GeneralCouplingIn{1.0, p.Py0, p.m, C1};
    cl::MeasurementReport rep = cl::measurement_margins(mi);
    for (const cl::MarginEntry& e : rep.margins) {
        r.summary["margin_" + e.name] = e.value;
        r.summary["margin_" + e.name + "_good"] = e.good ? 1.0 : 0.0;
    }

    cl::ScenarioModel model = cl::ThetaClock{p.m, p.M};
    cl::PhasePoint start;
    start.x = p.x0;
    start.Px = p.Px0;
    start.Py = p.Py0;
    const double span = 1.5 * p.m * (-p.x0) / p.Px0;
    cl::Trajectory traj = cl::integrate(model, start, span, span / 512.0, cl::Method::event_rk4);
    r.tables.push_back(trajectory_table(traj));
    r.text_tables.push_back(event_table(traj));

    put_provenance(r, {{"M", std::isfinite(p.M) ? format_double(p.M) : std::string("inf")},
                       {"event_tolerance", "1e-12"},
                       {"C1_convention", "fixed from initial data (asymptotic velocity squared)"}});
    return r;
}

struct ClassicalKickParams {
    cl::InstantKick model;
    cl::PhasePoint start;
    double span, dt;
    cl::Method method = cl::Method::rk4;
};

ClassicalKickParams parse_classical_kick(const json& j) {
    ClassicalKickParams p;
    p.model.h0 = parse_h0(j, "h0");
    p.model.A = parse_observable(j, "A");
    p.model.t0 = req_double(j, "t0");
    p.model.lambda = req_double(j, "lambda");
    p.model.M = parse_pointer_mass(j, "M");
    if (!j.contains("start")) missing("start");
    const json& s = j.at("start");
    p.start.q = opt_double(s, "q", 0.0);
    p.start.p = opt_double(s, "p", 0.0);
    p.start.y = opt_double(s, "y", 0.0);
    p.start.Py = opt_double(s, "Py", 0.0);
    p.span = positive(req_double(j, "span"), "span");
    p.dt = positive(opt_double(j, "dt", p.span / 2048.0), "dt");
    const std::string method = opt_string(j, "method", "rk4");
    if (method == "rk4")
        p.method = cl::Method::rk4;
    else if (method == "verlet")
        p.method = cl::Method::verlet;
    else
        throw config_error("scenario: unknown method \"" + method + "\"");
    return p;
}

RunResult exec_classical_kick(const ClassicalKickParams& p, RunResult r) {
    cl::Trajectory traj =
        cl::integrate(cl::ScenarioModel{p.model}, p.start, p.span, p.dt, p.method);
    const cl::PhasePoint& fin = traj.points.back();
    const double drift = std::isfinite(p.model.M) ? (p.start.Py / p.model.M) * p.span : 0.0;
    r.summary["y_record"] = fin.y - p.start.y - drift;
    r.summary["y_final"] = fin.y;
    r.summary["energy_drift"] =
        std::abs(traj.H.back() - traj.H.front()) / std::max(1.0, std::abs(traj.H.front()));
    r.tables.push_back(trajectory_table(traj));
    r.text_tables.push_back(event_table(traj));
    put_provenance(r, {{"dt", format_double(p.dt)},
                       {"span", format_double(p.span)},
                       {"t0", format_double(p.model.t0)}});
    return r;
}

struct GeneralCouplingParams {
    cl::GeneralCoupling model;
    cl::PhasePoint start;
    double span, dt;
};

GeneralCouplingParams parse_general_coupling(const json& j) {
    GeneralCouplingParams p;
    p.model.m = positive(req_double(j, "m"), "m");
    p.model.M = parse_pointer_mass(j, "M");
    p.model.g = parse_coupling(j, "g");
    if (!j.contains("start")) missing("start");
    const json& s = j.at("start");
    p.start.x = req_double(s, "x", "start.x");
    p.start.Px = req_double(s, "Px", "start.Px");
    p.start.y = opt_double(s, "y", 0.0);
    p.start.Py = opt_double(s, "Py", 0.0);
    p.span = positive(req_double(j, "span"), "span");
    p.dt = positive(opt_double(j, "dt", p.span / 4096.0), "dt");
    return p;
}

RunResult exec_general_coupling(const GeneralCouplingParams& p, RunResult r) {
    const cl::Method method =
        p.model.g.piecewise_constant() ? cl::Method::event_rk4 : cl::Method::rk4;
    cl::Trajectory traj =
        cl::integrate(cl::ScenarioModel{p.model}, p.start, p.span, p.dt, method);
    const cl::PhasePoint& fin = traj.points.back();
    const double drift = std::isfinite(p.model.M) ? (p.start.Py / p.model.M) * p.span : 0.0;
    r.summary["y_record"] = fin.y - p.start.y - drift;
    r.summary["energy_drift"] =
        std::abs(traj.H.back() - traj.H.front()) / std::max(1.0, std::abs(traj.H.front()));
    r.summary["n_events"] = static_cast<double>(traj.events.size());
    r.tables.push_back(trajectory_table(traj));
    r.text_tables.push_back(event_table(traj));
    put_provenance(r, {{"dt", format_double(p.dt)},
                       {"span", format_double(p.span)},
                       {"method", p.model.g.piecewise_constant() ? "event_rk4" : "rk4"}});
    return r;
}

struct ArnoldParams {
    cl::H0Descriptor h1;
    double x_start, px_start, x_end, dt;
};

ArnoldParams parse_arnold(const json& j) {
    ArnoldParams p;
    p.h1 = parse_h0(j, "h1");
    if (!j.contains("start")) missing("start");
    p.x_start = req_double(j.at("start"), "x", "start.x");
    p.px_start = req_double(j.at("start"), "Px", "start.Px");
    p.x_end = req_double(j, "x_end");
    p.dt = positive(opt_double(j, "dt", 1e-4), "dt");
    return p;
}

RunResult exec_arnold(const ArnoldParams& p, RunResult r) {
    r.summary["max_deviation"] = cl::arnold_compare(p.h1, p.x_start, p.px_start, p.x_end, p.dt);
    put_provenance(r, {{"dt", format_double(p.dt)},
                       {"x_start", format_double(p.x_start)},
                       {"x_end", format_double(p.x_end)}});
    return r;
}

struct TotalEnergyParams {
    bool real = false;
    cl::TotalEnergyIdeal ideal;
    cl::TotalEnergyReal realm;
    double x_lo, x_hi;
};

TotalEnergyParams parse_total_energy(const json& j, bool real) {
    TotalEnergyParams p;
    p.real = real;
    if (!j.contains("x_range")) missing("x_range");
    p.x_lo = req_double(j.at("x_range"), "lo", "x_range.lo");
    p.x_hi = req_double(j.at("x_range"), "hi", "x_range.hi");
    if (!(p.x_lo < p.x_hi)) missing("x_range");
    if (real) {
        p.realm.m = positive(req_double(j, "m"), "m");
        p.realm.h_box0 = req_double(j, "h_box0");
        p.realm.px = req_double(j, "px");
        p.realm.g = parse_coupling(j, "g");
        p.realm.z0 = opt_double(j, "z0", 0.0);
    } else {
        p.ideal.h_box0 = req_double(j, "h_box0");
        p.ideal.px0 = req_double(j, "px0");
        p.ideal.g = parse_coupling(j, "g");
        p.ideal.z0 = opt_double(j, "z0", 0.0);
    }
    return p;
}

RunResult exec_total_energy(const TotalEnergyParams& p, RunResult r) {
    cl::TotalEnergyResult res = p.real ? cl::total_energy_real(p.realm, p.x_lo, p.x_hi)
                                       : cl::total_energy_ideal(p.ideal, p.x_lo, p.x_hi);
    r.summary["delta_pz"] = res.delta_pz;
    r.summary["H"] = res.H;
    r.summary["record_error_abs"] = std::abs(res.delta_pz + res.H);
    r.summary["record_error_rel"] = std::abs(res.delta_pz + res.H) / std::abs(res.H);
    r.summary["margin_total_energy"] = res.margin;
    r.summary["margin_total_energy_good"] = res.margin < 0.1 ? 1.0 : 0.0;
    if (p.real) r.summary["velocity_condition"] = res.velocity_condition;
    put_provenance(r, {{"x_lo", format_double(p.x_lo)},
                       {"x_hi", format_double(p.x_hi)},
                       {"good_threshold", "0.1"},
                       {"C_convention", "fixed from initial data"}});
    return r;
}

struct ResolutionParams {
    ResolutionSweepParams sweep;
    std::vector<double> E_list, width_list;
};

ResolutionParams parse_resolution(const json& j) {
    ResolutionParams p;
    p.sweep.m = positive(req_double(j, "m"), "m");
    p.sweep.x0 = req_double(j, "x0");
    p.sweep.sigma_x = positive(req_double(j, "sigma_x"), "sigma_x");
    p.sweep.t_final_over_t0 = positive(opt_double(j, "t_final_over_t0", 1.4), "t_final_over_t0");
    p.sweep.grid_x = parse_grid(j, "grid_x", 512, -60.0, 60.0);
    p.sweep.grid_z = parse_grid(j, "grid_z", 256, -40.0, 40.0);
    p.sweep.dt = opt_double(j, "dt", 0.0);
    if (!j.contains("E_list") || !j.at("E_list").is_array() || j.at("E_list").empty())
        missing("E_list");
    if (!j.contains("width_list") || !j.at("width_list").is_array() || j.at("width_list").empty())
        missing("width_list");
    p.E_list = j.at("E_list").get<std::vector<double>>();
    p.width_list = j.at("width_list").get<std::vector<double>>();
    return p;
}

RunResult exec_resolution(const ResolutionParams& p, RunResult r) {
    std::vector<ResolutionRow> rows = resolution_sweep(p.E_list, p.width_list, p.sweep);
    Table t;
    t.name = "resolution";
    t.columns = {"E", "pointer_width", "E_dt_product", "record_mean", "record_spread",
                 "record_blur", "classical_t0"};
    for (const ResolutionRow& row : rows)
        t.rows.push_back({row.E, row.pointer_width, row.product, row.record_mean,
                          row.record_spread, row.record_blur, row.classical_t0});
    r.tables.push_back(std::move(t));
    r.summary["n_rows"] = static_cast<double>(rows.size());
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].product > rows[i - 1].product && rows[i].record_blur > rows[i - 1].record_blur)
            monotone = false;
    r.summary["blur_monotone_in_product"] = monotone ? 1.0 : 0.0;
    put_provenance(r, {{"n_x", std::to_string(p.sweep.grid_x.n_points)},
                       {"n_z", std::to_string(p.sweep.grid_z.n_points)},
                       {"t_final_over_t0", format_double(p.sweep.t_final_over_t0)}});
    return r;
}

// --------------------------------------------------------------- dispatch

void validate_kind(const std::string& kind, const json& j) {
    if (kind == "arrival_povm") parse_arrival_povm(j);
    else if (kind == "theta_clock_quantum") parse_theta_quantum(j);
    else if (kind == "allcock") parse_allcock(j);
    else if (kind == "impulsive_kick") parse_kick_quantum(j);
    else if (kind == "theta_clock_classical") parse_theta_classical(j);
    else if (kind == "classical_kick") parse_classical_kick(j);
    else if (kind == "general_coupling") parse_general_coupling(j);
    else if (kind == "arnold_check") parse_arnold(j);
    else if (kind == "total_energy_ideal") parse_total_energy(j, false);
    else if (kind == "total_energy_real") parse_total_energy(j, true);
    else if (kind == "theta_resolution_sweep") parse_resolution(j);
    else
        throw config_error("scenario: unknown kind \"" + kind + "\"");
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("scenario: top level must be an object");
    ScenarioConfig cfg;
    cfg.kind = req_string(j, "kind");
    cfg.id = opt_string(j, "id", "scenario");
    cfg.raw = j.dump();

    if (cfg.kind == "sweep") {
        if (!j.contains("base") || !j.at("base").is_object())
            missing("base");
        if (!j.contains("axes") || !j.at("axes").is_array() || j.at("axes").empty())
            throw config_error("scenario: sweep requires a nonempty \"axes\" array");
        const json& base = j.at("base");
        const std::string base_kind = req_string(base, "kind");
        for (const json& ax : j.at("axes")) {
            const std::string param = req_string(ax, "param", "axes.param");
            if (!ax.contains("values") || !ax.at("values").is_array() || ax.at("values").empty())
                throw config_error("scenario: sweep axis \"" + param +
                                   "\" requires a nonempty values array");
            // the axis must address an existing parameter of the base scenario
            json probe = base;
            json::json_pointer ptr = axis_pointer(param);
            try {
                if (!probe.contains(ptr))
                    throw config_error("scenario: sweep axis \"" + param +
                                       "\" does not name a base parameter");
            } catch (const json::exception&) {
                throw config_error("scenario: sweep axis \"" + param + "\" is not addressable");
            }
        }
        json probe = base;
        validate_kind(base_kind, probe);
    } else {
        validate_kind(cfg.kind, j);
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

RunResult run_scenario(const ScenarioConfig& config) {
    const json j = json::parse(config.raw);
    RunResult r;
    r.id = config.id;
    r.kind = config.kind;
    try {
        if (config.kind == "arrival_povm") return exec_arrival_povm(parse_arrival_povm(j), r);
        if (config.kind == "theta_clock_quantum")
            return exec_theta_quantum(parse_theta_quantum(j), r);
        if (config.kind == "allcock") return exec_allcock(parse_allcock(j), r);
        if (config.kind == "impulsive_kick") return exec_kick_quantum(parse_kick_quantum(j), r);
        if (config.kind == "theta_clock_classical")
            return exec_theta_classical(parse_theta_classical(j), r);
        if (config.kind == "classical_kick")
            return exec_classical_kick(parse_classical_kick(j), r);
        if (config.kind == "general_coupling")
            return exec_general_coupling(parse_general_coupling(j), r);
        if (config.kind == "arnold_check") return exec_arnold(parse_arnold(j), r);
        if (config.kind == "total_energy_ideal")
            return exec_total_energy(parse_total_energy(j, false), r);
        if (config.kind == "total_energy_real")
            return exec_total_energy(parse_total_energy(j, true), r);
        if (config.kind == "theta_resolution_sweep")
            return exec_resolution(parse_resolution(j), r);
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw std::runtime_error("scenario \"" + config.id + "\" (" + config.kind +
                                 ") failed: " + e.what());
    }
    throw config_error("scenario: unknown kind \"" + config.kind + "\"");
}

SweepResult run_sweep(const ScenarioConfig& config) {
    const json j = json::parse(config.raw);
    if (config.kind != "sweep") throw config_error("run_sweep: kind must be \"sweep\"");

    struct AxisSpec {
        std::string param;
        std::vector<double> values;
    };
    std::vector<AxisSpec> axes;
    for (const json& ax : j.at("axes")) {
        AxisSpec spec;
        spec.param = ax.at("param").get<std::string>();
        spec.values = ax.at("values").get<std::vector<double>>();
        std::sort(spec.values.begin(), spec.values.end());
        axes.push_back(std::move(spec));
    }

    // Cartesian product, row-major (first axis slowest), ordered by value.
    std::vector<std::vector<double>> combos{{}};
    for (const AxisSpec& ax : axes) {
        std::vector<std::vector<double>> next;
        for (const std::vector<double>& c : combos)
            for (double v : ax.values) {
                std::vector<double> cc = c;
                cc.push_back(v);
                next.push_back(std::move(cc));
            }
        combos = std::move(next);
    }

    const json base = j.at("base");
    std::vector<ScenarioConfig> members;
    members.reserve(combos.size());
    for (const std::vector<double>& combo : combos) {
        json member = base;
        std::string id = config.id;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            json::json_pointer ptr = axis_pointer(axes[a].param);
            member[ptr] = combo[a];
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%g", combo[a]);
            std::string tag = axes[a].param + "=" + buf;
            for (char& c : tag)
                if (c == '/' || c == '.') c = '_';
            id += "__" + tag;
        }
        member["id"] = id;
        ScenarioConfig mc;
        mc.id = id;
        mc.kind = base.at("kind").get<std::string>();
        mc.raw = member.dump();
        members.push_back(std::move(mc));
    }

    // Members are independent; run them concurrently and collect by index.
    SweepResult out;
    out.runs.resize(members.size());
    {
        std::vector<std::future<RunResult>> futs;
        futs.reserve(members.size());
        for (const ScenarioConfig& mc : members)
            futs.push_back(std::async(std::launch::async, [&mc] { return run_scenario(mc); }));
        for (std::size_t i = 0; i < futs.size(); ++i) out.runs[i] = futs[i].get();
    }

    out.combined.name = "sweep";
    for (const AxisSpec& ax : axes) out.combined.columns.push_back(ax.param);
    if (!out.runs.empty())
        for (const auto& [k, v] : out.runs.front().summary) out.combined.columns.push_back(k);
    for (std::size_t i = 0; i < out.runs.size(); ++i) {
        std::vector<double> row = combos[i];
        for (const auto& [k, v] : out.runs[i].summary) row.push_back(v);
        out.combined.rows.push_back(std::move(row));
    }
    return out;
}

// ------------------------------------------------------------------ export

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << content;
    if (!out) throw io_error("write failed for " + path);
}

std::string csv_of_table(const Table& t) {
    std::string s;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c) s += ',';
        s += t.columns[c];
    }
    s += '\n';
    for (const std::vector<double>& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) s += ',';
            s += format_double(row[c]);
        }
        s += '\n';
    }
    return s;
}

std::string csv_of_text_table(const TextTable& t) {
    std::string s;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c) s += ',';
        s += t.columns[c];
    }
    s += '\n';
    for (const std::vector<std::string>& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) s += ',';
            s += row[c];
        }
        s += '\n';
    }
    return s;
}

// Hand-rolled writer: %.17g doubles, sorted keys, fixed layout. nlohmann's
// emitter is not pinned to a digit convention, and byte-identical reruns
// are part of the export contract.
std::string json_of_result(const RunResult& r) {
    std::string s = "{\n";
    s += "  \"id\": \"" + json_escape(r.id) + "\",\n";
    s += "  \"kind\": \"" + json_escape(r.kind) + "\",\n";
    s += "  \"summary\": {";
    bool first = true;
    for (const auto& [k, v] : r.summary) {
        s += first ? "\n" : ",\n";
        s += "    \"" + json_escape(k) + "\": " + format_double(v);
        first = false;
    }
    s += "\n  },\n";
    s += "  \"tables\": {";
    first = true;
    for (const Table& t : r.tables) {
        s += first ? "\n" : ",\n";
        s += "    \"" + json_escape(t.name) + "\": {\n      \"columns\": [";
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (c) s += ", ";
            s += "\"" + json_escape(t.columns[c]) + "\"";
        }
        s += "],\n      \"rows\": [";
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            s += (i ? ",\n        [" : "\n        [");
            for (std::size_t c = 0; c < t.rows[i].size(); ++c) {
                if (c) s += ", ";
                s += format_double(t.rows[i][c]);
            }
            s += "]";
        }
        s += "\n      ]\n    }";
        first = false;
    }
    s += "\n  },\n";
    s += "  \"events\": {";
    first = true;
    for (const TextTable& t : r.text_tables) {
        s += first ? "\n" : ",\n";
        s += "    \"" + json_escape(t.name) + "\": {\n      \"columns\": [";
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (c) s += ", ";
            s += "\"" + json_escape(t.columns[c]) + "\"";
        }
        s += "],\n      \"rows\": [";
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            s += (i ? ",\n        [" : "\n        [");
            for (std::size_t c = 0; c < t.rows[i].size(); ++c) {
                if (c) s += ", ";
                s += "\"" + json_escape(t.rows[i][c]) + "\"";
            }
            s += "]";
        }
        s += "\n      ]\n    }";
        first = false;
    }
    s += "\n  },\n";
    s += "  \"provenance\": {";
    first = true;
    for (const auto& [k, v] : r.provenance) {
        s += first ? "\n" : ",\n";
        s += "    \"" + json_escape(k) + "\": \"" + json_escape(v) + "\"";
        first = false;
    }
    s += "\n  }\n}\n";
    return s;
}

std::string provenance_json(const RunResult& r) {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, v] : r.provenance) {
        s += first ? "\n" : ",\n";
        s += "  \"" + json_escape(k) + "\": \"" + json_escape(v) + "\"";
        first = false;
    }
    s += "\n}\n";
    return s;
}

}  // namespace

std::vector<std::string> export_results(const std::vector<RunResult>& results,
                                        ExportFormat format, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory " + out_dir);

    std::vector<std::string> written;
    for (const RunResult& r : results) {
        const std::string base = out_dir + "/" + r.id;
        if (format == ExportFormat::json) {
            const std::string path = base + ".json";
            write_file(path, json_of_result(r));
            written.push_back(path);
            continue;
        }
        {
            std::string s = "quantity,value\n";
            for (const auto& [k, v] : r.summary) s += k + "," + format_double(v) + "\n";
            write_file(base + "_summary.csv", s);
            written.push_back(base + "_summary.csv");
        }
        for (const Table& t : r.tables) {
            const std::string path = base + "_" + t.name + ".csv";
            write_file(path, csv_of_table(t));
            written.push_back(path);
        }
        for (const TextTable& t : r.text_tables) {
            const std::string path = base + "_" + t.name + ".csv";
            write_file(path, csv_of_text_table(t));
            written.push_back(path);
        }
        write_file(base + "_provenance.json", provenance_json(r));
        written.push_back(base + "_provenance.json");
    }
    return written;
}

std::vector<std::string> export_sweep(const SweepResult& sweep, ExportFormat format,
                                      const std::string& out_dir) {
    std::vector<std::string> written = export_results(sweep.runs, format, out_dir);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const std::string path = out_dir + "/sweep_combined.csv";
    write_file(path, csv_of_table(sweep.combined));
    written.push_back(path);
    return written;
}

}  // namespace timelab::report
