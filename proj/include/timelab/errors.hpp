#pragma once

#include <stdexcept>
#include <string>

namespace timelab {

/// Bad user-supplied parameters (grid sizes, masses, scenario fields).
struct config_error : std::invalid_argument {
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Operands live on incompatible grids.
struct shape_error : std::invalid_argument {
    explicit shape_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Time step violates the splitting precondition dt * max_phase < pi.
struct step_size_error : std::invalid_argument {
    explicit step_size_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Quadrature radicand hit zero: the segment contains a turning point.
struct turning_point_error : std::domain_error {
    explicit turning_point_error(const std::string& what) : std::domain_error(what) {}
};

/// Reduction coordinate is not monotone on the requested segment.
struct monotonicity_error : std::domain_error {
    explicit monotonicity_error(const std::string& what) : std::domain_error(what) {}
};

/// The particle never reaches the detector.
struct no_arrival_error : std::domain_error {
    explicit no_arrival_error(const std::string& what) : std::domain_error(what) {}
};

/// Observable is not diagonal in any grid basis we support.
struct unsupported_observable_error : std::invalid_argument {
    explicit unsupported_observable_error(const std::string& what)
        : std::invalid_argument(what) {}
};

/// Requested integrator cannot handle the model (e.g. verlet on a
/// non-separable Hamiltonian).
struct method_error : std::invalid_argument {
    explicit method_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Moments of an (almost) empty distribution.
struct undefined_moments_error : std::domain_error {
    explicit undefined_moments_error(const std::string& what) : std::domain_error(what) {}
};

/// Margin with a vanishing denominator.
struct undefined_margin_error : std::domain_error {
    explicit undefined_margin_error(const std::string& what) : std::domain_error(what) {}
};

/// File output failed.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace timelab
