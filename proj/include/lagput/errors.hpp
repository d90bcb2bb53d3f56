#pragma once

#include <stdexcept>
#include <string>

namespace lagput {

/// A numerical procedure could not produce a trustworthy answer (no bracket,
/// inconsistent roots, quadrature that does not settle).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Projected relaxation did not reach its tolerance.
class SolverError : public NumericalError {
public:
    SolverError(const std::string& what, double worst_residual)
        : NumericalError(what), worst_residual_(worst_residual)
    {
    }

    double worst_residual() const { return worst_residual_; }

private:
    double worst_residual_;
};

}  // namespace lagput
