#ifndef CARNOT_ERRORS_HPP
#define CARNOT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace carnot {

/// Malformed or inconsistent input (bad indices, non-monotone times, ...).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numerical procedure reached a state it can diagnose but not repair.
struct NumericalDiagnostic : std::runtime_error {
  double residual;
  NumericalDiagnostic(const std::string& msg, double res)
      : std::runtime_error(msg), residual(res) {}
};

/// The generating subspace does not Lie-generate the algebra.
struct NotBracketGenerating : NumericalDiagnostic {
  int stabilized_dim;
  NotBracketGenerating(int stab_dim, int dim)
      : NumericalDiagnostic("generators do not Lie-generate the algebra "
                            "(filtration stabilized at dimension " +
                                std::to_string(stab_dim) + " of " +
                                std::to_string(dim) + ")",
                            static_cast<double>(stab_dim)),
        stabilized_dim(stab_dim) {}
};

struct UnsupportedStep : InputError {
  explicit UnsupportedStep(int step)
      : InputError("group product series is implemented through order 6, "
                   "got step " +
                   std::to_string(step)) {}
};

struct OutOfChartRadius : NumericalDiagnostic {
  OutOfChartRadius(const std::string& msg, double res)
      : NumericalDiagnostic(msg, res) {}
};

struct NotSymplectic : NumericalDiagnostic {
  NotSymplectic(double loop_residual)
      : NumericalDiagnostic("loop integral of the pulled-back primitive does "
                            "not vanish (map is not symplectic), residual " +
                                std::to_string(loop_residual),
                            loop_residual) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace carnot

#endif
