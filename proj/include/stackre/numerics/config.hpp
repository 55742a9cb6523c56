#pragma once

#include "stackre/errors.hpp"

namespace stackre::numerics {

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  // Width of the first panel of a semi-infinite integral. Later panels double.
  double initial_width = 1.0;
  int max_subdivisions = 2000;
  int max_doublings = 64;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
      throw ValidationError("quadrature tolerances must be positive");
    }
    if (max_subdivisions < 1) {
      throw ValidationError("quadrature max_subdivisions must be >= 1");
    }
    if (!(initial_width > 0.0)) {
      throw ValidationError("quadrature initial_width must be positive");
    }
  }
};

struct SolverConfig {
  double tolerance = 1e-12;
  int max_iterations = 200;
  double damping = 1.0;
  // Relative step of the central-difference Jacobian: h = fd_step * (1 + |x|).
  double fd_step = 1e-6;
  // Picard step size below which Newton acceleration is switched on.
  double newton_switch = 1e-3;

  void validate() const {
    if (!(tolerance > 0.0)) throw ValidationError("solver tolerance must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) {
      throw ValidationError("solver damping must lie in (0, 1]");
    }
    if (max_iterations < 1) throw ValidationError("solver max_iterations must be >= 1");
    if (!(fd_step > 0.0)) throw ValidationError("solver fd_step must be positive");
  }
};

}  // namespace stackre::numerics
