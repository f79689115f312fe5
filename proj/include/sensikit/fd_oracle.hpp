#pragma once

#include <vector>

#include "sensikit/barrier.hpp"
#include "sensikit/kkt.hpp"

namespace sensikit {

// Settings for the brute-force re-solve oracle. Steps are relative for the
// central stencil and absolute homotopy fractions for the one-sided ladder.
struct OracleConfig {
  double central_step = 1e-4;
  std::vector<double> one_sided_steps = {1e-3, 1e-4, 1e-5};
  double solve_tol = 1e-10;
  std::vector<double> r_schedule = default_r_schedule();

  void validate() const;
};

// Pushes x strictly inside the inequality region so a barrier solve can
// start: repeated min-norm linearized corrections, bounds-like constraints
// settle in one round. Throws when no progress is possible.
Vector feasibility_nudge(const ParametricNLP& nlp, const Vector& x0,
                         const Vector& q);

struct OracleSolve {
  PrimalDualPoint point;
  std::vector<int> active;
  int polish_iterations = 0;
};

// High-accuracy re-solve at parameter q: homotopy solve from a feasibility-
// nudged start, then Newton polish on the fixed-active-set optimality
// equations down to cfg.solve_tol, with sign-driven reclassification.
OracleSolve oracle_resolve(const ParametricNLP& nlp, const Vector& q,
                           const Vector& x_start,
                           const OracleConfig& cfg = {});

struct FDJacobian {
  Matrix jac_x;
  Matrix jac_y;
  Matrix jac_z;
  std::vector<int> active;
};

// Central differences of the re-solved primal-dual solution in every
// parameter coordinate. The whole stencil must share one active set;
// a flip inside the stencil is reported as an error naming the parameter.
FDJacobian fd_jacobian(const ParametricNLP& nlp, const Vector& p,
                       const OracleConfig& cfg = {});

struct FDDirectional {
  std::vector<double> steps;
  std::vector<Vector> quotients;  // (x(p + t h) - x(p)) / t per ladder step
  Vector estimate;                // smallest-step quotient
  bool shrinking = false;         // successive quotient gaps decreased
};

// One-sided difference quotients of the primal solution along h, for
// points where the two-sided jacobian does not exist.
FDDirectional fd_directional(const ParametricNLP& nlp, const Vector& p,
                             const Vector& h, const OracleConfig& cfg = {});

}  // namespace sensikit
