#pragma once

#include <vector>

#include "sensikit/linalg.hpp"

namespace sensikit {

enum class SolveStatus { Optimal, Infeasible, Unbounded };

const char* to_cstring(SolveStatus s);

// min c'x  s.t.  A_eq x = b_eq,  A_ineq x <= b_ineq,  lo <= x <= hi.
// Empty bound vectors mean unbounded in that direction; individual entries
// may be +-inf.
struct LinearProgram {
  Vector c;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_ineq;
  Vector b_ineq;
  Vector lo;
  Vector hi;

  int num_vars() const { return static_cast<int>(c.size()); }
};

// Multipliers satisfy c + A_eq'y + A_ineq'z - mu_lo + mu_hi = 0 with
// z, mu_lo, mu_hi >= 0 and complementary slackness.
struct LPSolution {
  SolveStatus status = SolveStatus::Infeasible;
  Vector x;
  double objective = 0.0;
  Vector y_eq;
  Vector z_ineq;
  Vector mu_lo;
  Vector mu_hi;
  std::vector<int> active_ineq;  // inequality rows binding at x
  std::vector<int> basis;        // final basic columns, standard-form ids
};

// Two-phase primal simplex with Bland's rule; ties broken by lowest index,
// so repeated runs pivot identically.
LPSolution lp_solve(const LinearProgram& lp);

// Largest violation of the LP optimality system at (x, duals); used as an
// independent acceptance check on every solve.
double lp_kkt_residual(const LinearProgram& lp, const LPSolution& sol);

// min 1/2 x'H x + q'x  s.t.  A_eq x = b_eq,  A_ineq x <= b_ineq.
// H must be symmetric and positive semidefinite on the feasible subspace.
struct QuadraticProgram {
  Matrix H;
  Vector q;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_ineq;
  Vector b_ineq;

  int num_vars() const { return static_cast<int>(q.size()); }
};

struct QPSolution {
  SolveStatus status = SolveStatus::Infeasible;
  Vector x;
  double objective = 0.0;
  Vector y_eq;
  Vector z_ineq;                 // >= 0, nonzero only on the working set
  std::vector<int> working_set;  // inequality rows treated as equalities
};

// Primal active-set method started from a phase-1 point. Throws
// RegularityError("indefinite-reduced-hessian", ...) when negative curvature
// shows up in the reduced Hessian, which upstream code reports as a
// second-order condition failure.
QPSolution qp_solve(const QuadraticProgram& qp);

double qp_kkt_residual(const QuadraticProgram& qp, const QPSolution& sol);

// Vertices of {v : A_eq v = b_eq, v_i >= 0 for i in sign_constrained} by
// enumeration of basic feasible solutions. Deduplicates to 1e-7 and verifies
// each returned point is extreme (active rows reach full column rank).
struct PolytopeVertices {
  std::vector<Vector> vertices;
  int bases_tried = 0;
  int bases_feasible = 0;
};

PolytopeVertices enumerate_vertices(const Matrix& A_eq, const Vector& b_eq,
                                    const std::vector<int>& sign_constrained,
                                    double tol = 1e-9);

}  // namespace sensikit
