#pragma once

#include <cstdint>
#include <vector>

#include "sensikit/expr.hpp"
#include "sensikit/opt_kernels.hpp"

namespace sensikit {

inline constexpr double kEpsActive = 1e-6;
inline constexpr double kKKTTol = 1e-6;

// Candidate primal-dual solution of min f s.t. g = 0, h <= 0 at parameter p,
// with L = f + y'g + z'h and z >= 0.
struct PrimalDualPoint {
  Vector x;
  Vector y;
  Vector z;
  Vector p;
};

struct KKTResidual {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;
  double dual_sign = 0.0;
  double complementarity = 0.0;

  double max() const;
  bool acceptable(double tol = kKKTTol) const { return max() <= tol; }
};

KKTResidual kkt_residual(const ParametricNLP& nlp, const PrimalDualPoint& pt);

struct ActiveSetInfo {
  std::vector<int> active;
  std::vector<int> inactive;
  std::vector<int> strongly_active;  // active with z above threshold
  std::vector<int> weakly_active;
  double eps_act = kEpsActive;

  bool is_active(int i) const;
  bool is_strongly_active(int i) const;
};

// Thresholds scale with 1+|h_i| and 1+||z||_inf. Throws
// RegularityError("not-stationary", ...) when the KKT residual exceeds
// kKKTTol, since activity classification is meaningless away from a
// solution.
ActiveSetInfo classify_active(const ParametricNLP& nlp,
                              const PrimalDualPoint& pt,
                              double eps_act = kEpsActive);

// Optimality equations with a pinned active set: stationarity in x, every
// equality, and the listed inequalities treated as equalities. Unknowns
// stack as (x, y, z_active); the Jacobian is symmetric because the
// constraint rows reappear transposed in the first block row.
struct PinnedSystem {
  Vector residual;
  Matrix jacobian;
};

PinnedSystem pinned_kkt_system(const ParametricNLP& nlp, const Vector& x,
                               const Vector& y, const Vector& z_active,
                               const std::vector<int>& active,
                               const Vector& p);

// The set of multipliers consistent with stationarity at fixed (x, p):
// columns of A are the active constraint gradients, v = (y, z_active),
// A v = -grad f, z_active >= 0.
struct MultiplierPolytope {
  std::vector<int> active;
  Matrix A;
  Vector b;
  std::vector<int> sign_constrained;  // indices of the z block within v
  std::vector<Vector> vertex_y;       // per vertex: equality multipliers
  std::vector<Vector> vertex_z;       // per vertex: full z, inactive rows 0
  bool bounded = true;
  int bases_tried = 0;
  int bases_feasible = 0;
};

MultiplierPolytope build_multiplier_polytope(const ParametricNLP& nlp,
                                             const PrimalDualPoint& pt,
                                             double eps_act = kEpsActive);

// Linearization rows at (x, p) split by multiplier strength: equality rows
// are all g plus strongly active h; inequality rows are weakly active h.
// The x/p blocks are kept separate so directional systems can assemble
// right-hand sides for any parameter direction.
struct CriticalCone {
  Matrix eq_x;
  Matrix eq_p;
  Matrix ineq_x;
  Matrix ineq_p;
  std::vector<int> eq_h_rows;    // inequality index per eq row after the g's
  std::vector<int> ineq_h_rows;  // inequality index per ineq row
  int num_eq_from_g = 0;
};

CriticalCone build_critical_cone(const DerivativeBundle& bundle,
                                 const ActiveSetInfo& act);

struct CRCQReport {
  bool constant_rank = true;
  int base_rank = 0;
  std::vector<int> sampled_ranks;
  double radius = 1e-4;
  int samples = 20;
};

// Sampled surrogate for constant-rank behaviour of the active gradient
// family near x: the rank is recomputed at `samples` points drawn uniformly
// from a ball of the given radius (fixed seed, so re-runs agree). A `true`
// verdict is evidence, not a certificate.
CRCQReport crcq_sampled(const ParametricNLP& nlp, const PrimalDualPoint& pt,
                        double radius = 1e-4, int samples = 20,
                        std::uint64_t seed = 0x5eed5eedULL);

struct CQReport {
  bool licq = false;
  bool mfcq = false;
  bool smfcq = false;
  bool scs = false;
  bool sosc_subspace = false;
  bool ssosc_subspace = false;
  bool gssosc_subspace = false;
  CRCQReport crcq;

  int active_count = 0;
  int licq_rank = 0;
  double mfcq_t = 0.0;      // optimum of the interior-direction program
  Vector mfcq_direction;
  int vertex_count = -1;    // -1: polytope not enumerated
  std::vector<bool> scs_per_vertex;
  bool polytope_bounded = true;
  double eps_act = kEpsActive;
};

CQReport check_cq(const ParametricNLP& nlp, const PrimalDualPoint& pt,
                  double eps_act = kEpsActive);

}  // namespace sensikit
