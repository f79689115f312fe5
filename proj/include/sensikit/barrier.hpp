#pragma once

#include <vector>

#include "sensikit/expr.hpp"
#include "sensikit/kkt.hpp"
#include "sensikit/sensitivity.hpp"

namespace sensikit {

// One accepted stage of the penalty/barrier homotopy. Multipliers are
// recovered from the merit gradient: y = g/r and z = -r/h, which makes
// grad_x L(x, y, z) coincide with grad_x W(x, r) identically.
struct BarrierState {
    Vector x;
    double r = 0.0;
    Vector y;
    Vector z;
    int newton_iterations = 0;
    std::vector<double> grad_norms;  // merit gradient norm per accepted iterate
};

struct SumtResult {
    PrimalDualPoint point;            // final stage with recovered multipliers
    std::vector<BarrierState> trail;  // one entry per schedule value
};

// Geometric schedule 1e-1, 1e-2, ..., 1e-7.
std::vector<double> default_r_schedule();

// Sequential unconstrained minimization: for each r, damped Newton on the
// merit function f + (1/2r)*sum g^2 - r*sum log(-h), Armijo backtracking,
// and a fraction-to-boundary cap that keeps every accepted iterate strictly
// interior. Stages warm-start from the previous minimizer.
SumtResult sumt_solve(const ParametricNLP& nlp, const Vector& p,
                      const Vector& x0,
                      const std::vector<double>& r_schedule = default_r_schedule());

// Parametric derivative of the barrier trajectory at fixed r: an n-by-n
// positive definite solve for the primal block, then componentwise chain
// rules for the recovered multipliers.
SensitivityResult barrier_sensitivity(const ParametricNLP& nlp,
                                      const BarrierState& state,
                                      const Vector& p);

// Sensitivity of the perturbed optimality system F_mu = 0 for problems
// whose inequalities are all simple bounds -x_k <= 0: one LU factorization
// of the system Jacobian and one backsolve per parameter.
SensitivityResult barrier_kkt_sensitivity(const ParametricNLP& nlp,
                                          const PrimalDualPoint& point,
                                          double mu);

}  // namespace sensikit
