#pragma once

#include <utility>
#include <vector>

#include "sensikit/expr.hpp"
#include "sensikit/kkt.hpp"
#include "sensikit/sensitivity.hpp"

namespace sensikit {

// Derivatives of the optimal value as a function of the parameters.
struct ValueReport {
    double value = 0.0;
    Vector gradient;            // empty when the smooth regime is unavailable
    Matrix hessian;             // 0x0 when unavailable
    double hessian_asymmetry = 0.0;  // gap closed by symmetrization
    std::vector<double> directional;               // per requested direction
    std::vector<std::pair<double, double>> dini;   // per requested direction
    SensitivityRegime regime = SensitivityRegime::Fiacco;
};

// Gradient and Hessian of the value function in the smooth regime:
// gradient is the parameter gradient of the Lagrangian, the Hessian chains
// the primal-dual sensitivities through the mixed second derivatives.
// `sens` must carry the fiacco regime tag.
ValueReport value_gradient_hessian(const ParametricNLP& nlp,
                                   const PrimalDualPoint& point,
                                   const SensitivityResult& sens);

// Shortcut when the constraints do not depend on p: only objective
// derivatives and the primal sensitivity enter.
ValueReport value_gradient_objective_only(const ParametricNLP& nlp,
                                          const PrimalDualPoint& point);

// Right-hand-side perturbations: every parameter must enter exactly one
// constraint, additively as "g(x) - p". The value gradient is then read off
// the multipliers directly, an independent route from value_gradient_hessian.
ValueReport shadow_prices(const ParametricNLP& nlp,
                          const PrimalDualPoint& point);

// One-sided derivative of the value over a caller-supplied candidate
// solution list: smallest over solutions of the largest multiplier
// prediction over each solution's multiplier set.
double value_directional(const ParametricNLP& nlp,
                         const std::vector<PrimalDualPoint>& solutions,
                         const Vector& h);

// Lower and upper one-sided bounds: both take the smallest value over
// solutions; the inner problem minimizes for the lower bound and maximizes
// for the upper one.
std::pair<double, double> dini_bounds(
    const ParametricNLP& nlp, const std::vector<PrimalDualPoint>& solutions,
    const Vector& h);

}  // namespace sensikit
