#include "sensikit/value_function.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sensikit/directional.hpp"

namespace sensikit {

namespace {

void symmetrize(Matrix* H, double* asymmetry) {
  *asymmetry = (*H - H->transpose()).lpNorm<Eigen::Infinity>();
  *H = 0.5 * (*H + H->transpose()).eval();
}

// Inner linear program of the directional value: the largest first-order
// objective change over one solution's multiplier set, plus the explicit
// objective term. Errors are annotated with the solution index.
double inner_max(const ParametricNLP& nlp, const PrimalDualPoint& pt,
                 const Vector& h, size_t which) {
  try {
    const MultiplierPolytope poly = build_multiplier_polytope(nlp, pt);
    const DempeSelection sel = dempe_lp(nlp, pt, poly, h);
    const DerivativeBundle bundle = evaluate_bundle(nlp, pt.x, pt.p);
    return bundle.f.grad_p(nlp.num_vars()).dot(h) + sel.optimum;
  } catch (const Error& e) {
    throw Error("solution " + std::to_string(which) + ": " + e.what());
  }
}

}  // namespace

ValueReport value_gradient_hessian(const ParametricNLP& nlp,
                                   const PrimalDualPoint& point,
                                   const SensitivityResult& sens) {
  if (sens.regime != SensitivityRegime::Fiacco) {
    throw InputError(std::string("regime mismatch: value derivatives need "
                                 "the smooth path, got ") +
                     to_cstring(sens.regime));
  }
  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);
  const LagrangianDerivatives lag =
      lagrangian_derivatives(bundle, point.y, point.z);

  ValueReport out;
  out.value = bundle.f.value;
  out.gradient = lag.grad_p;

  Matrix H = lag.hess_pp + lag.hess_xp.transpose() * sens.jac_x;
  if (nlp.num_eq() > 0) {
    H += bundle.jac_p_g().transpose() * sens.jac_y;
  }
  if (nlp.num_ineq() > 0) {
    H += bundle.jac_p_h().transpose() * sens.jac_z;
  }
  symmetrize(&H, &out.hessian_asymmetry);
  out.hessian = H;
  out.regime = sens.regime;
  return out;
}

ValueReport value_gradient_objective_only(const ParametricNLP& nlp,
                                          const PrimalDualPoint& point) {
  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);
  for (int i = 0; i < nlp.num_eq(); ++i) {
    if (bundle.g[i].grad_p(nlp.num_vars()).lpNorm<Eigen::Infinity>() != 0.0) {
      throw InputError("constraints depend on the parameters: equality " +
                       std::to_string(i));
    }
  }
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    if (bundle.h[i].grad_p(nlp.num_vars()).lpNorm<Eigen::Infinity>() != 0.0) {
      throw InputError("constraints depend on the parameters: inequality " +
                       std::to_string(i));
    }
  }

  const SensitivityResult sens =
      fiacco_jacobian(nlp, point, check_cq(nlp, point));

  const int n = nlp.num_vars();
  ValueReport out;
  out.value = bundle.f.value;
  out.gradient = bundle.f.grad_p(n);
  Matrix H = bundle.f.hess_pp(n) +
             bundle.f.hess_xp(n).transpose() * sens.jac_x;
  symmetrize(&H, &out.hessian_asymmetry);
  out.hessian = H;
  out.regime = sens.regime;
  return out;
}

ValueReport shadow_prices(const ParametricNLP& nlp,
                          const PrimalDualPoint& point) {
  const int l = nlp.num_params();
  // binding[k]: (true, j) = equality j, (false, j) = inequality j.
  std::vector<std::pair<bool, int>> binding(l);
  for (int k = 0; k < l; ++k) {
    const std::string& pname = nlp.param_names[k];
    if (count_param_occurrences(nlp.objective, k) > 0) {
      throw InputError("not canonical form: parameter " + pname +
                       " appears in the objective");
    }
    int total = 0;
    for (const Expr& e : nlp.equalities) total += count_param_occurrences(e, k);
    for (const Expr& e : nlp.inequalities)
      total += count_param_occurrences(e, k);
    if (total != 1) {
      throw InputError("not canonical form: parameter " + pname +
                       " appears " + std::to_string(total) +
                       " times across the constraints, expected exactly one");
    }
    bool found = false;
    for (int j = 0; j < nlp.num_eq() && !found; ++j) {
      if (count_param_occurrences(nlp.equalities[j], k) == 0) continue;
      double coeff = 0.0;
      if (!param_additive_coefficient(nlp.equalities[j], k, &coeff)) {
        throw InputError("not canonical form: parameter " + pname +
                         " enters equality " + std::to_string(j) +
                         " non-additively");
      }
      if (coeff != -1.0) {
        throw InputError("not canonical form: parameter " + pname +
                         " enters equality " + std::to_string(j) +
                         " with coefficient +1, expected g(x) - " + pname);
      }
      binding[k] = {true, j};
      found = true;
    }
    for (int j = 0; j < nlp.num_ineq() && !found; ++j) {
      if (count_param_occurrences(nlp.inequalities[j], k) == 0) continue;
      double coeff = 0.0;
      if (!param_additive_coefficient(nlp.inequalities[j], k, &coeff)) {
        throw InputError("not canonical form: parameter " + pname +
                         " enters inequality " + std::to_string(j) +
                         " non-additively");
      }
      if (coeff != -1.0) {
        throw InputError("not canonical form: parameter " + pname +
                         " enters inequality " + std::to_string(j) +
                         " with coefficient +1, expected h(x) - " + pname);
      }
      binding[k] = {false, j};
      found = true;
    }
  }

  const SensitivityResult sens =
      fiacco_jacobian(nlp, point, check_cq(nlp, point));

  ValueReport out;
  out.value = eval(nlp.objective, point.x, point.p);
  out.gradient = Vector::Zero(l);
  Matrix H(l, l);
  for (int k = 0; k < l; ++k) {
    const auto [is_eq, j] = binding[k];
    if (is_eq) {
      out.gradient(k) = -point.y(j);
      H.row(k) = -sens.jac_y.row(j);
    } else {
      out.gradient(k) = -point.z(j);
      H.row(k) = -sens.jac_z.row(j);
    }
  }
  symmetrize(&H, &out.hessian_asymmetry);
  out.hessian = H;
  out.regime = sens.regime;
  return out;
}

double value_directional(const ParametricNLP& nlp,
                         const std::vector<PrimalDualPoint>& solutions,
                         const Vector& h) {
  if (solutions.empty()) {
    throw InputError("directional value needs at least one candidate solution");
  }
  if (h.size() != nlp.num_params()) {
    throw DimensionError("direction has " + std::to_string(h.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_params()) + " parameters");
  }
  double best = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < solutions.size(); ++s) {
    best = std::min(best, inner_max(nlp, solutions[s], h, s));
  }
  return best;
}

std::pair<double, double> dini_bounds(
    const ParametricNLP& nlp, const std::vector<PrimalDualPoint>& solutions,
    const Vector& h) {
  if (solutions.empty()) {
    throw InputError("Dini bounds need at least one candidate solution");
  }
  if (h.size() != nlp.num_params()) {
    throw DimensionError("direction has " + std::to_string(h.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_params()) + " parameters");
  }
  double lower = std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < solutions.size(); ++s) {
    // The whole inner objective is linear in h, so its minimum over the
    // multiplier set is the negated maximum along -h.
    const double hi = inner_max(nlp, solutions[s], h, s);
    const double lo = -inner_max(nlp, solutions[s], Vector(-h), s);
    lower = std::min(lower, lo);
    upper = std::min(upper, hi);
  }
  return {lower, upper};
}

}  // namespace sensikit
