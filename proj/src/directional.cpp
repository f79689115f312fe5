#include "sensikit/directional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sensikit {

namespace {

std::string join_indices(const std::vector<int>& idx) {
  std::ostringstream os;
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) os << ",";
    os << idx[i];
  }
  return os.str();
}

// Names an infeasible row of a directional QP built from a critical cone.
// Row order matches build_critical_cone: equalities first (g's, then
// strongly active h's), then the weakly active inequality rows.
[[noreturn]] void report_infeasible_cone(const CriticalCone& cone,
                                         const Vector& b_eq,
                                         const Vector& b_ineq) {
  Vector d_ls = Vector::Zero(cone.eq_x.cols());
  if (cone.eq_x.rows() > 0) {
    d_ls = lsqr_solve(cone.eq_x, b_eq).x;
  }
  double worst = -1.0;
  std::string label = "none";
  for (int i = 0; i < cone.eq_x.rows(); ++i) {
    const double v = std::abs(cone.eq_x.row(i).dot(d_ls) - b_eq(i));
    if (v > worst) {
      worst = v;
      label = i < cone.num_eq_from_g
                  ? "equality " + std::to_string(i)
                  : "inequality " +
                        std::to_string(cone.eq_h_rows[i - cone.num_eq_from_g]) +
                        " (strongly active)";
    }
  }
  for (int i = 0; i < cone.ineq_x.rows(); ++i) {
    const double v =
        std::max(0.0, cone.ineq_x.row(i).dot(d_ls) - b_ineq(i));
    if (v > worst) {
      worst = v;
      label = "inequality " + std::to_string(cone.ineq_h_rows[i]) +
              " (weakly active)";
    }
  }
  throw Error("directional QP infeasible: linearized row " + label +
              " cannot be satisfied (violation " + std::to_string(worst) +
              ")");
}

struct ConeQPResult {
  Vector d;
  Vector y_eq;
  Vector z_ineq;
};

// Solves min 1/2 d'H d + (H_xp h)'d over the linearization of the active
// constraints along h: equality rows pinned, weakly active rows one-sided.
ConeQPResult solve_cone_qp(const CriticalCone& cone,
                           const LagrangianDerivatives& lag, const Vector& h) {
  QuadraticProgram qp;
  qp.H = lag.hess_xx;
  qp.q = lag.hess_xp * h;
  qp.A_eq = cone.eq_x;
  qp.b_eq = cone.eq_x.rows() > 0 ? Vector(-(cone.eq_p * h))
                                 : Vector::Zero(0);
  qp.A_ineq = cone.ineq_x;
  qp.b_ineq = cone.ineq_x.rows() > 0 ? Vector(-(cone.ineq_p * h))
                                     : Vector::Zero(0);

  const QPSolution sol = qp_solve(qp);
  if (sol.status == SolveStatus::Infeasible) {
    report_infeasible_cone(cone, qp.b_eq, qp.b_ineq);
  }
  if (sol.status == SolveStatus::Unbounded) {
    throw RegularityError("ssosc",
                          "directional QP unbounded below along the cone");
  }
  return {sol.x, sol.y_eq, sol.z_ineq};
}

}  // namespace

DirectionalDerivative directional_qp(const ParametricNLP& nlp,
                                     const PrimalDualPoint& point,
                                     const Vector& h) {
  if (h.size() != nlp.num_params()) {
    throw DimensionError("direction has " + std::to_string(h.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_params()) + " parameters");
  }
  const CQReport cq = check_cq(nlp, point);
  if (!cq.licq) {
    throw RegularityError("licq",
                          "active constraint gradients are linearly "
                          "dependent; multipliers may be non-unique");
  }
  if (!cq.ssosc_subspace) {
    throw RegularityError(
        "ssosc", "Lagrangian Hessian not positive definite on the span of "
                 "strongly active rows");
  }

  const ActiveSetInfo act = classify_active(nlp, point, cq.eps_act);
  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);
  const LagrangianDerivatives lag =
      lagrangian_derivatives(bundle, point.y, point.z);
  const CriticalCone cone = build_critical_cone(bundle, act);

  const ConeQPResult qp = solve_cone_qp(cone, lag, h);

  DirectionalDerivative out;
  out.direction = h;
  out.dx = qp.d;
  out.dy = Vector::Zero(nlp.num_eq());
  out.dz = Vector::Zero(nlp.num_ineq());
  for (int i = 0; i < cone.eq_x.rows(); ++i) {
    if (i < cone.num_eq_from_g) {
      out.dy(i) = qp.y_eq(i);
    } else {
      out.dz(cone.eq_h_rows[i - cone.num_eq_from_g]) = qp.y_eq(i);
    }
  }
  for (int i = 0; i < cone.ineq_x.rows(); ++i) {
    out.dz(cone.ineq_h_rows[i]) = qp.z_ineq(i);
  }
  out.duals_available = true;
  out.selected_y = point.y;
  out.selected_z = point.z;
  out.active_log.push_back("strongly active: [" +
                           join_indices(act.strongly_active) + "]");
  out.active_log.push_back("weakly active: [" +
                           join_indices(act.weakly_active) + "]");
  return out;
}

DempeSelection dempe_lp(const ParametricNLP& nlp, const PrimalDualPoint& point,
                        const MultiplierPolytope& polytope, const Vector& h) {
  if (!polytope.bounded) {
    throw Error(
        "tolerance conflict: multiplier polytope is unbounded, so the "
        "vertex selection program has no maximum");
  }
  if (polytope.vertex_y.empty()) {
    throw RegularityError("empty-polytope",
                          "no multiplier vertices to select from");
  }

  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);
  const Vector wg = nlp.num_eq() > 0 ? Vector(bundle.jac_p_g() * h)
                                     : Vector::Zero(0);
  const Vector wh = nlp.num_ineq() > 0 ? Vector(bundle.jac_p_h() * h)
                                       : Vector::Zero(0);

  DempeSelection sel;
  sel.vertex_values.resize(polytope.vertex_y.size());
  double best = -std::numeric_limits<double>::infinity();
  for (size_t v = 0; v < polytope.vertex_y.size(); ++v) {
    double val = 0.0;
    if (wg.size() > 0) val += polytope.vertex_y[v].dot(wg);
    if (wh.size() > 0) val += polytope.vertex_z[v].dot(wh);
    sel.vertex_values[v] = val;
    best = std::max(best, val);
  }
  sel.optimum = best;
  const double tol = 1e-9 * (1.0 + std::abs(best));
  for (size_t v = 0; v < polytope.vertex_y.size(); ++v) {
    if (sel.vertex_values[v] >= best - tol) {
      sel.argmax.emplace_back(polytope.vertex_y[v], polytope.vertex_z[v]);
    }
  }

  // Cross-check against a direct solve of the selection program; the vertex
  // scan and the simplex route must agree on the optimum.
  const int me = nlp.num_eq();
  const int na = static_cast<int>(polytope.active.size());
  if (me + na == 0) return sel;  // interior point: nothing to select over
  LinearProgram lp;
  lp.c = Vector::Zero(me + na);
  for (int i = 0; i < me; ++i) lp.c(i) = -wg(i);
  for (int k = 0; k < na; ++k) lp.c(me + k) = -wh(polytope.active[k]);
  lp.A_eq = polytope.A;
  lp.b_eq = polytope.b;
  lp.A_ineq = Matrix::Zero(0, me + na);
  lp.b_ineq = Vector::Zero(0);
  lp.lo = Vector::Constant(me + na,
                           -std::numeric_limits<double>::infinity());
  for (int idx : polytope.sign_constrained) lp.lo(idx) = 0.0;
  lp.hi = Vector::Constant(me + na,
                           std::numeric_limits<double>::infinity());
  const LPSolution ref = lp_solve(lp);
  if (ref.status == SolveStatus::Unbounded) {
    throw Error(
        "tolerance conflict: vertex selection program unbounded although "
        "the polytope was reported bounded");
  }
  if (ref.status == SolveStatus::Optimal &&
      std::abs(-ref.objective - best) > 1e-7 * (1.0 + std::abs(best))) {
    throw Error("tolerance conflict: vertex scan optimum " +
                std::to_string(best) + " disagrees with direct solve " +
                std::to_string(-ref.objective));
  }
  return sel;
}

DirectionalDerivative degenerate_directional(const ParametricNLP& nlp,
                                             const PrimalDualPoint& point,
                                             const Vector& h) {
  if (h.size() != nlp.num_params()) {
    throw DimensionError("direction has " + std::to_string(h.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_params()) + " parameters");
  }
  const CQReport cq = check_cq(nlp, point);
  if (!cq.mfcq) {
    throw RegularityError("mfcq", "no strict interior direction for the "
                                  "linearized active constraints");
  }
  const CRCQReport crcq = crcq_sampled(nlp, point);
  if (!crcq.constant_rank) {
    throw RegularityError("crcq",
                          "active gradient rank varies in a sampled "
                          "neighborhood of the point");
  }
  if (!cq.gssosc_subspace) {
    throw RegularityError(
        "gssosc", "second-order condition fails at some multiplier vertex");
  }

  const MultiplierPolytope polytope =
      build_multiplier_polytope(nlp, point, cq.eps_act);
  const DempeSelection sel = dempe_lp(nlp, point, polytope, h);

  const ActiveSetInfo act = classify_active(nlp, point, cq.eps_act);
  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);

  DirectionalDerivative out;
  out.direction = h;
  out.duals_available = false;

  std::vector<Vector> candidates;
  for (size_t v = 0; v < sel.argmax.size(); ++v) {
    const Vector& yv = sel.argmax[v].first;
    const Vector& zv = sel.argmax[v].second;

    // Re-split the active set by this vertex's multiplier strengths.
    ActiveSetInfo split = act;
    split.strongly_active.clear();
    split.weakly_active.clear();
    const double zmax = zv.size() > 0 ? zv.lpNorm<Eigen::Infinity>() : 0.0;
    const double zcut = act.eps_act * (1.0 + zmax);
    for (int i : act.active) {
      if (zv(i) > zcut) {
        split.strongly_active.push_back(i);
      } else {
        split.weakly_active.push_back(i);
      }
    }

    const LagrangianDerivatives lag = lagrangian_derivatives(bundle, yv, zv);
    const CriticalCone cone = build_critical_cone(bundle, split);
    Vector d;
    try {
      d = solve_cone_qp(cone, lag, h).d;
    } catch (const RegularityError&) {
      throw;
    } catch (const Error& e) {
      throw RegularityError(
          "inconsistent-critical-set",
          "selected vertex " + std::to_string(v) +
              " admits no feasible direction: " + e.what());
    }
    candidates.push_back(d);
    out.active_log.push_back("vertex " + std::to_string(v) + ": strong=[" +
                             join_indices(split.strongly_active) +
                             "] weak=[" + join_indices(split.weakly_active) +
                             "]");
    if (v == 0) {
      out.selected_y = yv;
      out.selected_z = zv;
    }
  }

  double spread = 0.0;
  for (size_t a = 0; a < candidates.size(); ++a) {
    for (size_t b = a + 1; b < candidates.size(); ++b) {
      spread = std::max(
          spread, (candidates[a] - candidates[b]).lpNorm<Eigen::Infinity>());
    }
  }
  if (spread > 1e-7) {
    throw Error("tolerance conflict: directional derivative varies across "
                "selected multiplier vertices (spread " +
                std::to_string(spread) + ")");
  }
  out.active_log.push_back("vertex spread: " + std::to_string(spread));
  out.dx = candidates.front();
  return out;
}

LDDerivative ld_derivative(const ParametricNLP& nlp,
                           const PrimalDualPoint& point,
                           const Matrix& directions) {
  if (directions.rows() != nlp.num_params()) {
    throw DimensionError("direction matrix has " +
                         std::to_string(directions.rows()) +
                         " rows, problem has " +
                         std::to_string(nlp.num_params()) + " parameters");
  }
  if (directions.cols() < 1) {
    throw InputError("direction matrix needs at least one column");
  }
  const CQReport cq = check_cq(nlp, point);
  if (!cq.licq) {
    throw RegularityError("licq",
                          "active constraint gradients are linearly "
                          "dependent; multipliers may be non-unique");
  }
  if (!cq.ssosc_subspace) {
    throw RegularityError(
        "ssosc", "Lagrangian Hessian not positive definite on the span of "
                 "strongly active rows");
  }

  const ActiveSetInfo act = classify_active(nlp, point, cq.eps_act);
  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);
  const LagrangianDerivatives lag =
      lagrangian_derivatives(bundle, point.y, point.z);

  const int n = nlp.num_vars();
  const int me = nlp.num_eq();
  const int k = static_cast<int>(directions.cols());

  LDDerivative out;
  out.directions = directions;
  out.X = Matrix::Zero(n, k);
  out.Y = Matrix::Zero(me, k);
  out.Z = Matrix::Zero(nlp.num_ineq(), k);

  std::vector<int> weak = act.weakly_active;
  std::vector<int> strong = act.strongly_active;

  for (int j = 0; j < k; ++j) {
    out.weak_stage.push_back(weak);
    out.strong_stage.push_back(strong);
    const Vector r = directions.col(j);

    QuadraticProgram qp;
    qp.H = lag.hess_xx;
    qp.q = lag.hess_xp * r;
    const int ne = me + static_cast<int>(strong.size());
    qp.A_eq = Matrix::Zero(ne, n);
    qp.b_eq = Vector::Zero(ne);
    if (me > 0) {
      qp.A_eq.topRows(me) = bundle.jac_x_g();
      qp.b_eq.head(me) = -(bundle.jac_p_g() * r);
    }
    for (size_t s = 0; s < strong.size(); ++s) {
      qp.A_eq.row(me + s) = bundle.h[strong[s]].grad_x(n).transpose();
      qp.b_eq(me + s) = -bundle.h[strong[s]].grad_p(n).dot(r);
    }
    qp.A_ineq = Matrix::Zero(static_cast<int>(weak.size()), n);
    qp.b_ineq = Vector::Zero(static_cast<int>(weak.size()));
    for (size_t w = 0; w < weak.size(); ++w) {
      qp.A_ineq.row(w) = bundle.h[weak[w]].grad_x(n).transpose();
      qp.b_ineq(w) = -bundle.h[weak[w]].grad_p(n).dot(r);
    }

    QPSolution sol;
    try {
      sol = qp_solve(qp);
    } catch (const Error& e) {
      throw Error("stage " + std::to_string(j + 1) + ": " + e.what());
    }
    if (sol.status != SolveStatus::Optimal) {
      throw Error("stage " + std::to_string(j + 1) + ": directional QP " +
                  to_cstring(sol.status));
    }

    out.X.col(j) = sol.x;
    if (me > 0) out.Y.col(j) = sol.y_eq.head(me);
    for (size_t s = 0; s < strong.size(); ++s) {
      out.Z(strong[s], j) = sol.y_eq(me + s);
    }
    for (size_t w = 0; w < weak.size(); ++w) {
      out.Z(weak[w], j) = sol.z_ineq(w);
    }

    // Refine the partition for the next stage: weak rows held at equality
    // split on their multiplier sign, rows with slack drop out for good.
    const double gmax =
        sol.z_ineq.size() > 0 ? sol.z_ineq.lpNorm<Eigen::Infinity>() : 0.0;
    const double gcut = kEpsActive * (1.0 + gmax);
    std::vector<int> next_weak;
    for (size_t w = 0; w < weak.size(); ++w) {
      const double row = qp.A_ineq.row(w).dot(sol.x) - qp.b_ineq(w);
      const double scale =
          1.0 + std::abs(qp.A_ineq.row(w).dot(sol.x)) + std::abs(qp.b_ineq(w));
      if (std::abs(row) > 1e-8 * scale) continue;  // strict slack
      if (sol.z_ineq(w) > gcut) {
        strong.push_back(weak[w]);
      } else {
        next_weak.push_back(weak[w]);
      }
    }
    std::sort(strong.begin(), strong.end());
    weak = std::move(next_weak);
  }
  return out;
}

Vector lmin(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw DimensionError("lmin arguments have sizes " +
                         std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  for (int i = 0; i < x.size(); ++i) {
    if (x(i) < y(i)) return x;
    if (x(i) > y(i)) return y;
  }
  return x;
}

Matrix lmmin(const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw DimensionError("lmmin arguments have shapes " +
                         std::to_string(X.rows()) + "x" +
                         std::to_string(X.cols()) + " and " +
                         std::to_string(Y.rows()) + "x" +
                         std::to_string(Y.cols()));
  }
  Matrix out(X.rows(), X.cols());
  for (int i = 0; i < X.rows(); ++i) {
    out.row(i) = lmin(Vector(X.row(i).transpose()),
                      Vector(Y.row(i).transpose()))
                     .transpose();
  }
  return out;
}

}  // namespace sensikit
