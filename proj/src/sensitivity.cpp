#include "sensikit/sensitivity.hpp"

#include <utility>

namespace sensikit {

const char* to_cstring(SensitivityRegime regime) {
  switch (regime) {
    case SensitivityRegime::Fiacco: return "fiacco";
    case SensitivityRegime::Directional: return "directional";
    case SensitivityRegime::Degenerate: return "degenerate";
    case SensitivityRegime::Barrier: return "barrier";
    case SensitivityRegime::Conic: return "conic";
  }
  return "unknown";
}

FiaccoSystem build_fiacco_system(const ParametricNLP& nlp,
                                 const PrimalDualPoint& point,
                                 const ActiveSetInfo& act) {
  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);
  const LagrangianDerivatives lag =
      lagrangian_derivatives(bundle, point.y, point.z);

  const int n = nlp.num_vars();
  const int me = nlp.num_eq();
  const int l = nlp.num_params();
  const int na = static_cast<int>(act.active.size());
  const int dim = n + me + na;

  FiaccoSystem sys;
  sys.active = act.active;
  sys.n = n;
  sys.m_eq = me;
  sys.m_ineq = nlp.num_ineq();
  sys.num_params = l;

  sys.M = Matrix::Zero(dim, dim);
  sys.M.topLeftCorner(n, n) = lag.hess_xx;
  if (me > 0) {
    const Matrix jg = bundle.jac_x_g();
    sys.M.block(n, 0, me, n) = jg;
    sys.M.block(0, n, n, me) = jg.transpose();
  }
  for (int k = 0; k < na; ++k) {
    const Vector row = bundle.h[act.active[k]].grad_x(n);
    sys.M.row(n + me + k).head(n) = row.transpose();
    sys.M.col(n + me + k).head(n) = row;
  }

  sys.N = Matrix::Zero(dim, l);
  sys.N.topRows(n) = lag.hess_xp;
  if (me > 0) sys.N.middleRows(n, me) = bundle.jac_p_g();
  for (int k = 0; k < na; ++k) {
    sys.N.row(n + me + k) = bundle.h[act.active[k]].grad_p(n).transpose();
  }

  sys.lu = std::make_shared<LUFactors>(sys.M);
  return sys;
}

SensitivityResult fiacco_jacobian(const ParametricNLP& nlp,
                                  const PrimalDualPoint& point,
                                  const CQReport& cq) {
  const KKTResidual res = kkt_residual(nlp, point);
  if (!res.acceptable()) {
    throw RegularityError("not-stationary",
                          "KKT residual " + std::to_string(res.max()) +
                              " exceeds " + std::to_string(kKKTTol));
  }
  if (!cq.licq) {
    throw RegularityError(
        "licq", "active constraint gradients are linearly dependent");
  }
  if (!cq.scs) {
    throw RegularityError("scs",
                          "an active constraint has a vanishing multiplier");
  }
  if (!cq.sosc_subspace) {
    throw RegularityError(
        "sosc", "reduced Lagrangian Hessian not positive definite");
  }

  const ActiveSetInfo act = classify_active(nlp, point, cq.eps_act);
  FiaccoSystem sys;
  try {
    sys = build_fiacco_system(nlp, point, act);
  } catch (const SingularMatrixError& e) {
    throw Error(std::string("tolerance conflict: regularity was certified but "
                            "the linearized KKT matrix is singular (") +
                e.what() + ")");
  }

  // One factorization, one backsolve per parameter column.
  const Matrix sol = sys.lu->solve(Matrix(-sys.N));

  const int n = sys.n;
  const int me = sys.m_eq;
  SensitivityResult out;
  out.jac_x = sol.topRows(n);
  out.jac_y = sol.middleRows(n, me);
  out.jac_z = Matrix::Zero(sys.m_ineq, sys.num_params);
  for (int k = 0; k < static_cast<int>(sys.active.size()); ++k) {
    out.jac_z.row(sys.active[k]) = sol.row(n + me + k);
  }
  out.regime = SensitivityRegime::Fiacco;
  out.cq = cq;
  return out;
}

Vector forward_sensitivity(const FiaccoSystem& system, const Vector& u) {
  if (u.size() != system.num_params) {
    throw DimensionError("direction has " + std::to_string(u.size()) +
                         " entries, problem has " +
                         std::to_string(system.num_params) + " parameters");
  }
  return -system.lu->solve(Vector(system.N * u));
}

Vector adjoint_sensitivity(const FiaccoSystem& system, const Vector& v) {
  if (v.size() != system.M.rows()) {
    throw DimensionError("weight vector has " + std::to_string(v.size()) +
                         " entries, system dimension is " +
                         std::to_string(system.M.rows()));
  }
  return -(system.N.transpose() * system.lu->solve_transpose(v));
}

SensitivityResult lp_basis_sensitivity(const ParametricNLP& nlp,
                                       const PrimalDualPoint& point,
                                       const Matrix& basis) {
  if (!affine_in_vars(nlp.objective)) {
    throw InputError("not an LP: objective is not affine in the variables");
  }
  for (const Expr& e : nlp.equalities) {
    if (!affine_in_vars(e)) {
      throw InputError("not an LP: an equality is not affine in the variables");
    }
  }
  for (const Expr& e : nlp.inequalities) {
    if (!affine_in_vars(e)) {
      throw InputError(
          "not an LP: an inequality is not affine in the variables");
    }
  }

  const CQReport cq = check_cq(nlp, point);
  if (!cq.licq) {
    throw RegularityError(
        "licq", "binding constraint gradients are linearly dependent");
  }
  if (!cq.scs) {
    throw RegularityError("scs",
                          "a binding constraint has a vanishing multiplier");
  }

  const ActiveSetInfo act = classify_active(nlp, point, cq.eps_act);
  const int n = nlp.num_vars();
  const int me = nlp.num_eq();
  const int na = static_cast<int>(act.active.size());
  if (me + na != n || basis.rows() != basis.cols() || basis.rows() != n) {
    throw RegularityError(
        "square-basis",
        "degenerate LP: " + std::to_string(me + na) + " binding rows for " +
            std::to_string(n) +
            " variables; route through the degenerate pipeline");
  }

  const DerivativeBundle bundle = evaluate_bundle(nlp, point.x, point.p);
  const LagrangianDerivatives lag =
      lagrangian_derivatives(bundle, point.y, point.z);

  Matrix rhs_p(n, nlp.num_params());
  if (me > 0) rhs_p.topRows(me) = bundle.jac_p_g();
  for (int k = 0; k < na; ++k) {
    rhs_p.row(me + k) = bundle.h[act.active[k]].grad_p(n).transpose();
  }

  const LUFactors blu(basis);
  SensitivityResult out;
  out.jac_x = -blu.solve(rhs_p);
  Matrix lambda(n, nlp.num_params());
  for (int j = 0; j < nlp.num_params(); ++j) {
    lambda.col(j) = -blu.solve_transpose(Vector(lag.hess_xp.col(j)));
  }
  out.jac_y = lambda.topRows(me);
  out.jac_z = Matrix::Zero(nlp.num_ineq(), nlp.num_params());
  for (int k = 0; k < na; ++k) {
    out.jac_z.row(act.active[k]) = lambda.row(me + k);
  }
  out.regime = SensitivityRegime::Fiacco;
  out.cq = cq;
  return out;
}

}  // namespace sensikit
