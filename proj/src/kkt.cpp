#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sensikit/kkt.hpp"

namespace sensikit {

double KKTResidual::max() const {
  return std::max({stationarity, primal_eq, primal_ineq, dual_sign,
                   complementarity});
}

KKTResidual kkt_residual(const ParametricNLP& nlp, const PrimalDualPoint& pt) {
  DerivativeBundle bundle = evaluate_bundle(nlp, pt.x, pt.p, DerivScope::XOnly);
  LagrangianDerivatives L = lagrangian_derivatives(bundle, pt.y, pt.z);
  KKTResidual r;
  r.stationarity = L.grad_x.size() > 0 ? L.grad_x.lpNorm<Eigen::Infinity>() : 0.0;
  if (nlp.num_eq() > 0)
    r.primal_eq = bundle.g_values().lpNorm<Eigen::Infinity>();
  if (nlp.num_ineq() > 0) {
    Vector h = bundle.h_values();
    r.primal_ineq = std::max(0.0, h.maxCoeff());
    r.dual_sign = std::max(0.0, -pt.z.minCoeff());
    r.complementarity = (pt.z.cwiseProduct(h)).cwiseAbs().maxCoeff();
  }
  return r;
}

bool ActiveSetInfo::is_active(int i) const {
  return std::find(active.begin(), active.end(), i) != active.end();
}

bool ActiveSetInfo::is_strongly_active(int i) const {
  return std::find(strongly_active.begin(), strongly_active.end(), i) !=
         strongly_active.end();
}

ActiveSetInfo classify_active(const ParametricNLP& nlp,
                              const PrimalDualPoint& pt, double eps_act) {
  KKTResidual res = kkt_residual(nlp, pt);
  if (!res.acceptable())
    throw RegularityError("not-stationary",
                          "KKT residual " + std::to_string(res.max()));
  ActiveSetInfo info;
  info.eps_act = eps_act;
  const double znorm =
      pt.z.size() > 0 ? pt.z.lpNorm<Eigen::Infinity>() : 0.0;
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    const double hi = eval(nlp.inequalities[i], pt.x, pt.p);
    if (std::abs(hi) <= eps_act * (1.0 + std::abs(hi))) {
      info.active.push_back(i);
      if (pt.z[i] > eps_act * (1.0 + znorm))
        info.strongly_active.push_back(i);
      else
        info.weakly_active.push_back(i);
    } else {
      info.inactive.push_back(i);
    }
  }
  return info;
}

PinnedSystem pinned_kkt_system(const ParametricNLP& nlp, const Vector& x,
                               const Vector& y, const Vector& z_active,
                               const std::vector<int>& active,
                               const Vector& p) {
  const int n = nlp.num_vars();
  const int me = nlp.num_eq();
  const int na = static_cast<int>(active.size());
  const DerivativeBundle b = evaluate_bundle(nlp, x, p, DerivScope::XOnly);

  Vector z_full = Vector::Zero(nlp.num_ineq());
  for (int k = 0; k < na; ++k) z_full(active[k]) = z_active(k);
  const LagrangianDerivatives lag = lagrangian_derivatives(b, y, z_full);

  PinnedSystem sys;
  sys.residual = Vector::Zero(n + me + na);
  sys.residual.head(n) = lag.grad_x;
  for (int j = 0; j < me; ++j) sys.residual(n + j) = b.g[j].value;
  for (int k = 0; k < na; ++k) {
    sys.residual(n + me + k) = b.h[active[k]].value;
  }

  sys.jacobian = Matrix::Zero(n + me + na, n + me + na);
  sys.jacobian.topLeftCorner(n, n) = lag.hess_xx;
  for (int j = 0; j < me; ++j) {
    sys.jacobian.block(0, n + j, n, 1) = b.g[j].grad;
    sys.jacobian.block(n + j, 0, 1, n) = b.g[j].grad.transpose();
  }
  for (int k = 0; k < na; ++k) {
    sys.jacobian.block(0, n + me + k, n, 1) = b.h[active[k]].grad;
    sys.jacobian.block(n + me + k, 0, 1, n) = b.h[active[k]].grad.transpose();
  }
  return sys;
}

MultiplierPolytope build_multiplier_polytope(const ParametricNLP& nlp,
                                             const PrimalDualPoint& pt,
                                             double eps_act) {
  ActiveSetInfo act = classify_active(nlp, pt, eps_act);
  DerivativeBundle bundle = evaluate_bundle(nlp, pt.x, pt.p, DerivScope::XOnly);
  const int n = nlp.num_vars();
  const int me = nlp.num_eq();
  const int na = static_cast<int>(act.active.size());

  MultiplierPolytope poly;
  poly.active = act.active;
  poly.A = Matrix::Zero(n, me + na);
  for (int i = 0; i < me; ++i) poly.A.col(i) = bundle.g[i].grad_x(n);
  for (int j = 0; j < na; ++j)
    poly.A.col(me + j) = bundle.h[act.active[j]].grad_x(n);
  poly.b = -bundle.f.grad_x(n);
  for (int j = 0; j < na; ++j) poly.sign_constrained.push_back(me + j);

  // The point's own multipliers witness feasibility; fall back to a phase-1
  // solve when they are degraded, and refuse when nothing satisfies
  // stationarity.
  {
    Vector v(me + na);
    v.head(me) = pt.y;
    for (int j = 0; j < na; ++j) v[me + j] = pt.z[act.active[j]];
    const double res = (poly.A * v - poly.b).lpNorm<Eigen::Infinity>();
    if (res > kKKTTol * (1.0 + poly.b.lpNorm<Eigen::Infinity>())) {
      LinearProgram feas;
      feas.c = Vector::Zero(me + na);
      feas.A_eq = poly.A;
      feas.b_eq = poly.b;
      feas.lo = Vector::Constant(me + na,
                                 -std::numeric_limits<double>::infinity());
      feas.hi = Vector::Constant(me + na,
                                 std::numeric_limits<double>::infinity());
      for (int j = 0; j < na; ++j) feas.lo[me + j] = 0.0;
      if (lp_solve(feas).status != SolveStatus::Optimal)
        throw RegularityError("empty-polytope",
                              "no multiplier satisfies stationarity");
    }
  }

  PolytopeVertices verts =
      enumerate_vertices(poly.A, poly.b, poly.sign_constrained);
  poly.bases_tried = verts.bases_tried;
  poly.bases_feasible = verts.bases_feasible;
  for (const auto& v : verts.vertices) {
    poly.vertex_y.push_back(v.head(me));
    Vector z = Vector::Zero(nlp.num_ineq());
    for (int j = 0; j < na; ++j) z[act.active[j]] = v[me + j];
    poly.vertex_z.push_back(z);
  }

  // Boundedness: a recession direction in the z block, or lineality in the
  // unconstrained y block, makes the polytope unbounded (and by the
  // boundedness characterization refutes MFCQ).
  poly.bounded = true;
  if (me > 0 && qr_rank(poly.A.leftCols(me)).rank < me) poly.bounded = false;
  if (poly.bounded && na > 0) {
    // Homogeneous probe: any v with A v = 0, v_z >= 0, sum(v_z) = 1 is a
    // recession direction.
    LinearProgram ray;
    ray.A_eq = Matrix::Zero(n + 1, me + na);
    ray.A_eq.topRows(n) = poly.A;
    for (int j = 0; j < na; ++j) ray.A_eq(n, me + j) = 1.0;
    ray.b_eq = Vector::Zero(n + 1);
    ray.b_eq[n] = 1.0;
    ray.c = Vector::Zero(me + na);
    ray.lo = Vector::Constant(me + na, -std::numeric_limits<double>::infinity());
    ray.hi = Vector::Constant(me + na, std::numeric_limits<double>::infinity());
    for (int j = 0; j < na; ++j) ray.lo[me + j] = 0.0;
    if (lp_solve(ray).status == SolveStatus::Optimal) poly.bounded = false;
  }
  return poly;
}

CriticalCone build_critical_cone(const DerivativeBundle& bundle,
                                 const ActiveSetInfo& act) {
  const int n = bundle.n;
  const int l = bundle.l;
  const int me = static_cast<int>(bundle.g.size());
  const int ns = static_cast<int>(act.strongly_active.size());
  const int nw = static_cast<int>(act.weakly_active.size());

  CriticalCone cone;
  cone.num_eq_from_g = me;
  cone.eq_x = Matrix::Zero(me + ns, n);
  cone.eq_p = Matrix::Zero(me + ns, l);
  for (int i = 0; i < me; ++i) {
    cone.eq_x.row(i) = bundle.g[i].grad_x(n).transpose();
    if (l > 0) cone.eq_p.row(i) = bundle.g[i].grad_p(n).transpose();
  }
  for (int j = 0; j < ns; ++j) {
    const int idx = act.strongly_active[j];
    cone.eq_x.row(me + j) = bundle.h[idx].grad_x(n).transpose();
    if (l > 0) cone.eq_p.row(me + j) = bundle.h[idx].grad_p(n).transpose();
    cone.eq_h_rows.push_back(idx);
  }
  cone.ineq_x = Matrix::Zero(nw, n);
  cone.ineq_p = Matrix::Zero(nw, l);
  for (int j = 0; j < nw; ++j) {
    const int idx = act.weakly_active[j];
    cone.ineq_x.row(j) = bundle.h[idx].grad_x(n).transpose();
    if (l > 0) cone.ineq_p.row(j) = bundle.h[idx].grad_p(n).transpose();
    cone.ineq_h_rows.push_back(idx);
  }
  return cone;
}

namespace {

// Positive definiteness of the reduced Hessian by attempted Cholesky with a
// 1e-8 margin shift.
bool reduced_hessian_pd(const Matrix& H, const Matrix& Z) {
  if (Z.cols() == 0) return true;  // null space is trivial
  Matrix R = Z.transpose() * H * Z;
  const double shift = 1e-8 * (1.0 + R.cwiseAbs().maxCoeff());
  Matrix shifted = R - shift * Matrix::Identity(R.rows(), R.cols());
  Eigen::LLT<Matrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

Matrix active_gradients(const DerivativeBundle& bundle,
                        const std::vector<int>& active) {
  const int n = bundle.n;
  const int me = static_cast<int>(bundle.g.size());
  Matrix G(me + active.size(), n);
  for (int i = 0; i < me; ++i) G.row(i) = bundle.g[i].grad_x(n).transpose();
  for (size_t j = 0; j < active.size(); ++j)
    G.row(me + j) = bundle.h[active[j]].grad_x(n).transpose();
  return G;
}

// Interior-direction program shared by MFCQ and SMFCQ: maximize t subject
// to eq_rows d = 0, ineq_rows d + t <= 0, |d| <= 1, t <= 1. A positive
// optimum exhibits a strictly inward direction.
struct InteriorDirection {
  bool solved = false;
  double t = 0.0;
  Vector d;
};

InteriorDirection interior_direction(const Matrix& eq_rows,
                                     const Matrix& ineq_rows, int n) {
  LinearProgram lp;
  lp.c = Vector::Zero(n + 1);
  lp.c[n] = -1.0;  // maximize t
  const int me = static_cast<int>(eq_rows.rows());
  const int mi = static_cast<int>(ineq_rows.rows());
  if (me > 0) {
    lp.A_eq = Matrix::Zero(me, n + 1);
    lp.A_eq.leftCols(n) = eq_rows;
    lp.b_eq = Vector::Zero(me);
  }
  if (mi > 0) {
    lp.A_ineq = Matrix::Zero(mi, n + 1);
    lp.A_ineq.leftCols(n) = ineq_rows;
    lp.A_ineq.col(n).setOnes();
    lp.b_ineq = Vector::Zero(mi);
  }
  lp.lo = Vector::Constant(n + 1, -1.0);
  lp.hi = Vector::Constant(n + 1, 1.0);
  lp.lo[n] = -std::numeric_limits<double>::infinity();

  InteriorDirection out;
  LPSolution sol = lp_solve(lp);
  if (sol.status == SolveStatus::Optimal) {
    out.solved = true;
    out.t = sol.x[n];
    out.d = sol.x.head(n);
  }
  return out;
}

}  // namespace

CRCQReport crcq_sampled(const ParametricNLP& nlp, const PrimalDualPoint& pt,
                        double radius, int samples, std::uint64_t seed) {
  ActiveSetInfo act = classify_active(nlp, pt);
  const int n = nlp.num_vars();

  auto rank_at = [&](const Vector& x) {
    DerivativeBundle b = evaluate_bundle(nlp, x, pt.p, DerivScope::XOnly);
    Matrix G = active_gradients(b, act.active);
    return G.rows() > 0 ? qr_rank(G).rank : 0;
  };

  CRCQReport rep;
  rep.radius = radius;
  rep.samples = samples;
  rep.base_rank = rank_at(pt.x);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Vector u(n);
    for (int i = 0; i < n; ++i) u[i] = gauss(rng);
    const double nrm = u.norm();
    if (nrm > 0) u *= std::pow(unif(rng), 1.0 / n) / nrm;
    const int r = rank_at(pt.x + radius * u);
    rep.sampled_ranks.push_back(r);
    if (r != rep.base_rank) rep.constant_rank = false;
  }
  return rep;
}

CQReport check_cq(const ParametricNLP& nlp, const PrimalDualPoint& pt,
                  double eps_act) {
  ActiveSetInfo act = classify_active(nlp, pt, eps_act);
  DerivativeBundle bundle = evaluate_bundle(nlp, pt.x, pt.p);
  const int n = nlp.num_vars();
  const int me = nlp.num_eq();

  CQReport rep;
  rep.eps_act = eps_act;
  rep.active_count = static_cast<int>(act.active.size());

  Matrix G_act = active_gradients(bundle, act.active);
  rep.licq_rank = G_act.rows() > 0 ? qr_rank(G_act).rank : 0;
  rep.licq = rep.licq_rank == G_act.rows();

  // MFCQ: full-rank equality gradients plus a strictly interior direction.
  Matrix Jg = bundle.jac_x_g();
  const bool eq_full_rank = me == 0 || qr_rank(Jg).rank == me;
  {
    Matrix act_rows(act.active.size(), n);
    for (size_t j = 0; j < act.active.size(); ++j)
      act_rows.row(j) = bundle.h[act.active[j]].grad_x(n).transpose();
    InteriorDirection dir = interior_direction(Jg, act_rows, n);
    rep.mfcq_t = dir.t;
    rep.mfcq_direction = dir.d;
    rep.mfcq = eq_full_rank && dir.solved && dir.t > eps_act;
  }

  // SMFCQ: strongly active rows move to the equality side.
  {
    CriticalCone cone = build_critical_cone(bundle, act);
    const bool strong_full_rank =
        cone.eq_x.rows() == 0 || qr_rank(cone.eq_x).rank == cone.eq_x.rows();
    InteriorDirection dir = interior_direction(cone.eq_x, cone.ineq_x, n);
    rep.smfcq = strong_full_rank && dir.solved && dir.t > eps_act;

    rep.scs = act.weakly_active.empty();

    LagrangianDerivatives L = lagrangian_derivatives(bundle, pt.y, pt.z);
    // The equality rows of the critical cone and the subspace carrying the
    // strong second-order condition coincide at the given multipliers, so
    // both checks run over the same basis.
    Matrix Z = null_space(cone.eq_x);
    rep.sosc_subspace = reduced_hessian_pd(L.hess_xx, Z);
    rep.ssosc_subspace = reduced_hessian_pd(L.hess_xx, Z);
  }

  try {
    MultiplierPolytope poly = build_multiplier_polytope(nlp, pt, eps_act);
    rep.vertex_count = static_cast<int>(poly.vertex_y.size());
    rep.polytope_bounded = poly.bounded;
    rep.gssosc_subspace = !poly.vertex_y.empty();
    const double znorm_base = 1.0;
    for (size_t v = 0; v < poly.vertex_y.size(); ++v) {
      const Vector& zv = poly.vertex_z[v];
      LagrangianDerivatives Lv =
          lagrangian_derivatives(bundle, poly.vertex_y[v], zv);
      const double zs = eps_act * (znorm_base + zv.lpNorm<Eigen::Infinity>());
      std::vector<int> strong_v;
      bool vertex_scs = true;
      for (int i : poly.active) {
        if (zv[i] > zs)
          strong_v.push_back(i);
        else
          vertex_scs = false;
      }
      rep.scs_per_vertex.push_back(vertex_scs);
      Matrix rows(me + strong_v.size(), n);
      for (int i = 0; i < me; ++i)
        rows.row(i) = bundle.g[i].grad_x(n).transpose();
      for (size_t j = 0; j < strong_v.size(); ++j)
        rows.row(me + j) = bundle.h[strong_v[j]].grad_x(n).transpose();
      if (!reduced_hessian_pd(Lv.hess_xx, null_space(rows)))
        rep.gssosc_subspace = false;
    }
  } catch (const GuardExceededError&) {
    rep.vertex_count = -1;
    rep.gssosc_subspace = false;
  }

  rep.crcq = crcq_sampled(nlp, pt);
  return rep;
}

}  // namespace sensikit
