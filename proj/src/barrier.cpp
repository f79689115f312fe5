#include "sensikit/barrier.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

namespace sensikit {

namespace {

constexpr double kNewtonTol = 1e-9;
constexpr double kArmijoC = 1e-4;
constexpr double kBoundaryFraction = 0.995;
constexpr int kMaxNewtonIters = 200;
constexpr int kMaxHalvings = 60;

struct MeritEval {
  double value = 0.0;
  Vector grad;
  Matrix hess;
  Vector h_values;
  bool interior = true;
};

// Merit value/derivatives at x. Quadratic penalty on equalities, log
// barrier on inequalities, shared parameter r.
MeritEval eval_merit(const ParametricNLP& nlp, const Vector& x,
                     const Vector& p, double r, bool with_derivatives) {
  MeritEval out;
  const DerivativeBundle b = evaluate_bundle(nlp, x, p, DerivScope::XOnly);
  out.h_values = b.h_values();
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    if (out.h_values(i) >= 0.0) {
      out.interior = false;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  out.value = b.f.value;
  for (int j = 0; j < nlp.num_eq(); ++j) {
    out.value += 0.5 / r * b.g[j].value * b.g[j].value;
  }
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    out.value -= r * std::log(-out.h_values(i));
  }
  if (!with_derivatives) return out;

  out.grad = b.f.grad;
  out.hess = b.f.hess;
  for (int j = 0; j < nlp.num_eq(); ++j) {
    const Vector& gg = b.g[j].grad;
    out.grad += (b.g[j].value / r) * gg;
    out.hess += (1.0 / r) * (gg * gg.transpose()) +
                (b.g[j].value / r) * b.g[j].hess;
  }
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    const Vector& gh = b.h[i].grad;
    const double hi = out.h_values(i);
    out.grad += (-r / hi) * gh;
    out.hess += (r / (hi * hi)) * (gh * gh.transpose()) +
                (-r / hi) * b.h[i].hess;
  }
  return out;
}

Vector newton_direction(const Matrix& H, const Vector& grad) {
  const double scale = 1.0 + H.lpNorm<Eigen::Infinity>();
  double shift = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Matrix Hs = H;
    if (shift > 0.0) Hs += shift * Matrix::Identity(H.rows(), H.cols());
    Eigen::LLT<Matrix> llt(Hs);
    if (llt.info() == Eigen::Success) {
      return llt.solve(-grad);
    }
    shift = shift == 0.0 ? 1e-8 * scale : 10.0 * shift;
  }
  throw Error("barrier Newton step failed: Hessian could not be shifted to "
              "positive definite");
}

void recover_multipliers(const ParametricNLP& nlp, const Vector& x,
                         const Vector& p, double r, Vector* y, Vector* z) {
  const DerivativeBundle b = evaluate_bundle(nlp, x, p, DerivScope::XOnly);
  *y = Vector::Zero(nlp.num_eq());
  for (int j = 0; j < nlp.num_eq(); ++j) (*y)(j) = b.g[j].value / r;
  *z = Vector::Zero(nlp.num_ineq());
  for (int i = 0; i < nlp.num_ineq(); ++i) (*z)(i) = -r / b.h[i].value;
}

}  // namespace

std::vector<double> default_r_schedule() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
}

SumtResult sumt_solve(const ParametricNLP& nlp, const Vector& p,
                      const Vector& x0,
                      const std::vector<double>& r_schedule) {
  if (x0.size() != nlp.num_vars()) {
    throw DimensionError("start point has " + std::to_string(x0.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_vars()) + " variables");
  }
  if (r_schedule.empty()) {
    throw InputError("empty penalty schedule");
  }
  for (size_t s = 0; s < r_schedule.size(); ++s) {
    if (r_schedule[s] <= 0.0 ||
        (s > 0 && r_schedule[s] >= r_schedule[s - 1])) {
      throw InputError("penalty schedule must be positive and strictly "
                       "decreasing");
    }
  }
  if (r_schedule.back() < 1e-8) {
    throw InputError("final penalty value below 1e-8 would make the stage "
                     "systems numerically unreliable");
  }
  {
    const DerivativeBundle b = evaluate_bundle(nlp, x0, p, DerivScope::XOnly);
    for (int i = 0; i < nlp.num_ineq(); ++i) {
      if (b.h[i].value >= 0.0) {
        throw InputError("infeasible start: inequality " + std::to_string(i) +
                         " has value " + std::to_string(b.h[i].value) +
                         ", need strictly negative");
      }
    }
  }

  SumtResult out;
  Vector x = x0;
  for (double r : r_schedule) {
    BarrierState stage;
    stage.r = r;
    MeritEval cur = eval_merit(nlp, x, p, r, true);
    int it = 0;
    for (; it < kMaxNewtonIters; ++it) {
      const double gnorm = cur.grad.norm();
      stage.grad_norms.push_back(gnorm);
      if (gnorm <= kNewtonTol) break;

      const Vector d = newton_direction(cur.hess, cur.grad);
      // With the penalty sharpened to r ~ 1e-7, cancellation in g/r floors
      // the measurable gradient above the nominal tolerance; once the step
      // is below the resolution of x the stage is as converged as doubles
      // allow.
      if (d.lpNorm<Eigen::Infinity>() <=
          4.0 * std::numeric_limits<double>::epsilon() *
              (1.0 + x.lpNorm<Eigen::Infinity>())) {
        break;
      }
      const double slope = cur.grad.dot(d);
      // Near the minimizer the true decrease drops below the rounding noise
      // of the merit value; a strict Armijo test then rejects every step and
      // the iteration stalls. Allow decreases up to that noise.
      const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                           (1.0 + std::abs(cur.value));
      double alpha = 1.0;
      bool accepted = false;
      for (int half = 0; half < kMaxHalvings; ++half) {
        const Vector trial = x + alpha * d;
        MeritEval te = eval_merit(nlp, trial, p, r, false);
        // Fraction-to-boundary: the trial must keep a sliver of every
        // inequality's current slack.
        for (int i = 0; i < nlp.num_ineq() && te.interior; ++i) {
          if (te.h_values(i) > (1.0 - kBoundaryFraction) * cur.h_values(i)) {
            te.interior = false;
          }
        }
        if (te.interior &&
            te.value <= cur.value + kArmijoC * alpha * slope + noise) {
          x = trial;
          cur = eval_merit(nlp, x, p, r, true);
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        throw Error("barrier line search failed at r=" + std::to_string(r) +
                    ", gradient norm " + std::to_string(gnorm) +
                    "; returning no result past the last iterate");
      }
    }
    if (it == kMaxNewtonIters) {
      throw Error("barrier Newton exceeded " +
                  std::to_string(kMaxNewtonIters) + " iterations at r=" +
                  std::to_string(r));
    }
    stage.x = x;
    stage.newton_iterations = it;
    recover_multipliers(nlp, x, p, r, &stage.y, &stage.z);
    out.trail.push_back(stage);
  }

  const BarrierState& last = out.trail.back();
  out.point.x = last.x;
  out.point.y = last.y;
  out.point.z = last.z;
  out.point.p = p;
  return out;
}

SensitivityResult barrier_sensitivity(const ParametricNLP& nlp,
                                      const BarrierState& state,
                                      const Vector& p) {
  const int n = nlp.num_vars();
  const int l = nlp.num_params();
  const double r = state.r;
  const DerivativeBundle b = evaluate_bundle(nlp, state.x, p);

  Vector y, z;
  recover_multipliers(nlp, state.x, p, r, &y, &z);
  const LagrangianDerivatives lag = lagrangian_derivatives(b, y, z);

  Matrix hxx = lag.hess_xx;
  Matrix hxp = lag.hess_xp;
  for (int j = 0; j < nlp.num_eq(); ++j) {
    const Vector gx = b.g[j].grad_x(n);
    hxx += (1.0 / r) * (gx * gx.transpose());
    hxp += (1.0 / r) * (gx * b.g[j].grad_p(n).transpose());
  }
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    const Vector hx = b.h[i].grad_x(n);
    const double hi = b.h[i].value;
    hxx += (r / (hi * hi)) * (hx * hx.transpose());
    hxp += (r / (hi * hi)) * (hx * b.h[i].grad_p(n).transpose());
  }

  Eigen::LLT<Matrix> llt(hxx);
  if (llt.info() != Eigen::Success) {
    throw RegularityError("indefinite-barrier-hessian",
                          "merit Hessian is not positive definite, so the "
                          "state is not a barrier minimizer");
  }

  SensitivityResult out;
  out.jac_x = -llt.solve(hxp);
  out.jac_y = Matrix::Zero(nlp.num_eq(), l);
  for (int j = 0; j < nlp.num_eq(); ++j) {
    out.jac_y.row(j) = (1.0 / r) * (b.g[j].grad_x(n).transpose() * out.jac_x +
                                    b.g[j].grad_p(n).transpose());
  }
  out.jac_z = Matrix::Zero(nlp.num_ineq(), l);
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    const double hi = b.h[i].value;
    out.jac_z.row(i) =
        (r / (hi * hi)) * (b.h[i].grad_x(n).transpose() * out.jac_x +
                           b.h[i].grad_p(n).transpose());
  }
  out.regime = SensitivityRegime::Barrier;
  return out;
}

SensitivityResult barrier_kkt_sensitivity(const ParametricNLP& nlp,
                                          const PrimalDualPoint& point,
                                          double mu) {
  const int n = nlp.num_vars();
  const int me = nlp.num_eq();
  const int mb = nlp.num_ineq();
  const int l = nlp.num_params();

  // Every inequality must be a simple bound -x_k <= 0.
  std::vector<int> bound_var(mb, -1);
  for (int i = 0; i < mb; ++i) {
    const Expr& e = nlp.inequalities[i];
    if (e->op == Op::Neg && e->a->op == Op::Var) {
      bound_var[i] = e->a->index;
    } else {
      throw InputError(
          "not in bound-constrained form: inequality " + std::to_string(i) +
          " is not a simple bound (rewrite with slacks so every inequality "
          "reads -x_k)");
    }
  }

  const DerivativeBundle b = evaluate_bundle(nlp, point.x, point.p);
  const LagrangianDerivatives lag =
      lagrangian_derivatives(b, point.y, point.z);

  // Residual of the perturbed optimality system.
  double res = lag.grad_x.lpNorm<Eigen::Infinity>();
  for (int j = 0; j < me; ++j) res = std::max(res, std::abs(b.g[j].value));
  for (int i = 0; i < mb; ++i) {
    res = std::max(res,
                   std::abs(point.x(bound_var[i]) * point.z(i) - mu));
  }
  if (res > 1e-8) {
    throw InputError("point does not solve the perturbed optimality system "
                     "at mu=" + std::to_string(mu) + ": residual " +
                     std::to_string(res));
  }

  const int dim = n + me + mb;
  Matrix J = Matrix::Zero(dim, dim);
  J.topLeftCorner(n, n) = lag.hess_xx;
  if (me > 0) {
    const Matrix jg = b.jac_x_g();
    J.block(0, n, n, me) = jg.transpose();
    J.block(n, 0, me, n) = jg;
  }
  for (int i = 0; i < mb; ++i) {
    const int k = bound_var[i];
    J(k, n + me + i) = -1.0;
    J(n + me + i, k) = point.z(i);
    J(n + me + i, n + me + i) = point.x(k);
  }

  Matrix N = Matrix::Zero(dim, l);
  N.topRows(n) = lag.hess_xp;
  if (me > 0) N.middleRows(n, me) = b.jac_p_g();

  const LUFactors lu(J);
  const Matrix sol = lu.solve(Matrix(-N));

  SensitivityResult out;
  out.jac_x = sol.topRows(n);
  out.jac_y = sol.middleRows(n, me);
  out.jac_z = sol.bottomRows(mb);
  out.regime = SensitivityRegime::Barrier;
  return out;
}

}  // namespace sensikit
