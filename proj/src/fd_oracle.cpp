#include "sensikit/fd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sensikit {

Vector feasibility_nudge(const ParametricNLP& nlp, const Vector& x0,
                         const Vector& q) {
  const double margin = 0.1;
  Vector x = x0;
  for (int round = 0; round < 10; ++round) {
    const DerivativeBundle b = evaluate_bundle(nlp, x, q, DerivScope::XOnly);
    std::vector<int> bad;
    for (int i = 0; i < nlp.num_ineq(); ++i) {
      if (b.h[i].value > -1e-2) bad.push_back(i);
    }
    if (bad.empty()) return x;
    Matrix J(static_cast<int>(bad.size()), nlp.num_vars());
    Vector rhs(static_cast<int>(bad.size()));
    for (size_t k = 0; k < bad.size(); ++k) {
      J.row(static_cast<int>(k)) = b.h[bad[k]].grad.transpose();
      rhs(static_cast<int>(k)) = -margin - b.h[bad[k]].value;
    }
    const LSQRResult ls = lsqr_solve(J, rhs);
    if (ls.x.lpNorm<Eigen::Infinity>() < 1e-14) break;
    x += ls.x;
  }
  throw Error("could not construct a strictly feasible start near the "
              "requested parameter");
}

namespace {

std::string join(const std::vector<int>& v) {
  std::string s;
  for (int i : v) s += (s.empty() ? "" : ",") + std::to_string(i);
  return s.empty() ? "-" : s;
}

}  // namespace

void OracleConfig::validate() const {
  if (central_step <= 0.0) throw InputError("central step must be positive");
  if (one_sided_steps.empty()) {
    throw InputError("one-sided step ladder is empty");
  }
  for (size_t i = 0; i < one_sided_steps.size(); ++i) {
    if (one_sided_steps[i] <= 0.0 ||
        (i > 0 && one_sided_steps[i] >= one_sided_steps[i - 1])) {
      throw InputError("one-sided steps must be positive and decreasing");
    }
  }
  if (solve_tol <= 0.0) throw InputError("solve tolerance must be positive");
}

OracleSolve oracle_resolve(const ParametricNLP& nlp, const Vector& q,
                           const Vector& x_start, const OracleConfig& cfg) {
  cfg.validate();
  const int n = nlp.num_vars();
  const int me = nlp.num_eq();

  const Vector x_feas = feasibility_nudge(nlp, x_start, q);
  SumtResult coarse;
  try {
    coarse = sumt_solve(nlp, q, x_feas, cfg.r_schedule);
  } catch (const Error& e) {
    throw Error("re-solve failed at the requested parameter: " +
                std::string(e.what()));
  }

  // Initial split: at a homotopy endpoint an active constraint carries
  // z >> |h| and an inactive one z << |h|.
  std::vector<int> active;
  {
    const DerivativeBundle b =
        evaluate_bundle(nlp, coarse.point.x, q, DerivScope::XOnly);
    for (int i = 0; i < nlp.num_ineq(); ++i) {
      if (coarse.point.z(i) > std::abs(b.h[i].value)) active.push_back(i);
    }
  }

  Vector x = coarse.point.x;
  Vector y = coarse.point.y;
  OracleSolve out;
  for (int round = 0; round < 6; ++round) {
    const int na = static_cast<int>(active.size());
    Vector za(na);
    for (int k = 0; k < na; ++k) za(k) = coarse.point.z(active[k]);

    bool stalled = false;
    double stall_residual = 0.0;
    int it = 0;
    for (; it < 30 && !stalled; ++it) {
      const PinnedSystem sys = pinned_kkt_system(nlp, x, y, za, active, q);
      const double rn = sys.residual.lpNorm<Eigen::Infinity>();
      if (rn <= cfg.solve_tol) break;
      Vector step;
      try {
        step = LUFactors(sys.jacobian).solve(Vector(-sys.residual));
      } catch (const SingularMatrixError&) {
        // Duplicated active gradients make the pinned system singular while
        // the equations stay consistent; the min-norm step still contracts
        // the residual and lands on a valid multiplier split.
        const LSQRResult ls = lsqr_solve(sys.jacobian, Vector(-sys.residual));
        if (ls.normal_residual > 1e-8 * (1.0 + rn)) {
          throw Error("re-solve polish hit a singular and inconsistent "
                      "optimality system");
        }
        step = ls.x;
      }
      double alpha = 1.0;
      for (int half = 0; half < 30; ++half) {
        const Vector xt = x + alpha * step.head(n);
        const Vector yt = y + alpha * step.segment(n, me);
        const Vector zt = za + alpha * step.tail(na);
        if (pinned_kkt_system(nlp, xt, yt, zt, active, q)
                .residual.lpNorm<Eigen::Infinity>() < rn) {
          x = xt;
          y = yt;
          za = zt;
          break;
        }
        alpha *= 0.5;
        if (half == 29) {
          stalled = true;
          stall_residual = rn;
        }
      }
    }
    if (stalled || it == 30) {
      // No point satisfies every pin at once, so one of the frozen rows is
      // wrong. A pinned row the least-squares compromise pulls interior is
      // being held on the boundary against the geometry; release the most
      // negative one and re-polish. Rows violated outward stay pinned, the
      // post-round validation re-adds them anyway.
      const DerivativeBundle b = evaluate_bundle(nlp, x, q, DerivScope::XOnly);
      int worst = -1;
      double worst_h = -1e-8;
      for (int k = 0; k < na; ++k) {
        if (b.h[active[k]].value < worst_h) {
          worst_h = b.h[active[k]].value;
          worst = k;
        }
      }
      if (worst < 0) {
        throw Error(stalled
                        ? "re-solve polish stalled at residual " +
                              std::to_string(stall_residual)
                        : "re-solve polish did not reach tolerance " +
                              std::to_string(cfg.solve_tol));
      }
      active.erase(active.begin() + worst);
      continue;
    }
    out.polish_iterations += it;

    // Sign validation of the frozen split; a violation flips the row and
    // the polish repeats.
    const DerivativeBundle b = evaluate_bundle(nlp, x, q, DerivScope::XOnly);
    std::vector<int> next = active;
    for (int k = na - 1; k >= 0; --k) {
      if (za(k) < -1e-8) next.erase(next.begin() + k);
    }
    for (int i = 0; i < nlp.num_ineq(); ++i) {
      if (std::find(next.begin(), next.end(), i) == next.end() &&
          b.h[i].value > 1e-8) {
        next.insert(std::upper_bound(next.begin(), next.end(), i), i);
      }
    }
    if (next == active) {
      out.point.x = x;
      out.point.y = y;
      out.point.z = Vector::Zero(nlp.num_ineq());
      for (int k = 0; k < na; ++k) {
        out.point.z(active[k]) = std::max(za(k), 0.0);
      }
      out.point.p = q;
      out.active = active;
      return out;
    }
    active = next;
  }
  throw Error("re-solve could not settle on an active set at the requested "
              "parameter");
}

FDJacobian fd_jacobian(const ParametricNLP& nlp, const Vector& p,
                       const OracleConfig& cfg) {
  cfg.validate();
  if (p.size() != nlp.num_params()) {
    throw DimensionError("parameter vector has " + std::to_string(p.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_params()));
  }
  const int n = nlp.num_vars();
  const int l = nlp.num_params();

  const OracleSolve base = oracle_resolve(nlp, p, Vector::Zero(n), cfg);

  FDJacobian out;
  out.active = base.active;
  out.jac_x = Matrix::Zero(n, l);
  out.jac_y = Matrix::Zero(nlp.num_eq(), l);
  out.jac_z = Matrix::Zero(nlp.num_ineq(), l);
  for (int k = 0; k < l; ++k) {
    const double step = cfg.central_step * (1.0 + std::abs(p(k)));
    Vector qp = p, qm = p;
    qp(k) += step;
    qm(k) -= step;
    const OracleSolve sp = oracle_resolve(nlp, qp, base.point.x, cfg);
    const OracleSolve sm = oracle_resolve(nlp, qm, base.point.x, cfg);
    if (sp.active != base.active || sm.active != base.active) {
      throw Error(
          "active set changed inside the finite-difference stencil for "
          "parameter " + std::to_string(k) + " (base {" + join(base.active) +
          "}, +step {" + join(sp.active) + "}, -step {" + join(sm.active) +
          "}); shrink the step or use the one-sided mode");
    }
    out.jac_x.col(k) = (sp.point.x - sm.point.x) / (2.0 * step);
    out.jac_y.col(k) = (sp.point.y - sm.point.y) / (2.0 * step);
    out.jac_z.col(k) = (sp.point.z - sm.point.z) / (2.0 * step);
  }
  return out;
}

FDDirectional fd_directional(const ParametricNLP& nlp, const Vector& p,
                             const Vector& h, const OracleConfig& cfg) {
  cfg.validate();
  if (h.size() != nlp.num_params()) {
    throw DimensionError("direction has " + std::to_string(h.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_params()) + " parameters");
  }
  const int n = nlp.num_vars();
  FDDirectional out;
  out.steps = cfg.one_sided_steps;
  if (h.lpNorm<Eigen::Infinity>() == 0.0) {
    out.quotients.assign(cfg.one_sided_steps.size(), Vector::Zero(n));
    out.estimate = Vector::Zero(n);
    out.shrinking = true;
    return out;
  }

  const OracleSolve base = oracle_resolve(nlp, p, Vector::Zero(n), cfg);
  for (double t : cfg.one_sided_steps) {
    const OracleSolve st =
        oracle_resolve(nlp, p + t * h, base.point.x, cfg);
    out.quotients.push_back((st.point.x - base.point.x) / t);
  }
  out.estimate = out.quotients.back();
  out.shrinking = true;
  for (size_t i = 2; i < out.quotients.size(); ++i) {
    const double later = (out.quotients[i] - out.quotients[i - 1]).norm();
    const double earlier =
        (out.quotients[i - 1] - out.quotients[i - 2]).norm();
    // Flag only genuine growth; flat-at-noise sequences count as settled.
    if (later > 1.5 * earlier + 1e-8) out.shrinking = false;
  }
  return out;
}

}  // namespace sensikit
