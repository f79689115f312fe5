#include <algorithm>
#include <cmath>
#include <limits>

#include "sensikit/opt_kernels.hpp"

namespace sensikit {

namespace {

// Keeps rows of [A_eq; A_W] linearly independent by greedily admitting
// working-set rows in index order.
std::vector<int> independent_subset(const Matrix& A_eq, const Matrix& A_ineq,
                                    const std::vector<int>& W) {
  std::vector<int> kept;
  const int n = static_cast<int>(A_ineq.cols() > 0 ? A_ineq.cols() : A_eq.cols());
  Matrix rows(A_eq.rows() + W.size(), n);
  int r = 0;
  for (int i = 0; i < A_eq.rows(); ++i) rows.row(r++) = A_eq.row(i);
  int base_rank = qr_rank(rows.topRows(r)).rank;
  for (int idx : W) {
    rows.row(r) = A_ineq.row(idx);
    const int rank_with = qr_rank(rows.topRows(r + 1)).rank;
    if (rank_with > base_rank) {
      kept.push_back(idx);
      base_rank = rank_with;
      ++r;
    }
  }
  return kept;
}

}  // namespace

QPSolution qp_solve(const QuadraticProgram& qp) {
  const int n = qp.num_vars();
  const int me = qp.A_eq.rows() > 0 ? static_cast<int>(qp.A_eq.rows()) : 0;
  const int mi = qp.A_ineq.rows() > 0 ? static_cast<int>(qp.A_ineq.rows()) : 0;
  if (qp.H.rows() != n || qp.H.cols() != n)
    throw DimensionError("QP Hessian shape");
  const double hscale = 1.0 + qp.H.cwiseAbs().maxCoeff();
  if ((qp.H - qp.H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * hscale)
    throw InputError("QP Hessian must be symmetric");

  QPSolution sol;

  // Phase 1: any feasible point, found by the simplex on a zero objective.
  LinearProgram feas;
  feas.c = Vector::Zero(n);
  feas.A_eq = qp.A_eq;
  feas.b_eq = qp.b_eq;
  feas.A_ineq = qp.A_ineq;
  feas.b_ineq = qp.b_ineq;
  LPSolution fsol = lp_solve(feas);
  if (fsol.status != SolveStatus::Optimal) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  Vector x = fsol.x;

  const double act_tol = 1e-8 * (1.0 + (mi > 0 ? qp.b_ineq.cwiseAbs().maxCoeff() : 0.0));
  std::vector<int> W;
  for (int i = 0; i < mi; ++i)
    if (std::abs(qp.A_ineq.row(i).dot(x) - qp.b_ineq[i]) <= act_tol)
      W.push_back(i);

  const int max_iter = 50 * (n + mi + 5);
  Vector lambda;
  std::vector<int> Wk;
  for (int iter = 0; iter < max_iter; ++iter) {
    Wk = independent_subset(qp.A_eq, qp.A_ineq, W);
    const int ma = me + static_cast<int>(Wk.size());
    Matrix A(ma, n);
    for (int i = 0; i < me; ++i) A.row(i) = qp.A_eq.row(i);
    for (size_t t = 0; t < Wk.size(); ++t) A.row(me + t) = qp.A_ineq.row(Wk[t]);

    Matrix K = Matrix::Zero(n + ma, n + ma);
    K.topLeftCorner(n, n) = qp.H;
    if (ma > 0) {
      K.topRightCorner(n, ma) = A.transpose();
      K.bottomLeftCorner(ma, n) = A;
    }
    Vector rhs = Vector::Zero(n + ma);
    rhs.head(n) = -(qp.H * x + qp.q);

    Vector step_lam;
    bool singular = false;
    try {
      LUFactors lu(K);
      step_lam = lu.solve(rhs);
    } catch (const SingularMatrixError&) {
      singular = true;
    }
    if (singular) {
      // The reduced Hessian is singular on the working-set null space.
      // Negative curvature means the second-order condition fails;
      // otherwise fall back to a least-squares step.
      Matrix Z = null_space(A);
      if (Z.cols() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Z.transpose() * qp.H * Z);
        if (es.eigenvalues().minCoeff() < -1e-8 * hscale)
          throw RegularityError("indefinite-reduced-hessian",
                                "negative curvature in QP subproblem");
      }
      LSQRResult ls = lsqr_solve(K, rhs, 1e-13);
      if (ls.normal_residual > 1e-6 * (1.0 + rhs.norm())) {
        sol.status = SolveStatus::Unbounded;
        return sol;
      }
      step_lam = ls.x;
    }
    Vector s = step_lam.head(n);
    lambda = step_lam.tail(ma);

    if (s.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set; check multiplier signs.
      int drop = -1;
      double most_negative = -1e-9;
      for (size_t t = 0; t < Wk.size(); ++t) {
        const double l = lambda[me + t];
        if (l < most_negative) {
          most_negative = l;
          drop = Wk[t];
        }
      }
      if (drop < 0) {
        // Never certify a saddle: the reduced Hessian on the final working
        // set must be positive semidefinite.
        Matrix Z = null_space(A);
        if (Z.cols() > 0) {
          Eigen::SelfAdjointEigenSolver<Matrix> es(Z.transpose() * qp.H * Z);
          if (es.eigenvalues().minCoeff() < -1e-8 * hscale)
            throw RegularityError("indefinite-reduced-hessian",
                                  "negative curvature at QP stationary point");
        }
        sol.status = SolveStatus::Optimal;
        sol.x = x;
        sol.objective = 0.5 * x.dot(qp.H * x) + qp.q.dot(x);
        sol.y_eq = lambda.head(me);
        sol.z_ineq = Vector::Zero(mi);
        for (size_t t = 0; t < Wk.size(); ++t)
          sol.z_ineq[Wk[t]] = std::max(lambda[me + t], 0.0);
        sol.working_set = Wk;
        return sol;
      }
      W.erase(std::remove(W.begin(), W.end(), drop), W.end());
      continue;
    }

    // Line search to the nearest blocking constraint.
    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < mi; ++i) {
      if (std::find(W.begin(), W.end(), i) != W.end()) continue;
      const double as = qp.A_ineq.row(i).dot(s);
      if (as > 1e-12 * (1.0 + s.norm())) {
        const double ai = (qp.b_ineq[i] - qp.A_ineq.row(i).dot(x)) / as;
        if (ai < alpha - 1e-12) {
          alpha = ai;
          blocker = i;
        } else if (ai < alpha + 1e-12 && blocker >= 0 && i < blocker) {
          blocker = i;
        }
      }
    }
    x += std::max(alpha, 0.0) * s;
    if (blocker >= 0) {
      W.push_back(blocker);
      std::sort(W.begin(), W.end());
    }
  }
  throw Error("active-set QP failed to terminate");
}

double qp_kkt_residual(const QuadraticProgram& qp, const QPSolution& sol) {
  if (sol.status != SolveStatus::Optimal)
    return std::numeric_limits<double>::infinity();
  double r = 0.0;
  auto bump = [&r](double v) { r = std::max(r, v); };
  Vector stat = qp.H * sol.x + qp.q;
  if (qp.A_eq.rows() > 0) {
    stat += qp.A_eq.transpose() * sol.y_eq;
    bump((qp.A_eq * sol.x - qp.b_eq).cwiseAbs().maxCoeff());
  }
  if (qp.A_ineq.rows() > 0) {
    stat += qp.A_ineq.transpose() * sol.z_ineq;
    Vector slack = qp.b_ineq - qp.A_ineq * sol.x;
    bump(std::max(0.0, -slack.minCoeff()));
    bump(std::max(0.0, -sol.z_ineq.minCoeff()));
    for (int i = 0; i < slack.size(); ++i)
      bump(std::abs(sol.z_ineq[i] * slack[i]));
  }
  bump(stat.cwiseAbs().maxCoeff());
  return r;
}

}  // namespace sensikit
