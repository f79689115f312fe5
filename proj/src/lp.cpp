#include <algorithm>
#include <cmath>
#include <limits>

#include "sensikit/opt_kernels.hpp"

namespace sensikit {

const char* to_cstring(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard-form program min c'v, A v = b, v >= 0, plus bookkeeping that maps
// columns and rows back to the original general-form LP.
struct Standard {
  Matrix A;
  Vector b;
  Vector c;
  double obj_offset = 0.0;

  // Column provenance.
  enum class ColKind { ShiftLo, ShiftHi, FreePos, FreeNeg, Slack, BoxSlack };
  struct Col {
    ColKind kind;
    int var = -1;  // original variable (shift/free) or row (slacks)
  };
  std::vector<Col> cols;

  // Row provenance: eq rows, then ineq rows, then box rows.
  enum class RowKind { Eq, Ineq, Box };
  struct Row {
    RowKind kind;
    int index;        // original row / variable
    double sign = 1;  // -1 when the row was negated to make b >= 0
  };
  std::vector<Row> rows;
};

struct SimplexOutcome {
  SolveStatus status = SolveStatus::Optimal;
  Vector v;       // standard-form point
  Vector y;       // row duals (for the possibly sign-flipped rows)
  std::vector<int> basis;
};

// One simplex phase with Bland's rule. `allowed` masks out columns that may
// not enter (artificials in phase 2).
SimplexOutcome simplex_iterate(const Matrix& A, const Vector& b,
                               const Vector& c, std::vector<int> basis,
                               const std::vector<bool>& allowed) {
  const int k = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  const double rc_tol = 1e-9 * (1.0 + c.cwiseAbs().maxCoeff());
  const int max_iter = 200 * (k + d + 10);

  SimplexOutcome out;
  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix B(k, k);
    for (int i = 0; i < k; ++i) B.col(i) = A.col(basis[i]);
    Eigen::PartialPivLU<Matrix> lu(B);
    Vector xB = lu.solve(b);
    Vector cB(k);
    for (int i = 0; i < k; ++i) cB[i] = c[basis[i]];
    Vector y = lu.transpose().solve(cB);

    std::vector<bool> is_basic(d, false);
    for (int j : basis) is_basic[j] = true;

    int entering = -1;
    for (int j = 0; j < d; ++j) {
      if (is_basic[j] || !allowed[j]) continue;
      const double rc = c[j] - A.col(j).dot(y);
      if (rc < -rc_tol) {
        entering = j;
        break;  // Bland: lowest eligible index
      }
    }
    if (entering < 0) {
      out.status = SolveStatus::Optimal;
      out.v = Vector::Zero(d);
      for (int i = 0; i < k; ++i) out.v[basis[i]] = xB[i];
      out.y = y;
      out.basis = basis;
      return out;
    }

    Vector dir = lu.solve(A.col(entering));
    double best_ratio = kInf;
    int leaving = -1;
    for (int i = 0; i < k; ++i) {
      if (dir[i] > 1e-10) {
        const double ratio = std::max(xB[i], 0.0) / dir[i];
        // Bland again: strictly better ratio wins; on a tie the row whose
        // basic variable has the lowest id wins.
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 &&
             (leaving < 0 || basis[i] < basis[leaving]))) {
          best_ratio = ratio;
          leaving = i;
        }
      }
    }
    if (leaving < 0) {
      out.status = SolveStatus::Unbounded;
      out.basis = basis;
      return out;
    }
    basis[leaving] = entering;
  }
  throw Error("simplex failed to terminate");
}

Standard to_standard(const LinearProgram& lp) {
  const int n = lp.num_vars();
  const int me = lp.A_eq.rows() > 0 ? static_cast<int>(lp.A_eq.rows()) : 0;
  const int mi = lp.A_ineq.rows() > 0 ? static_cast<int>(lp.A_ineq.rows()) : 0;

  auto lo_of = [&](int j) { return lp.lo.size() > 0 ? lp.lo[j] : -kInf; };
  auto hi_of = [&](int j) { return lp.hi.size() > 0 ? lp.hi[j] : kInf; };

  Standard s;
  // Column layout per variable, then slacks.
  std::vector<std::vector<std::pair<int, double>>> var_cols(n);  // (col, sign)
  std::vector<double> var_offset(n, 0.0);
  int nbox = 0;
  for (int j = 0; j < n; ++j) {
    const double lo = lo_of(j), hi = hi_of(j);
    if (std::isfinite(lo)) {
      var_cols[j] = {{static_cast<int>(s.cols.size()), 1.0}};
      var_offset[j] = lo;
      s.cols.push_back({Standard::ColKind::ShiftLo, j});
      if (std::isfinite(hi)) ++nbox;
    } else if (std::isfinite(hi)) {
      var_cols[j] = {{static_cast<int>(s.cols.size()), -1.0}};
      var_offset[j] = hi;
      s.cols.push_back({Standard::ColKind::ShiftHi, j});
    } else {
      var_cols[j] = {{static_cast<int>(s.cols.size()), 1.0},
                     {static_cast<int>(s.cols.size()) + 1, -1.0}};
      s.cols.push_back({Standard::ColKind::FreePos, j});
      s.cols.push_back({Standard::ColKind::FreeNeg, j});
    }
  }
  const int slack0 = static_cast<int>(s.cols.size());
  for (int i = 0; i < mi; ++i) s.cols.push_back({Standard::ColKind::Slack, i});
  const int boxslack0 = static_cast<int>(s.cols.size());
  for (int j = 0, bc = 0; j < n; ++j)
    if (std::isfinite(lo_of(j)) && std::isfinite(hi_of(j))) {
      s.cols.push_back({Standard::ColKind::BoxSlack, j});
      ++bc;
    }

  const int d = static_cast<int>(s.cols.size());
  const int k = me + mi + nbox;
  s.A = Matrix::Zero(k, d);
  s.b = Vector::Zero(k);
  s.c = Vector::Zero(d);

  for (int j = 0; j < n; ++j) {
    for (auto [col, sign] : var_cols[j]) s.c[col] = sign * lp.c[j];
    s.obj_offset += lp.c[j] * var_offset[j];
  }

  auto fill_row = [&](int row, const Vector& a, double rhs,
                      Standard::RowKind kind, int orig) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      off += a[j] * var_offset[j];
      for (auto [col, sign] : var_cols[j]) s.A(row, col) += sign * a[j];
    }
    s.b[row] = rhs - off;
    s.rows.push_back({kind, orig, 1.0});
  };

  int row = 0;
  for (int i = 0; i < me; ++i, ++row)
    fill_row(row, lp.A_eq.row(i).transpose(), lp.b_eq[i], Standard::RowKind::Eq, i);
  for (int i = 0; i < mi; ++i, ++row) {
    fill_row(row, lp.A_ineq.row(i).transpose(), lp.b_ineq[i],
             Standard::RowKind::Ineq, i);
    s.A(row, slack0 + i) = 1.0;
  }
  for (int j = 0, bc = 0; j < n; ++j) {
    if (!(std::isfinite(lo_of(j)) && std::isfinite(hi_of(j)))) continue;
    // x_j was shifted to v = x_j - lo, so the cap is v <= hi - lo.
    s.A(row, var_cols[j][0].first) = 1.0;
    s.A(row, boxslack0 + bc) = 1.0;
    s.b[row] = hi_of(j) - lo_of(j);
    s.rows.push_back({Standard::RowKind::Box, j, 1.0});
    ++bc;
    ++row;
  }

  for (int i = 0; i < k; ++i)
    if (s.b[i] < 0.0) {
      s.A.row(i) *= -1.0;
      s.b[i] = -s.b[i];
      s.rows[i].sign = -1.0;
    }
  return s;
}

}  // namespace

LPSolution lp_solve(const LinearProgram& lp) {
  const int n = lp.num_vars();
  Standard s = to_standard(lp);
  int k = static_cast<int>(s.A.rows());
  const int d = static_cast<int>(s.A.cols());

  // Phase 1: minimize the sum of one artificial per row.
  Matrix A1(k, d + k);
  A1.leftCols(d) = s.A;
  A1.rightCols(k) = Matrix::Identity(k, k);
  Vector c1 = Vector::Zero(d + k);
  c1.tail(k).setOnes();
  std::vector<int> basis(k);
  for (int i = 0; i < k; ++i) basis[i] = d + i;
  std::vector<bool> allow1(d + k, true);

  SimplexOutcome ph1 = simplex_iterate(A1, s.b, c1, basis, allow1);
  LPSolution sol;
  const double feas_tol = 1e-8 * (1.0 + s.b.cwiseAbs().sum());
  double art_sum = 0.0;
  for (int i = 0; i < k; ++i)
    if (ph1.basis[i] >= d) art_sum += std::abs(ph1.v[ph1.basis[i]]);
  if (ph1.status != SolveStatus::Optimal || art_sum > feas_tol) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }

  // Drive leftover artificials out of the basis; rows where that is
  // impossible are linearly dependent and get dropped.
  basis = ph1.basis;
  std::vector<int> keep_rows;
  {
    Matrix B(k, k);
    for (int i = 0; i < k; ++i) B.col(i) = A1.col(basis[i]);
    Eigen::PartialPivLU<Matrix> lu(B);
    std::vector<bool> is_basic(d, false);
    for (int j : basis)
      if (j < d) is_basic[j] = true;
    for (int i = 0; i < k; ++i) {
      if (basis[i] < d) continue;
      int replacement = -1;
      for (int j = 0; j < d && replacement < 0; ++j) {
        if (is_basic[j]) continue;
        Vector dir = lu.solve(A1.col(j));
        if (std::abs(dir[i]) > 1e-7) replacement = j;
      }
      if (replacement >= 0) {
        basis[i] = replacement;
        is_basic[replacement] = true;
        for (int t = 0; t < k; ++t) B.col(t) = A1.col(basis[t]);
        lu.compute(B);
      }
    }
    for (int i = 0; i < k; ++i)
      if (basis[i] < d) keep_rows.push_back(i);
  }
  if (static_cast<int>(keep_rows.size()) < k) {
    Matrix A2(keep_rows.size(), d);
    Vector b2(keep_rows.size());
    std::vector<Standard::Row> rows2;
    std::vector<int> basis2;
    for (size_t t = 0; t < keep_rows.size(); ++t) {
      A2.row(t) = s.A.row(keep_rows[t]);
      b2[t] = s.b[keep_rows[t]];
      rows2.push_back(s.rows[keep_rows[t]]);
      basis2.push_back(basis[keep_rows[t]]);
    }
    s.A = A2;
    s.b = b2;
    s.rows = rows2;
    basis = basis2;
    k = static_cast<int>(keep_rows.size());
  }

  std::vector<bool> allow2(d, true);
  SimplexOutcome ph2 = simplex_iterate(s.A, s.b, s.c, basis, allow2);
  if (ph2.status == SolveStatus::Unbounded) {
    sol.status = SolveStatus::Unbounded;
    return sol;
  }

  // Recover x and the duals in the original convention.
  sol.status = SolveStatus::Optimal;
  sol.x = Vector::Zero(n);
  auto lo_of = [&](int j) { return lp.lo.size() > 0 ? lp.lo[j] : -kInf; };
  auto hi_of = [&](int j) { return lp.hi.size() > 0 ? lp.hi[j] : kInf; };
  for (int col = 0; col < d; ++col) {
    const auto& cinfo = s.cols[col];
    const double v = ph2.v[col];
    switch (cinfo.kind) {
      case Standard::ColKind::ShiftLo: sol.x[cinfo.var] += v; break;
      case Standard::ColKind::ShiftHi: sol.x[cinfo.var] -= v; break;
      case Standard::ColKind::FreePos: sol.x[cinfo.var] += v; break;
      case Standard::ColKind::FreeNeg: sol.x[cinfo.var] -= v; break;
      default: break;
    }
  }
  for (int j = 0; j < n; ++j) {
    const double lo = lo_of(j), hi = hi_of(j);
    if (std::isfinite(lo))
      sol.x[j] += lo;
    else if (std::isfinite(hi))
      sol.x[j] += hi;
  }
  sol.objective = lp.c.dot(sol.x);

  const int me = lp.A_eq.rows() > 0 ? static_cast<int>(lp.A_eq.rows()) : 0;
  const int mi = lp.A_ineq.rows() > 0 ? static_cast<int>(lp.A_ineq.rows()) : 0;
  sol.y_eq = Vector::Zero(me);
  sol.z_ineq = Vector::Zero(mi);
  sol.mu_lo = Vector::Zero(n);
  sol.mu_hi = Vector::Zero(n);
  Vector box_dual = Vector::Zero(n);
  for (int i = 0; i < k; ++i) {
    const double yo = -s.rows[i].sign * ph2.y[i];
    switch (s.rows[i].kind) {
      case Standard::RowKind::Eq: sol.y_eq[s.rows[i].index] = yo; break;
      case Standard::RowKind::Ineq:
        sol.z_ineq[s.rows[i].index] = std::max(yo, 0.0);
        break;
      case Standard::RowKind::Box:
        box_dual[s.rows[i].index] = std::max(yo, 0.0);
        break;
    }
  }
  for (int col = 0; col < d; ++col) {
    const auto& cinfo = s.cols[col];
    if (cinfo.kind != Standard::ColKind::ShiftLo &&
        cinfo.kind != Standard::ColKind::ShiftHi)
      continue;
    const double rc = s.c[col] - s.A.col(col).dot(ph2.y);
    if (cinfo.kind == Standard::ColKind::ShiftLo)
      sol.mu_lo[cinfo.var] = std::max(rc, 0.0);
    else
      sol.mu_hi[cinfo.var] = std::max(rc, 0.0);
  }
  for (int j = 0; j < n; ++j) sol.mu_hi[j] += box_dual[j];

  for (int i = 0; i < mi; ++i) {
    const double slack = lp.b_ineq[i] - lp.A_ineq.row(i).dot(sol.x);
    if (std::abs(slack) <= 1e-8 * (1.0 + std::abs(lp.b_ineq[i])))
      sol.active_ineq.push_back(i);
  }
  sol.basis = ph2.basis;
  return sol;
}

double lp_kkt_residual(const LinearProgram& lp, const LPSolution& sol) {
  if (sol.status != SolveStatus::Optimal) return kInf;
  const int n = lp.num_vars();
  double r = 0.0;
  auto bump = [&r](double v) { r = std::max(r, v); };

  if (lp.A_eq.rows() > 0)
    bump((lp.A_eq * sol.x - lp.b_eq).cwiseAbs().maxCoeff());
  Vector slack;
  if (lp.A_ineq.rows() > 0) {
    slack = lp.b_ineq - lp.A_ineq * sol.x;
    bump(std::max(0.0, -slack.minCoeff()));
  }
  Vector stat = lp.c;
  if (lp.A_eq.rows() > 0) stat += lp.A_eq.transpose() * sol.y_eq;
  if (lp.A_ineq.rows() > 0) stat += lp.A_ineq.transpose() * sol.z_ineq;
  stat -= sol.mu_lo;
  stat += sol.mu_hi;
  bump(stat.cwiseAbs().maxCoeff());

  if (sol.z_ineq.size() > 0) bump(std::max(0.0, -sol.z_ineq.minCoeff()));
  bump(std::max(0.0, -sol.mu_lo.minCoeff()));
  bump(std::max(0.0, -sol.mu_hi.minCoeff()));

  for (int i = 0; i < slack.size(); ++i)
    bump(std::abs(sol.z_ineq[i] * slack[i]));
  for (int j = 0; j < n; ++j) {
    if (lp.lo.size() > 0 && std::isfinite(lp.lo[j]))
      bump(std::abs(sol.mu_lo[j] * (sol.x[j] - lp.lo[j])));
    if (lp.hi.size() > 0 && std::isfinite(lp.hi[j]))
      bump(std::abs(sol.mu_hi[j] * (lp.hi[j] - sol.x[j])));
  }
  if (lp.lo.size() > 0)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(lp.lo[j])) bump(std::max(0.0, lp.lo[j] - sol.x[j]));
  if (lp.hi.size() > 0)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(lp.hi[j])) bump(std::max(0.0, sol.x[j] - lp.hi[j]));
  return r;
}

}  // namespace sensikit
