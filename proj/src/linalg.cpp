#include "sensikit/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace sensikit {

LUFactors::LUFactors(const Matrix& A, double rank_tol) {
  if (A.rows() != A.cols())
    throw DimensionError("LU needs a square matrix, got " +
                         std::to_string(A.rows()) + "x" +
                         std::to_string(A.cols()));
  n_ = static_cast<int>(A.rows());
  lu_.compute(A);
  const auto& U = lu_.matrixLU();
  double umax = 0.0;
  for (int i = 0; i < n_; ++i) umax = std::max(umax, std::abs(U(i, i)));
  for (int i = 0; i < n_; ++i) {
    if (std::abs(U(i, i)) <= rank_tol * umax || umax == 0.0)
      throw SingularMatrixError(i, "lu_factor");
  }
}

Vector LUFactors::solve(const Vector& b) const {
  if (b.size() != n_) throw DimensionError("lu_solve rhs length");
  return lu_.solve(b);
}

Matrix LUFactors::solve(const Matrix& B) const {
  if (B.rows() != n_) throw DimensionError("lu_solve rhs rows");
  return lu_.solve(B);
}

Vector LUFactors::solve_transpose(const Vector& b) const {
  if (b.size() != n_) throw DimensionError("lu_solve rhs length");
  // P A = L U, so A' x = b becomes U' w = b, L' t = w, x = P' t.
  const auto& LU = lu_.matrixLU();
  Vector w = LU.triangularView<Eigen::Upper>().transpose().solve(b);
  Vector t = LU.triangularView<Eigen::UnitLower>().transpose().solve(w);
  return lu_.permutationP().transpose() * t;
}

QRInfo qr_rank(const Matrix& A, double rank_tol) {
  QRInfo info;
  if (A.rows() == 0 || A.cols() == 0) return info;
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  const int k = static_cast<int>(std::min(A.rows(), A.cols()));
  info.r_diag.resize(k);
  for (int i = 0; i < k; ++i) info.r_diag[i] = std::abs(qr.matrixQR()(i, i));
  const double scale = info.r_diag[0];
  info.rank = 0;
  for (int i = 0; i < k; ++i)
    if (scale > 0.0 && info.r_diag[i] > rank_tol * scale) ++info.rank;
  const auto& perm = qr.colsPermutation().indices();
  info.col_perm.assign(perm.data(), perm.data() + perm.size());
  return info;
}

Matrix null_space(const Matrix& A, double rank_tol) {
  const int n = static_cast<int>(A.cols());
  if (A.rows() == 0) return Matrix::Identity(n, n);
  // QR of A': the trailing columns of Q span the null space of A.
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  const int k = static_cast<int>(std::min(A.rows(), A.cols()));
  double scale = 0.0;
  for (int i = 0; i < k; ++i)
    scale = std::max(scale, std::abs(qr.matrixQR()(i, i)));
  int rank = 0;
  for (int i = 0; i < k; ++i)
    if (scale > 0.0 && std::abs(qr.matrixQR()(i, i)) > rank_tol * scale)
      ++rank;
  Matrix Q = qr.householderQ();
  return Q.rightCols(n - rank);
}

LSQRResult lsqr_solve(const Matrix& A, const Vector& b, double tol,
                      int max_iter) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (b.size() != m) throw DimensionError("lsqr rhs length");
  if (max_iter <= 0) max_iter = 4 * (m + n) + 20;

  LSQRResult out;
  out.x = Vector::Zero(n);

  double beta = b.norm();
  if (beta == 0.0) {
    out.converged = true;
    return out;
  }
  Vector u = b / beta;
  Vector v = A.transpose() * u;
  double alpha = v.norm();
  if (alpha == 0.0) {
    // b is orthogonal to the range of A; x = 0 is the least-squares answer.
    out.converged = true;
    out.residual_norm = beta;
    return out;
  }
  v /= alpha;
  Vector w = v;

  double phibar = beta;
  double rhobar = alpha;
  double anorm = 0.0;

  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    // Golub-Kahan bidiagonalization step.
    u = A * v - alpha * u;
    beta = u.norm();
    if (beta > 0.0) u /= beta;
    v = A.transpose() * u - beta * v;
    alpha = v.norm();
    if (alpha > 0.0) v /= alpha;
    anorm = std::hypot(anorm, std::hypot(alpha, beta));

    // Givens rotation updating the QR factorization of the bidiagonal.
    const double rho = std::hypot(rhobar, beta);
    const double c = rhobar / rho;
    const double s = beta / rho;
    const double theta = s * alpha;
    rhobar = -c * alpha;
    const double phi = c * phibar;
    phibar = s * phibar;

    out.x += (phi / rho) * w;
    w = v - (theta / rho) * w;

    const double rnorm = phibar;
    const double arnorm = std::abs(alpha * c * phibar);
    out.residual_norm = rnorm;
    out.normal_residual = arnorm;
    if (rnorm <= tol * b.norm() || arnorm <= tol * std::max(anorm, 1.0) * rnorm) {
      out.converged = true;
      break;
    }
  }
  out.residual_norm = (A * out.x - b).norm();
  out.normal_residual = (A.transpose() * (A * out.x - b)).norm();
  return out;
}

}  // namespace sensikit
