#pragma once

#include <Eigen/Dense>

#include "sensikit/errors.hpp"

namespace sensikit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kRankTol = 1e-8;  // relative rank cutoff, shared default

// Dense LU with partial pivoting. Factorization refuses matrices that are
// singular relative to kRankTol; the thrown error carries the index of the
// first unusable pivot so callers can report which row of their system
// collapsed.
class LUFactors {
public:
  LUFactors() = default;
  explicit LUFactors(const Matrix& A, double rank_tol = kRankTol);

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& B) const;
  // Solves A^T x = b reusing the same factorization.
  Vector solve_transpose(const Vector& b) const;

  int dim() const { return n_; }

private:
  Eigen::PartialPivLU<Matrix> lu_;
  int n_ = 0;
};

struct QRInfo {
  int rank = 0;
  Vector r_diag;               // |diagonal of R|, non-increasing
  std::vector<int> col_perm;   // column pivot order
};

// Rank-revealing QR with column pivoting. rank counts diagonal entries of R
// above rank_tol relative to the largest one.
QRInfo qr_rank(const Matrix& A, double rank_tol = kRankTol);

// Orthonormal basis Z for the null space of A (so A*Z = 0, Z'Z = I).
// Returns an n-by-0 matrix when A has full column rank.
Matrix null_space(const Matrix& A, double rank_tol = kRankTol);

struct LSQRResult {
  Vector x;
  bool converged = false;
  double residual_norm = 0.0;   // ||A x - b||
  double normal_residual = 0.0; // ||A'(A x - b)||
  int iterations = 0;
};

// Paige-Saunders LSQR for min ||A x - b||. For consistent systems it
// converges to the minimum-norm solution, which is what the conic and
// degenerate-corrector paths rely on when their Jacobians are rank
// deficient.
LSQRResult lsqr_solve(const Matrix& A, const Vector& b, double tol = 1e-12,
                      int max_iter = 0);

}  // namespace sensikit
