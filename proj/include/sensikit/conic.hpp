#pragma once

#include <string>
#include <vector>

#include "sensikit/kkt.hpp"
#include "sensikit/linalg.hpp"

namespace sensikit {

enum class ConeKind { Zero, Free, Nonneg, Soc };

struct ConeBlock {
  ConeKind kind = ConeKind::Free;
  int dim = 0;
};

// Ordered product of elementary cones. Soc blocks use the (head, tail)
// layout: the first coordinate bounds the Euclidean norm of the rest.
struct ConeSpec {
  std::vector<ConeBlock> blocks;

  int dim() const;
  void validate() const;
  // Blockwise dual cone (zero<->free, nonneg and soc are self-dual).
  ConeSpec dual() const;
};

struct ConicProblem {
  Matrix A;
  Vector b;
  Vector c;
  ConeSpec cone;

  int num_vars() const { return static_cast<int>(A.cols()); }
  int num_rows() const { return static_cast<int>(A.rows()); }
  void validate() const;
};

struct ConeProjection {
  Vector value;
  Matrix jacobian;
  bool differentiable = true;
  std::vector<int> kink_blocks;
};

// Euclidean projection onto the cone with its derivative. Blocks sitting on
// a projection kink are listed and clear the differentiable flag; the
// jacobian then still holds a one-sided choice for diagnostic use.
ConeProjection project_cone(const ConeSpec& spec, const Vector& z);

// Embedding cone K x R^m x R+ for the primal-dual homotopy variable.
ConeSpec embedding_cone(const ConicProblem& prob);

// Skew pairing matrix of the embedded optimality system.
Matrix hsd_matrix(const ConicProblem& prob);

struct HSDPoint {
  Vector z;
  Vector u;      // projection of z onto the embedding cone
  Vector v;      // u - z, in the dual cone
  double tau = 0.0;
  double kappa = 0.0;
};

// Splits z into its complementary cone pair and checks the split: u'v must
// vanish, the last components of u and v are nonnegative with product zero.
HSDPoint make_hsd_point(const ConicProblem& prob, const Vector& z);

struct ResidualEval {
  Vector value;
  Matrix jacobian;
  bool differentiable = true;
  std::vector<int> kink_blocks;
};

// Residual of the embedded optimality system together with its derivative
// where the underlying projection is differentiable.
ResidualEval residual_map(const ConicProblem& prob, const Vector& z);

struct ConicPerturbation {
  Matrix dA;  // empty means zero
  Vector db;
  Vector dc;
};

struct ConicSolution {
  Vector x;
  Vector y;
  Vector s;
};

struct ConicSensitivity {
  Vector dx;
  Vector dy;
  Vector ds;
  // Set when the residual jacobian was rank deficient and the step was the
  // minimum-norm least-squares solution instead of a direct solve.
  bool least_squares = false;
};

// Directional derivative of the solution under a data perturbation
// (dA, db, dc), computed implicitly through the embedded residual system.
ConicSensitivity conic_sensitivity(const ConicProblem& prob,
                                   const ConicSolution& sol,
                                   const ConicPerturbation& dP);

struct ConicFixture {
  std::string name;
  ConicProblem problem;
  ConicSolution solution;
  ConicPerturbation perturbation;
};

ConicFixture parse_conic_json(const std::string& text);
ConicFixture load_conic_file(const std::string& path);

}  // namespace sensikit
