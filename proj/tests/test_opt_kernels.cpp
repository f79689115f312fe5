#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include "sensikit/errors.hpp"
#include "sensikit/opt_kernels.hpp"

using namespace sensikit;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 make_rng(unsigned seed) { return std::mt19937_64(seed); }

Vector random_vector(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = dist(rng);
  return A;
}

// Random standard-form LP, min c'v, Av = b, v >= 0, guaranteed feasible
// (b = A v0 with v0 > 0) and bounded (one row sums all variables).
LinearProgram random_standard_lp(int m, int d, std::mt19937_64& rng) {
  LinearProgram lp;
  Matrix A = random_matrix(m, d, rng);
  A.conservativeResize(m + 1, d);
  A.row(m).setOnes();
  Vector v0 = random_vector(d, rng, 0.1, 2.0);
  lp.A_eq = A;
  lp.b_eq = A * v0;
  lp.A_ineq = Matrix(0, d);
  lp.b_ineq = Vector(0);
  lp.c = random_vector(d, rng);
  lp.lo = Vector::Zero(d);
  lp.hi = Vector::Constant(d, kInf);
  return lp;
}

// Minimum objective over all polytope vertices; oracle for lp_solve.
double vertex_minimum(const LinearProgram& lp) {
  std::vector<int> signs(lp.num_vars());
  for (int i = 0; i < lp.num_vars(); ++i) signs[i] = i;
  PolytopeVertices pv = enumerate_vertices(lp.A_eq, lp.b_eq, signs, 1e-9);
  REQUIRE(!pv.vertices.empty());
  double best = kInf;
  for (const Vector& v : pv.vertices) best = std::min(best, lp.c.dot(v));
  return best;
}

// Brute-force QP oracle: try every subset of inequality rows as the active
// set, solve the equality-constrained KKT system, keep sign- and
// primal-feasible candidates, return the best objective.
struct BruteQPResult {
  bool found = false;
  double objective = kInf;
  Vector x;
};

BruteQPResult brute_force_qp(const QuadraticProgram& qp) {
  int n = qp.num_vars();
  int me = int(qp.b_eq.size());
  int mi = int(qp.b_ineq.size());
  BruteQPResult best;
  for (int mask = 0; mask < (1 << mi); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < mi; ++i)
      if (mask & (1 << i)) act.push_back(i);
    int k = me + int(act.size());
    Matrix K(n + k, n + k);
    K.setZero();
    K.topLeftCorner(n, n) = qp.H;
    Matrix A(k, n);
    Vector b(k);
    for (int i = 0; i < me; ++i) {
      A.row(i) = qp.A_eq.row(i);
      b(i) = qp.b_eq(i);
    }
    for (size_t i = 0; i < act.size(); ++i) {
      A.row(me + int(i)) = qp.A_ineq.row(act[i]);
      b(me + int(i)) = qp.b_ineq(act[i]);
    }
    if (k > 0) {
      K.topRightCorner(n, k) = A.transpose();
      K.bottomLeftCorner(k, n) = A;
    }
    Vector rhs(n + k);
    rhs << -qp.q, b;
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) continue;
    Vector sol = lu.solve(rhs);
    Vector x = sol.head(n);
    Vector mult = sol.tail(k);
    bool ok = true;
    for (size_t i = 0; i < act.size(); ++i)
      if (mult(me + int(i)) < -1e-7) ok = false;  // wrong sign on active row
    for (int i = 0; i < mi && ok; ++i)
      if (qp.A_ineq.row(i).dot(x) > qp.b_ineq(i) + 1e-7) ok = false;
    if (!ok) continue;
    double obj = 0.5 * x.dot(qp.H * x) + qp.q.dot(x);
    if (obj < best.objective - 1e-12) {
      best.found = true;
      best.objective = obj;
      best.x = x;
    } else if (!best.found) {
      best.found = true;
      best.objective = obj;
      best.x = x;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("simplex solves a basic inequality LP") {
  LinearProgram lp;
  lp.c = Vector(2);
  lp.c << -1.0, -1.0;
  lp.A_eq = Matrix(0, 2);
  lp.b_eq = Vector(0);
  lp.A_ineq = Matrix(1, 2);
  lp.A_ineq << 1.0, 1.0;
  lp.b_ineq = Vector(1);
  lp.b_ineq << 1.0;
  lp.lo = Vector::Zero(2);
  lp.hi = Vector::Constant(2, kInf);
  LPSolution sol = lp_solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.objective + 1.0) <= 1e-9);
  CHECK(std::abs(sol.x(0) + sol.x(1) - 1.0) <= 1e-9);
  CHECK(lp_kkt_residual(lp, sol) <= 1e-8);
  CHECK(sol.active_ineq == std::vector<int>{0});
  // The constraint's dual prices the objective: z = 1.
  CHECK(std::abs(sol.z_ineq(0) - 1.0) <= 1e-9);
}

TEST_CASE("simplex detects infeasibility and unboundedness") {
  LinearProgram lp;
  lp.c = Vector(1);
  lp.c << 1.0;
  lp.A_eq = Matrix(0, 1);
  lp.b_eq = Vector(0);
  lp.A_ineq = Matrix(1, 1);
  lp.A_ineq << 1.0;
  lp.b_ineq = Vector(1);
  lp.b_ineq << -1.0;  // x <= -1 with x >= 0
  lp.lo = Vector::Zero(1);
  lp.hi = Vector::Constant(1, kInf);
  CHECK(lp_solve(lp).status == SolveStatus::Infeasible);

  lp.b_ineq(0) = 5.0;
  lp.c(0) = -1.0;
  lp.A_ineq = Matrix(0, 1);
  lp.b_ineq = Vector(0);
  CHECK(lp_solve(lp).status == SolveStatus::Unbounded);
}

TEST_CASE("simplex handles free variables and finite boxes") {
  // min x1 + x2, x1 + x2 = 1, x1 free, -2 <= x2 <= 3: any split works,
  // objective 1; duals must certify it.
  LinearProgram lp;
  lp.c = Vector(2);
  lp.c << 1.0, 1.0;
  lp.A_eq = Matrix(1, 2);
  lp.A_eq << 1.0, 1.0;
  lp.b_eq = Vector(1);
  lp.b_eq << 1.0;
  lp.A_ineq = Matrix(0, 2);
  lp.b_ineq = Vector(0);
  lp.lo = Vector(2);
  lp.lo << -kInf, -2.0;
  lp.hi = Vector(2);
  lp.hi << kInf, 3.0;
  LPSolution sol = lp_solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.objective - 1.0) <= 1e-9);
  CHECK(lp_kkt_residual(lp, sol) <= 1e-8);

  // Decouple the free variable from the constraint: now unbounded below.
  lp.A_eq << 0.0, 1.0;
  lp.c << 1.0, 1.0;
  CHECK(lp_solve(lp).status == SolveStatus::Unbounded);
}

TEST_CASE("simplex terminates on a classic degenerate cycle candidate") {
  // Degenerate pivoting stress: Bland's rule must terminate.
  LinearProgram lp;
  lp.c = Vector(4);
  lp.c << -0.75, 150.0, -0.02, 6.0;
  lp.A_ineq = Matrix(3, 4);
  lp.A_ineq << 0.25, -60.0, -0.04, 9.0,
               0.5, -90.0, -0.02, 3.0,
               0.0, 0.0, 1.0, 0.0;
  lp.b_ineq = Vector(3);
  lp.b_ineq << 0.0, 0.0, 1.0;
  lp.A_eq = Matrix(0, 4);
  lp.b_eq = Vector(0);
  lp.lo = Vector::Zero(4);
  lp.hi = Vector::Constant(4, kInf);
  LPSolution sol = lp_solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(lp_kkt_residual(lp, sol) <= 1e-8);
  CHECK(std::abs(sol.objective + 0.05) <= 1e-9);
}

TEST_CASE("random standard-form LPs match the vertex-enumeration oracle") {
  auto rng = make_rng(20240817);
  for (int trial = 0; trial < 60; ++trial) {
    int m = 1 + int(rng() % 3);
    int d = m + 2 + int(rng() % 3);  // at most 8 columns, enumerable
    LinearProgram lp = random_standard_lp(m, d, rng);
    LPSolution sol = lp_solve(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    double res = lp_kkt_residual(lp, sol);
    CHECK(res <= 1e-8);
    double oracle = vertex_minimum(lp);
    CHECK(std::abs(sol.objective - oracle) <= 1e-7 * (1.0 + std::abs(oracle)));
  }
}

TEST_CASE("random general-form LPs satisfy the optimality system") {
  auto rng = make_rng(5150);
  int optimal_seen = 0;
  for (int trial = 0; trial < 40; ++trial) {
    int d = 2 + int(rng() % 4);
    LinearProgram lp;
    lp.c = random_vector(d, rng);
    int me = int(rng() % 2);
    int mi = 1 + int(rng() % 3);
    lp.A_eq = random_matrix(me, d, rng);
    lp.A_ineq = random_matrix(mi, d, rng);
    Vector x0 = random_vector(d, rng);
    lp.b_eq = me > 0 ? Vector(lp.A_eq * x0) : Vector(0);
    lp.b_ineq = lp.A_ineq * x0 + random_vector(mi, rng, 0.0, 1.0);
    lp.lo = Vector::Constant(d, -3.0);
    lp.hi = Vector::Constant(d, 3.0);  // box keeps everything bounded
    LPSolution sol = lp_solve(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    ++optimal_seen;
    CHECK(lp_kkt_residual(lp, sol) <= 1e-8);
  }
  CHECK(optimal_seen == 40);
}

TEST_CASE("lp_solve is deterministic") {
  auto rng = make_rng(777);
  LinearProgram lp = random_standard_lp(2, 6, rng);
  LPSolution a = lp_solve(lp);
  LPSolution b = lp_solve(lp);
  REQUIRE(a.status == SolveStatus::Optimal);
  CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.basis == b.basis);
  CHECK(a.objective == b.objective);
}

TEST_CASE("QP with equality constraints reproduces the closed form") {
  QuadraticProgram qp;
  qp.H = Matrix::Identity(2, 2);
  qp.q = Vector::Zero(2);
  qp.A_eq = Matrix(1, 2);
  qp.A_eq << 1.0, 1.0;
  qp.b_eq = Vector(1);
  qp.b_eq << 1.0;
  qp.A_ineq = Matrix(0, 2);
  qp.b_ineq = Vector(0);
  QPSolution sol = qp_solve(qp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.x(0) - 0.5) <= 1e-10);
  CHECK(std::abs(sol.x(1) - 0.5) <= 1e-10);
  CHECK(std::abs(sol.y_eq(0) + 0.5) <= 1e-10);  // H x + A'y = 0
  CHECK(qp_kkt_residual(qp, sol) <= 1e-9);
}

TEST_CASE("QP activates the right inequality") {
  // min 1/2 (x1-2)^2 + 1/2 (x2+1)^2, x1 <= 1, x2 <= 5.
  QuadraticProgram qp;
  qp.H = Matrix::Identity(2, 2);
  qp.q = Vector(2);
  qp.q << -2.0, 1.0;
  qp.A_eq = Matrix(0, 2);
  qp.b_eq = Vector(0);
  qp.A_ineq = Matrix(2, 2);
  qp.A_ineq << 1.0, 0.0,
               0.0, 1.0;
  qp.b_ineq = Vector(2);
  qp.b_ineq << 1.0, 5.0;
  QPSolution sol = qp_solve(qp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.x(0) - 1.0) <= 1e-9);
  CHECK(std::abs(sol.x(1) + 1.0) <= 1e-9);
  CHECK(sol.working_set == std::vector<int>{0});
  CHECK(std::abs(sol.z_ineq(0) - 1.0) <= 1e-9);
  CHECK(sol.z_ineq(1) == 0.0);
  CHECK(qp_kkt_residual(qp, sol) <= 1e-9);
}

TEST_CASE("random convex QPs match the subset brute force") {
  auto rng = make_rng(31337);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + int(rng() % 3);
    QuadraticProgram qp;
    Matrix G = random_matrix(n, n, rng);
    qp.H = G * G.transpose() + 0.5 * Matrix::Identity(n, n);
    qp.q = random_vector(n, rng);
    int me = int(rng() % 2);
    if (me >= n) me = n - 1;
    int mi = 1 + int(rng() % 5);
    qp.A_eq = random_matrix(me, n, rng);
    qp.A_ineq = random_matrix(mi, n, rng);
    Vector x0 = random_vector(n, rng);
    qp.b_eq = me > 0 ? Vector(qp.A_eq * x0) : Vector(0);
    qp.b_ineq = qp.A_ineq * x0 + random_vector(mi, rng, 0.1, 1.0);
    QPSolution sol = qp_solve(qp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(qp_kkt_residual(qp, sol) <= 1e-8);
    BruteQPResult oracle = brute_force_qp(qp);
    REQUIRE(oracle.found);
    CHECK(std::abs(sol.objective - oracle.objective) <=
          1e-7 * (1.0 + std::abs(oracle.objective)));
    CHECK((sol.x - oracle.x).lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + oracle.x.norm()));
  }
}

TEST_CASE("QP reports indefiniteness instead of returning a saddle") {
  QuadraticProgram qp;
  qp.H = Matrix(2, 2);
  qp.H << 1.0, 0.0,
          0.0, -1.0;
  qp.q = Vector::Zero(2);
  qp.A_eq = Matrix(0, 2);
  qp.b_eq = Vector(0);
  qp.A_ineq = Matrix(0, 2);
  qp.b_ineq = Vector(0);
  bool threw = false;
  try {
    QPSolution sol = qp_solve(qp);
    // Unbounded is also a legitimate answer for negative curvature.
    CHECK(sol.status == SolveStatus::Unbounded);
  } catch (const RegularityError& e) {
    threw = true;
    CHECK(e.condition == "indefinite-reduced-hessian");
  }
  CHECK(threw);
}

TEST_CASE("QP restricted to a subspace ignores off-subspace indefiniteness") {
  // H is indefinite on R^2 but positive on the line x1 = x2.
  QuadraticProgram qp;
  qp.H = Matrix(2, 2);
  qp.H << 1.0, 0.0,
          0.0, -0.5;
  qp.q = Vector(2);
  qp.q << -1.0, 0.0;
  qp.A_eq = Matrix(1, 2);
  qp.A_eq << 1.0, -1.0;
  qp.b_eq = Vector(1);
  qp.b_eq << 0.0;
  qp.A_ineq = Matrix(0, 2);
  qp.b_ineq = Vector(0);
  QPSolution sol = qp_solve(qp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  // Reduced problem: min 1/2 t^2 (1 - 0.5) - t => t = 2.
  CHECK(std::abs(sol.x(0) - 2.0) <= 1e-8);
  CHECK(std::abs(sol.x(1) - 2.0) <= 1e-8);
}

TEST_CASE("vertex enumeration on a segment") {
  // {z >= 0 : z1 + z2 = 1}.
  Matrix A(1, 2);
  A << 1.0, 1.0;
  Vector b(1);
  b << 1.0;
  PolytopeVertices pv = enumerate_vertices(A, b, {0, 1});
  REQUIRE(pv.vertices.size() == 2);
  std::vector<Vector> vs = pv.vertices;
  std::sort(vs.begin(), vs.end(), [](const Vector& a, const Vector& c) { return a(0) < c(0); });
  CHECK((vs[0] - (Vector(2) << 0.0, 1.0).finished()).norm() <= 1e-12);
  CHECK((vs[1] - (Vector(2) << 1.0, 0.0).finished()).norm() <= 1e-12);
  CHECK(pv.bases_feasible >= 2);
}

TEST_CASE("vertex enumeration on a square via slacks") {
  // 0 <= v <= 1 in 2d: v + s = 1 per coordinate, everything sign constrained.
  Matrix A(2, 4);
  A << 1.0, 0.0, 1.0, 0.0,
       0.0, 1.0, 0.0, 1.0;
  Vector b(2);
  b << 1.0, 1.0;
  PolytopeVertices pv = enumerate_vertices(A, b, {0, 1, 2, 3});
  REQUIRE(pv.vertices.size() == 4);
  // Project onto (v1, v2): all four corners of the unit square.
  std::vector<std::pair<double, double>> corners;
  for (const Vector& v : pv.vertices) corners.emplace_back(v(0), v(1));
  std::sort(corners.begin(), corners.end());
  CHECK(corners[0] == std::pair<double, double>(0.0, 0.0));
  CHECK(corners[1] == std::pair<double, double>(0.0, 1.0));
  CHECK(corners[2] == std::pair<double, double>(1.0, 0.0));
  CHECK(corners[3] == std::pair<double, double>(1.0, 1.0));
}

TEST_CASE("vertex enumeration with free variables") {
  // v1 free, v2 >= 0, v1 + v2 = 1: vertices need v2 basic or zero; the only
  // extreme point is (1, 0) since v1 unconstrained kills the other corner.
  Matrix A(1, 2);
  A << 1.0, 1.0;
  Vector b(1);
  b << 1.0;
  PolytopeVertices pv = enumerate_vertices(A, b, {1});
  REQUIRE(pv.vertices.size() == 1);
  CHECK(std::abs(pv.vertices[0](0) - 1.0) <= 1e-12);
  CHECK(std::abs(pv.vertices[0](1)) <= 1e-12);
}

TEST_CASE("vertex enumeration deduplicates degenerate bases") {
  // Duplicated row: many bases describe the same two points.
  Matrix A(2, 2);
  A << 1.0, 1.0,
       1.0, 1.0;
  Vector b(2);
  b << 1.0, 1.0;
  PolytopeVertices pv = enumerate_vertices(A, b, {0, 1});
  REQUIRE(pv.vertices.size() == 2);
}

TEST_CASE("vertex enumeration on an empty polytope") {
  Matrix A(1, 2);
  A << 1.0, 1.0;
  Vector b(1);
  b << -1.0;
  PolytopeVertices pv = enumerate_vertices(A, b, {0, 1});
  CHECK(pv.vertices.empty());
  CHECK(pv.bases_feasible == 0);
}

TEST_CASE("vertex enumeration refuses oversized problems") {
  Matrix A = Matrix::Ones(1, 21);
  Vector b = Vector::Ones(1);
  std::vector<int> signs(21);
  for (int i = 0; i < 21; ++i) signs[i] = i;
  CHECK_THROWS_AS(enumerate_vertices(A, b, signs), GuardExceededError);
}
