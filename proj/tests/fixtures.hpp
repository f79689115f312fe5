#pragma once

#include <cmath>
#include <string>

#include "sensikit/expr.hpp"
#include "sensikit/kkt.hpp"

namespace fixtures {

inline std::string path(const std::string& name) {
  return std::string(SENSIKIT_FIXTURE_DIR) + "/" + name;
}

inline sensikit::ParametricNLP load(const std::string& name) {
  return sensikit::parse_problem_file(path(name));
}

// Closed-form primal-dual solutions for the bundled problems.

inline sensikit::PrimalDualPoint p1_solution(double p) {
  sensikit::PrimalDualPoint pt;
  pt.x = sensikit::Vector::Constant(2, 0.5 * (1.0 + p));
  pt.y = sensikit::Vector::Constant(1, -0.5 * (1.0 + p));
  pt.z = sensikit::Vector(0);
  pt.p = sensikit::Vector::Constant(1, p);
  return pt;
}

// Valid for p <= 1 (bound active). z = 1 - p.
inline sensikit::PrimalDualPoint p2_solution(double p) {
  sensikit::PrimalDualPoint pt;
  pt.x = sensikit::Vector::Constant(1, p);
  pt.y = sensikit::Vector(0);
  pt.z = sensikit::Vector::Constant(1, 1.0 - p);
  pt.p = sensikit::Vector::Constant(1, p);
  return pt;
}

// Valid for p >= 1 (bound active); the multiplier split over the two
// identical rows is free, z1 + z2 = p - 1.
inline sensikit::PrimalDualPoint p3_solution(double p, double z1) {
  sensikit::PrimalDualPoint pt;
  pt.x = sensikit::Vector::Constant(1, 1.0);
  pt.y = sensikit::Vector(0);
  pt.z = sensikit::Vector(2);
  pt.z << z1, (p - 1.0) - z1;
  pt.p = sensikit::Vector::Constant(1, p);
  return pt;
}

// p3v at p = 0: x = 1, z1 + z2 = 1.
inline sensikit::PrimalDualPoint p3v_solution(double z1) {
  sensikit::PrimalDualPoint pt;
  pt.x = sensikit::Vector::Constant(1, 1.0);
  pt.y = sensikit::Vector(0);
  pt.z = sensikit::Vector(2);
  pt.z << z1, 1.0 - z1;
  pt.p = sensikit::Vector::Zero(1);
  return pt;
}

// p3w away from the crossing: for p < 1 row 0 binds (x = 1 + p),
// for p > 1 row 1 binds (x = 3 - p); multiplier is 2 - x on the
// binding row. At p = 1 both bind weakly with z1 = z2 = 0.
inline sensikit::PrimalDualPoint p3w_solution(double p) {
  sensikit::PrimalDualPoint pt;
  double x = p < 1.0 ? 1.0 + p : 3.0 - p;
  pt.x = sensikit::Vector::Constant(1, x);
  pt.y = sensikit::Vector(0);
  pt.z = sensikit::Vector::Zero(2);
  if (p < 1.0)
    pt.z(0) = 2.0 - x;
  else
    pt.z(1) = 2.0 - x;
  pt.p = sensikit::Vector::Constant(1, p);
  return pt;
}

// p4 near p = (0, 1): the bound is inactive, so the solution solves the
// three smooth stationarity equations. Newton iteration with hand-coded
// residual and Jacobian, independent of the library's differentiation.
inline sensikit::PrimalDualPoint p4_solution(double p1, double p2) {
  double x1 = 0.9255, x2 = 1.0 / 0.9255, y = -2.0 * x2 / (x1 * x1);
  for (int it = 0; it < 60; ++it) {
    sensikit::Vector F(3);
    F << std::exp(x1) + p1 + y * x2, 2.0 * x2 + y * x1, x1 * x2 - p2;
    if (F.lpNorm<Eigen::Infinity>() < 1e-13) break;
    sensikit::Matrix J(3, 3);
    J << std::exp(x1), y, x2,
         y, 2.0, x1,
         x2, x1, 0.0;
    sensikit::Vector step = J.fullPivLu().solve(F);
    x1 -= step(0);
    x2 -= step(1);
    y -= step(2);
  }
  sensikit::PrimalDualPoint pt;
  pt.x = sensikit::Vector(2);
  pt.x << x1, x2;
  pt.y = sensikit::Vector::Constant(1, y);
  pt.z = sensikit::Vector::Zero(1);
  pt.p = sensikit::Vector(2);
  pt.p << p1, p2;
  return pt;
}

}  // namespace fixtures
