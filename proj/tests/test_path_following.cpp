#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "fixtures.hpp"
#include "sensikit/barrier.hpp"
#include "sensikit/errors.hpp"
#include "sensikit/fd_oracle.hpp"
#include "sensikit/path_following.hpp"

using namespace sensikit;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

// Solution feasible only for p >= 1: x = -sqrt(p - 1) with the single
// inequality x^2 + 1 - p <= 0 active. Driving p below 1 empties the
// feasible set, so any corrector aimed there has to give up.
const char* kVanishText =
    "problem vanish\n"
    "vars x1\n"
    "params p1\n"
    "minimize x1\n"
    "subject_to\n"
    "ineq: x1^2 + 1 - p1\n"
    "at p = [2]\n";

PrimalDualPoint vanish_start() {
  PrimalDualPoint pt;
  pt.x = scalar(-1.0);
  pt.y = Vector(0);
  pt.z = scalar(0.5);
  pt.p = scalar(2.0);
  return pt;
}

// Feasible region |x| <= p collapses to a point as p -> 0; at p = 0 the two
// gradients are opposite, so no constraint qualification survives.
const char* kPinchText =
    "problem pinch\n"
    "vars x1\n"
    "params p1\n"
    "minimize x1\n"
    "subject_to\n"
    "ineq: x1 - p1\n"
    "ineq: -x1 - p1\n"
    "at p = [1]\n";

PrimalDualPoint pinch_start() {
  PrimalDualPoint pt;
  pt.x = scalar(-1.0);
  pt.y = Vector(0);
  pt.z = Vector(2);
  pt.z << 0.0, 1.0;
  pt.p = scalar(1.0);
  return pt;
}

double endpoint_error(const ParametricNLP& nlp, const PathTrace& trace,
                      const Vector& p_end, const Vector& x_cold) {
  REQUIRE(trace.completed);
  const SumtResult oracle = sumt_solve(nlp, p_end, x_cold);
  return (trace.steps.back().point.x - oracle.point.x)
      .lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("schedule construction and validation") {
  const Vector a = scalar(0.0);
  const Vector b = scalar(1.0);

  SUBCASE("uniform breakpoints") {
    const auto s = HomotopySchedule::uniform(a, b, 4);
    REQUIRE(s.breakpoints.size() == 5);
    CHECK(s.breakpoints.front() == 0.0);
    CHECK(s.breakpoints.back() == 1.0);
    CHECK(s.breakpoints[2] == 0.5);
    CHECK(s.parameter_at(0.0)(0) == 0.0);
    CHECK(s.parameter_at(1.0)(0) == 1.0);
    CHECK(s.parameter_at(0.25)(0) == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("segment steps telescope to the full move") {
    HomotopySchedule s;
    s.p_start = scalar(-0.5);
    s.p_end = scalar(2.0);
    s.breakpoints = {0.0, 0.1, 0.35, 0.8, 1.0};
    s.validate();
    Vector sum = Vector::Zero(1);
    for (int m = 0; m + 1 < static_cast<int>(s.breakpoints.size()); ++m) {
      sum += s.step_direction(m);
    }
    CHECK(std::abs(sum(0) - 2.5) <= 1e-12);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(HomotopySchedule::uniform(a, b, 0), InputError);
    HomotopySchedule s;
    s.p_start = a;
    s.p_end = Vector::Zero(2);
    s.breakpoints = {0.0, 1.0};
    CHECK_THROWS_AS(s.validate(), DimensionError);
    s.p_end = b;
    s.breakpoints = {0.0};
    CHECK_THROWS_AS(s.validate(), InputError);
    s.breakpoints = {0.1, 1.0};
    CHECK_THROWS_WITH_AS(s.validate(),
                         doctest::Contains("start at 0"), InputError);
    s.breakpoints = {0.0, 0.9};
    CHECK_THROWS_AS(s.validate(), InputError);
    s.breakpoints = {0.0, 0.5, 0.5, 1.0};
    CHECK_THROWS_WITH_AS(s.validate(),
                         doctest::Contains("increase strictly"), InputError);
    s.breakpoints = {0.0, 1.0};
    CHECK_THROWS_AS(s.step_direction(-1), InputError);
    CHECK_THROWS_AS(s.step_direction(1), InputError);
  }
}

TEST_CASE("taylor predictions") {
  SUBCASE("zero direction changes nothing") {
    const auto nlp = fixtures::load("p2.nlp");
    const auto pt = fixtures::p2_solution(0.5);
    const PrimalDualPoint out = taylor_update(nlp, pt, Vector::Zero(1));
    CHECK((out.x - pt.x).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((out.z - pt.z).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((out.p - pt.p).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("affine problem predicts exactly") {
    const auto nlp = fixtures::load("p1.nlp");
    const PrimalDualPoint out =
        taylor_update(nlp, fixtures::p1_solution(0.0), scalar(0.2));
    CHECK(std::abs(out.x(0) - 0.6) <= 1e-12);
    CHECK(std::abs(out.x(1) - 0.6) <= 1e-12);
    CHECK(std::abs(out.y(0) + 0.6) <= 1e-12);
    CHECK(out.p(0) == doctest::Approx(0.2).epsilon(1e-14));
  }
  SUBCASE("weakly active bound picks the one-sided rates") {
    const auto nlp = fixtures::load("p2.nlp");
    const auto pt = fixtures::p2_solution(1.0);  // x = 1, z = 0
    const PrimalDualPoint up = taylor_update(nlp, pt, scalar(0.1));
    CHECK(std::abs(up.x(0) - 1.0) <= 1e-9);
    CHECK(std::abs(up.z(0)) <= 1e-9);
    const PrimalDualPoint down = taylor_update(nlp, pt, scalar(-0.1));
    CHECK(std::abs(down.x(0) - 0.9) <= 1e-9);
    CHECK(std::abs(down.z(0) - 0.1) <= 1e-9);
  }
  SUBCASE("stepping across the kink overshoots linearly") {
    const auto nlp = fixtures::load("p2.nlp");
    const PrimalDualPoint out =
        taylor_update(nlp, fixtures::p2_solution(0.9), scalar(0.2));
    // The tangent from p = 0.9 knows nothing about the bend at p = 1; the
    // corrector downstream is what repairs the 0.1 overshoot.
    CHECK(std::abs(out.x(0) - 1.1) <= 1e-9);
    CHECK(std::abs(out.z(0) + 0.1) <= 1e-9);
    CHECK(std::abs(out.x(0) - 1.0) == doctest::Approx(0.1).epsilon(1e-6));
  }
  SUBCASE("direction must match the parameter count") {
    const auto nlp = fixtures::load("p2.nlp");
    CHECK_THROWS_AS(
        taylor_update(nlp, fixtures::p2_solution(0.5), Vector::Zero(2)),
        DimensionError);
  }
}

TEST_CASE("affine path needs no correction") {
  const auto nlp = fixtures::load("p1.nlp");
  const auto schedule =
      HomotopySchedule::uniform(scalar(0.0), scalar(1.0), 4);
  const PathTrace trace =
      follow_path(nlp, fixtures::p1_solution(0.0), schedule);

  REQUIRE(trace.completed);
  REQUIRE(trace.steps.size() == 5);
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    const PathStep& st = trace.steps[i];
    CHECK(st.t == schedule.breakpoints[i]);
    CHECK(st.regime == SensitivityRegime::Fiacco);
    CHECK(st.corrector_iterations <= 1);
    CHECK(st.entered.empty());
    CHECK(st.left.empty());
    const auto ref = fixtures::p1_solution(st.point.p(0));
    CHECK((st.point.x - ref.x).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(kkt_residual(nlp, st.point).max() <= 1e-6);
  }
  CHECK(endpoint_error(nlp, trace, scalar(1.0), Vector::Zero(2)) <= 1e-6);
}

TEST_CASE("bound drop on the moving-bound path") {
  const auto nlp = fixtures::load("p2.nlp");
  const auto schedule =
      HomotopySchedule::uniform(scalar(0.5), scalar(1.5), 10);
  const PathTrace trace =
      follow_path(nlp, fixtures::p2_solution(0.5), schedule);

  REQUIRE(trace.completed);
  REQUIRE(trace.steps.size() == 11);
  for (const PathStep& st : trace.steps) {
    CHECK(kkt_residual(nlp, st.point).max() <= 1e-6);
  }

  // Breakpoint 5 sits at p = 1.0, the last moment the bound binds;
  // breakpoint 6 at p = 1.1 is the first with the bound released.
  const PathStep& at_kink = trace.steps[5];
  CHECK(at_kink.point.p(0) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(at_kink.active.size() == 1);
  CHECK(at_kink.active[0] == 0);

  const PathStep& past_kink = trace.steps[6];
  CHECK(past_kink.active.empty());
  REQUIRE(past_kink.left.size() == 1);
  CHECK(past_kink.left[0] == 0);
  // Leaving the weakly active point runs the one-sided rate selector.
  CHECK(past_kink.regime == SensitivityRegime::Directional);

  CHECK(std::abs(trace.steps.back().point.x(0) - 1.0) <= 1e-9);
  CHECK(endpoint_error(nlp, trace, scalar(1.5), scalar(0.5)) <= 1e-6);
}

TEST_CASE("kink inside a segment is caught by the corrector") {
  const auto nlp = fixtures::load("p2.nlp");
  // N = 5 puts breakpoints at p = 0.9 and 1.1, so one segment straddles
  // the bend at p = 1 and the tangent prediction overshoots by 0.1.
  const auto schedule =
      HomotopySchedule::uniform(scalar(0.5), scalar(1.5), 5);
  const PathTrace trace =
      follow_path(nlp, fixtures::p2_solution(0.5), schedule);

  REQUIRE(trace.completed);
  REQUIRE(trace.steps.size() == 6);
  const PathStep& crossed = trace.steps[3];
  CHECK(crossed.point.p(0) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(crossed.predictor_error == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(std::abs(crossed.point.x(0) - 1.0) <= 1e-8);
  CHECK(std::abs(crossed.point.z(0)) <= 1e-8);
  bool reclassified = false;
  for (const std::string& note : crossed.notes) {
    if (note.find("re-classified") != std::string::npos) reclassified = true;
  }
  CHECK(reclassified);
  CHECK(std::abs(trace.steps.back().point.x(0) - 1.0) <= 1e-8);
}

TEST_CASE("crossing bounds engage the degenerate selector") {
  const auto nlp = fixtures::load("p3w.nlp");
  // N = 6 lands a breakpoint exactly on the crossing at p = 1, where both
  // bounds hold weakly and only MFCQ survives.
  const auto schedule =
      HomotopySchedule::uniform(scalar(0.5), scalar(2.0), 6);
  const PathTrace trace =
      follow_path(nlp, fixtures::p3w_solution(0.5), schedule);

  REQUIRE(trace.completed);
  REQUIRE(trace.steps.size() == 7);
  for (const PathStep& st : trace.steps) {
    CHECK(kkt_residual(nlp, st.point).max() <= 1e-6);
  }

  const PathStep& crossing = trace.steps[2];
  CHECK(crossing.point.p(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(crossing.active == std::vector<int>{0, 1});
  CHECK(std::abs(crossing.point.x(0) - 2.0) <= 1e-8);

  const PathStep& after = trace.steps[3];
  CHECK(after.regime == SensitivityRegime::Degenerate);
  bool vertex_logged = false;
  for (const std::string& note : after.notes) {
    if (note.find("vertex") != std::string::npos) vertex_logged = true;
  }
  CHECK(vertex_logged);
  REQUIRE(after.left.size() == 1);
  CHECK(after.left[0] == 0);
  CHECK(after.active == std::vector<int>{1});

  const PathStep& last = trace.steps.back();
  CHECK(std::abs(last.point.x(0) - 1.0) <= 1e-8);
  CHECK(std::abs(last.point.z(1) - 1.0) <= 1e-8);
  CHECK(endpoint_error(nlp, trace, scalar(2.0), scalar(0.0)) <= 1e-6);
}

TEST_CASE("nonlinear path corrects onto the solution") {
  const auto nlp = fixtures::load("p4.nlp");
  Vector p0(2), p1(2);
  p0 << 0.0, 1.0;
  p1 << 0.5, 1.5;
  const auto schedule = HomotopySchedule::uniform(p0, p1, 4);
  const PathTrace trace =
      follow_path(nlp, fixtures::p4_solution(0.0, 1.0), schedule);

  REQUIRE(trace.completed);
  REQUIRE(trace.steps.size() == 5);
  for (const PathStep& st : trace.steps) {
    CHECK(st.regime == SensitivityRegime::Fiacco);
    CHECK(st.active.empty());
    CHECK(kkt_residual(nlp, st.point).max() <= 1e-6);
  }
  // Curved solution manifold: the predictor is inexact and the corrector
  // has to do real work, but never more than a few Newton steps.
  bool corrected_somewhere = false;
  for (const PathStep& st : trace.steps) {
    if (st.corrector_iterations > 0) corrected_somewhere = true;
  }
  CHECK(corrected_somewhere);
  CHECK(endpoint_error(nlp, trace, p1, Vector::Constant(2, 1.0)) <= 1e-6);
}

TEST_CASE("refinement never hurts") {
  SUBCASE("moving bound") {
    const auto nlp = fixtures::load("p2.nlp");
    const auto start = fixtures::p2_solution(0.5);
    double prev = -1.0;
    for (int n : {5, 10, 20}) {
      const auto schedule =
          HomotopySchedule::uniform(scalar(0.5), scalar(1.5), n);
      const PathTrace trace = follow_path(nlp, start, schedule);
      const double err =
          endpoint_error(nlp, trace, scalar(1.5), scalar(0.5));
      if (prev >= 0.0) CHECK(err <= prev + 1e-9);
      prev = err;
    }
  }
  SUBCASE("crossing bounds") {
    const auto nlp = fixtures::load("p3w.nlp");
    const auto start = fixtures::p3w_solution(0.5);
    double prev = -1.0;
    for (int n : {5, 10, 20}) {
      const auto schedule =
          HomotopySchedule::uniform(scalar(0.5), scalar(2.0), n);
      const PathTrace trace = follow_path(nlp, start, schedule);
      const double err =
          endpoint_error(nlp, trace, scalar(2.0), scalar(0.0));
      if (prev >= 0.0) CHECK(err <= prev + 1e-9);
      prev = err;
    }
  }
  SUBCASE("affine equality") {
    const auto nlp = fixtures::load("p1.nlp");
    const auto start = fixtures::p1_solution(0.0);
    double prev = -1.0;
    for (int n : {4, 8, 16}) {
      const auto schedule =
          HomotopySchedule::uniform(scalar(0.0), scalar(1.0), n);
      const PathTrace trace = follow_path(nlp, start, schedule);
      const double err =
          endpoint_error(nlp, trace, scalar(1.0), Vector::Zero(2));
      if (prev >= 0.0) CHECK(err <= prev + 1e-9);
      prev = err;
    }
  }
}

TEST_CASE("smooth remainder shrinks linearly") {
  const auto nlp = fixtures::load("p4.nlp");
  const auto pt = fixtures::p4_solution(0.0, 1.0);
  Vector h0(2);
  h0 << 0.4, -0.3;

  double prev_ratio = -1.0;
  for (int k = 0; k < 4; ++k) {
    const Vector h = h0 / std::pow(2.0, k);
    const PrimalDualPoint pred = taylor_update(nlp, pt, h);
    const OracleSolve truth = oracle_resolve(nlp, pt.p + h, pt.x);
    const double ratio = (truth.point.x - pred.x).lpNorm<Eigen::Infinity>() /
                         h.lpNorm<Eigen::Infinity>();
    if (prev_ratio >= 0.0) CHECK(ratio <= 0.6 * prev_ratio + 1e-9);
    prev_ratio = ratio;
  }
}

TEST_CASE("start validation") {
  const auto nlp = fixtures::load("p2.nlp");
  const auto schedule =
      HomotopySchedule::uniform(scalar(0.5), scalar(1.5), 4);

  SUBCASE("parameter mismatch") {
    CHECK_THROWS_WITH_AS(
        follow_path(nlp, fixtures::p2_solution(0.7), schedule),
        doctest::Contains("does not match the schedule"), InputError);
  }
  SUBCASE("non-stationary start") {
    PrimalDualPoint bad = fixtures::p2_solution(0.5);
    bad.x(0) = 0.2;
    CHECK_THROWS_WITH_AS(follow_path(nlp, bad, schedule),
                         doctest::Contains("optimality"), InputError);
  }
  SUBCASE("parameter count mismatch") {
    const auto wide = HomotopySchedule::uniform(Vector::Zero(2),
                                                Vector::Constant(2, 1.0), 2);
    CHECK_THROWS_AS(follow_path(nlp, fixtures::p2_solution(0.5), wide),
                    DimensionError);
  }
}

TEST_CASE("corrector failure returns the partial trace") {
  const auto nlp = parse_problem(kVanishText);
  const auto schedule =
      HomotopySchedule::uniform(scalar(2.0), scalar(0.9), 4);

  SUBCASE("fixed breakpoints stop at the last solvable one") {
    const PathTrace trace =
        follow_path(nlp, vanish_start(), schedule, false);
    CHECK_FALSE(trace.completed);
    CHECK(trace.failure_step == 4);
    CHECK_FALSE(trace.failure_reason.empty());
    REQUIRE(trace.steps.size() == 4);  // t = 0, 0.25, 0.5, 0.75
    for (const PathStep& st : trace.steps) {
      CHECK(kkt_residual(nlp, st.point).max() <= 1e-6);
    }
    // p = 1.175 is the last breakpoint with a solution (needs p >= 1).
    CHECK(trace.steps.back().point.p(0) ==
          doctest::Approx(1.175).epsilon(1e-12));
  }
  SUBCASE("adaptive splitting creeps up on the boundary, then gives up") {
    const PathTrace trace = follow_path(nlp, vanish_start(), schedule, true);
    CHECK_FALSE(trace.completed);
    CHECK(trace.failure_step == 4);
    CHECK(trace.steps.size() > 4);
    bool inserted = false;
    for (const PathStep& st : trace.steps) {
      double nearest = 1.0;
      for (double bp : schedule.breakpoints) {
        nearest = std::min(nearest, std::abs(st.t - bp));
      }
      if (nearest > 1e-3) inserted = true;
      CHECK(kkt_residual(nlp, st.point).max() <= 1e-6);
      CHECK(st.point.p(0) >= 1.0);
    }
    CHECK(inserted);
  }
}

TEST_CASE("uncertified crossing throws") {
  const auto nlp = parse_problem(kPinchText);
  // Breakpoints at p = 1, 0, -1: the tracker reaches the pinch point at
  // p = 0, where the constraint gradients are opposite and neither LICQ
  // nor MFCQ can be certified for the next segment.
  const auto schedule =
      HomotopySchedule::uniform(scalar(1.0), scalar(-1.0), 2);
  CHECK_THROWS_WITH_AS(follow_path(nlp, pinch_start(), schedule),
                       doctest::Contains("constraint-qualification"),
                       RegularityError);
}
