#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "sensikit/cli.hpp"

using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
  json report;  // parsed when stdout held a JSON object
};

RunResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = sensikit::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  if (!r.out.empty() && r.out.front() == '{') r.report = json::parse(r.out);
  return r;
}

}  // namespace

TEST_CASE("diff on a regular problem reports the exact jacobian") {
  const RunResult r = run({"diff", fixtures::path("p1.nlp"), "--at", "p=0"});
  REQUIRE(r.code == 0);
  REQUIRE(r.report.contains("sensitivity"));
  const json& sens = r.report["sensitivity"];
  CHECK(sens["regime"] == "fiacco");
  CHECK(sens["jac_x"][0][0].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sens["jac_x"][1][0].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sens["jac_y"][0][0].get<double>() ==
        doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(r.report["problem"] == "p1");
  CHECK(r.report["command"] == "diff");
  CHECK(r.report["tool"]["name"] == "sensikit");
}

TEST_CASE("analyze reports failed certificates without failing the run") {
  const RunResult r = run({"analyze", fixtures::path("p3.nlp"), "--at", "p=2"});
  REQUIRE(r.code == 0);
  const json& cq = r.report["cq"];
  CHECK(cq["licq"] == false);
  CHECK(cq["mfcq"] == true);
  CHECK(cq["vertex_count"] == 2);
  CHECK(r.report["active_set"]["active"].size() == 2);
}

TEST_CASE("diff without a degenerate route exits 2 naming the failed "
          "condition") {
  const RunResult r = run({"diff", fixtures::path("p3.nlp"), "--at", "p=2"});
  CHECK(r.code == 2);
  REQUIRE(r.report.contains("error"));
  CHECK(r.report["error"]["type"] == "regularity-not-certified");
  CHECK(r.report["error"]["condition"] == "licq");
}

TEST_CASE("diff --degenerate computes the vertex-selected direction") {
  const RunResult r = run({"diff", fixtures::path("p3.nlp"), "--at", "p=2",
                           "--degenerate", "--direction", "h=[1]"});
  REQUIRE(r.code == 0);
  REQUIRE(r.report.contains("directional"));
  // x = min(p, 1) clamps at the bound, so the rate along increasing p is 0.
  CHECK(r.report["directional"]["dx"][0].get<double>() ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.report["cq"]["licq"] == false);
}

TEST_CASE("directional reports one-sided rates at a kink") {
  const RunResult plus = run({"directional", fixtures::path("p2.nlp"), "--at",
                              "p=1", "--direction", "h=[1]", "--oracle"});
  REQUIRE(plus.code == 0);
  CHECK(plus.report["directional"]["dx"][0].get<double>() ==
        doctest::Approx(0.0).epsilon(1e-9));
  REQUIRE(plus.report.contains("fd_oracle"));
  CHECK(plus.report["fd_oracle"]["estimate"][0].get<double>() ==
        doctest::Approx(0.0).epsilon(1e-5));

  const RunResult minus = run({"directional", fixtures::path("p2.nlp"), "--at",
                               "p=1", "--direction", "h=[-1]"});
  REQUIRE(minus.code == 0);
  CHECK(minus.report["directional"]["dx"][0].get<double>() ==
        doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("solve polishes to well below the optimality tolerance") {
  const RunResult r = run({"solve", fixtures::path("p4.nlp")});
  REQUIRE(r.code == 0);
  CHECK(r.report["kkt"]["max"].get<double>() <= 1e-8);
  CHECK(r.report["solution"]["point"]["x"].size() == 2);
  CHECK(r.report["solution"]["point"]["x"][0].get<double>() ==
        doctest::Approx(0.9255).epsilon(1e-3));
}

TEST_CASE("value reports the gradient and matching shadow prices") {
  const RunResult r = run({"value", fixtures::path("p1.nlp"), "--at", "p=0"});
  REQUIRE(r.code == 0);
  CHECK(r.report["value"]["value"].get<double>() ==
        doctest::Approx(0.25).epsilon(1e-7));
  CHECK(r.report["value"]["gradient"][0].get<double>() ==
        doctest::Approx(0.5).epsilon(1e-7));
  // The single parameter enters as an equality right-hand side, so the
  // multiplier route applies and must agree.
  REQUIRE(r.report.contains("shadow_prices"));
  CHECK(r.report["shadow_prices"]["gradient"][0].get<double>() ==
        doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("value attaches directional rates and bounds when asked") {
  const RunResult r = run({"value", fixtures::path("p1.nlp"), "--at", "p=0",
                           "--direction", "h=[1]"});
  REQUIRE(r.code == 0);
  CHECK(r.report["value"]["directional"][0].get<double>() ==
        doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.report["value"]["dini"][0]["lower"].get<double>() <=
        r.report["value"]["dini"][0]["upper"].get<double>() + 1e-12);
}

TEST_CASE("path tracks a segment and logs the active-set change") {
  const RunResult r = run({"path", fixtures::path("p2.nlp"), "--at", "p=[0.5]",
                           "--direction", "h=[1]", "--steps", "10"});
  REQUIRE(r.code == 0);
  const json& trace = r.report["path"];
  REQUIRE(trace["completed"] == true);
  const json& steps = trace["steps"];
  REQUIRE(steps.size() == 11);
  CHECK(steps.back()["point"]["x"][0].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-5));
  bool dropped = false;
  for (const json& st : steps) {
    if (!st["left"].empty()) dropped = true;
  }
  CHECK(dropped);
}

TEST_CASE("conic-diff reads a fixture and reports the tangent step") {
  const RunResult r = run({"conic-diff", fixtures::path("c1.json")});
  REQUIRE(r.code == 0);
  const json& sens = r.report["conic_sensitivity"];
  CHECK(sens["dx"][0].get<double>() == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(sens["dx"][1].get<double>() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.report["problem"] == "c1");
  CHECK(r.report.contains("cones"));
}

TEST_CASE("oracle emits finite-difference references") {
  const RunResult jac = run({"oracle", fixtures::path("p1.nlp")});
  REQUIRE(jac.code == 0);
  CHECK(jac.report["fd_jacobian"]["jac_x"][0][0].get<double>() ==
        doctest::Approx(0.5).epsilon(1e-5));

  const RunResult dir = run({"oracle", fixtures::path("p2.nlp"), "--at", "p=1",
                             "--direction", "h=[-1]"});
  REQUIRE(dir.code == 0);
  CHECK(dir.report["fd_directional"]["estimate"][0].get<double>() ==
        doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("barrier route differentiates the interior trajectory") {
  const RunResult r = run({"diff", fixtures::path("p2.nlp"), "--at", "p=[0.5]",
                           "--mu", "1e-5"});
  REQUIRE(r.code == 0);
  CHECK(r.report["sensitivity"]["regime"] == "barrier");
  // Away from the kink the trajectory derivative approaches dx/dp = 1.
  CHECK(r.report["sensitivity"]["jac_x"][0][0].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-2));
  CHECK(r.report["mu"].get<double>() == doctest::Approx(1e-5));
}

TEST_CASE("reports are deterministic and round-trip through the parser") {
  const std::vector<std::string> args = {"diff", fixtures::path("p1.nlp"),
                                         "--at", "p=0"};
  const RunResult a = run(args);
  const RunResult b = run(args);
  REQUIRE(a.code == 0);
  json ja = json::parse(a.out);
  json jb = json::parse(b.out);
  ja.erase("wall_time_seconds");
  jb.erase("wall_time_seconds");
  CHECK(ja.dump(2) == jb.dump(2));

  // Emit, parse, emit reproduces the emitted bytes.
  CHECK(a.out == json::parse(a.out).dump(2) + "\n");
}

TEST_CASE("plain output lists the report fields line by line") {
  const RunResult r = run({"analyze", fixtures::path("p1.nlp"), "--no-json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("problem: \"p1\"") != std::string::npos);
  CHECK(r.out.find("cq: ") != std::string::npos);
}

TEST_CASE("input problems exit 1 with a message on stderr") {
  CHECK(run({"frobnicate", fixtures::path("p1.nlp")}).code == 1);
  CHECK(run({"diff", fixtures::path("p1.nlp"), "--bogus"}).code == 1);
  CHECK(run({"diff", fixtures::path("missing.nlp")}).code == 1);
  CHECK(run({"diff", fixtures::path("c1.json")}).code == 1);
  CHECK(run({"diff", fixtures::path("p1.nlp"), "--at", "p=[oops]"}).code == 1);
  CHECK(run({"diff", fixtures::path("p1.nlp"), "--at", "p=[0,1]"}).code == 1);
  CHECK(run({"path", fixtures::path("p2.nlp"), "--steps", "3"}).code == 1);
  CHECK(run({"diff", fixtures::path("p3.nlp"), "--degenerate"}).code == 1);
  const RunResult r = run({"diff", fixtures::path("missing.nlp")});
  CHECK(!r.err.empty());
  CHECK(r.out.empty());
}

TEST_CASE("help exits 0") {
  const RunResult r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("diff") != std::string::npos);
}
