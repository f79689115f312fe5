#include "sensikit/cli.hpp"

#include <chrono>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sensikit/errors.hpp"
#include "sensikit/report.hpp"

namespace sensikit {
namespace {

using nlohmann::json;

void trim(std::string& s) {
  const char* ws = " \t";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
}

// Accepts "p=[0.5, 1]", "[0.5, 1]", "p=0.5" and "0.5"; the name before the
// '=' is cosmetic, components are positional.
Vector parse_vector_arg(std::string s, const std::string& flag) {
  const auto eq = s.find('=');
  if (eq != std::string::npos) s.erase(0, eq + 1);
  trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') {
      throw InputError("unterminated vector in " + flag + ": " + s);
    }
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    trim(tok);
    if (tok.empty()) throw InputError("empty component in " + flag);
    try {
      size_t pos = 0;
      vals.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("could not parse `" + tok + "` as a number in " + flag);
    }
  }
  if (vals.empty()) throw InputError("empty vector in " + flag);
  Vector v(static_cast<int>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v(static_cast<int>(i)) = vals[i];
  return v;
}

Vector resolve_at(const ParametricNLP& nlp, const std::string& at_raw) {
  if (!at_raw.empty()) {
    const Vector p = parse_vector_arg(at_raw, "--at");
    if (p.size() != nlp.num_params()) {
      throw InputError("--at has " + std::to_string(p.size()) +
                       " components, problem has " +
                       std::to_string(nlp.num_params()) + " parameters");
    }
    return p;
  }
  if (nlp.default_p.size() != nlp.num_params()) {
    throw InputError("no parameter point: the file has no `at` line, "
                     "pass --at");
  }
  return nlp.default_p;
}

Vector resolve_direction(const ParametricNLP& nlp, const std::string& raw) {
  if (raw.empty()) {
    throw InputError("a parameter direction is required "
                     "(--direction h=[...])");
  }
  const Vector h = parse_vector_arg(raw, "--direction");
  if (h.size() != nlp.num_params()) {
    throw InputError("--direction has " + std::to_string(h.size()) +
                     " components, problem has " +
                     std::to_string(nlp.num_params()) + " parameters");
  }
  return h;
}

// High-accuracy solve at p. The polish stage needs an invertible pinned
// system; at degenerate points (duplicated active gradients) it cannot
// have one, so fall back to the raw penalty-path endpoint, which still
// meets the optimality tolerance.
OracleSolve resolve_point(const ParametricNLP& nlp, const Vector& p) {
  const Vector x0 = Vector::Zero(nlp.num_vars());
  try {
    return oracle_resolve(nlp, p, x0);
  } catch (const Error&) {
    const Vector x_feas = feasibility_nudge(nlp, x0, p);
    const SumtResult res = sumt_solve(nlp, p, x_feas);
    OracleSolve out;
    out.point = res.point;
    out.active = classify_active(nlp, res.point).active;
    out.polish_iterations = 0;
    return out;
  }
}

json cmd_solve(const ParametricNLP& nlp, const Vector& p) {
  const OracleSolve sol = resolve_point(nlp, p);
  return {{"solution", to_json(sol)},
          {"kkt", to_json(kkt_residual(nlp, sol.point))}};
}

json cmd_analyze(const ParametricNLP& nlp, const Vector& p) {
  const OracleSolve sol = resolve_point(nlp, p);
  return {{"point", to_json(sol.point)},
          {"kkt", to_json(kkt_residual(nlp, sol.point))},
          {"active_set", to_json(classify_active(nlp, sol.point))},
          {"cq", to_json(check_cq(nlp, sol.point))}};
}

json cmd_diff(const ParametricNLP& nlp, const Vector& p, bool degenerate,
              const std::string& dir_raw, const std::string& mu_raw,
              const std::string& r_raw, bool oracle) {
  const OracleSolve sol = resolve_point(nlp, p);
  json body;
  if (degenerate) {
    const Vector h = resolve_direction(nlp, dir_raw);
    body["directional"] = to_json(degenerate_directional(nlp, sol.point, h));
    body["cq"] = to_json(check_cq(nlp, sol.point));
  } else if (!mu_raw.empty()) {
    double mu = 0.0;
    try {
      size_t pos = 0;
      mu = std::stod(mu_raw, &pos);
      if (pos != mu_raw.size()) throw std::invalid_argument(mu_raw);
    } catch (const std::exception&) {
      throw InputError("could not parse --mu value `" + mu_raw + "`");
    }
    if (mu <= 0.0) throw InputError("--mu must be positive");
    std::vector<double> schedule;
    if (!r_raw.empty()) {
      const Vector r = parse_vector_arg(r_raw, "--r-schedule");
      for (int i = 0; i < r.size(); ++i) schedule.push_back(r(i));
    } else {
      for (double r : default_r_schedule()) {
        if (r > mu) schedule.push_back(r);
      }
      schedule.push_back(mu);
    }
    const SumtResult res =
        sumt_solve(nlp, p, feasibility_nudge(nlp, sol.point.x, p), schedule);
    body["sensitivity"] = to_json(barrier_sensitivity(nlp, res.trail.back(), p));
    body["mu"] = mu;
  } else {
    const CQReport cq = check_cq(nlp, sol.point);
    body["sensitivity"] = to_json(fiacco_jacobian(nlp, sol.point, cq));
  }
  if (oracle) body["fd_oracle"] = to_json(fd_jacobian(nlp, p));
  return body;
}

json cmd_directional(const ParametricNLP& nlp, const Vector& p,
                     const std::string& dir_raw, bool oracle) {
  const Vector h = resolve_direction(nlp, dir_raw);
  const OracleSolve sol = resolve_point(nlp, p);
  json body = {{"directional", to_json(directional_qp(nlp, sol.point, h))}};
  if (oracle) body["fd_oracle"] = to_json(fd_directional(nlp, p, h));
  return body;
}

json cmd_value(const ParametricNLP& nlp, const Vector& p,
               const std::string& dir_raw) {
  const OracleSolve sol = resolve_point(nlp, p);
  const CQReport cq = check_cq(nlp, sol.point);
  const SensitivityResult sens = fiacco_jacobian(nlp, sol.point, cq);
  ValueReport vr = value_gradient_hessian(nlp, sol.point, sens);
  json body;
  if (!dir_raw.empty()) {
    const Vector h = resolve_direction(nlp, dir_raw);
    const std::vector<PrimalDualPoint> sols = {sol.point};
    vr.directional.push_back(value_directional(nlp, sols, h));
    vr.dini.push_back(dini_bounds(nlp, sols, h));
  }
  body["value"] = to_json(vr);
  try {
    body["shadow_prices"] = to_json(shadow_prices(nlp, sol.point));
  } catch (const InputError&) {
    // Only defined when every parameter is a constraint right-hand side.
  }
  return body;
}

json cmd_path(const ParametricNLP& nlp, const Vector& p,
              const std::string& dir_raw, int steps) {
  const Vector h = resolve_direction(nlp, dir_raw);
  if (steps < 1) throw InputError("--steps must be at least 1");
  const HomotopySchedule schedule =
      HomotopySchedule::uniform(p, p + h, steps);
  const OracleSolve sol = resolve_point(nlp, p);
  return {{"path", to_json(follow_path(nlp, sol.point, schedule))}};
}

json cmd_conic_diff(const ConicFixture& fx) {
  return {{"cones", to_json(fx.problem.cone)},
          {"conic_sensitivity",
           to_json(conic_sensitivity(fx.problem, fx.solution,
                                     fx.perturbation))}};
}

json cmd_oracle(const ParametricNLP& nlp, const Vector& p,
                const std::string& dir_raw) {
  if (!dir_raw.empty()) {
    const Vector h = resolve_direction(nlp, dir_raw);
    return {{"fd_directional", to_json(fd_directional(nlp, p, h))}};
  }
  return {{"fd_jacobian", to_json(fd_jacobian(nlp, p))}};
}

void emit(std::ostream& out, const json& report, bool as_json) {
  if (as_json) {
    out << report.dump(2) << "\n";
    return;
  }
  for (const auto& [key, value] : report.items()) {
    out << key << ": " << value.dump() << "\n";
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"post-optimal sensitivity analysis for parametric programs"};
  app.require_subcommand(1);

  std::string file, at_raw, dir_raw, mu_raw, r_raw;
  int steps = 10;
  bool degenerate = false;
  bool oracle = false;
  bool as_json = true;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", file, "problem file")->required();
    sub->add_flag("--json,!--no-json", as_json,
                  "emit the report as JSON (default on)");
    return sub;
  };
  const auto add_at = [&](CLI::App* sub) {
    sub->add_option("--at", at_raw,
                    "parameter point, e.g. p=[0.5,1]; defaults to the "
                    "file's `at` line");
    return sub;
  };
  const auto add_dir = [&](CLI::App* sub) {
    sub->add_option("--direction", dir_raw,
                    "parameter direction, e.g. h=[1,0]");
    return sub;
  };

  CLI::App* solve = add_at(add_common(
      app.add_subcommand("solve", "re-solve to high accuracy")));
  CLI::App* analyze = add_at(add_common(app.add_subcommand(
      "analyze", "classify the active set and check regularity")));
  CLI::App* diff = add_dir(add_at(add_common(app.add_subcommand(
      "diff", "parametric derivative of the solution"))));
  diff->add_flag("--degenerate", degenerate,
                 "use the multiplier-vertex directional route");
  diff->add_option("--mu", mu_raw,
                   "differentiate the interior trajectory at this "
                   "penalty value instead of the solution itself");
  diff->add_option("--r-schedule", r_raw,
                   "penalty schedule for --mu, e.g. [1e-1,1e-2]");
  diff->add_flag("--oracle", oracle,
                 "attach a finite-difference cross-check");
  CLI::App* directional = add_dir(add_at(add_common(app.add_subcommand(
      "directional", "one-sided derivative along a direction"))));
  directional->add_flag("--oracle", oracle,
                        "attach a finite-difference cross-check");
  CLI::App* value = add_dir(add_at(add_common(app.add_subcommand(
      "value", "derivatives of the optimal value"))));
  CLI::App* path = add_dir(add_at(add_common(app.add_subcommand(
      "path", "track the solution along a parameter segment"))));
  path->add_option("--steps", steps, "number of uniform breakpoints");
  CLI::App* conic = add_common(app.add_subcommand(
      "conic-diff", "derivative of a conic solution from a JSON fixture"));
  CLI::App* fd = add_dir(add_at(add_common(app.add_subcommand(
      "oracle", "finite-difference reference derivatives"))));

  {
    std::vector<const char*> argv;
    argv.push_back("sensikit");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  std::string command, problem;
  try {
    json body;
    if (conic->parsed()) {
      command = "conic-diff";
      const ConicFixture fx = load_conic_file(file);
      problem = fx.name;
      body = cmd_conic_diff(fx);
    } else {
      const ParametricNLP nlp = parse_problem_file(file);
      problem = nlp.name;
      const Vector p = resolve_at(nlp, at_raw);
      if (solve->parsed()) {
        command = "solve";
        body = cmd_solve(nlp, p);
      } else if (analyze->parsed()) {
        command = "analyze";
        body = cmd_analyze(nlp, p);
      } else if (diff->parsed()) {
        command = "diff";
        body = cmd_diff(nlp, p, degenerate, dir_raw, mu_raw, r_raw, oracle);
      } else if (directional->parsed()) {
        command = "directional";
        body = cmd_directional(nlp, p, dir_raw, oracle);
      } else if (value->parsed()) {
        command = "value";
        body = cmd_value(nlp, p, dir_raw);
      } else if (path->parsed()) {
        command = "path";
        body = cmd_path(nlp, p, dir_raw, steps);
      } else if (fd->parsed()) {
        command = "oracle";
        body = cmd_oracle(nlp, p, dir_raw);
      }
    }
    emit(out, finalize_report(problem, command, body, elapsed()), as_json);
    return 0;
  } catch (const RegularityError& e) {
    const json diag = {{"error",
                        {{"type", "regularity-not-certified"},
                         {"condition", e.condition},
                         {"message", e.what()}}}};
    emit(out, finalize_report(problem, command, diag, elapsed()), as_json);
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sensikit
