#include "sensikit/path_following.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <utility>

#include "sensikit/directional.hpp"
#include "sensikit/errors.hpp"
#include "sensikit/linalg.hpp"

namespace sensikit {

namespace {

constexpr double kCorrectorTol = 1e-8;
constexpr int kCorrectorMaxIter = 30;
constexpr int kSlowCorrector = 10;   // adaptive mode halves beyond this
constexpr double kMinSegment = 1e-6;

std::string join(const std::vector<int>& v) {
  std::string s;
  for (int i : v) s += (s.empty() ? "" : ",") + std::to_string(i);
  return s.empty() ? "-" : s;
}

double inf_norm(const Vector& v) {
  return v.size() > 0 ? v.lpNorm<Eigen::Infinity>() : 0.0;
}

double point_distance(const PrimalDualPoint& a, const PrimalDualPoint& b) {
  return std::max({inf_norm(a.x - b.x), inf_norm(a.y - b.y),
                   inf_norm(a.z - b.z)});
}

// Strongest certificate wins: implicit-function step under LICQ with strict
// complementarity, the one-sided QP under LICQ alone, vertex selection
// under MFCQ. No certificate at all is a hard stop.
SensitivityRegime pick_regime(const CQReport& cq) {
  if (cq.licq && cq.scs) return SensitivityRegime::Fiacco;
  if (cq.licq) return SensitivityRegime::Directional;
  if (cq.mfcq) return SensitivityRegime::Degenerate;
  throw RegularityError("constraint-qualification",
                        "neither LICQ nor MFCQ holds at the current path "
                        "point, no directional derivative is certified");
}

PrimalDualPoint predict_with(const ParametricNLP& nlp,
                             const PrimalDualPoint& point, const Vector& h,
                             SensitivityRegime regime, const CQReport& cq,
                             std::vector<std::string>* notes) {
  PrimalDualPoint next = point;
  next.p = point.p + h;
  if (regime == SensitivityRegime::Fiacco) {
    const SensitivityResult sens = fiacco_jacobian(nlp, point, cq);
    next.x += sens.jac_x * h;
    next.y += sens.jac_y * h;
    next.z += sens.jac_z * h;
    return next;
  }
  const DirectionalDerivative d =
      regime == SensitivityRegime::Directional
          ? directional_qp(nlp, point, h)
          : degenerate_directional(nlp, point, h);
  next.x += d.dx;
  // The degenerate selector defines no multiplier rates; duals are held.
  if (d.duals_available) {
    next.y += d.dy;
    next.z += d.dz;
  }
  if (notes) {
    notes->insert(notes->end(), d.active_log.begin(), d.active_log.end());
  }
  return next;
}

// Rows the predicted point claims are binding: multiplier clearly positive
// or constraint value at (or beyond) its boundary.
std::vector<int> predicted_active(const ParametricNLP& nlp,
                                  const PrimalDualPoint& pred) {
  const DerivativeBundle b =
      evaluate_bundle(nlp, pred.x, pred.p, DerivScope::XOnly);
  const double zcut = kEpsActive * (1.0 + inf_norm(pred.z));
  std::vector<int> act;
  for (int i = 0; i < nlp.num_ineq(); ++i) {
    const double hv = b.h[i].value;
    if (pred.z(i) > zcut || hv > -kEpsActive * (1.0 + std::abs(hv))) {
      act.push_back(i);
    }
  }
  return act;
}

struct NewtonOut {
  bool ok = false;
  std::string why;
  Vector x;
  Vector y;
  Vector za;
  int iterations = 0;
};

// Damped Newton on the optimality equations with the given rows pinned.
// Duplicated or parallel active rows make the system singular, which is
// routine at crossings; the minimum-norm step keeps the iteration going as
// long as the equations stay consistent.
NewtonOut newton_correct(const ParametricNLP& nlp, const Vector& x0,
                         const Vector& y0, const Vector& za0,
                         const std::vector<int>& active, const Vector& q) {
  const int n = nlp.num_vars();
  const int me = nlp.num_eq();
  const int na = static_cast<int>(active.size());
  NewtonOut out;
  out.x = x0;
  out.y = y0;
  out.za = za0;
  for (int it = 0; it < kCorrectorMaxIter; ++it) {
    const PinnedSystem sys =
        pinned_kkt_system(nlp, out.x, out.y, out.za, active, q);
    const double rn = sys.residual.lpNorm<Eigen::Infinity>();
    if (rn <= kCorrectorTol) {
      out.ok = true;
      out.iterations = it;
      return out;
    }
    Vector step;
    try {
      step = LUFactors(sys.jacobian).solve(Vector(-sys.residual));
    } catch (const SingularMatrixError&) {
      const LSQRResult ls = lsqr_solve(sys.jacobian, Vector(-sys.residual));
      if (ls.normal_residual > 1e-8 * (1.0 + rn)) {
        out.why = "corrector system is singular and inconsistent (normal "
                  "residual " +
                  std::to_string(ls.normal_residual) + ")";
        return out;
      }
      step = ls.x;
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half < 20; ++half) {
      const Vector xt = out.x + alpha * step.head(n);
      const Vector yt = out.y + alpha * step.segment(n, me);
      const Vector zt = out.za + alpha * step.tail(na);
      if (pinned_kkt_system(nlp, xt, yt, zt, active, q)
              .residual.lpNorm<Eigen::Infinity>() < rn) {
        out.x = xt;
        out.y = yt;
        out.za = zt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      out.why = "corrector stalled at residual " + std::to_string(rn);
      return out;
    }
  }
  out.why = "corrector did not reach tolerance within " +
            std::to_string(kCorrectorMaxIter) + " iterations";
  return out;
}

struct CorrectorRun {
  bool ok = false;
  std::string why;
  PrimalDualPoint point;
  int iterations = 0;
  std::string reclass_note;
};

// Corrects the predicted point on its frozen active set, then validates the
// result: a negative pinned multiplier or a violated unpinned row forces
// one re-classification and a second correction.
CorrectorRun correct_with_revalidation(const ParametricNLP& nlp,
                                       const PrimalDualPoint& pred,
                                       const Vector& q) {
  CorrectorRun run;
  std::vector<int> active = predicted_active(nlp, pred);
  Vector x = pred.x;
  Vector y = pred.y;
  Vector za(static_cast<int>(active.size()));
  for (size_t k = 0; k < active.size(); ++k) za(k) = pred.z(active[k]);

  for (int attempt = 0; attempt < 2; ++attempt) {
    const NewtonOut nw = newton_correct(nlp, x, y, za, active, q);
    run.iterations += nw.iterations;
    if (!nw.ok) {
      run.why = nw.why;
      return run;
    }
    x = nw.x;
    y = nw.y;
    za = nw.za;

    std::vector<int> keep, dropped, added;
    for (size_t k = 0; k < active.size(); ++k) {
      if (nw.za(k) < -1e-8) {
        dropped.push_back(active[k]);
      } else {
        keep.push_back(active[k]);
      }
    }
    const DerivativeBundle b = evaluate_bundle(nlp, x, q, DerivScope::XOnly);
    for (int i = 0; i < nlp.num_ineq(); ++i) {
      if (std::find(keep.begin(), keep.end(), i) == keep.end() &&
          b.h[i].value > 1e-8) {
        added.push_back(i);
      }
    }

    if (dropped.empty() && added.empty()) {
      Vector z_full = Vector::Zero(nlp.num_ineq());
      for (size_t k = 0; k < active.size(); ++k) {
        z_full(active[k]) = std::max(za(k), 0.0);
      }
      run.point.x = x;
      run.point.y = y;
      run.point.z = z_full;
      run.point.p = q;
      const KKTResidual res = kkt_residual(nlp, run.point);
      if (!res.acceptable()) {
        run.why = "post-corrector optimality residual " +
                  std::to_string(res.max()) + " stays above tolerance";
        return run;
      }
      run.ok = true;
      return run;
    }
    if (attempt == 1) {
      run.why = "active set did not settle after one corrector "
                "re-classification (dropped [" +
                join(dropped) + "], violated [" + join(added) + "])";
      return run;
    }
    run.reclass_note = "corrector re-classified the active set: dropped [" +
                       join(dropped) + "] added [" + join(added) + "]";

    std::vector<int> next_active = keep;
    for (int i : added) next_active.push_back(i);
    std::sort(next_active.begin(), next_active.end());
    Vector next_za = Vector::Zero(static_cast<int>(next_active.size()));
    for (size_t k = 0; k < next_active.size(); ++k) {
      const auto it = std::find(active.begin(), active.end(), next_active[k]);
      if (it != active.end()) next_za(k) = za(it - active.begin());
    }
    active = std::move(next_active);
    za = std::move(next_za);
  }
  return run;  // unreachable, both attempts return above
}

void diff_active(const std::vector<int>& prev, const std::vector<int>& cur,
                 std::vector<int>* entered, std::vector<int>* left) {
  std::set_difference(cur.begin(), cur.end(), prev.begin(), prev.end(),
                      std::back_inserter(*entered));
  std::set_difference(prev.begin(), prev.end(), cur.begin(), cur.end(),
                      std::back_inserter(*left));
}

}  // namespace

HomotopySchedule HomotopySchedule::uniform(const Vector& p_start,
                                           const Vector& p_end, int steps) {
  if (steps < 1) {
    throw InputError("a schedule needs at least one segment, got " +
                     std::to_string(steps));
  }
  HomotopySchedule s;
  s.p_start = p_start;
  s.p_end = p_end;
  s.breakpoints.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    s.breakpoints[i] = static_cast<double>(i) / steps;
  }
  s.validate();
  return s;
}

void HomotopySchedule::validate() const {
  if (p_start.size() != p_end.size()) {
    throw DimensionError("schedule endpoints have " +
                         std::to_string(p_start.size()) + " and " +
                         std::to_string(p_end.size()) + " entries");
  }
  if (breakpoints.size() < 2) {
    throw InputError("a schedule needs at least two breakpoints");
  }
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw InputError("breakpoints must start at 0 and end at 1");
  }
  for (size_t i = 1; i < breakpoints.size(); ++i) {
    if (breakpoints[i] <= breakpoints[i - 1]) {
      throw InputError("breakpoints must increase strictly");
    }
  }
}

Vector HomotopySchedule::parameter_at(double t) const {
  return p_start + t * (p_end - p_start);
}

Vector HomotopySchedule::step_direction(int m) const {
  if (m < 0 || m + 1 >= static_cast<int>(breakpoints.size())) {
    throw InputError("segment index " + std::to_string(m) +
                     " outside the schedule");
  }
  return (breakpoints[m + 1] - breakpoints[m]) * (p_end - p_start);
}

PrimalDualPoint taylor_update(const ParametricNLP& nlp,
                              const PrimalDualPoint& point, const Vector& h) {
  if (h.size() != nlp.num_params()) {
    throw DimensionError("direction has " + std::to_string(h.size()) +
                         " entries, problem has " +
                         std::to_string(nlp.num_params()) + " parameters");
  }
  if (h.size() == 0 || h.lpNorm<Eigen::Infinity>() == 0.0) return point;
  const CQReport cq = check_cq(nlp, point);
  return predict_with(nlp, point, h, pick_regime(cq), cq, nullptr);
}

PathTrace follow_path(const ParametricNLP& nlp, const PrimalDualPoint& start,
                      const HomotopySchedule& schedule, bool adaptive) {
  schedule.validate();
  if (schedule.p_start.size() != nlp.num_params()) {
    throw DimensionError("schedule has " +
                         std::to_string(schedule.p_start.size()) +
                         " parameters, problem has " +
                         std::to_string(nlp.num_params()));
  }
  if (start.x.size() != nlp.num_vars() ||
      start.p.size() != nlp.num_params()) {
    throw DimensionError("start point does not match the problem shape");
  }
  if (inf_norm(start.p - schedule.p_start) >
      1e-9 * (1.0 + inf_norm(schedule.p_start))) {
    throw InputError("start point parameter does not match the schedule "
                     "start");
  }
  const KKTResidual r0 = kkt_residual(nlp, start);
  if (!r0.acceptable()) {
    throw InputError("start point fails the optimality test at the schedule "
                     "start (residual " +
                     std::to_string(r0.max()) + ")");
  }

  PathTrace trace;
  PrimalDualPoint cur = start;
  cur.p = schedule.p_start;

  {
    PathStep s0;
    s0.t = 0.0;
    s0.point = cur;
    // The regime the tracker would leave with; a start without any
    // certificate fails here rather than one segment later.
    s0.regime = pick_regime(check_cq(nlp, cur));
    s0.active = classify_active(nlp, cur).active;
    trace.steps.push_back(std::move(s0));
  }

  struct Target {
    double t;
    int index;  // breakpoint index this target works toward
  };
  std::deque<Target> targets;
  for (size_t i = 1; i < schedule.breakpoints.size(); ++i) {
    targets.push_back({schedule.breakpoints[i], static_cast<int>(i)});
  }

  double t_cur = 0.0;
  while (!targets.empty()) {
    const Target tg = targets.front();
    const double dt = tg.t - t_cur;
    const Vector q = schedule.parameter_at(tg.t);
    const Vector h = q - cur.p;

    std::vector<std::string> notes;
    const CQReport cq = check_cq(nlp, cur);
    const SensitivityRegime regime = pick_regime(cq);
    PrimalDualPoint pred;
    try {
      pred = predict_with(nlp, cur, h, regime, cq, &notes);
    } catch (const Error& e) {
      // A predictor breakdown is a property of the current point, so a
      // shorter segment cannot repair it; report what was tracked so far.
      trace.failure_step = tg.index;
      trace.failure_reason = std::string("predictor failed: ") + e.what();
      return trace;
    }
    CorrectorRun run = correct_with_revalidation(nlp, pred, q);

    if (!run.ok || run.iterations > kSlowCorrector) {
      if (adaptive && dt > kMinSegment) {
        targets.push_front({t_cur + 0.5 * dt, tg.index});
        continue;
      }
      if (!run.ok) {
        trace.failure_step = tg.index;
        trace.failure_reason = run.why;
        return trace;
      }
      // Converged slowly with no room left to split: accept as is.
    }

    PathStep st;
    st.t = tg.t;
    st.point = run.point;
    st.regime = regime;
    st.corrector_iterations = run.iterations;
    st.predictor_error = point_distance(run.point, pred);
    st.notes = std::move(notes);
    if (!run.reclass_note.empty()) st.notes.push_back(run.reclass_note);
    st.active = classify_active(nlp, run.point).active;
    diff_active(trace.steps.back().active, st.active, &st.entered, &st.left);
    trace.steps.push_back(std::move(st));

    cur = run.point;
    t_cur = tg.t;
    targets.pop_front();
  }

  trace.completed = true;
  return trace;
}

}  // namespace sensikit
