#pragma once

#include <string>
#include <vector>

#include "sensikit/expr.hpp"
#include "sensikit/kkt.hpp"
#include "sensikit/sensitivity.hpp"

namespace sensikit {

// Linear parameter homotopy p(t) = p_start + t * (p_end - p_start), sampled
// at breakpoints t_0 = 0 < t_1 < ... < t_N = 1. The per-segment parameter
// steps telescope, so they always sum to p_end - p_start.
struct HomotopySchedule {
  Vector p_start;
  Vector p_end;
  std::vector<double> breakpoints;

  // Equally spaced breakpoints, `steps` segments, steps + 1 entries.
  static HomotopySchedule uniform(const Vector& p_start, const Vector& p_end,
                                  int steps);

  void validate() const;
  Vector parameter_at(double t) const;
  // (t_{m+1} - t_m) * (p_end - p_start) for segment m.
  Vector step_direction(int m) const;
};

// One accepted point of a tracked path. `regime` names the predictor used
// on the segment that arrived here; the entry at t = 0 carries the regime
// the tracker selects to leave the start.
struct PathStep {
  double t = 0.0;
  PrimalDualPoint point;
  SensitivityRegime regime = SensitivityRegime::Fiacco;
  std::vector<int> active;
  std::vector<int> entered;  // active rows gained since the previous step
  std::vector<int> left;     // active rows lost since the previous step
  int corrector_iterations = 0;
  double predictor_error = 0.0;  // |corrected - predicted| over x, y, z
  std::vector<std::string> notes;
};

struct PathTrace {
  std::vector<PathStep> steps;
  bool completed = false;
  int failure_step = -1;  // breakpoint index the tracker was heading for
  std::string failure_reason;
};

// First-order prediction of the solution at p + h: the strongest regime the
// point's certificates allow (implicit-function jacobian under LICQ and
// strict complementarity, active-set QP under LICQ alone, multiplier-vertex
// selection under MFCQ). Dual estimates move only when the regime supplies
// rates for them; otherwise they are carried unchanged.
PrimalDualPoint taylor_update(const ParametricNLP& nlp,
                              const PrimalDualPoint& point, const Vector& h);

// Predictor-corrector tracking across the whole schedule. Each segment
// predicts with taylor_update, freezes the active set suggested by the
// predicted point, and runs a Newton corrector on the pinned optimality
// equations to 1e-8; multiplier sign violations or newly violated rows
// trigger one re-classification. With `adaptive` set, a segment whose
// corrector fails or needs more than 10 iterations is halved and retried.
// Corrector failure ends tracking and returns the partial trace; a point
// certifying neither LICQ nor MFCQ throws RegularityError.
PathTrace follow_path(const ParametricNLP& nlp, const PrimalDualPoint& start,
                      const HomotopySchedule& schedule, bool adaptive = true);

}  // namespace sensikit
