#include "sensikit/report.hpp"

namespace sensikit {

using nlohmann::json;

json to_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const PrimalDualPoint& pt) {
  return {{"x", to_json(pt.x)},
          {"y", to_json(pt.y)},
          {"z", to_json(pt.z)},
          {"p", to_json(pt.p)}};
}

json to_json(const KKTResidual& r) {
  return {{"stationarity", r.stationarity},
          {"primal_eq", r.primal_eq},
          {"primal_ineq", r.primal_ineq},
          {"dual_sign", r.dual_sign},
          {"complementarity", r.complementarity},
          {"max", r.max()}};
}

json to_json(const ActiveSetInfo& act) {
  return {{"active", act.active},
          {"inactive", act.inactive},
          {"strongly_active", act.strongly_active},
          {"weakly_active", act.weakly_active},
          {"eps_act", act.eps_act}};
}

json to_json(const CRCQReport& crcq) {
  return {{"constant_rank", crcq.constant_rank},
          {"base_rank", crcq.base_rank},
          {"sampled_ranks", crcq.sampled_ranks},
          {"radius", crcq.radius},
          {"samples", crcq.samples}};
}

json to_json(const CQReport& cq) {
  return {{"licq", cq.licq},
          {"mfcq", cq.mfcq},
          {"smfcq", cq.smfcq},
          {"scs", cq.scs},
          {"sosc_subspace", cq.sosc_subspace},
          {"ssosc_subspace", cq.ssosc_subspace},
          {"gssosc_subspace", cq.gssosc_subspace},
          {"crcq", to_json(cq.crcq)},
          {"active_count", cq.active_count},
          {"licq_rank", cq.licq_rank},
          {"mfcq_t", cq.mfcq_t},
          {"mfcq_direction", to_json(cq.mfcq_direction)},
          {"vertex_count", cq.vertex_count},
          {"scs_per_vertex", cq.scs_per_vertex},
          {"polytope_bounded", cq.polytope_bounded},
          {"eps_act", cq.eps_act}};
}

json to_json(const SensitivityResult& sens) {
  return {{"jac_x", to_json(sens.jac_x)},
          {"jac_y", to_json(sens.jac_y)},
          {"jac_z", to_json(sens.jac_z)},
          {"regime", to_cstring(sens.regime)},
          {"cq", to_json(sens.cq)}};
}

json to_json(const DirectionalDerivative& d) {
  json out = {{"direction", to_json(d.direction)},
              {"dx", to_json(d.dx)},
              {"duals_available", d.duals_available},
              {"active_log", d.active_log}};
  if (d.duals_available) {
    out["dy"] = to_json(d.dy);
    out["dz"] = to_json(d.dz);
  }
  if (d.selected_y.size() > 0 || d.selected_z.size() > 0) {
    out["selected_y"] = to_json(d.selected_y);
    out["selected_z"] = to_json(d.selected_z);
  }
  return out;
}

json to_json(const ValueReport& vr) {
  json out = {{"value", vr.value}, {"regime", to_cstring(vr.regime)}};
  if (vr.gradient.size() > 0) out["gradient"] = to_json(vr.gradient);
  if (vr.hessian.size() > 0) {
    out["hessian"] = to_json(vr.hessian);
    out["hessian_asymmetry"] = vr.hessian_asymmetry;
  }
  if (!vr.directional.empty()) out["directional"] = vr.directional;
  if (!vr.dini.empty()) {
    json dini = json::array();
    for (const auto& [lo, hi] : vr.dini) {
      dini.push_back({{"lower", lo}, {"upper", hi}});
    }
    out["dini"] = std::move(dini);
  }
  return out;
}

json to_json(const PathStep& st) {
  return {{"t", st.t},
          {"point", to_json(st.point)},
          {"regime", to_cstring(st.regime)},
          {"active", st.active},
          {"entered", st.entered},
          {"left", st.left},
          {"corrector_iterations", st.corrector_iterations},
          {"predictor_error", st.predictor_error},
          {"notes", st.notes}};
}

json to_json(const PathTrace& trace) {
  json steps = json::array();
  for (const PathStep& st : trace.steps) steps.push_back(to_json(st));
  json out = {{"completed", trace.completed}, {"steps", std::move(steps)}};
  if (!trace.completed) {
    out["failure_step"] = trace.failure_step;
    out["failure_reason"] = trace.failure_reason;
  }
  return out;
}

namespace {

const char* cone_kind_name(ConeKind kind) {
  switch (kind) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Free: return "free";
    case ConeKind::Nonneg: return "nonneg";
    case ConeKind::Soc: return "soc";
  }
  return "unknown";
}

}  // namespace

json to_json(const ConeSpec& spec) {
  json blocks = json::array();
  for (const ConeBlock& b : spec.blocks) {
    blocks.push_back({{"kind", cone_kind_name(b.kind)}, {"dim", b.dim}});
  }
  return blocks;
}

json to_json(const ConicSensitivity& sens) {
  return {{"dx", to_json(sens.dx)},
          {"dy", to_json(sens.dy)},
          {"ds", to_json(sens.ds)},
          {"least_squares", sens.least_squares}};
}

json to_json(const FDJacobian& fd) {
  return {{"jac_x", to_json(fd.jac_x)},
          {"jac_y", to_json(fd.jac_y)},
          {"jac_z", to_json(fd.jac_z)},
          {"active", fd.active}};
}

json to_json(const FDDirectional& fd) {
  return {{"steps", fd.steps},
          {"quotients_x", [&] {
             json q = json::array();
             for (const Vector& v : fd.quotients) q.push_back(to_json(v));
             return q;
           }()},
          {"estimate", to_json(fd.estimate)},
          {"shrinking", fd.shrinking}};
}

json to_json(const OracleSolve& sol) {
  return {{"point", to_json(sol.point)},
          {"active", sol.active},
          {"polish_iterations", sol.polish_iterations}};
}

json finalize_report(const std::string& problem, const std::string& command,
                     json body, double wall_seconds) {
  json out = {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
              {"problem", problem},
              {"command", command},
              {"wall_time_seconds", wall_seconds}};
  out.update(body);
  return out;
}

}  // namespace sensikit
