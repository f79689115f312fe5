#include "sensikit/conic.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sensikit {

namespace {

const char* kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Free: return "free";
    case ConeKind::Nonneg: return "nonneg";
    case ConeKind::Soc: return "soc";
  }
  return "?";
}

// Projects one soc block in place and writes its jacobian. The block is
// (z0, zbar) with the cone z0 >= ||zbar||.
void project_soc(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> u,
                 Eigen::Ref<Matrix> J, bool* differentiable) {
  const int d = static_cast<int>(z.size());
  const double z0 = z(0);
  const double t = z.tail(d - 1).norm();
  if (std::abs(t - std::abs(z0)) <= kEpsActive) *differentiable = false;
  if (t <= z0) {
    u = z;
    J.setIdentity();
    return;
  }
  if (t <= -z0) {
    u.setZero();
    J.setZero();
    return;
  }
  // Strictly between the cone and its polar; t > 0 here.
  const Vector w = z.tail(d - 1) / t;
  const double a = (t + z0) / 2.0;
  u(0) = a;
  u.tail(d - 1) = a * w;
  J(0, 0) = 0.5;
  J.row(0).tail(d - 1) = 0.5 * w.transpose();
  J.col(0).tail(d - 1) = 0.5 * w;
  J.bottomRightCorner(d - 1, d - 1) =
      (0.5 + z0 / (2.0 * t)) * Matrix::Identity(d - 1, d - 1) -
      (z0 / (2.0 * t)) * (w * w.transpose());
}

}  // namespace

int ConeSpec::dim() const {
  int d = 0;
  for (const ConeBlock& b : blocks) d += b.dim;
  return d;
}

void ConeSpec::validate() const {
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].dim < 1) {
      throw InputError("cone block " + std::to_string(i) + " (" +
                       kind_name(blocks[i].kind) + ") has dimension " +
                       std::to_string(blocks[i].dim) + ", need >= 1");
    }
    if (blocks[i].kind == ConeKind::Soc && blocks[i].dim < 2) {
      throw InputError("cone block " + std::to_string(i) +
                       " is a second-order cone of dimension " +
                       std::to_string(blocks[i].dim) + ", need >= 2");
    }
  }
}

ConeSpec ConeSpec::dual() const {
  ConeSpec d;
  for (const ConeBlock& b : blocks) {
    ConeBlock db = b;
    if (b.kind == ConeKind::Zero) db.kind = ConeKind::Free;
    else if (b.kind == ConeKind::Free) db.kind = ConeKind::Zero;
    d.blocks.push_back(db);
  }
  return d;
}

void ConicProblem::validate() const {
  cone.validate();
  if (cone.dim() != num_vars()) {
    throw DimensionError("cone covers " + std::to_string(cone.dim()) +
                         " coordinates, problem has " +
                         std::to_string(num_vars()) + " variables");
  }
  if (b.size() != num_rows()) {
    throw DimensionError("b has " + std::to_string(b.size()) +
                         " entries, A has " + std::to_string(num_rows()) +
                         " rows");
  }
  if (c.size() != num_vars()) {
    throw DimensionError("c has " + std::to_string(c.size()) +
                         " entries, A has " + std::to_string(num_vars()) +
                         " columns");
  }
}

ConeProjection project_cone(const ConeSpec& spec, const Vector& z) {
  spec.validate();
  const int n = spec.dim();
  if (z.size() != n) {
    throw DimensionError("projecting a vector of size " +
                         std::to_string(z.size()) + " onto a cone of size " +
                         std::to_string(n));
  }
  if (!z.allFinite()) {
    throw InputError("projection input has non-finite entries");
  }
  ConeProjection out;
  out.value = Vector::Zero(n);
  out.jacobian = Matrix::Zero(n, n);
  int at = 0;
  for (size_t bi = 0; bi < spec.blocks.size(); ++bi) {
    const ConeBlock& blk = spec.blocks[bi];
    const int d = blk.dim;
    bool smooth = true;
    switch (blk.kind) {
      case ConeKind::Zero:
        break;  // projection and jacobian stay zero
      case ConeKind::Free:
        out.value.segment(at, d) = z.segment(at, d);
        out.jacobian.block(at, at, d, d).setIdentity();
        break;
      case ConeKind::Nonneg:
        for (int i = 0; i < d; ++i) {
          const double zi = z(at + i);
          if (std::abs(zi) <= kEpsActive) smooth = false;
          if (zi > 0.0) {
            out.value(at + i) = zi;
            out.jacobian(at + i, at + i) = 1.0;
          }
        }
        break;
      case ConeKind::Soc:
        project_soc(z.segment(at, d), out.value.segment(at, d),
                    out.jacobian.block(at, at, d, d), &smooth);
        break;
    }
    if (!smooth) {
      out.differentiable = false;
      out.kink_blocks.push_back(static_cast<int>(bi));
    }
    at += d;
  }
  return out;
}

ConeSpec embedding_cone(const ConicProblem& prob) {
  ConeSpec spec = prob.cone;
  if (prob.num_rows() > 0) {
    spec.blocks.push_back({ConeKind::Free, prob.num_rows()});
  }
  spec.blocks.push_back({ConeKind::Nonneg, 1});
  return spec;
}

Matrix hsd_matrix(const ConicProblem& prob) {
  prob.validate();
  const int n = prob.num_vars();
  const int m = prob.num_rows();
  Matrix Q = Matrix::Zero(n + m + 1, n + m + 1);
  Q.block(0, n, n, m) = -prob.A.transpose();
  Q.block(n, 0, m, n) = prob.A;
  Q.block(0, n + m, n, 1) = prob.c;
  Q.block(n, n + m, m, 1) = -prob.b;
  Q.block(n + m, 0, 1, n) = -prob.c.transpose();
  Q.block(n + m, n, 1, m) = prob.b.transpose();
  return Q;
}

HSDPoint make_hsd_point(const ConicProblem& prob, const Vector& z) {
  const ConeSpec spec = embedding_cone(prob);
  const ConeProjection proj = project_cone(spec, z);
  HSDPoint pt;
  pt.z = z;
  pt.u = proj.value;
  pt.v = proj.value - z;
  pt.tau = pt.u(pt.u.size() - 1);
  pt.kappa = pt.v(pt.v.size() - 1);
  const double ortho = std::abs(pt.u.dot(pt.v));
  if (ortho > 1e-9 * (1.0 + pt.u.norm() * pt.v.norm())) {
    throw Error("cone split lost orthogonality: u'v = " +
                std::to_string(ortho));
  }
  if (pt.tau < 0.0 || pt.kappa < 0.0 || pt.tau * pt.kappa > 1e-9) {
    throw Error("homotopy scalars violate complementarity: tau = " +
                std::to_string(pt.tau) + ", kappa = " +
                std::to_string(pt.kappa));
  }
  return pt;
}

ResidualEval residual_map(const ConicProblem& prob, const Vector& z) {
  const Matrix Q = hsd_matrix(prob);
  const ConeSpec spec = embedding_cone(prob);
  if (z.size() != spec.dim()) {
    throw DimensionError("residual input has " + std::to_string(z.size()) +
                         " entries, embedding has " +
                         std::to_string(spec.dim()));
  }
  const ConeProjection proj = project_cone(spec, z);
  const int d = spec.dim();
  ResidualEval out;
  const Matrix QmI = Q - Matrix::Identity(d, d);
  out.value = QmI * proj.value + z;
  out.jacobian = QmI * proj.jacobian + Matrix::Identity(d, d);
  out.differentiable = proj.differentiable;
  out.kink_blocks = proj.kink_blocks;
  return out;
}

ConicSensitivity conic_sensitivity(const ConicProblem& prob,
                                   const ConicSolution& sol,
                                   const ConicPerturbation& dP) {
  prob.validate();
  const int n = prob.num_vars();
  const int m = prob.num_rows();
  if (sol.x.size() != n || sol.y.size() != m || sol.s.size() != n) {
    throw DimensionError("solution sizes (" + std::to_string(sol.x.size()) +
                         ", " + std::to_string(sol.y.size()) + ", " +
                         std::to_string(sol.s.size()) +
                         ") do not match the problem (" + std::to_string(n) +
                         ", " + std::to_string(m) + ", " +
                         std::to_string(n) + ")");
  }
  if (dP.dA.size() > 0 && (dP.dA.rows() != m || dP.dA.cols() != n)) {
    throw DimensionError("dA must be " + std::to_string(m) + "x" +
                         std::to_string(n));
  }
  if (dP.db.size() > 0 && dP.db.size() != m) {
    throw DimensionError("db must have " + std::to_string(m) + " entries");
  }
  if (dP.dc.size() > 0 && dP.dc.size() != n) {
    throw DimensionError("dc must have " + std::to_string(n) + " entries");
  }

  // The supplied triple must satisfy the optimality system, including
  // membership of x and s in the primal and dual cone.
  double res = (prob.A.transpose() * sol.y + sol.s - prob.c)
                   .lpNorm<Eigen::Infinity>();
  res = std::max(res, (prob.A * sol.x - prob.b).lpNorm<Eigen::Infinity>());
  res = std::max(res, std::abs(sol.x.dot(sol.s)));
  res = std::max(res, (project_cone(prob.cone, sol.x).value - sol.x)
                          .lpNorm<Eigen::Infinity>());
  res = std::max(res, (project_cone(prob.cone.dual(), sol.s).value - sol.s)
                          .lpNorm<Eigen::Infinity>());
  if (res > 1e-7) {
    throw InputError("supplied triple misses the conic optimality system: "
                     "residual " + std::to_string(res) + " exceeds 1e-7");
  }

  // Homotopy coordinates of the solution, normalized to unit scaling.
  const int d = n + m + 1;
  Vector z = Vector::Zero(d);
  z.head(n) = sol.x - sol.s;
  z.segment(n, m) = sol.y;
  z(d - 1) = 1.0;

  const ConeSpec spec = embedding_cone(prob);
  const ConeProjection proj = project_cone(spec, z);
  if (!proj.differentiable) {
    std::string which;
    for (int bi : proj.kink_blocks) {
      which += (which.empty() ? "" : ", ") + std::to_string(bi);
    }
    throw RegularityError(
        "kink-at-solution",
        "projection is nondifferentiable in cone block(s) " + which +
            "; complementarity is degenerate there, so no single-valued "
            "derivative exists");
  }

  const Matrix Q = hsd_matrix(prob);
  const Matrix QmI = Q - Matrix::Identity(d, d);
  const Matrix J = QmI * proj.jacobian + Matrix::Identity(d, d);

  Matrix dQ = Matrix::Zero(d, d);
  if (dP.dA.size() > 0) {
    dQ.block(0, n, n, m) -= dP.dA.transpose();
    dQ.block(n, 0, m, n) += dP.dA;
  }
  if (dP.db.size() > 0) {
    dQ.block(n, n + m, m, 1) -= dP.db;
    dQ.block(n + m, n, 1, m) += dP.db.transpose();
  }
  if (dP.dc.size() > 0) {
    dQ.block(0, n + m, n, 1) += dP.dc;
    dQ.block(n + m, 0, 1, n) -= dP.dc.transpose();
  }
  const Vector rhs = -(dQ * proj.value);

  ConicSensitivity out;
  Vector dz;
  try {
    const LUFactors lu(J);
    dz = lu.solve(rhs);
  } catch (const SingularMatrixError&) {
    // The residual jacobian annihilates z itself (the system is invariant
    // under rescaling), so rank deficiency is the normal case; the
    // minimum-norm solution fixes the free scale.
    const LSQRResult ls = lsqr_solve(J, rhs);
    if (ls.normal_residual > 1e-8 * (1.0 + rhs.norm())) {
      throw Error("least-squares solve of the sensitivity system stalled: "
                  "normal residual " + std::to_string(ls.normal_residual));
    }
    dz = ls.x;
    out.least_squares = true;
  }

  // Chain rule through the scale-normalized recovery map.
  const Vector du = proj.jacobian * dz;
  const Vector dv = du - dz;
  const double tau = proj.value(d - 1);
  const double dtau = du(d - 1);
  const Vector ux = proj.value.head(n);
  const Vector uy = proj.value.segment(n, m);
  const Vector vs = (proj.value - z).head(n);
  out.dx = (du.head(n) - (ux / tau) * dtau) / tau;
  out.dy = (du.segment(n, m) - (uy / tau) * dtau) / tau;
  out.ds = (dv.head(n) - (vs / tau) * dtau) / tau;
  return out;
}

namespace {

Vector json_vector(const nlohmann::json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Matrix json_matrix(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return Matrix();
  const int cols = static_cast<int>(j[0].size());
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw InputError("matrix rows have inconsistent lengths");
    }
    for (int c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

}  // namespace

ConicFixture parse_conic_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("conic json: ") + e.what());
  }
  ConicFixture fx;
  try {
    fx.name = j.value("name", "");
    fx.problem.A = json_matrix(j.at("A"));
    fx.problem.b = json_vector(j.at("b"));
    fx.problem.c = json_vector(j.at("c"));
    for (const auto& blk : j.at("cones")) {
      const std::string kind = blk.at("kind").get<std::string>();
      ConeBlock cb;
      if (kind == "zero") cb.kind = ConeKind::Zero;
      else if (kind == "free") cb.kind = ConeKind::Free;
      else if (kind == "nonneg") cb.kind = ConeKind::Nonneg;
      else if (kind == "soc") cb.kind = ConeKind::Soc;
      else throw InputError("unknown cone kind '" + kind + "'");
      cb.dim = blk.at("dim").get<int>();
      fx.problem.cone.blocks.push_back(cb);
    }
    if (j.contains("solution")) {
      fx.solution.x = json_vector(j["solution"].at("x"));
      fx.solution.y = json_vector(j["solution"].at("y"));
      fx.solution.s = json_vector(j["solution"].at("s"));
    }
    if (j.contains("perturbation")) {
      const auto& p = j["perturbation"];
      if (p.contains("dA")) fx.perturbation.dA = json_matrix(p["dA"]);
      if (p.contains("db")) fx.perturbation.db = json_vector(p["db"]);
      if (p.contains("dc")) fx.perturbation.dc = json_vector(p["dc"]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("conic json: ") + e.what());
  }
  fx.problem.validate();
  return fx;
}

ConicFixture load_conic_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open conic file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_conic_json(ss.str());
}

}  // namespace sensikit
