#include <algorithm>
#include <cmath>
#include <functional>

#include "sensikit/opt_kernels.hpp"

namespace sensikit {

namespace {

// Visits all size-t index subsets of `pool` in lexicographic order.
template <typename F>
void for_each_combination(const std::vector<int>& pool, int t, F&& visit) {
  std::vector<int> pick(t);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == t) {
      visit(pick);
      return;
    }
    for (int i = start; i <= static_cast<int>(pool.size()) - (t - depth); ++i) {
      pick[depth] = pool[i];
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}

}  // namespace

PolytopeVertices enumerate_vertices(const Matrix& A_eq, const Vector& b_eq,
                                    const std::vector<int>& sign_constrained,
                                    double tol) {
  const int d = static_cast<int>(A_eq.cols());
  const int m = static_cast<int>(A_eq.rows());
  if (d > 20)
    throw GuardExceededError("vertex enumeration limited to 20 columns, got " +
                             std::to_string(d));
  if (b_eq.size() != m) throw DimensionError("enumerate_vertices rhs length");

  std::vector<int> S = sign_constrained;
  std::sort(S.begin(), S.end());
  S.erase(std::unique(S.begin(), S.end()), S.end());
  std::vector<bool> in_S(d, false);
  for (int i : S) {
    if (i < 0 || i >= d) throw DimensionError("sign index out of range");
    in_S[i] = true;
  }
  std::vector<int> F;
  for (int i = 0; i < d; ++i)
    if (!in_S[i]) F.push_back(i);

  const int rank_A = m > 0 ? qr_rank(A_eq).rank : 0;
  const double rhs_scale =
      1.0 + (b_eq.size() > 0 ? b_eq.cwiseAbs().maxCoeff() : 0.0);

  PolytopeVertices out;

  // A vertex keeps the free coordinates plus some subset T of the
  // sign-constrained ones away from their bound; the kept columns must be
  // independent, Av = b consistent on them, and the kept signs feasible.
  const int max_keep = std::min<int>(static_cast<int>(S.size()),
                                     rank_A - static_cast<int>(F.size()));
  for (int t = 0; t <= std::max(max_keep, 0); ++t) {
    if (static_cast<int>(F.size()) + t > rank_A && !(F.empty() && t == 0))
      continue;
    for_each_combination(S, t, [&](const std::vector<int>& T) {
      ++out.bases_tried;
      std::vector<int> K = F;
      K.insert(K.end(), T.begin(), T.end());
      std::sort(K.begin(), K.end());
      const int kk = static_cast<int>(K.size());

      Vector v = Vector::Zero(d);
      if (kk > 0) {
        Matrix AK(m, kk);
        for (int i = 0; i < kk; ++i) AK.col(i) = A_eq.col(K[i]);
        if (qr_rank(AK).rank < kk) return;  // dependent columns: no basis
        Eigen::ColPivHouseholderQR<Matrix> qr(AK);
        Vector vk = qr.solve(b_eq);
        if ((AK * vk - b_eq).lpNorm<Eigen::Infinity>() > tol * rhs_scale)
          return;  // inconsistent with the equalities
        for (int i = 0; i < kk; ++i) v[K[i]] = vk[i];
      } else if (m > 0 &&
                 b_eq.lpNorm<Eigen::Infinity>() > tol * rhs_scale) {
        return;
      }
      for (int i : S)
        if (v[i] < -tol * rhs_scale) return;
      ++out.bases_feasible;

      for (const auto& w : out.vertices)
        if ((w - v).lpNorm<Eigen::Infinity>() <= 1e-7) return;

      // Extreme-point certificate: active rows span the whole space.
      std::vector<int> zero_set;
      for (int i : S)
        if (std::abs(v[i]) <= tol * rhs_scale) zero_set.push_back(i);
      Matrix act(m + zero_set.size(), d);
      if (m > 0) act.topRows(m) = A_eq;
      for (size_t r = 0; r < zero_set.size(); ++r) {
        act.row(m + r).setZero();
        act(m + r, zero_set[r]) = 1.0;
      }
      if (qr_rank(act).rank < d) return;

      out.vertices.push_back(v);
    });
  }
  return out;
}

}  // namespace sensikit
