#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sensikit/expr.hpp"
#include "sensikit/kkt.hpp"
#include "sensikit/linalg.hpp"

namespace sensikit {

// Which first-order regime produced a set of parametric derivatives.
enum class SensitivityRegime { Fiacco, Directional, Degenerate, Barrier, Conic };

const char* to_cstring(SensitivityRegime regime);

// Linearized KKT system at a regular solution.  Unknowns are stacked as
// (dx, dy, dz_I) where I runs over the active inequalities; the matrix is
// symmetric because the constraint blocks appear transposed in the first
// block row.
struct FiaccoSystem {
    Matrix M;                        // (n+m_e+|I|) square
    Matrix N;                        // (n+m_e+|I|) x l, parameter block
    std::vector<int> active;         // active inequality rows, ascending
    int n = 0;                       // number of variables
    int m_eq = 0;                    // number of equality constraints
    int m_ineq = 0;                  // total inequality count (for scatter)
    int num_params = 0;
    std::shared_ptr<LUFactors> lu;   // factorization of M, shared so the
                                     // system can be copied cheaply
};

FiaccoSystem build_fiacco_system(const ParametricNLP& nlp, const PrimalDualPoint& point,
                                 const ActiveSetInfo& act);

// Full parametric Jacobian of a primal-dual solution.
struct SensitivityResult {
    Matrix jac_x;   // n x l
    Matrix jac_y;   // m_e x l
    Matrix jac_z;   // m_i x l, rows of inactive constraints identically zero
    SensitivityRegime regime = SensitivityRegime::Fiacco;
    CQReport cq;    // the certificate this result was computed under
};

// Implicit-function derivative of the KKT system.  Requires that `cq`
// certifies LICQ, strict complementarity and second-order sufficiency;
// throws RegularityError naming the first failed condition otherwise.
SensitivityResult fiacco_jacobian(const ParametricNLP& nlp, const PrimalDualPoint& point,
                                  const CQReport& cq);

// Directional derivative of (x, y, z_I) along a parameter direction u,
// packed as a single vector of length n + m_e + |I|.
Vector forward_sensitivity(const FiaccoSystem& system, const Vector& u);

// Adjoint of forward_sensitivity: maps a weight vector on (x, y, z_I) to
// parameter space, so <forward(u), v> == <u, adjoint(v)>.
Vector adjoint_sensitivity(const FiaccoSystem& system, const Vector& v);

// Specialized path for problems affine in x: sensitivities through the
// basis matrix of binding constraint gradients instead of the full KKT
// system.  `basis` must be square (rows = binding constraints) and
// nonsingular; a non-square basis is rejected with advice to use the
// degenerate pipeline.
SensitivityResult lp_basis_sensitivity(const ParametricNLP& nlp, const PrimalDualPoint& point,
                                       const Matrix& basis);

}  // namespace sensikit
