#pragma once

#include <string>
#include <vector>

#include "sensikit/expr.hpp"
#include "sensikit/kkt.hpp"
#include "sensikit/linalg.hpp"
#include "sensikit/sensitivity.hpp"

namespace sensikit {

// One-sided derivative of a solution along a parameter direction.
struct DirectionalDerivative {
    Vector direction;            // h, the parameter direction
    Vector dx;                   // primal directional derivative
    Vector dy;                   // equality multipliers, empty if unavailable
    Vector dz;                   // full-length inequality multipliers, empty if unavailable
    bool duals_available = false;
    Vector selected_y;           // multiplier vertex the derivative was computed at
    Vector selected_z;
    std::vector<std::string> active_log;  // how the active set was partitioned
};

// Directional derivative via the active-set quadratic program.  Valid under
// LICQ and second-order sufficiency on the critical subspace even when
// strict complementarity fails; returns primal and dual rates.
DirectionalDerivative directional_qp(const ParametricNLP& nlp, const PrimalDualPoint& point,
                                     const Vector& h);

// Multiplier vertices that maximize the first-order objective change along
// h over the multiplier polytope; only these support a directional
// derivative when multipliers are non-unique.
struct DempeSelection {
    std::vector<std::pair<Vector, Vector>> argmax;  // (y, z) vertices, z full-length
    double optimum = 0.0;                           // max of the selection objective
    std::vector<double> vertex_values;              // objective at every vertex
};

DempeSelection dempe_lp(const ParametricNLP& nlp, const PrimalDualPoint& point,
                        const MultiplierPolytope& polytope, const Vector& h);

// Directional derivative without unique multipliers: selects maximizing
// vertices, solves the critical-cone QP at each, and checks the primal
// rates agree.  Duals are not reported in this regime.
DirectionalDerivative degenerate_directional(const ParametricNLP& nlp, const PrimalDualPoint& point,
                                             const Vector& h);

// Lexicographic directional derivative along a matrix of directions
// R = [r_1 ... r_k]: a sequence of quadratic programs, each refining the
// active-set partition of the previous one.
struct LDDerivative {
    Matrix directions;                    // l x k
    Matrix X;                             // n x k, primal rates per stage
    Matrix Y;                             // m_e x k
    Matrix Z;                             // m_i x k
    std::vector<std::vector<int>> weak_stage;    // A0 entering each stage
    std::vector<std::vector<int>> strong_stage;  // A+ entering each stage
};

LDDerivative ld_derivative(const ParametricNLP& nlp, const PrimalDualPoint& point,
                           const Matrix& directions);

// Lexicographic minimum of two vectors: x if x precedes y in
// lexicographic order, else y.
Vector lmin(const Vector& x, const Vector& y);

// Row-wise lexicographic minimum of two matrices with equal shapes.
Matrix lmmin(const Matrix& X, const Matrix& Y);

}  // namespace sensikit
