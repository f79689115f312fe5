#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sensikit/linalg.hpp"

namespace sensikit {

enum class Op {
  Const, Var, Param,
  Neg, Sin, Cos, Exp, Log, Sqrt,
  Add, Sub, Mul, Div, Pow,
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

// Immutable expression tree. Shared subtrees are allowed; evaluation never
// mutates nodes, so trees can be reused across threads.
struct ExprNode {
  Op op;
  double value = 0.0;  // Const payload
  int index = -1;      // Var / Param payload
  Expr a, b;
};

Expr make_const(double v);
Expr make_var(int index);
Expr make_param(int index);
Expr make_unary(Op op, Expr a);
Expr make_binary(Op op, Expr a, Expr b);

// Prints with minimal parentheses; parsing the output reproduces the tree.
// Without name tables, variables print as x1.. and parameters as p1..
std::string to_string(const Expr& e,
                      const std::vector<std::string>& var_names = {},
                      const std::vector<std::string>& param_names = {});

bool depends_on_var(const Expr& e, int index = -1);    // -1: any variable
bool depends_on_param(const Expr& e, int index = -1);  // -1: any parameter

// True when the expression is affine in x for every fixed p (structural
// check on the tree, not a pointwise one).
bool affine_in_vars(const Expr& e);

int count_param_occurrences(const Expr& e, int index);

// Checks that parameter `index` enters the expression exactly once, through
// additions/subtractions/negations only, and stores the resulting +-1
// coefficient. This is the shape "g(x) - p" that right-hand-side
// perturbations take.
bool param_additive_coefficient(const Expr& e, int index, double* coeff);

struct ParametricNLP {
  std::string name;
  std::vector<std::string> var_names;
  std::vector<std::string> param_names;
  Expr objective;
  std::vector<Expr> equalities;    // each = 0
  std::vector<Expr> inequalities;  // each <= 0
  Vector default_p;                // empty when the file had no `at` line

  int num_vars() const { return static_cast<int>(var_names.size()); }
  int num_params() const { return static_cast<int>(param_names.size()); }
  int num_eq() const { return static_cast<int>(equalities.size()); }
  int num_ineq() const { return static_cast<int>(inequalities.size()); }

  std::string to_text() const;
};

// Parses the line-oriented problem format:
//   problem <name>
//   vars x1 x2 ...
//   params p1 ...
//   minimize <expr>
//   subject_to
//   eq: <expr>
//   ineq: <expr>
//   at p = [v, ...]
// `#` starts a comment. Expressions use + - * / ^ (right-associative ^,
// unary minus binding tighter than +/- but looser than ^) and the functions
// sin cos exp log sqrt.
ParametricNLP parse_problem(const std::string& text);
ParametricNLP parse_problem_file(const std::string& path);

double eval(const Expr& e, const Vector& x, const Vector& p);

enum class DerivScope { Joint, XOnly };

struct FunctionDerivatives {
  double value = 0.0;
  Vector grad;  // joint layout: x block then p block (XOnly: x block alone)
  Matrix hess;  // symmetric, transposed entries bit-identical

  Vector grad_x(int n) const { return grad.head(n); }
  Vector grad_p(int n) const { return grad.tail(grad.size() - n); }
  Matrix hess_xx(int n) const { return hess.topLeftCorner(n, n); }
  Matrix hess_xp(int n) const {
    return hess.topRightCorner(n, hess.cols() - n);
  }
  Matrix hess_pp(int n) const {
    const auto l = hess.cols() - n;
    return hess.bottomRightCorner(l, l);
  }
};

FunctionDerivatives differentiate(const Expr& e, const Vector& x,
                                  const Vector& p,
                                  DerivScope scope = DerivScope::Joint);

// Values, gradients and Hessians of f, g, h at one (x, p).
struct DerivativeBundle {
  int n = 0;
  int l = 0;
  FunctionDerivatives f;
  std::vector<FunctionDerivatives> g;
  std::vector<FunctionDerivatives> h;

  Vector g_values() const;
  Vector h_values() const;
  Matrix jac_x_g() const;  // m_e by n
  Matrix jac_p_g() const;  // m_e by l
  Matrix jac_x_h() const;  // m_i by n
  Matrix jac_p_h() const;  // m_i by l
};

DerivativeBundle evaluate_bundle(const ParametricNLP& nlp, const Vector& x,
                                 const Vector& p,
                                 DerivScope scope = DerivScope::Joint);

// Derivatives of L = f + y'g + z'h composed from a bundle.
struct LagrangianDerivatives {
  Vector grad_x;
  Vector grad_p;
  Matrix hess_xx;
  Matrix hess_xp;  // n by l
  Matrix hess_pp;
};

LagrangianDerivatives lagrangian_derivatives(const DerivativeBundle& bundle,
                                             const Vector& y, const Vector& z);

}  // namespace sensikit
