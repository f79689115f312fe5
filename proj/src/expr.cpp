#include "sensikit/expr.hpp"

#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace sensikit {

Expr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

Expr make_var(int index) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Var;
  n->index = index;
  return n;
}

Expr make_param(int index) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Param;
  n->index = index;
  return n;
}

Expr make_unary(Op op, Expr a) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  return n;
}

Expr make_binary(Op op, Expr a, Expr b) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Precedence levels used by both printer and parser:
// 1 add/sub, 2 mul/div, 3 unary minus, 4 pow, 5 atoms.
int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    default: return nullptr;
  }
}

void print_rec(const Expr& e, int parent_prec,
               const std::vector<std::string>& vn,
               const std::vector<std::string>& pn, std::string& out) {
  const int prec = precedence(e->op);
  const bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (e->op) {
    case Op::Const:
      out += format_number(e->value);
      break;
    case Op::Var:
      if (e->index < static_cast<int>(vn.size()))
        out += vn[e->index];
      else
        out += "x" + std::to_string(e->index + 1);
      break;
    case Op::Param:
      if (e->index < static_cast<int>(pn.size()))
        out += pn[e->index];
      else
        out += "p" + std::to_string(e->index + 1);
      break;
    case Op::Neg:
      out += '-';
      print_rec(e->a, 3, vn, pn, out);
      break;
    case Op::Add:
      print_rec(e->a, 1, vn, pn, out);
      out += " + ";
      print_rec(e->b, 2, vn, pn, out);
      break;
    case Op::Sub:
      print_rec(e->a, 1, vn, pn, out);
      out += " - ";
      print_rec(e->b, 2, vn, pn, out);
      break;
    case Op::Mul:
      print_rec(e->a, 2, vn, pn, out);
      out += "*";
      print_rec(e->b, 3, vn, pn, out);
      break;
    case Op::Div:
      print_rec(e->a, 2, vn, pn, out);
      out += "/";
      print_rec(e->b, 3, vn, pn, out);
      break;
    case Op::Pow:
      print_rec(e->a, 5, vn, pn, out);
      out += "^";
      print_rec(e->b, 4, vn, pn, out);
      break;
    default: {
      out += function_name(e->op);
      out += '(';
      print_rec(e->a, 0, vn, pn, out);
      out += ')';
      break;
    }
  }
  if (parens) out += ')';
}

}  // namespace

std::string to_string(const Expr& e, const std::vector<std::string>& var_names,
                      const std::vector<std::string>& param_names) {
  std::string out;
  print_rec(e, 0, var_names, param_names, out);
  return out;
}

bool depends_on_var(const Expr& e, int index) {
  if (e->op == Op::Var) return index < 0 || e->index == index;
  if (e->a && depends_on_var(e->a, index)) return true;
  if (e->b && depends_on_var(e->b, index)) return true;
  return false;
}

bool depends_on_param(const Expr& e, int index) {
  if (e->op == Op::Param) return index < 0 || e->index == index;
  if (e->a && depends_on_param(e->a, index)) return true;
  if (e->b && depends_on_param(e->b, index)) return true;
  return false;
}

bool affine_in_vars(const Expr& e) {
  switch (e->op) {
    case Op::Const:
    case Op::Param:
    case Op::Var:
      return true;
    case Op::Neg:
      return affine_in_vars(e->a);
    case Op::Add:
    case Op::Sub:
      return affine_in_vars(e->a) && affine_in_vars(e->b);
    case Op::Mul:
      if (!depends_on_var(e->a)) return affine_in_vars(e->b);
      if (!depends_on_var(e->b)) return affine_in_vars(e->a);
      return false;
    case Op::Div:
      return affine_in_vars(e->a) && !depends_on_var(e->b);
    default:
      // pow and the transcendental functions are affine in x only when
      // they do not touch x at all.
      return !depends_on_var(e);
  }
}

int count_param_occurrences(const Expr& e, int index) {
  if (e->op == Op::Param) return e->index == index ? 1 : 0;
  int c = 0;
  if (e->a) c += count_param_occurrences(e->a, index);
  if (e->b) c += count_param_occurrences(e->b, index);
  return c;
}

namespace {
bool additive_walk(const Expr& e, double sign, int index, int& count,
                   double& coeff) {
  if (e->op == Op::Param && e->index == index) {
    ++count;
    coeff = sign;
    return true;
  }
  switch (e->op) {
    case Op::Add:
      return additive_walk(e->a, sign, index, count, coeff) &&
             additive_walk(e->b, sign, index, count, coeff);
    case Op::Sub:
      return additive_walk(e->a, sign, index, count, coeff) &&
             additive_walk(e->b, -sign, index, count, coeff);
    case Op::Neg:
      return additive_walk(e->a, -sign, index, count, coeff);
    default:
      return !depends_on_param(e, index);
  }
}
}  // namespace

bool param_additive_coefficient(const Expr& e, int index, double* coeff) {
  int count = 0;
  double c = 0.0;
  if (!additive_walk(e, 1.0, index, count, c)) return false;
  if (count != 1) return false;
  if (coeff) *coeff = c;
  return true;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  double number = 0.0;
  int column = 0;
};

class LineLexer {
public:
  LineLexer(const std::string& line, int line_no)
      : line_(line), line_no_(line_no) {
    next();
  }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_no_, tok_.column);
  }

  int line_no() const { return line_no_; }

private:
  void next() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_])))
      ++pos_;
    tok_ = Token{};
    tok_.column = static_cast<int>(pos_) + 1;
    if (pos_ >= line_.size() || line_[pos_] == '#') {
      tok_.kind = Token::End;
      return;
    }
    const char c = line_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < line_.size() &&
             (std::isalnum(static_cast<unsigned char>(line_[pos_])) ||
              line_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Ident;
      tok_.text = line_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < line_.size() &&
         std::isdigit(static_cast<unsigned char>(line_[pos_ + 1])))) {
      const char* begin = line_.c_str() + pos_;
      char* end = nullptr;
      tok_.number = std::strtod(begin, &end);
      tok_.kind = Token::Number;
      tok_.text = std::string(begin, static_cast<size_t>(end - begin));
      pos_ += static_cast<size_t>(end - begin);
      return;
    }
    tok_.kind = Token::Punct;
    tok_.text = std::string(1, c);
    ++pos_;
  }

  const std::string& line_;
  int line_no_;
  size_t pos_ = 0;
  Token tok_;
};

class ExprParser {
public:
  ExprParser(LineLexer& lex, const ParametricNLP& nlp) : lex_(lex), nlp_(nlp) {}

  Expr parse() {
    Expr e = parse_add();
    if (lex_.peek().kind != Token::End)
      lex_.fail("unexpected trailing input '" + lex_.peek().text + "'");
    return e;
  }

private:
  bool at_punct(const char* s) const {
    return lex_.peek().kind == Token::Punct && lex_.peek().text == s;
  }

  Expr parse_add() {
    Expr e = parse_term();
    while (at_punct("+") || at_punct("-")) {
      const bool add = lex_.take().text == "+";
      e = make_binary(add ? Op::Add : Op::Sub, e, parse_term());
    }
    return e;
  }

  Expr parse_term() {
    Expr e = parse_unary();
    while (at_punct("*") || at_punct("/")) {
      const bool mul = lex_.take().text == "*";
      e = make_binary(mul ? Op::Mul : Op::Div, e, parse_unary());
    }
    return e;
  }

  Expr parse_unary() {
    if (at_punct("-")) {
      lex_.take();
      return make_unary(Op::Neg, parse_unary());
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (at_punct("^")) {
      lex_.take();
      // Right-associative; going through parse_unary also admits x^-2.
      return make_binary(Op::Pow, base, parse_unary());
    }
    return base;
  }

  Expr parse_atom() {
    const Token t = lex_.peek();
    if (t.kind == Token::Number) {
      lex_.take();
      return make_const(t.number);
    }
    if (at_punct("(")) {
      lex_.take();
      Expr e = parse_add();
      if (!at_punct(")")) lex_.fail("expected ')'");
      lex_.take();
      return e;
    }
    if (t.kind == Token::Ident) {
      lex_.take();
      static const std::unordered_map<std::string, Op> funcs = {
          {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp},
          {"log", Op::Log}, {"sqrt", Op::Sqrt}};
      auto fit = funcs.find(t.text);
      if (fit != funcs.end()) {
        if (!at_punct("(")) lex_.fail("expected '(' after " + t.text);
        lex_.take();
        Expr arg = parse_add();
        if (!at_punct(")")) lex_.fail("expected ')'");
        lex_.take();
        return make_unary(fit->second, arg);
      }
      for (int i = 0; i < nlp_.num_vars(); ++i)
        if (nlp_.var_names[i] == t.text) return make_var(i);
      for (int i = 0; i < nlp_.num_params(); ++i)
        if (nlp_.param_names[i] == t.text) return make_param(i);
      lex_.fail("undeclared identifier '" + t.text + "'");
    }
    lex_.fail(t.kind == Token::End ? "unexpected end of expression"
                                   : "unexpected token '" + t.text + "'");
  }

  LineLexer& lex_;
  const ParametricNLP& nlp_;
};

std::vector<std::string> parse_name_list(LineLexer& lex) {
  std::vector<std::string> names;
  while (lex.peek().kind == Token::Ident) names.push_back(lex.take().text);
  if (lex.peek().kind != Token::End)
    lex.fail("expected identifier, got '" + lex.peek().text + "'");
  if (names.empty()) lex.fail("expected at least one identifier");
  return names;
}

}  // namespace

ParametricNLP parse_problem(const std::string& text) {
  ParametricNLP nlp;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_name = false, have_vars = false, have_params = false,
       have_objective = false;

  while (std::getline(in, line)) {
    ++line_no;
    LineLexer lex(line, line_no);
    if (lex.peek().kind == Token::End) continue;
    if (lex.peek().kind != Token::Ident)
      lex.fail("expected a section keyword");
    const std::string keyword = lex.take().text;

    if (keyword == "problem") {
      if (lex.peek().kind != Token::Ident) lex.fail("expected problem name");
      nlp.name = lex.take().text;
      have_name = true;
    } else if (keyword == "vars") {
      nlp.var_names = parse_name_list(lex);
      have_vars = true;
    } else if (keyword == "params") {
      nlp.param_names = parse_name_list(lex);
      have_params = true;
    } else if (keyword == "minimize") {
      if (!have_vars) lex.fail("minimize before vars");
      nlp.objective = ExprParser(lex, nlp).parse();
      have_objective = true;
    } else if (keyword == "subject_to") {
      if (lex.peek().kind != Token::End) lex.fail("subject_to takes no arguments");
    } else if (keyword == "eq" || keyword == "ineq") {
      if (!have_vars) lex.fail(keyword + " before vars");
      if (lex.peek().kind != Token::Punct || lex.peek().text != ":")
        lex.fail("expected ':' after " + keyword);
      lex.take();
      Expr e = ExprParser(lex, nlp).parse();
      if (keyword == "eq")
        nlp.equalities.push_back(e);
      else
        nlp.inequalities.push_back(e);
    } else if (keyword == "at") {
      if (lex.peek().kind != Token::Ident || lex.peek().text != "p")
        lex.fail("expected 'p' after at");
      lex.take();
      if (lex.peek().text != "=") lex.fail("expected '='");
      lex.take();
      if (lex.peek().text != "[") lex.fail("expected '['");
      lex.take();
      std::vector<double> vals;
      while (true) {
        double sign = 1.0;
        if (lex.peek().kind == Token::Punct && lex.peek().text == "-") {
          lex.take();
          sign = -1.0;
        }
        if (lex.peek().kind != Token::Number) lex.fail("expected number");
        vals.push_back(sign * lex.take().number);
        if (lex.peek().text == ",") {
          lex.take();
          continue;
        }
        break;
      }
      if (lex.peek().text != "]") lex.fail("expected ']'");
      lex.take();
      nlp.default_p = Eigen::Map<const Vector>(vals.data(), vals.size());
    } else {
      lex.fail("unknown section keyword '" + keyword + "'");
    }
  }

  if (!have_name) throw ParseError("missing 'problem' line", line_no, 1);
  if (!have_vars) throw ParseError("missing 'vars' line", line_no, 1);
  if (!have_params) throw ParseError("missing 'params' line", line_no, 1);
  if (!have_objective) throw ParseError("missing 'minimize' line", line_no, 1);
  for (size_t i = 0; i < nlp.var_names.size(); ++i)
    for (size_t j = i + 1; j < nlp.var_names.size(); ++j)
      if (nlp.var_names[i] == nlp.var_names[j])
        throw ParseError("duplicate name " + nlp.var_names[i], line_no, 1);
  for (const auto& pn : nlp.param_names)
    for (const auto& vn : nlp.var_names)
      if (pn == vn) throw ParseError("name used twice: " + pn, line_no, 1);
  if (nlp.default_p.size() != 0 && nlp.default_p.size() != nlp.num_params())
    throw ParseError("'at' vector length does not match params", line_no, 1);
  return nlp;
}

ParametricNLP parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string ParametricNLP::to_text() const {
  std::ostringstream out;
  out << "problem " << name << "\n";
  out << "vars";
  for (const auto& v : var_names) out << " " << v;
  out << "\nparams";
  for (const auto& p : param_names) out << " " << p;
  out << "\nminimize " << to_string(objective, var_names, param_names) << "\n";
  if (!equalities.empty() || !inequalities.empty()) {
    out << "subject_to\n";
    for (const auto& e : equalities)
      out << "eq: " << to_string(e, var_names, param_names) << "\n";
    for (const auto& e : inequalities)
      out << "ineq: " << to_string(e, var_names, param_names) << "\n";
  }
  if (default_p.size() > 0) {
    out << "at p = [";
    for (int i = 0; i < default_p.size(); ++i) {
      if (i) out << ", ";
      out << format_number(default_p[i]);
    }
    out << "]\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Evaluation: plain values and second-order truncated Taylor coefficients.

namespace {

[[noreturn]] void domain_error(const char* op, const Expr& e) {
  throw DomainError(op, to_string(e));
}

// Value plus first derivatives in two seed directions and the mixed second
// derivative. Propagating (f, fa, fb, fab) through each operation yields one
// Hessian entry per sweep.
struct D2 {
  double f = 0, fa = 0, fb = 0, fab = 0;
};

D2 d2_add(const D2& x, const D2& y) {
  return {x.f + y.f, x.fa + y.fa, x.fb + y.fb, x.fab + y.fab};
}
D2 d2_sub(const D2& x, const D2& y) {
  return {x.f - y.f, x.fa - y.fa, x.fb - y.fb, x.fab - y.fab};
}
D2 d2_neg(const D2& x) { return {-x.f, -x.fa, -x.fb, -x.fab}; }
D2 d2_mul(const D2& x, const D2& y) {
  return {x.f * y.f, x.fa * y.f + x.f * y.fa, x.fb * y.f + x.f * y.fb,
          x.fab * y.f + x.fa * y.fb + x.fb * y.fa + x.f * y.fab};
}
D2 d2_inv(const D2& x) {
  const double t = 1.0 / x.f;
  const double t2 = t * t;
  return {t, -x.fa * t2, -x.fb * t2, (2.0 * x.fa * x.fb * t - x.fab) * t2};
}
// Chain rule through u with derivatives u1, u2 at x.f.
D2 d2_chain(const D2& x, double u, double u1, double u2) {
  return {u, u1 * x.fa, u1 * x.fb, u2 * x.fa * x.fb + u1 * x.fab};
}

D2 d2_int_pow(D2 base, long long k, const Expr& node) {
  if (k < 0) {
    if (base.f == 0.0) domain_error("pow", node);
    return d2_inv(d2_int_pow(base, -k, node));
  }
  D2 result{1.0, 0.0, 0.0, 0.0};
  while (k > 0) {
    if (k & 1) result = d2_mul(result, base);
    base = d2_mul(base, base);
    k >>= 1;
  }
  return result;
}

bool const_integer_exponent(const Expr& e, long long* k) {
  double sign = 1.0;
  const ExprNode* node = e.get();
  while (node->op == Op::Neg) {
    sign = -sign;
    node = node->a.get();
  }
  if (node->op != Op::Const) return false;
  const double v = sign * node->value;
  if (std::abs(v) > 64.0) return false;
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-12) return false;
  *k = static_cast<long long>(r);
  return true;
}

// a, b are joint coordinate indices (x block then p block); -1 seeds nothing.
D2 eval_d2(const Expr& e, const Vector& x, const Vector& p, int a, int b) {
  const int n = static_cast<int>(x.size());
  switch (e->op) {
    case Op::Const:
      return {e->value, 0, 0, 0};
    case Op::Var:
      return {x[e->index], e->index == a ? 1.0 : 0.0,
              e->index == b ? 1.0 : 0.0, 0.0};
    case Op::Param: {
      const int j = n + e->index;
      return {p[e->index], j == a ? 1.0 : 0.0, j == b ? 1.0 : 0.0, 0.0};
    }
    case Op::Neg:
      return d2_neg(eval_d2(e->a, x, p, a, b));
    case Op::Add:
      return d2_add(eval_d2(e->a, x, p, a, b), eval_d2(e->b, x, p, a, b));
    case Op::Sub:
      return d2_sub(eval_d2(e->a, x, p, a, b), eval_d2(e->b, x, p, a, b));
    case Op::Mul:
      return d2_mul(eval_d2(e->a, x, p, a, b), eval_d2(e->b, x, p, a, b));
    case Op::Div: {
      D2 den = eval_d2(e->b, x, p, a, b);
      if (den.f == 0.0) domain_error("div", e);
      return d2_mul(eval_d2(e->a, x, p, a, b), d2_inv(den));
    }
    case Op::Sin: {
      D2 u = eval_d2(e->a, x, p, a, b);
      return d2_chain(u, std::sin(u.f), std::cos(u.f), -std::sin(u.f));
    }
    case Op::Cos: {
      D2 u = eval_d2(e->a, x, p, a, b);
      return d2_chain(u, std::cos(u.f), -std::sin(u.f), -std::cos(u.f));
    }
    case Op::Exp: {
      D2 u = eval_d2(e->a, x, p, a, b);
      const double v = std::exp(u.f);
      return d2_chain(u, v, v, v);
    }
    case Op::Log: {
      D2 u = eval_d2(e->a, x, p, a, b);
      if (u.f <= 0.0) domain_error("log", e);
      return d2_chain(u, std::log(u.f), 1.0 / u.f, -1.0 / (u.f * u.f));
    }
    case Op::Sqrt: {
      D2 u = eval_d2(e->a, x, p, a, b);
      if (u.f <= 0.0) domain_error("sqrt", e);
      const double r = std::sqrt(u.f);
      return d2_chain(u, r, 0.5 / r, -0.25 / (u.f * r));
    }
    case Op::Pow: {
      long long k;
      if (const_integer_exponent(e->b, &k))
        return d2_int_pow(eval_d2(e->a, x, p, a, b), k, e);
      D2 base = eval_d2(e->a, x, p, a, b);
      if (base.f <= 0.0) domain_error("pow", e);
      D2 expo = eval_d2(e->b, x, p, a, b);
      // b^e = exp(e * log b)
      D2 lg = d2_chain(base, std::log(base.f), 1.0 / base.f,
                       -1.0 / (base.f * base.f));
      D2 prod = d2_mul(expo, lg);
      const double v = std::exp(prod.f);
      return d2_chain(prod, v, v, v);
    }
  }
  assert(false);
  return {};
}

}  // namespace

double eval(const Expr& e, const Vector& x, const Vector& p) {
  switch (e->op) {
    case Op::Const: return e->value;
    case Op::Var: return x[e->index];
    case Op::Param: return p[e->index];
    case Op::Neg: return -eval(e->a, x, p);
    case Op::Add: return eval(e->a, x, p) + eval(e->b, x, p);
    case Op::Sub: return eval(e->a, x, p) - eval(e->b, x, p);
    case Op::Mul: return eval(e->a, x, p) * eval(e->b, x, p);
    case Op::Div: {
      const double d = eval(e->b, x, p);
      if (d == 0.0) domain_error("div", e);
      return eval(e->a, x, p) / d;
    }
    case Op::Sin: return std::sin(eval(e->a, x, p));
    case Op::Cos: return std::cos(eval(e->a, x, p));
    case Op::Exp: return std::exp(eval(e->a, x, p));
    case Op::Log: {
      const double v = eval(e->a, x, p);
      if (v <= 0.0) domain_error("log", e);
      return std::log(v);
    }
    case Op::Sqrt: {
      const double v = eval(e->a, x, p);
      if (v <= 0.0) domain_error("sqrt", e);
      return std::sqrt(v);
    }
    case Op::Pow: {
      long long k;
      if (const_integer_exponent(e->b, &k)) {
        const double base = eval(e->a, x, p);
        if (k < 0 && base == 0.0) domain_error("pow", e);
        double r = 1.0, b2 = base;
        long long kk = k < 0 ? -k : k;
        while (kk > 0) {
          if (kk & 1) r *= b2;
          b2 *= b2;
          kk >>= 1;
        }
        return k < 0 ? 1.0 / r : r;
      }
      const double base = eval(e->a, x, p);
      if (base <= 0.0) domain_error("pow", e);
      return std::pow(base, eval(e->b, x, p));
    }
  }
  assert(false);
  return 0.0;
}

FunctionDerivatives differentiate(const Expr& e, const Vector& x,
                                  const Vector& p, DerivScope scope) {
  const int n = static_cast<int>(x.size());
  const int N = scope == DerivScope::Joint
                    ? n + static_cast<int>(p.size())
                    : n;
  FunctionDerivatives out;
  out.grad = Vector::Zero(N);
  out.hess = Matrix::Zero(N, N);
  if (N == 0) {
    out.value = eval(e, x, p);
    return out;
  }
  for (int a = 0; a < N; ++a) {
    for (int b = a; b < N; ++b) {
      const D2 d = eval_d2(e, x, p, a, b);
      if (a == b) {
        out.value = d.f;
        out.grad[a] = d.fa;
      }
      out.hess(a, b) = d.fab;
      out.hess(b, a) = d.fab;
    }
  }
  return out;
}

Vector DerivativeBundle::g_values() const {
  Vector v(g.size());
  for (size_t i = 0; i < g.size(); ++i) v[i] = g[i].value;
  return v;
}

Vector DerivativeBundle::h_values() const {
  Vector v(h.size());
  for (size_t i = 0; i < h.size(); ++i) v[i] = h[i].value;
  return v;
}

Matrix DerivativeBundle::jac_x_g() const {
  Matrix J(g.size(), n);
  for (size_t i = 0; i < g.size(); ++i) J.row(i) = g[i].grad_x(n).transpose();
  return J;
}

Matrix DerivativeBundle::jac_p_g() const {
  Matrix J(g.size(), l);
  for (size_t i = 0; i < g.size(); ++i) J.row(i) = g[i].grad_p(n).transpose();
  return J;
}

Matrix DerivativeBundle::jac_x_h() const {
  Matrix J(h.size(), n);
  for (size_t i = 0; i < h.size(); ++i) J.row(i) = h[i].grad_x(n).transpose();
  return J;
}

Matrix DerivativeBundle::jac_p_h() const {
  Matrix J(h.size(), l);
  for (size_t i = 0; i < h.size(); ++i) J.row(i) = h[i].grad_p(n).transpose();
  return J;
}

DerivativeBundle evaluate_bundle(const ParametricNLP& nlp, const Vector& x,
                                 const Vector& p, DerivScope scope) {
  if (x.size() != nlp.num_vars())
    throw DimensionError("x length " + std::to_string(x.size()) + " vs vars " +
                         std::to_string(nlp.num_vars()));
  if (p.size() != nlp.num_params())
    throw DimensionError("p length " + std::to_string(p.size()) +
                         " vs params " + std::to_string(nlp.num_params()));
  DerivativeBundle b;
  b.n = nlp.num_vars();
  b.l = scope == DerivScope::Joint ? nlp.num_params() : 0;
  b.f = differentiate(nlp.objective, x, p, scope);
  b.g.reserve(nlp.equalities.size());
  for (const auto& e : nlp.equalities)
    b.g.push_back(differentiate(e, x, p, scope));
  b.h.reserve(nlp.inequalities.size());
  for (const auto& e : nlp.inequalities)
    b.h.push_back(differentiate(e, x, p, scope));
  return b;
}

LagrangianDerivatives lagrangian_derivatives(const DerivativeBundle& bundle,
                                             const Vector& y, const Vector& z) {
  if (y.size() != static_cast<Eigen::Index>(bundle.g.size()))
    throw DimensionError("y length vs equality count");
  if (z.size() != static_cast<Eigen::Index>(bundle.h.size()))
    throw DimensionError("z length vs inequality count");
  const int n = bundle.n;
  const int l = bundle.l;
  LagrangianDerivatives L;
  L.grad_x = bundle.f.grad_x(n);
  L.grad_p = bundle.f.grad_p(n);
  L.hess_xx = bundle.f.hess_xx(n);
  L.hess_xp = bundle.f.hess_xp(n);
  L.hess_pp = bundle.f.hess_pp(n);
  for (size_t i = 0; i < bundle.g.size(); ++i) {
    const auto& gi = bundle.g[i];
    L.grad_x += y[i] * gi.grad_x(n);
    L.grad_p += y[i] * gi.grad_p(n);
    L.hess_xx += y[i] * gi.hess_xx(n);
    L.hess_xp += y[i] * gi.hess_xp(n);
    L.hess_pp += y[i] * gi.hess_pp(n);
  }
  for (size_t j = 0; j < bundle.h.size(); ++j) {
    const auto& hj = bundle.h[j];
    L.grad_x += z[j] * hj.grad_x(n);
    L.grad_p += z[j] * hj.grad_p(n);
    L.hess_xx += z[j] * hj.hess_xx(n);
    L.hess_xp += z[j] * hj.hess_xp(n);
    L.hess_pp += z[j] * hj.hess_pp(n);
  }
  (void)l;
  return L;
}

}  // namespace sensikit
