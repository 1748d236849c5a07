#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "varreg/errors.hpp"
#include "varreg/interval.hpp"

namespace varreg {

// Immutable scalar expression tree in one variable.  Supported nodes:
// constants, the variable, + - * /, rational powers, sqrt, and affine
// pre-composition e(alpha*z + beta).  Values are shared, so copies are cheap.
class Expr {
 public:
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Sqrt, Affine };

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double v);
  static Expr var();
  static Expr add(const Expr& a, const Expr& b);
  static Expr sub(const Expr& a, const Expr& b);
  static Expr mul(const Expr& a, const Expr& b);
  static Expr div(const Expr& a, const Expr& b);
  // base^(num/den); den > 0, gcd-reduced internally.
  static Expr pow(const Expr& base, long long num, long long den = 1);
  static Expr sqrt(const Expr& a);
  // inner evaluated at alpha*z + beta
  static Expr affine(const Expr& inner, double alpha, double beta);

  Kind kind() const { return node_->kind; }
  bool is_constant() const { return node_->kind == Kind::Const; }
  double constant_value() const;

  // Structural introspection (operands throw when absent).
  Expr child_a() const;
  Expr child_b() const;
  long long pow_num() const { return node_->pnum; }
  long long pow_den() const { return node_->pden; }
  double affine_alpha() const { return node_->alpha; }
  double affine_beta() const { return node_->beta; }

  double eval(double z) const;      // throws DomainError off-domain
  Expr derivative() const;          // exact symbolic derivative
  std::string sexpr() const;        // round-trippable s-expression text
  int var_occurrences() const;

  // Parse an s-expression.  Free symbols other than "z" are looked up in
  // params; unknown symbols raise SchemaError.
  static Expr parse(const std::string& text, const std::map<std::string, double>& params = {});

  friend Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
  friend Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
  friend Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
  friend Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
  friend Expr operator-(const Expr& a) { return sub(constant(0.0), a); }

 private:
  struct Node {
    Kind kind;
    double c = 0.0;             // Const value
    long long pnum = 1, pden = 1;  // Pow exponent
    double alpha = 1.0, beta = 0.0;  // Affine coefficients
    std::shared_ptr<const Node> a, b;
  };
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;

  static double eval_node(const Node* n, double z);
  static Expr deriv_node(const Node* n);
  static void print_node(const Node* n, std::string& out);
  static int count_var(const Node* n);
};

enum class Side { Left, Right, TwoSided };

struct FnPiece {
  Interval dom;
  Expr expr;
};

// Piecewise C^0 function of one variable.  Pieces have pairwise disjoint
// domains; construction sorts them and audits continuity at the seams.
// validate() runs the full grid audit (definedness + derivative consistency).
class PiecewiseFn {
 public:
  explicit PiecewiseFn(std::vector<FnPiece> pieces, bool allow_discontinuous = false);
  static PiecewiseFn single(const Expr& e) { return PiecewiseFn({FnPiece{Interval::all(), e}}); }

  const std::vector<FnPiece>& pieces() const { return pieces_; }
  bool is_continuous() const { return continuous_; }

  bool contains(double z) const { return piece_index(z) >= 0; }
  double eval(double z) const;
  // One- or two-sided derivative.  TwoSided throws KinkError when the
  // one-sided values disagree beyond tolerance.
  double deriv(double z, Side side = Side::TwoSided) const;
  // Interior breakpoints (shared piece boundaries), ascending.
  std::vector<double> breakpoints() const;
  Interval domain_hull() const;

  // Grid audit: 1001 interior samples per piece plus endpoints nudged inward
  // by 1e-7; checks evaluability, symbolic-vs-finite-difference derivative
  // agreement (tol 1e-6*(1+|d|)), and seam continuity (tol 1e-9).
  void validate() const;

 private:
  std::vector<FnPiece> pieces_;
  bool continuous_ = true;

  int piece_index(double z) const;               // -1 when outside
  int piece_touching(double z, bool from_left) const;
  void audit_seams(bool allow_discontinuous);
};

// Derivative-at-a-kink tolerance shared by PiecewiseFn and its audits.
inline constexpr double kTwoSidedTol = 1e-9;

}  // namespace varreg
