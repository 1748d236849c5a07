#include "varreg/funcs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace varreg {

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long long igcd(long long a, long long b) {
  a = std::llabs(a);
  b = std::llabs(b);
  while (b) {
    long long t = a % b;
    a = b;
    b = t;
  }
  return a == 0 ? 1 : a;
}

}  // namespace

Expr Expr::constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->c = v;
  return Expr(std::move(n));
}

Expr Expr::var() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  return Expr(std::move(n));
}

double Expr::constant_value() const {
  if (!is_constant()) throw Error("constant_value on non-constant expression");
  return node_->c;
}

Expr Expr::child_a() const {
  if (!node_->a) throw Error("expression node has no first operand");
  return Expr(node_->a);
}

Expr Expr::child_b() const {
  if (!node_->b) throw Error("expression node has no second operand");
  return Expr(node_->b);
}

Expr Expr::add(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return constant(a.node_->c + b.node_->c);
  if (a.is_constant() && a.node_->c == 0.0) return b;
  if (b.is_constant() && b.node_->c == 0.0) return a;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Add;
  n->a = a.node_;
  n->b = b.node_;
  return Expr(std::move(n));
}

Expr Expr::sub(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return constant(a.node_->c - b.node_->c);
  if (b.is_constant() && b.node_->c == 0.0) return a;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sub;
  n->a = a.node_;
  n->b = b.node_;
  return Expr(std::move(n));
}

Expr Expr::mul(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return constant(a.node_->c * b.node_->c);
  if (a.is_constant()) {
    if (a.node_->c == 0.0) return constant(0.0);
    if (a.node_->c == 1.0) return b;
  }
  if (b.is_constant()) {
    if (b.node_->c == 0.0) return constant(0.0);
    if (b.node_->c == 1.0) return a;
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Mul;
  n->a = a.node_;
  n->b = b.node_;
  return Expr(std::move(n));
}

Expr Expr::div(const Expr& a, const Expr& b) {
  if (b.is_constant()) {
    if (b.node_->c == 0.0) throw DomainError("division by constant zero");
    if (a.is_constant()) return constant(a.node_->c / b.node_->c);
    if (b.node_->c == 1.0) return a;
  }
  if (a.is_constant() && a.node_->c == 0.0) return constant(0.0);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Div;
  n->a = a.node_;
  n->b = b.node_;
  return Expr(std::move(n));
}

Expr Expr::pow(const Expr& base, long long num, long long den) {
  if (den == 0) throw SchemaError("power exponent with zero denominator");
  if (den < 0) {
    den = -den;
    num = -num;
  }
  long long g = igcd(num, den);
  num /= g;
  den /= g;
  if (num == 0) return constant(1.0);
  if (num == 1 && den == 1) return base;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Pow;
  n->a = base.node_;
  n->pnum = num;
  n->pden = den;
  return Expr(std::move(n));
}

Expr Expr::sqrt(const Expr& a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sqrt;
  n->a = a.node_;
  return Expr(std::move(n));
}

Expr Expr::affine(const Expr& inner, double alpha, double beta) {
  if (alpha == 1.0 && beta == 0.0) return inner;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Affine;
  n->a = inner.node_;
  n->alpha = alpha;
  n->beta = beta;
  return Expr(std::move(n));
}

double Expr::eval(double z) const { return eval_node(node_.get(), z); }

double Expr::eval_node(const Node* n, double z) {
  switch (n->kind) {
    case Kind::Const:
      return n->c;
    case Kind::Var:
      return z;
    case Kind::Add:
      return eval_node(n->a.get(), z) + eval_node(n->b.get(), z);
    case Kind::Sub:
      return eval_node(n->a.get(), z) - eval_node(n->b.get(), z);
    case Kind::Mul:
      return eval_node(n->a.get(), z) * eval_node(n->b.get(), z);
    case Kind::Div: {
      double num = eval_node(n->a.get(), z);
      double den = eval_node(n->b.get(), z);
      if (den == 0.0) throw DomainError("division by zero");
      return num / den;
    }
    case Kind::Sqrt: {
      double v = eval_node(n->a.get(), z);
      if (v < 0.0) throw DomainError("sqrt of negative value");
      return std::sqrt(v);
    }
    case Kind::Pow: {
      double v = eval_node(n->a.get(), z);
      long long p = n->pnum, q = n->pden;
      if (q == 1) {
        if (v == 0.0 && p < 0) throw DomainError("zero raised to negative power");
        return std::pow(v, static_cast<double>(p));
      }
      if (v > 0.0) return std::pow(v, static_cast<double>(p) / static_cast<double>(q));
      if (v == 0.0) {
        if (p < 0) throw DomainError("zero raised to negative power");
        return 0.0;
      }
      // negative base: real only for odd root order
      if (q % 2 == 0) throw DomainError("even root of negative value");
      double mag = std::pow(-v, static_cast<double>(p) / static_cast<double>(q));
      return (p % 2 == 0) ? mag : -mag;
    }
    case Kind::Affine:
      return eval_node(n->a.get(), n->alpha * z + n->beta);
  }
  throw Error("corrupt expression node");
}

Expr Expr::derivative() const { return deriv_node(node_.get()); }

Expr Expr::deriv_node(const Node* n) {
  const Expr a = n->a ? Expr(n->a) : Expr();
  const Expr b = n->b ? Expr(n->b) : Expr();
  switch (n->kind) {
    case Kind::Const:
      return constant(0.0);
    case Kind::Var:
      return constant(1.0);
    case Kind::Add:
      return add(deriv_node(n->a.get()), deriv_node(n->b.get()));
    case Kind::Sub:
      return sub(deriv_node(n->a.get()), deriv_node(n->b.get()));
    case Kind::Mul:
      return add(mul(deriv_node(n->a.get()), b), mul(a, deriv_node(n->b.get())));
    case Kind::Div:
      return div(sub(mul(deriv_node(n->a.get()), b), mul(a, deriv_node(n->b.get()))),
                 mul(b, b));
    case Kind::Sqrt:
      return div(deriv_node(n->a.get()), mul(constant(2.0), sqrt(a)));
    case Kind::Pow: {
      double e = static_cast<double>(n->pnum) / static_cast<double>(n->pden);
      // d/dz a^e = e * a^(e-1) * a'
      Expr am1 = pow(a, n->pnum - n->pden, n->pden);
      return mul(constant(e), mul(am1, deriv_node(n->a.get())));
    }
    case Kind::Affine:
      return mul(constant(n->alpha), affine(deriv_node(n->a.get()), n->alpha, n->beta));
  }
  throw Error("corrupt expression node");
}

void Expr::print_node(const Node* n, std::string& out) {
  switch (n->kind) {
    case Kind::Const:
      out += fmt_num(n->c);
      return;
    case Kind::Var:
      out += "z";
      return;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div: {
      const char* op = n->kind == Kind::Add   ? "+"
                       : n->kind == Kind::Sub ? "-"
                       : n->kind == Kind::Mul ? "*"
                                              : "/";
      out += "(";
      out += op;
      out += " ";
      print_node(n->a.get(), out);
      out += " ";
      print_node(n->b.get(), out);
      out += ")";
      return;
    }
    case Kind::Sqrt:
      out += "(sqrt ";
      print_node(n->a.get(), out);
      out += ")";
      return;
    case Kind::Pow: {
      out += "(pow ";
      print_node(n->a.get(), out);
      out += " " + std::to_string(n->pnum);
      if (n->pden != 1) out += "/" + std::to_string(n->pden);
      out += ")";
      return;
    }
    case Kind::Affine:
      out += "(affine ";
      print_node(n->a.get(), out);
      out += " " + fmt_num(n->alpha) + " " + fmt_num(n->beta) + ")";
      return;
  }
}

std::string Expr::sexpr() const {
  std::string out;
  print_node(node_.get(), out);
  return out;
}

int Expr::count_var(const Node* n) {
  switch (n->kind) {
    case Kind::Const:
      return 0;
    case Kind::Var:
      return 1;
    default: {
      int c = n->a ? count_var(n->a.get()) : 0;
      if (n->b) c += count_var(n->b.get());
      return c;
    }
  }
}

int Expr::var_occurrences() const { return count_var(node_.get()); }

// ---------------------------------------------------------------------------
// s-expression parser

namespace {

struct Tokenizer {
  const std::string& s;
  size_t i = 0;
  explicit Tokenizer(const std::string& text) : s(text) {}

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool done() {
    skip_ws();
    return i >= s.size();
  }
  std::string next() {
    skip_ws();
    if (i >= s.size()) throw SchemaError("unexpected end of expression");
    char c = s[i];
    if (c == '(' || c == ')') {
      ++i;
      return std::string(1, c);
    }
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(' &&
           s[j] != ')')
      ++j;
    std::string tok = s.substr(i, j - i);
    i = j;
    return tok;
  }
  std::string peek() {
    size_t save = i;
    std::string t = next();
    i = save;
    return t;
  }
};

bool parse_number(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

Expr parse_rec(Tokenizer& tz, const std::map<std::string, double>& params) {
  std::string tok = tz.next();
  if (tok == ")") throw SchemaError("unexpected ')' in expression");
  if (tok != "(") {
    double v;
    if (parse_number(tok, v)) return Expr::constant(v);
    if (tok == "z") return Expr::var();
    auto it = params.find(tok);
    if (it != params.end()) return Expr::constant(it->second);
    throw SchemaError("unknown symbol '" + tok + "' in expression");
  }
  std::string op = tz.next();
  std::vector<Expr> args;
  std::vector<std::string> raw;  // raw tokens for pow/affine tails
  while (true) {
    std::string p = tz.peek();
    if (p == ")") {
      tz.next();
      break;
    }
    if (op == "pow" && args.size() == 1) {
      raw.push_back(tz.next());
      continue;
    }
    if (op == "affine" && args.size() == 1) {
      raw.push_back(tz.next());
      continue;
    }
    args.push_back(parse_rec(tz, params));
  }
  auto need = [&](size_t n, const char* name) {
    if (args.size() != n) throw SchemaError(std::string("operator '") + name + "' arity mismatch");
  };
  if (op == "+") {
    need(2, "+");
    return args[0] + args[1];
  }
  if (op == "-") {
    if (args.size() == 1) return -args[0];
    need(2, "-");
    return args[0] - args[1];
  }
  if (op == "*") {
    need(2, "*");
    return args[0] * args[1];
  }
  if (op == "/") {
    need(2, "/");
    return args[0] / args[1];
  }
  if (op == "sqrt") {
    need(1, "sqrt");
    return Expr::sqrt(args[0]);
  }
  if (op == "pow") {
    need(1, "pow");
    if (raw.size() != 1) throw SchemaError("pow expects one exponent token");
    const std::string& e = raw[0];
    size_t slash = e.find('/');
    try {
      long long num = std::stoll(e.substr(0, slash));
      long long den = slash == std::string::npos ? 1 : std::stoll(e.substr(slash + 1));
      return Expr::pow(args[0], num, den);
    } catch (const std::exception&) {
      throw SchemaError("bad pow exponent '" + e + "'");
    }
  }
  if (op == "affine") {
    need(1, "affine");
    if (raw.size() != 2) throw SchemaError("affine expects two coefficient tokens");
    auto coeff = [&](const std::string& t) {
      double v;
      if (parse_number(t, v)) return v;
      auto it = params.find(t);
      if (it == params.end()) throw SchemaError("unknown symbol '" + t + "' in affine");
      return it->second;
    };
    return Expr::affine(args[0], coeff(raw[0]), coeff(raw[1]));
  }
  throw SchemaError("unknown operator '" + op + "'");
}

}  // namespace

Expr Expr::parse(const std::string& text, const std::map<std::string, double>& params) {
  Tokenizer tz(text);
  Expr e = parse_rec(tz, params);
  if (!tz.done()) throw SchemaError("trailing tokens after expression");
  return e;
}

// ---------------------------------------------------------------------------
// PiecewiseFn

PiecewiseFn::PiecewiseFn(std::vector<FnPiece> pieces, bool allow_discontinuous)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw ModelError("piecewise function needs at least one piece");
  std::sort(pieces_.begin(), pieces_.end(),
            [](const FnPiece& a, const FnPiece& b) { return a.dom.lo < b.dom.lo; });
  for (size_t i = 0; i + 1 < pieces_.size(); ++i) {
    const Interval& a = pieces_[i].dom;
    const Interval& b = pieces_[i + 1].dom;
    if (a.intersects(b)) throw ModelError("piecewise function pieces overlap at " + a.str());
  }
  audit_seams(allow_discontinuous);
}

void PiecewiseFn::audit_seams(bool allow_discontinuous) {
  continuous_ = true;
  for (size_t i = 0; i + 1 < pieces_.size(); ++i) {
    double t = pieces_[i].dom.hi;
    if (t != pieces_[i + 1].dom.lo) {
      continuous_ = false;  // genuine gap in the domain
      continue;
    }
    double vl = pieces_[i].expr.eval(t);
    double vr = pieces_[i + 1].expr.eval(t);
    if (std::abs(vl - vr) > 1e-9) continuous_ = false;
  }
  if (!continuous_ && !allow_discontinuous)
    throw ValidationError("piecewise function is discontinuous at a seam");
}

int PiecewiseFn::piece_index(double z) const {
  for (size_t i = 0; i < pieces_.size(); ++i)
    if (pieces_[i].dom.contains(z)) return static_cast<int>(i);
  return -1;
}

int PiecewiseFn::piece_touching(double z, bool from_left) const {
  // Piece whose closure touches z on the requested side with interior there.
  for (size_t i = 0; i < pieces_.size(); ++i) {
    const Interval& d = pieces_[i].dom;
    if (from_left) {
      if (d.lo < z && z <= d.hi) return static_cast<int>(i);
    } else {
      if (d.lo <= z && z < d.hi) return static_cast<int>(i);
    }
  }
  return -1;
}

double PiecewiseFn::eval(double z) const {
  int i = piece_index(z);
  if (i < 0) {
    // closure fallback: a seam value owned by a half-open neighbour
    int l = piece_touching(z, true), r = piece_touching(z, false);
    if (l >= 0) return pieces_[l].expr.eval(z);
    if (r >= 0) return pieces_[r].expr.eval(z);
    throw DomainError("evaluation outside the function domain");
  }
  return pieces_[i].expr.eval(z);
}

double PiecewiseFn::deriv(double z, Side side) const {
  int l = piece_touching(z, true);
  int r = piece_touching(z, false);
  if (side == Side::Left) {
    if (l < 0) throw DomainError("no piece to the left of evaluation point");
    return pieces_[l].expr.derivative().eval(z);
  }
  if (side == Side::Right) {
    if (r < 0) throw DomainError("no piece to the right of evaluation point");
    return pieces_[r].expr.derivative().eval(z);
  }
  if (l < 0 && r < 0) throw DomainError("derivative outside the function domain");
  if (l < 0) return pieces_[r].expr.derivative().eval(z);
  if (r < 0) return pieces_[l].expr.derivative().eval(z);
  double dl = pieces_[l].expr.derivative().eval(z);
  double dr = pieces_[r].expr.derivative().eval(z);
  if (std::abs(dl - dr) > kTwoSidedTol * (1.0 + std::max(std::abs(dl), std::abs(dr)))) {
    throw KinkError("one-sided derivatives disagree at z=" + fmt_num(z) + ": " + fmt_num(dl) +
                    " vs " + fmt_num(dr));
  }
  return 0.5 * (dl + dr);
}

std::vector<double> PiecewiseFn::breakpoints() const {
  std::vector<double> out;
  for (size_t i = 0; i + 1 < pieces_.size(); ++i)
    if (pieces_[i].dom.hi == pieces_[i + 1].dom.lo) out.push_back(pieces_[i].dom.hi);
  return out;
}

Interval PiecewiseFn::domain_hull() const {
  double lo = pieces_.front().dom.lo;
  double hi = pieces_.back().dom.hi;
  return Interval(lo, hi, std::isfinite(lo) && pieces_.front().dom.lo_closed,
                  std::isfinite(hi) && pieces_.back().dom.hi_closed);
}

void PiecewiseFn::validate() const {
  constexpr int kGridPoints = 1001;
  constexpr double kEdgeNudge = 1e-7;
  constexpr double kTruncate = 1e6;
  for (size_t pi = 0; pi < pieces_.size(); ++pi) {
    const FnPiece& p = pieces_[pi];
    double lo = std::max(p.dom.lo, -kTruncate) + kEdgeNudge;
    double hi = std::min(p.dom.hi, kTruncate) - kEdgeNudge;
    if (!(lo < hi)) continue;  // vanishingly small piece: seam audit covers it
    Expr d = p.expr.derivative();
    for (int k = 0; k < kGridPoints; ++k) {
      double z = lo + (hi - lo) * k / (kGridPoints - 1);
      double v, dv;
      try {
        v = p.expr.eval(z);
        dv = d.eval(z);
      } catch (const DomainError& e) {
        throw ValidationError("piece " + std::to_string(pi) + " undefined at z=" + fmt_num(z) +
                              ": " + e.what());
      }
      if (!std::isfinite(v) || !std::isfinite(dv))
        throw ValidationError("piece " + std::to_string(pi) + " non-finite at z=" + fmt_num(z));
      double h = 1e-6 * (1.0 + std::abs(z));
      double room = std::min(z - (p.dom.lo - kEdgeNudge), (p.dom.hi + kEdgeNudge) - z);
      h = std::min(h, 0.45 * room);
      if (h <= 1e-12) continue;
      double fd;
      try {
        fd = (p.expr.eval(z + h) - p.expr.eval(z - h)) / (2.0 * h);
      } catch (const DomainError&) {
        continue;  // FD stencil straddles the domain edge
      }
      if (std::abs(dv - fd) > 1e-6 * (1.0 + std::abs(dv)) * (1.0 + std::abs(v)))
        throw ValidationError("piece " + std::to_string(pi) + " derivative mismatch at z=" +
                              fmt_num(z) + " (symbolic " + fmt_num(dv) + ", FD " + fmt_num(fd) +
                              ")");
    }
  }
  // seam continuity re-checked with the audit tolerance
  for (size_t i = 0; i + 1 < pieces_.size(); ++i) {
    double t = pieces_[i].dom.hi;
    if (t != pieces_[i + 1].dom.lo) continue;
    double vl = pieces_[i].expr.eval(t);
    double vr = pieces_[i + 1].expr.eval(t);
    if (std::abs(vl - vr) > 1e-9)
      throw ValidationError("discontinuity at seam z=" + fmt_num(t));
  }
}

}  // namespace varreg
