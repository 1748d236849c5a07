#include "varreg/setvalued.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace varreg {

namespace {

constexpr double kTruncate = 1e6;

double hyp(double a, double b) { return std::sqrt(a * a + b * b); }

struct Span {
  double zlo, zhi;   // closure z-range
  double ybot, ytop; // closure values at zlo / zhi (monotone pieces)
};

Span span_of(const GraphPiece& p) {
  if (const Arc* a = std::get_if<Arc>(&p)) {
    double l = std::max(a->dom.lo, -kTruncate);
    double h = std::min(a->dom.hi, kTruncate);
    double yl = a->y.eval(l), yh = a->y.eval(h);
    return Span{a->dom.lo, a->dom.hi, std::min(yl, yh), std::max(yl, yh)};
  }
  if (const VSeg* s = std::get_if<VSeg>(&p)) return Span{s->z0, s->z0, s->yiv.lo, s->yiv.hi};
  const GPoint& g = std::get<GPoint>(p);
  return Span{g.z0, g.z0, g.y0, g.y0};
}

double piece_zlo(const GraphPiece& p) { return span_of(p).zlo; }

}  // namespace

// ---------------------------------------------------------------------------
// ValueSet

bool ValueSet::contains(double y, double tol) const {
  for (const Interval& iv : parts)
    if (tol > 0.0 ? iv.dist(y) <= tol : iv.contains(y)) return true;
  return false;
}

double ValueSet::dist(double y) const {
  double d = kInf;
  for (const Interval& iv : parts) d = std::min(d, iv.dist(y));
  return d;
}

double ValueSet::min_abs() const { return dist(0.0); }

// ---------------------------------------------------------------------------
// SVMap1

SVMap1::SVMap1(std::vector<GraphPiece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw ModelError("set-valued map needs at least one graph piece");
  std::stable_sort(pieces_.begin(), pieces_.end(), [](const GraphPiece& a, const GraphPiece& b) {
    Span sa = span_of(a), sb = span_of(b);
    if (sa.zlo != sb.zlo) return sa.zlo < sb.zlo;
    return sa.ybot < sb.ybot;
  });
  poly_.resize(pieces_.size());
  for (size_t i = 0; i < pieces_.size(); ++i) {
    const Arc* a = std::get_if<Arc>(&pieces_[i]);
    if (!a) continue;
    double L = std::max(a->dom.lo, -kTruncate);
    double H = std::min(a->dom.hi, kTruncate);
    if (!(L < H)) {
      poly_[i] = PolyFit{a->y.eval(a->dom.clamp_finite(L)), 0, 0};
      continue;
    }
    // exact-fit attempt: 3-point interpolation verified on a denser grid
    double zs[3] = {L, 0.5 * (L + H), H};
    double ys[3];
    bool ok = true;
    for (int k = 0; k < 3 && ok; ++k) {
      try {
        ys[k] = a->y.eval(zs[k]);
      } catch (const DomainError&) {
        ok = false;
      }
    }
    if (!ok) continue;
    // Newton divided differences for the interpolating quadratic
    double d01 = (ys[1] - ys[0]) / (zs[1] - zs[0]);
    double d12 = (ys[2] - ys[1]) / (zs[2] - zs[1]);
    double c2 = (d12 - d01) / (zs[2] - zs[0]);
    double c1 = d01 - c2 * (zs[0] + zs[1]);
    double c0 = ys[0] - zs[0] * (c1 + c2 * zs[0]);
    if (std::abs(c2) < 1e-13 * (1.0 + std::abs(c1)) * (1.0 + std::abs(H - L))) c2 = 0.0;
    for (int k = 0; k < 33 && ok; ++k) {
      double z = L + (H - L) * k / 32.0;
      double v;
      try {
        v = a->y.eval(z);
      } catch (const DomainError&) {
        ok = false;
        break;
      }
      double fit = c0 + z * (c1 + z * c2);
      if (std::abs(fit - v) > 1e-9 * (1.0 + std::abs(v))) ok = false;
    }
    if (ok) poly_[i] = PolyFit{c0, c1, c2};
  }
  audit_closedness();
}

void SVMap1::audit_closedness() {
  closed_ = true;
  auto covered = [&](size_t self, double ze, double ye) {
    for (size_t j = 0; j < pieces_.size(); ++j) {
      if (j == self) continue;
      if (const Arc* a = std::get_if<Arc>(&pieces_[j])) {
        if (!a->dom.contains(ze) &&
            !(a->dom.lo_closed && ze == a->dom.lo) && !(a->dom.hi_closed && ze == a->dom.hi))
          continue;
        try {
          if (std::abs(a->y.eval(ze) - ye) <= 1e-9) return true;
        } catch (const DomainError&) {
        }
      } else if (const VSeg* s = std::get_if<VSeg>(&pieces_[j])) {
        if (std::abs(ze - s->z0) <= 1e-12 && s->yiv.contains(ye, 0.0)) return true;
        if (std::abs(ze - s->z0) <= 1e-12 &&
            ((s->yiv.lo_closed && std::abs(ye - s->yiv.lo) <= 1e-9) ||
             (s->yiv.hi_closed && std::abs(ye - s->yiv.hi) <= 1e-9)))
          return true;
      } else {
        const GPoint& g = std::get<GPoint>(pieces_[j]);
        if (hyp(ze - g.z0, ye - g.y0) <= 1e-9) return true;
      }
    }
    return false;
  };
  for (size_t i = 0; i < pieces_.size(); ++i) {
    if (const Arc* a = std::get_if<Arc>(&pieces_[i])) {
      if (std::isfinite(a->dom.lo) && !a->dom.lo_closed &&
          !covered(i, a->dom.lo, a->y.eval(a->dom.lo)))
        closed_ = false;
      if (std::isfinite(a->dom.hi) && !a->dom.hi_closed &&
          !covered(i, a->dom.hi, a->y.eval(a->dom.hi)))
        closed_ = false;
    } else if (const VSeg* s = std::get_if<VSeg>(&pieces_[i])) {
      if (std::isfinite(s->yiv.lo) && !s->yiv.lo_closed && !covered(i, s->z0, s->yiv.lo))
        closed_ = false;
      if (std::isfinite(s->yiv.hi) && !s->yiv.hi_closed && !covered(i, s->z0, s->yiv.hi))
        closed_ = false;
    }
  }
}

ValueSet SVMap1::values(double z) const {
  std::vector<Interval> parts;
  for (const GraphPiece& p : pieces_) {
    if (const Arc* a = std::get_if<Arc>(&p)) {
      if (a->dom.contains(z)) parts.push_back(Interval::point(a->y.eval(z)));
    } else if (const VSeg* s = std::get_if<VSeg>(&p)) {
      if (z == s->z0) parts.push_back(s->yiv);
    } else {
      const GPoint& g = std::get<GPoint>(p);
      if (z == g.z0) parts.push_back(Interval::point(g.y0));
    }
  }
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  ValueSet vs;
  for (const Interval& iv : parts) {
    if (!vs.parts.empty() && iv.lo <= vs.parts.back().hi) {
      Interval& last = vs.parts.back();
      if (iv.hi > last.hi) {
        last.hi = iv.hi;
        last.hi_closed = iv.hi_closed;
      } else if (iv.hi == last.hi) {
        last.hi_closed = last.hi_closed || iv.hi_closed;
      }
      if (iv.lo == last.lo) last.lo_closed = last.lo_closed || iv.lo_closed;
    } else {
      vs.parts.push_back(iv);
    }
  }
  return vs;
}

ValueSet SVMap1::values_near(double z, double tol) const {
  std::vector<Interval> parts;
  for (const GraphPiece& p : pieces_) {
    if (const Arc* a = std::get_if<Arc>(&p)) {
      if (a->dom.dist(z) <= tol) parts.push_back(Interval::point(a->y.eval(a->dom.clamp(z))));
    } else if (const VSeg* s = std::get_if<VSeg>(&p)) {
      if (std::abs(z - s->z0) <= tol) parts.push_back(s->yiv);
    } else {
      const GPoint& g = std::get<GPoint>(p);
      if (std::abs(z - g.z0) <= tol) parts.push_back(Interval::point(g.y0));
    }
  }
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  ValueSet vs;
  for (const Interval& iv : parts) {
    if (!vs.parts.empty() && iv.lo <= vs.parts.back().hi) {
      if (iv.hi > vs.parts.back().hi) {
        vs.parts.back().hi = iv.hi;
        vs.parts.back().hi_closed = iv.hi_closed;
      }
    } else {
      vs.parts.push_back(iv);
    }
  }
  return vs;
}

std::optional<PolyFit> SVMap1::arc_poly(int piece_index) const {
  return poly_.at(static_cast<size_t>(piece_index));
}

double SVMap1::arc_dist(int idx, double x, double y) const {
  const Arc& a = std::get<Arc>(pieces_[idx]);
  double L = std::max(a.dom.lo, -kTruncate);
  double H = std::min(a.dom.hi, kTruncate);
  if (L > H) return kInf;
  if (L == H) return hyp(L - x, a.y.eval(L) - y);
  const std::optional<PolyFit>& pf = poly_[idx];
  if (pf && pf->c2 == 0.0) {
    // exact line segment
    double c0 = pf->c0, c1 = pf->c1;
    double zs = (x + c1 * (y - c0)) / (1.0 + c1 * c1);
    zs = std::min(std::max(zs, L), H);
    return hyp(zs - x, c0 + c1 * zs - y);
  }
  if (pf) {
    // quadratic arc: stationary points of the squared distance solve a cubic
    double c0 = pf->c0, c1 = pf->c1, c2 = pf->c2;
    double a3 = 2.0 * c2 * c2;
    double a2 = 3.0 * c1 * c2;
    double a1 = 1.0 + c1 * c1 + 2.0 * c2 * (c0 - y);
    double a0 = c1 * (c0 - y) - x;
    auto cubic = [&](double z) { return ((a3 * z + a2) * z + a1) * z + a0; };
    auto value = [&](double z) { return hyp(z - x, c0 + z * (c1 + z * c2) - y); };
    double best = std::min(value(L), value(H));
    const int kGrid = 64;
    double prev_z = L, prev_c = cubic(L);
    for (int k = 1; k <= kGrid; ++k) {
      double z = L + (H - L) * k / kGrid;
      double c = cubic(z);
      if ((prev_c <= 0.0 && c >= 0.0) || (prev_c >= 0.0 && c <= 0.0)) {
        double lo = prev_z, hi = z, flo = prev_c;
        for (int it = 0; it < 80; ++it) {
          double mid = 0.5 * (lo + hi);
          double fm = cubic(mid);
          if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        best = std::min(best, value(0.5 * (lo + hi)));
      }
      prev_z = z;
      prev_c = c;
    }
    return best;
  }
  // generic arc: sampled scan + golden-section refinement
  auto value = [&](double z) {
    try {
      return hyp(z - x, a.y.eval(z) - y);
    } catch (const DomainError&) {
      return kInf;
    }
  };
  double d0 = std::min({value(L), value(H), value(std::min(std::max(x, L), H))});
  double wl = std::max(L, x - d0 - 1.0), wh = std::min(H, x + d0 + 1.0);
  if (wl > wh) return d0;
  const int kGrid = 128;
  std::vector<double> vals(kGrid + 1);
  double best = d0;
  for (int k = 0; k <= kGrid; ++k) {
    double z = wl + (wh - wl) * k / kGrid;
    vals[k] = value(z);
    best = std::min(best, vals[k]);
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int k = 0; k <= kGrid; ++k) {
    bool lmin = (k == 0 || vals[k] <= vals[k - 1]) && (k == kGrid || vals[k] <= vals[k + 1]);
    if (!lmin) continue;
    double lo = wl + (wh - wl) * std::max(k - 1, 0) / kGrid;
    double hi = wl + (wh - wl) * std::min(k + 1, kGrid) / kGrid;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 100; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = value(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = value(x2);
      }
    }
    best = std::min(best, value(0.5 * (lo + hi)));
  }
  return best;
}

double SVMap1::graph_dist(double x, double y) const {
  double best = kInf;
  for (size_t i = 0; i < pieces_.size(); ++i) {
    if (std::holds_alternative<Arc>(pieces_[i])) {
      best = std::min(best, arc_dist(static_cast<int>(i), x, y));
    } else if (const VSeg* s = std::get_if<VSeg>(&pieces_[i])) {
      best = std::min(best, hyp(x - s->z0, s->yiv.dist(y)));
    } else {
      const GPoint& g = std::get<GPoint>(pieces_[i]);
      best = std::min(best, hyp(x - g.z0, y - g.y0));
    }
  }
  return best;
}

std::vector<std::pair<double, double>> SVMap1::sample_near(double x, double y, double radius,
                                                           int per_piece) const {
  std::vector<std::pair<double, double>> out;
  double slack = radius * (1.0 + 1e-9) + 1e-15;
  for (const GraphPiece& p : pieces_) {
    if (const Arc* a = std::get_if<Arc>(&p)) {
      double L = std::max({a->dom.lo, -kTruncate, x - radius});
      double H = std::min({a->dom.hi, kTruncate, x + radius});
      if (L > H) continue;
      for (int k = 0; k < per_piece; ++k) {
        double z = per_piece == 1 ? 0.5 * (L + H) : L + (H - L) * k / (per_piece - 1);
        double v;
        try {
          v = a->y.eval(z);
        } catch (const DomainError&) {
          continue;
        }
        if (!a->dom.contains(z) && !(z == a->dom.lo && a->dom.lo_closed) &&
            !(z == a->dom.hi && a->dom.hi_closed))
          if (!a->dom.contains(z, 0.0))
            continue;
        if (hyp(z - x, v - y) <= slack) out.emplace_back(z, v);
      }
    } else if (const VSeg* s = std::get_if<VSeg>(&p)) {
      double dx = std::abs(x - s->z0);
      if (dx > radius) continue;
      double dy = std::sqrt(std::max(radius * radius - dx * dx, 0.0));
      double L = std::max({s->yiv.lo, -kTruncate, y - dy});
      double H = std::min({s->yiv.hi, kTruncate, y + dy});
      if (L > H) continue;
      for (int k = 0; k < per_piece; ++k) {
        double v = per_piece == 1 ? 0.5 * (L + H) : L + (H - L) * k / (per_piece - 1);
        out.emplace_back(s->z0, v);
      }
    } else {
      const GPoint& g = std::get<GPoint>(p);
      if (hyp(x - g.z0, y - g.y0) <= slack) out.emplace_back(g.z0, g.y0);
    }
  }
  return out;
}

std::string SVMap1::describe() const {
  std::ostringstream os;
  for (const GraphPiece& p : pieces_) {
    if (const Arc* a = std::get_if<Arc>(&p))
      os << "arc " << a->dom.str() << " " << a->y.sexpr() << "; ";
    else if (const VSeg* s = std::get_if<VSeg>(&p))
      os << "vseg z=" << s->z0 << " " << s->yiv.str() << "; ";
    else {
      const GPoint& g = std::get<GPoint>(p);
      os << "point (" << g.z0 << ", " << g.y0 << "); ";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// monotonicity

namespace {

// closure value of an arc at t (arcs are continuous on their closure)
double arc_at(const GraphPiece& p, double t) { return std::get<Arc>(p).y.eval(t); }

bool is_arc(const GraphPiece& p) { return std::holds_alternative<Arc>(p); }

double at_min(const GraphPiece& p, double t) {
  if (is_arc(p)) return arc_at(p, t);
  if (const VSeg* s = std::get_if<VSeg>(&p)) return s->yiv.lo;
  return std::get<GPoint>(p).y0;
}

double at_max(const GraphPiece& p, double t) {
  if (is_arc(p)) return arc_at(p, t);
  if (const VSeg* s = std::get_if<VSeg>(&p)) return s->yiv.hi;
  return std::get<GPoint>(p).y0;
}

}  // namespace

bool is_monotone(const SVMap1& F) {
  const auto& ps = F.pieces();
  const double tol = 1e-10;
  // each arc nondecreasing
  for (const GraphPiece& p : ps) {
    const Arc* a = std::get_if<Arc>(&p);
    if (!a) continue;
    double L = std::max(a->dom.lo, -kTruncate), H = std::min(a->dom.hi, kTruncate);
    if (L >= H) continue;
    Expr d = a->y.derivative();
    for (int k = 0; k <= 200; ++k) {
      double z = L + (H - L) * k / 200.0;
      try {
        if (d.eval(z) < -1e-9) return false;
      } catch (const DomainError&) {
        double h = (H - L) * 1e-6;
        if (a->y.eval(std::min(z + h, H)) < a->y.eval(std::max(z - h, L)) - tol) return false;
      }
    }
  }
  std::vector<Span> spans;
  spans.reserve(ps.size());
  for (const GraphPiece& p : ps) spans.push_back(span_of(p));
  for (size_t i = 0; i < ps.size(); ++i) {
    for (size_t j = i + 1; j < ps.size(); ++j) {
      size_t pi = i, qi = j;
      if (spans[qi].zlo < spans[pi].zlo) std::swap(pi, qi);
      const Span& P = spans[pi];
      const Span& Q = spans[qi];
      double lo = std::max(P.zlo, Q.zlo), hi = std::min(P.zhi, Q.zhi);
      if (lo < hi) return false;  // interior z-overlap between distinct pieces
      if (hi < lo) {              // strict gap: P entirely left of Q
        if (P.ytop > Q.ybot + tol) return false;
        continue;
      }
      double t = lo;  // spans touch at t
      const GraphPiece& X = ps[pi];
      const GraphPiece& Y = ps[qi];
      bool xl = P.zlo < t, xr = P.zhi > t;
      bool yl = Q.zlo < t, yr = Q.zhi > t;
      // values approached from the left must not exceed values at/right of t
      if (xl && arc_at(X, t) > at_min(Y, t) + tol) return false;
      if (yl && arc_at(Y, t) > at_min(X, t) + tol) return false;
      if (xr && at_max(Y, t) > arc_at(X, t) + tol) return false;
      if (yr && at_max(X, t) > arc_at(Y, t) + tol) return false;
      if (xl && yr && arc_at(X, t) > arc_at(Y, t) + tol) return false;
      if (yl && xr && arc_at(Y, t) > arc_at(X, t) + tol) return false;
    }
  }
  return true;
}

bool is_maximal_monotone(const SVMap1& F) {
  if (!is_monotone(F)) throw PreconditionError("maximality audit requires a monotone map");
  const auto& ps = F.pieces();
  std::vector<Span> spans;
  for (const GraphPiece& p : ps) spans.push_back(span_of(p));
  std::vector<size_t> order(ps.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (spans[a].zlo != spans[b].zlo) return spans[a].zlo < spans[b].zlo;
    return spans[a].ybot < spans[b].ybot;
  });
  for (size_t k = 0; k + 1 < order.size(); ++k) {
    const Span& a = spans[order[k]];
    const Span& b = spans[order[k + 1]];
    if (!std::isfinite(a.zhi)) return false;  // a gap must follow an infinite arm
    if (std::abs(a.zhi - b.zlo) > 1e-9 || std::abs(a.ytop - b.ybot) > 1e-9) return false;
  }
  const Span& first = spans[order.front()];
  const Span& last = spans[order.back()];
  bool down = !std::isfinite(first.zlo) || !std::isfinite(first.ybot);
  bool up = !std::isfinite(last.zhi) || !std::isfinite(last.ytop);
  return down && up;
}

// ---------------------------------------------------------------------------
// inverse

namespace {

// Invert e(u) = t for u, where the variable occurs exactly once in e.
// Returns candidate expressions in the free variable standing for t.
void invert_chain(const Expr& e, const Expr& t, std::vector<Expr>& out) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Var:
      out.push_back(t);
      return;
    case K::Const:
      throw UnsupportedGeometry("cannot invert a constant expression");
    case K::Add: {
      Expr a = e.child_a(), b = e.child_b();
      if (a.var_occurrences() > 0)
        invert_chain(a, t - b, out);
      else
        invert_chain(b, t - a, out);
      return;
    }
    case K::Sub: {
      Expr a = e.child_a(), b = e.child_b();
      if (a.var_occurrences() > 0)
        invert_chain(a, t + b, out);
      else
        invert_chain(b, a - t, out);
      return;
    }
    case K::Mul: {
      Expr a = e.child_a(), b = e.child_b();
      if (a.var_occurrences() > 0) {
        if (b.is_constant() && b.constant_value() == 0.0)
          throw UnsupportedGeometry("cannot invert multiplication by zero");
        invert_chain(a, t / b, out);
      } else {
        if (a.is_constant() && a.constant_value() == 0.0)
          throw UnsupportedGeometry("cannot invert multiplication by zero");
        invert_chain(b, t / a, out);
      }
      return;
    }
    case K::Div: {
      Expr a = e.child_a(), b = e.child_b();
      if (a.var_occurrences() > 0)
        invert_chain(a, t * b, out);
      else
        invert_chain(b, a / t, out);
      return;
    }
    case K::Sqrt:
      invert_chain(e.child_a(), t * t, out);
      return;
    case K::Pow: {
      long long p = e.pow_num(), q = e.pow_den();
      std::vector<Expr> targets;
      targets.push_back(Expr::pow(t, q, p));
      if (p % 2 == 0 || q % 2 == 0) targets.push_back(-Expr::pow(-t, q, p));
      for (const Expr& nt : targets) {
        try {
          invert_chain(e.child_a(), nt, out);
        } catch (const UnsupportedGeometry&) {
        }
      }
      if (out.empty()) throw UnsupportedGeometry("power inversion produced no candidates");
      return;
    }
    case K::Affine: {
      std::vector<Expr> inner;
      invert_chain(e.child_a(), t, inner);
      for (const Expr& w : inner)
        out.push_back((w - Expr::constant(e.affine_beta())) / Expr::constant(e.affine_alpha()));
      return;
    }
  }
  throw UnsupportedGeometry("unsupported node in arc inversion");
}

// monotone sub-arc of `a` on [s0, s1]; returns the inverted arc
Arc invert_subarc(const Arc& a, const std::optional<PolyFit>& pf, double s0, double s1,
                  bool lo_closed, bool hi_closed) {
  double L = std::max(s0, -kTruncate), H = std::min(s1, kTruncate);
  double ymidlo = a.y.eval(L), ymidhi = a.y.eval(H);
  bool increasing = ymidhi >= ymidlo;
  // saturation guard for infinite domains: the value range must keep growing
  auto range_end = [&](double s, double at_trunc) -> double {
    if (std::isfinite(s)) return a.y.eval(s);
    double probe = a.y.eval(at_trunc > 0 ? 1e5 : -1e5);
    if (std::abs(at_trunc - probe) < 1e-3 * (1.0 + std::abs(at_trunc)))
      throw UnsupportedGeometry("arc value saturates; inverse range is ambiguous");
    return at_trunc > probe ? kInf : -kInf;
  };
  double ylo_end = range_end(s0, ymidlo);
  double yhi_end = range_end(s1, ymidhi);

  std::vector<Expr> candidates;
  if (pf && pf->c2 == 0.0 && pf->c1 != 0.0) {
    candidates.push_back((Expr::var() - Expr::constant(pf->c0)) / Expr::constant(pf->c1));
  } else if (pf && pf->quadratic()) {
    double vertex = -pf->c1 / (2.0 * pf->c2);
    double mid = 0.5 * (L + H);
    double sgn = (mid >= vertex) ? 1.0 : -1.0;
    if (pf->c2 < 0.0) sgn = -sgn;
    Expr disc = Expr::constant(pf->c1 * pf->c1 - 4.0 * pf->c2 * pf->c0) +
                Expr::constant(4.0 * pf->c2) * Expr::var();
    candidates.push_back((Expr::constant(-pf->c1) + Expr::constant(sgn) * Expr::sqrt(disc)) /
                         Expr::constant(2.0 * pf->c2));
  } else if (a.y.var_occurrences() == 1) {
    invert_chain(a.y, Expr::var(), candidates);
  } else {
    throw UnsupportedGeometry("arc is not symbolically invertible: " + a.y.sexpr());
  }

  for (const Expr& inv : candidates) {
    bool ok = true;
    for (int k = 1; k < 32 && ok; ++k) {
      double z = L + (H - L) * k / 32.0;
      try {
        double y = a.y.eval(z);
        double back = inv.eval(y);
        if (std::abs(back - z) > 1e-7 * (1.0 + std::abs(z))) ok = false;
      } catch (const DomainError&) {
        ok = false;
      }
    }
    if (!ok) continue;
    double rlo = std::min(ylo_end, yhi_end), rhi = std::max(ylo_end, yhi_end);
    bool rlo_closed = increasing ? lo_closed : hi_closed;
    bool rhi_closed = increasing ? hi_closed : lo_closed;
    if (!std::isfinite(rlo)) rlo_closed = false;
    if (!std::isfinite(rhi)) rhi_closed = false;
    if (rlo == rhi) {
      rlo_closed = rhi_closed = true;  // degenerate range collapses to a point
    }
    return Arc{Interval(rlo, rhi, rlo_closed, rhi_closed), inv};
  }
  throw UnsupportedGeometry("arc inversion failed numeric validation: " + a.y.sexpr());
}

}  // namespace

SVMap1 inverse(const SVMap1& F) {
  std::vector<GraphPiece> out;
  const auto& ps = F.pieces();
  for (size_t i = 0; i < ps.size(); ++i) {
    if (const GPoint* g = std::get_if<GPoint>(&ps[i])) {
      out.push_back(GPoint{g->y0, g->z0});
      continue;
    }
    if (const VSeg* s = std::get_if<VSeg>(&ps[i])) {
      out.push_back(Arc{s->yiv, Expr::constant(s->z0)});
      continue;
    }
    const Arc& a = std::get<Arc>(ps[i]);
    std::optional<PolyFit> pf = F.arc_poly(static_cast<int>(i));
    double L = std::max(a.dom.lo, -kTruncate), H = std::min(a.dom.hi, kTruncate);
    // constant arc -> vertical segment
    bool constant = pf && pf->c1 == 0.0 && pf->c2 == 0.0;
    if (!pf) {
      constant = true;
      double v0 = a.y.eval(L);
      for (int k = 1; k <= 16 && constant; ++k)
        if (std::abs(a.y.eval(L + (H - L) * k / 16.0) - v0) > 1e-12) constant = false;
    }
    if (constant) {
      out.push_back(VSeg{a.y.eval(0.5 * (L + H)), a.dom});
      continue;
    }
    // split at interior stationary points
    std::vector<double> cuts;
    Expr d = a.y.derivative();
    if (pf && pf->quadratic()) {
      double v = -pf->c1 / (2.0 * pf->c2);
      if (v > L && v < H) cuts.push_back(v);
    } else {
      const int kScan = 512;
      double prev = L, fprev = d.eval(L);
      for (int k = 1; k <= kScan; ++k) {
        double z = L + (H - L) * k / kScan;
        double fz = d.eval(z);
        if ((fprev < 0.0 && fz > 0.0) || (fprev > 0.0 && fz < 0.0)) {
          double lo = prev, hi = z, flo = fprev;
          for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = d.eval(mid);
            if ((flo <= 0.0) == (fm <= 0.0)) {
              lo = mid;
              flo = fm;
            } else
              hi = mid;
          }
          cuts.push_back(0.5 * (lo + hi));
        }
        prev = z;
        fprev = fz;
      }
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> knots;
    knots.push_back(a.dom.lo);
    for (double c : cuts) knots.push_back(c);
    knots.push_back(a.dom.hi);
    for (size_t k = 0; k + 1 < knots.size(); ++k) {
      bool lc = (k == 0) ? a.dom.lo_closed : true;
      bool hc = (k + 2 == knots.size()) ? a.dom.hi_closed : true;
      out.push_back(invert_subarc(a, pf, knots[k], knots[k + 1], lc, hc));
    }
  }
  return SVMap1(std::move(out));
}

SVMap1 reflect_values(const SVMap1& F) {
  std::vector<GraphPiece> out;
  for (const GraphPiece& p : F.pieces()) {
    if (const Arc* a = std::get_if<Arc>(&p)) {
      out.push_back(Arc{a->dom, -a->y});
    } else if (const VSeg* s = std::get_if<VSeg>(&p)) {
      out.push_back(VSeg{s->z0, Interval(-s->yiv.hi, -s->yiv.lo, s->yiv.hi_closed,
                                         s->yiv.lo_closed)});
    } else {
      const GPoint& g = std::get<GPoint>(p);
      out.push_back(GPoint{g.z0, -g.y0});
    }
  }
  return SVMap1(std::move(out));
}

// ---------------------------------------------------------------------------
// product + excess

bool SVProd::graph_closed() const {
  for (const SVMap1& f : comps)
    if (!f.graph_closed()) return false;
  return true;
}

double SVProd::graph_dist(const std::vector<double>& x, const std::vector<double>& v) const {
  if (x.size() != comps.size() || v.size() != comps.size())
    throw PreconditionError("product graph distance dimension mismatch");
  double s = 0.0;
  for (size_t j = 0; j < comps.size(); ++j) {
    double d = comps[j].graph_dist(x[j], v[j]);
    s += d * d;
  }
  return std::sqrt(s);
}

double excess(const std::vector<double>& A, const std::vector<Interval>& B) {
  if (B.empty()) return kInf;
  if (A.empty()) return 0.0;
  double sup = 0.0;
  for (double a : A) {
    double d = kInf;
    for (const Interval& iv : B) d = std::min(d, iv.dist(a));
    sup = std::max(sup, d);
  }
  return sup;
}

}  // namespace varreg
