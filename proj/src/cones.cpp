#include "varreg/cones.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace varreg {

namespace {

constexpr double kAngTol = 1e-9;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Vec2 unit(const Vec2& v) {
  double n = v.norm();
  if (n == 0.0) throw ModelError("zero direction in cone piece");
  Vec2 u = v / n;
  // snap signed zeros so angle sorting cannot split -0 from +0
  if (u.x() == 0.0) u.x() = 0.0;
  if (u.y() == 0.0) u.y() = 0.0;
  return u;
}

Vec2 rot_ccw(const Vec2& v) { return Vec2(-v.y(), v.x()); }
Vec2 rot_cw(const Vec2& v) { return Vec2(v.y(), -v.x()); }

bool same_dir(const Vec2& a, const Vec2& b, double tol = kAngTol) {
  return (a - b).norm() <= tol;
}

Vec2 line_canon(Vec2 g) {
  if (std::abs(g.x()) > kAngTol) {
    if (g.x() < 0.0) g = -g;
  } else if (g.y() < 0.0) {
    g = -g;
  }
  return g;
}

int type_rank(const ConePiece& p) { return static_cast<int>(p.index()); }

double angle_key(const ConePiece& p) {
  if (const RayPiece* r = std::get_if<RayPiece>(&p)) return std::atan2(r->g.y(), r->g.x());
  if (const LinePiece* l = std::get_if<LinePiece>(&p)) return std::atan2(l->g.y(), l->g.x());
  if (const SectorPiece* s = std::get_if<SectorPiece>(&p)) return std::atan2(s->g1.y(), s->g1.x());
  return 0.0;
}

bool ray_in_sector(const Vec2& g, const SectorPiece& s, double tol) {
  double den = cross(s.g1, s.g2);
  double mu = cross(g, s.g2) / den;
  double nu = cross(s.g1, g) / den;
  return mu >= -tol && nu >= -tol;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cone2 construction + canonical form

Cone2 Cone2::full() {
  Cone2 c;
  c.pieces_ = {FullPiece{}};
  return c;
}

Cone2 Cone2::of(std::vector<ConePiece> pieces) {
  Cone2 c;
  c.pieces_ = std::move(pieces);
  c.canonicalize();
  return c;
}

Cone2 Cone2::ray(double gx, double gy) { return of({RayPiece{Vec2(gx, gy)}}); }
Cone2 Cone2::line(double gx, double gy) { return of({LinePiece{Vec2(gx, gy)}}); }
Cone2 Cone2::sector(double ax, double ay, double bx, double by) {
  return of({SectorPiece{Vec2(ax, ay), Vec2(bx, by)}});
}

bool Cone2::is_origin() const {
  return pieces_.size() == 1 && std::holds_alternative<OriginPiece>(pieces_[0]);
}
bool Cone2::is_full() const {
  return pieces_.size() == 1 && std::holds_alternative<FullPiece>(pieces_[0]);
}

void Cone2::canonicalize() {
  std::vector<ConePiece> in = std::move(pieces_);
  pieces_.clear();
  bool full = false;
  std::vector<RayPiece> rays;
  std::vector<LinePiece> lines;
  std::vector<SectorPiece> sectors;
  for (ConePiece& p : in) {
    if (std::holds_alternative<FullPiece>(p)) {
      full = true;
    } else if (std::holds_alternative<OriginPiece>(p)) {
      // contributes nothing beyond the apex
    } else if (RayPiece* r = std::get_if<RayPiece>(&p)) {
      rays.push_back(RayPiece{unit(r->g)});
    } else if (LinePiece* l = std::get_if<LinePiece>(&p)) {
      lines.push_back(LinePiece{line_canon(unit(l->g))});
    } else {
      SectorPiece s = std::get<SectorPiece>(p);
      s.g1 = unit(s.g1);
      s.g2 = unit(s.g2);
      double c = cross(s.g1, s.g2);
      if (std::abs(c) <= kAngTol) {
        if (s.g1.dot(s.g2) > 0.0) {
          rays.push_back(RayPiece{s.g1});  // degenerate sector
          continue;
        }
        throw ModelError("sector spanning a half-plane is ambiguous");
      }
      if (c < 0.0) std::swap(s.g1, s.g2);
      sectors.push_back(s);
    }
  }
  if (full) {
    pieces_ = {FullPiece{}};
    return;
  }
  // merge opposite rays into lines
  for (size_t i = 0; i < rays.size(); ++i) {
    for (size_t j = i + 1; j < rays.size(); ++j) {
      if (same_dir(rays[i].g, -rays[j].g)) {
        lines.push_back(LinePiece{line_canon(rays[i].g)});
        rays.erase(rays.begin() + j);
        rays.erase(rays.begin() + i);
        --i;
        break;
      }
    }
  }
  // drop rays lying on a kept line
  auto on_some_line = [&](const Vec2& g) {
    for (const LinePiece& l : lines)
      if (same_dir(g, l.g) || same_dir(g, -l.g)) return true;
    return false;
  };
  rays.erase(std::remove_if(rays.begin(), rays.end(),
                            [&](const RayPiece& r) { return on_some_line(r.g); }),
             rays.end());
  // drop rays inside a sector
  rays.erase(std::remove_if(rays.begin(), rays.end(),
                            [&](const RayPiece& r) {
                              for (const SectorPiece& s : sectors)
                                if (ray_in_sector(r.g, s, kAngTol)) return true;
                              return false;
                            }),
             rays.end());
  // dedupe
  auto dedupe = [](auto& v, auto eq) {
    for (size_t i = 0; i < v.size(); ++i)
      for (size_t j = i + 1; j < v.size();) {
        if (eq(v[i], v[j]))
          v.erase(v.begin() + j);
        else
          ++j;
      }
  };
  dedupe(rays, [](const RayPiece& a, const RayPiece& b) { return same_dir(a.g, b.g); });
  dedupe(lines, [](const LinePiece& a, const LinePiece& b) { return same_dir(a.g, b.g); });
  dedupe(sectors, [](const SectorPiece& a, const SectorPiece& b) {
    return same_dir(a.g1, b.g1) && same_dir(a.g2, b.g2);
  });
  for (const RayPiece& r : rays) pieces_.push_back(r);
  for (const LinePiece& l : lines) pieces_.push_back(l);
  for (const SectorPiece& s : sectors) pieces_.push_back(s);
  if (pieces_.empty()) {
    pieces_.push_back(OriginPiece{});
    return;
  }
  std::sort(pieces_.begin(), pieces_.end(), [](const ConePiece& a, const ConePiece& b) {
    if (type_rank(a) != type_rank(b)) return type_rank(a) < type_rank(b);
    return angle_key(a) < angle_key(b) - 1e-15;
  });
}

bool Cone2::contains(const Vec2& v, double tol) const {
  double n = v.norm();
  if (n <= tol) return true;
  Vec2 u = v / n;
  for (const ConePiece& p : pieces_) {
    if (std::holds_alternative<FullPiece>(p)) return true;
    if (std::holds_alternative<OriginPiece>(p)) continue;
    if (const RayPiece* r = std::get_if<RayPiece>(&p)) {
      if (std::abs(cross(u, r->g)) <= tol && u.dot(r->g) >= -tol) return true;
    } else if (const LinePiece* l = std::get_if<LinePiece>(&p)) {
      if (std::abs(cross(u, l->g)) <= tol) return true;
    } else {
      const SectorPiece& s = std::get<SectorPiece>(p);
      if (ray_in_sector(u, s, tol)) return true;
    }
  }
  return false;
}

bool Cone2::structurally_equal(const Cone2& other, double tol) const {
  if (pieces_.size() != other.pieces_.size()) return false;
  for (size_t i = 0; i < pieces_.size(); ++i) {
    const ConePiece& a = pieces_[i];
    const ConePiece& b = other.pieces_[i];
    if (a.index() != b.index()) return false;
    if (const RayPiece* ra = std::get_if<RayPiece>(&a)) {
      if (!same_dir(ra->g, std::get<RayPiece>(b).g, tol)) return false;
    } else if (const LinePiece* la = std::get_if<LinePiece>(&a)) {
      if (!same_dir(la->g, std::get<LinePiece>(b).g, tol)) return false;
    } else if (const SectorPiece* sa = std::get_if<SectorPiece>(&a)) {
      const SectorPiece& sb = std::get<SectorPiece>(b);
      if (!same_dir(sa->g1, sb.g1, tol) || !same_dir(sa->g2, sb.g2, tol)) return false;
    }
  }
  return true;
}

Cone2 Cone2::unite(const Cone2& other) const {
  std::vector<ConePiece> all = pieces_;
  all.insert(all.end(), other.pieces_.begin(), other.pieces_.end());
  return of(std::move(all));
}

std::vector<Vec2> Cone2::sample_dirs(int per_sector) const {
  std::vector<Vec2> out;
  for (const ConePiece& p : pieces_) {
    if (std::holds_alternative<FullPiece>(p)) {
      for (int k = 0; k < 8; ++k) {
        double th = 2.0 * M_PI * k / 8.0;
        out.emplace_back(std::cos(th), std::sin(th));
      }
    } else if (const RayPiece* r = std::get_if<RayPiece>(&p)) {
      out.push_back(r->g);
    } else if (const LinePiece* l = std::get_if<LinePiece>(&p)) {
      out.push_back(l->g);
      out.push_back(-l->g);
    } else if (const SectorPiece* s = std::get_if<SectorPiece>(&p)) {
      double a1 = std::atan2(s->g1.y(), s->g1.x());
      double span = std::atan2(cross(s->g1, s->g2), s->g1.dot(s->g2));
      if (span < 0) span += 2.0 * M_PI;
      for (int k = 0; k < per_sector; ++k) {
        double th = a1 + span * k / (per_sector - 1);
        out.emplace_back(std::cos(th), std::sin(th));
      }
    }
  }
  if (out.empty()) out.emplace_back(0.0, 0.0);
  return out;
}

std::vector<Vec2> Cone2::boundary_dirs() const {
  std::vector<Vec2> out;
  for (const ConePiece& p : pieces_) {
    if (const RayPiece* r = std::get_if<RayPiece>(&p)) {
      out.push_back(r->g);
    } else if (const LinePiece* l = std::get_if<LinePiece>(&p)) {
      out.push_back(l->g);
      out.push_back(-l->g);
    } else if (const SectorPiece* s = std::get_if<SectorPiece>(&p)) {
      out.push_back(s->g1);
      out.push_back(s->g2);
    }
  }
  return out;
}

std::vector<Interval> Cone2::slice_at(double u) const {
  // {w : (u, w) in cone}
  std::vector<Interval> parts;
  auto push_point = [&](double w) { parts.push_back(Interval::point(w)); };
  for (const ConePiece& p : pieces_) {
    if (std::holds_alternative<FullPiece>(p)) {
      parts.push_back(Interval::all());
    } else if (std::holds_alternative<OriginPiece>(p)) {
      if (u == 0.0) push_point(0.0);
    } else if (const RayPiece* r = std::get_if<RayPiece>(&p)) {
      double gx = r->g.x(), gy = r->g.y();
      if (std::abs(gx) <= kAngTol) {
        if (u == 0.0) {
          if (gy > 0)
            parts.push_back(Interval::at_least(0.0));
          else
            parts.push_back(Interval::at_most(0.0));
        }
      } else {
        double lam = u / gx;
        if (lam >= 0.0) push_point(lam * gy);
      }
    } else if (const LinePiece* l = std::get_if<LinePiece>(&p)) {
      double gx = l->g.x(), gy = l->g.y();
      if (std::abs(gx) <= kAngTol) {
        if (u == 0.0) parts.push_back(Interval::all());
      } else {
        push_point(u * gy / gx);
      }
    } else {
      const SectorPiece& s = std::get<SectorPiece>(p);
      // {mu g1 + nu g2 : mu, nu >= 0, mu g1x + nu g2x = u}
      double a = s.g1.x(), b = s.g2.x();
      double c = s.g1.y(), d = s.g2.y();
      if (u == 0.0) {
        push_point(0.0);
        if (std::abs(a) <= kAngTol) {
          if (c > 0)
            parts.push_back(Interval::at_least(0.0));
          else
            parts.push_back(Interval::at_most(0.0));
        }
        if (std::abs(b) <= kAngTol) {
          if (d > 0)
            parts.push_back(Interval::at_least(0.0));
          else
            parts.push_back(Interval::at_most(0.0));
        }
        continue;
      }
      std::vector<double> ends;
      bool up = false, down = false;
      // boundary ray contributions
      if (std::abs(a) > kAngTol && u / a >= 0.0) ends.push_back(u * c / a);
      if (std::abs(b) > kAngTol && u / b >= 0.0) ends.push_back(u * d / b);
      // interior vertical direction makes the slice unbounded
      Vec2 vup(0, 1), vdown(0, -1);
      if (ray_in_sector(vup, s, kAngTol)) up = true;
      if (ray_in_sector(vdown, s, kAngTol)) down = true;
      if (ends.empty() && !(up || down)) continue;  // slice empty
      // need at least one feasible point to anchor an unbounded slice
      if (ends.empty()) continue;
      double lo = *std::min_element(ends.begin(), ends.end());
      double hi = *std::max_element(ends.begin(), ends.end());
      parts.push_back(Interval(down ? -kInf : lo, up ? kInf : hi, !down, !up));
    }
  }
  // merge
  std::sort(parts.begin(), parts.end(),
            [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> merged;
  for (const Interval& iv : parts) {
    if (!merged.empty() && iv.lo <= merged.back().hi) {
      if (iv.hi > merged.back().hi) {
        merged.back().hi = iv.hi;
        merged.back().hi_closed = iv.hi_closed;
      }
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

std::string Cone2::str() const {
  std::ostringstream os;
  bool first = true;
  for (const ConePiece& p : pieces_) {
    if (!first) os << " | ";
    first = false;
    if (std::holds_alternative<OriginPiece>(p))
      os << "origin";
    else if (std::holds_alternative<FullPiece>(p))
      os << "full";
    else if (const RayPiece* r = std::get_if<RayPiece>(&p))
      os << "ray(" << r->g.x() << "," << r->g.y() << ")";
    else if (const LinePiece* l = std::get_if<LinePiece>(&p))
      os << "line(" << l->g.x() << "," << l->g.y() << ")";
    else {
      const SectorPiece& s = std::get<SectorPiece>(p);
      os << "sector((" << s.g1.x() << "," << s.g1.y() << "),(" << s.g2.x() << "," << s.g2.y()
         << "))";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// polar via iterated half-plane clipping of a convex accumulator

namespace {

struct CC {
  enum T { Full, Half, Sector, Ray, Line, Origin } t = Full;
  Vec2 a{0, 0}, b{0, 0};  // Half: outward normal in a; Sector: ccw rays a->b
};

CC clip(const CC& cc, const Vec2& n) {
  const double tol = kAngTol;
  auto inside = [&](const Vec2& v) { return v.dot(n) <= tol; };
  switch (cc.t) {
    case CC::Full:
      return CC{CC::Half, n, Vec2(0, 0)};
    case CC::Half: {
      const Vec2& m = cc.a;
      double cr = cross(m, n);
      if (std::abs(cr) <= tol && m.dot(n) > 0.0) return cc;                     // same half
      if (std::abs(cr) <= tol) return CC{CC::Line, rot_ccw(n), Vec2(0, 0)};     // opposite
      Vec2 dm = inside(rot_ccw(m)) ? rot_ccw(m) : rot_cw(m);
      Vec2 dn = rot_ccw(n).dot(m) <= tol ? rot_ccw(n) : rot_cw(n);
      if (cross(dn, dm) > 0.0) return CC{CC::Sector, dn, dm};
      return CC{CC::Sector, dm, dn};
    }
    case CC::Sector: {
      bool ain = inside(cc.a), bin = inside(cc.b);
      SectorPiece sp{cc.a, cc.b};
      Vec2 d1 = rot_ccw(n), d2 = rot_cw(n);
      bool d1in = ray_in_sector(d1, sp, tol), d2in = ray_in_sector(d2, sp, tol);
      Vec2 dcross = d1in ? d1 : d2;
      bool have_cross = d1in || d2in;
      if (ain && bin) return cc;
      if (!ain && !bin) {
        if (have_cross) return CC{CC::Ray, dcross, Vec2(0, 0)};
        return CC{CC::Origin, Vec2(0, 0), Vec2(0, 0)};
      }
      if (ain) {
        if (!have_cross || same_dir(dcross, cc.a, tol)) return CC{CC::Ray, cc.a, Vec2(0, 0)};
        return CC{CC::Sector, cc.a, dcross};
      }
      if (!have_cross || same_dir(dcross, cc.b, tol)) return CC{CC::Ray, cc.b, Vec2(0, 0)};
      return CC{CC::Sector, dcross, cc.b};
    }
    case CC::Ray:
      if (inside(cc.a)) return cc;
      return CC{CC::Origin, Vec2(0, 0), Vec2(0, 0)};
    case CC::Line: {
      bool p = cc.a.dot(n) <= tol, q = (-cc.a).dot(n) <= tol;
      if (p && q) return cc;
      if (p) return CC{CC::Ray, cc.a, Vec2(0, 0)};
      if (q) return CC{CC::Ray, -cc.a, Vec2(0, 0)};
      return CC{CC::Origin, Vec2(0, 0), Vec2(0, 0)};
    }
    case CC::Origin:
      return cc;
  }
  return cc;
}

Cone2 cc_to_cone(const CC& cc) {
  switch (cc.t) {
    case CC::Full:
      return Cone2::full();
    case CC::Half: {
      Vec2 d1 = rot_ccw(cc.a), d2 = rot_cw(cc.a), mid = -cc.a;
      return Cone2::of({SectorPiece{d1, mid}, SectorPiece{mid, d2}});
    }
    case CC::Sector:
      return Cone2::of({SectorPiece{cc.a, cc.b}});
    case CC::Ray:
      return Cone2::of({RayPiece{cc.a}});
    case CC::Line:
      return Cone2::of({LinePiece{cc.a}});
    case CC::Origin:
      return Cone2::origin();
  }
  return Cone2::origin();
}

}  // namespace

Cone2 polar(const Cone2& K) {
  std::vector<Vec2> normals;
  for (const ConePiece& p : K.pieces()) {
    if (std::holds_alternative<FullPiece>(p)) return Cone2::origin();
    if (std::holds_alternative<OriginPiece>(p)) continue;
    if (const RayPiece* r = std::get_if<RayPiece>(&p)) {
      normals.push_back(r->g);
    } else if (const LinePiece* l = std::get_if<LinePiece>(&p)) {
      normals.push_back(l->g);
      normals.push_back(-l->g);
    } else {
      const SectorPiece& s = std::get<SectorPiece>(p);
      normals.push_back(s.g1);
      normals.push_back(s.g2);
    }
  }
  CC cc;  // Full
  for (const Vec2& n : normals) cc = clip(cc, unit(n));
  return cc_to_cone(cc);
}

Cone2 negate(const Cone2& K) {
  std::vector<ConePiece> out;
  for (const ConePiece& p : K.pieces()) {
    if (const RayPiece* r = std::get_if<RayPiece>(&p))
      out.push_back(RayPiece{-r->g});
    else if (const SectorPiece* s = std::get_if<SectorPiece>(&p))
      out.push_back(SectorPiece{-s->g1, -s->g2});
    else
      out.push_back(p);
  }
  return Cone2::of(std::move(out));
}

Cone2 linear_map(const Cone2& K, const Eigen::Matrix2d& M) {
  if (std::abs(M.determinant()) < 1e-12)
    throw PreconditionError("linear_map requires an invertible matrix");
  std::vector<ConePiece> out;
  for (const ConePiece& p : K.pieces()) {
    if (const RayPiece* r = std::get_if<RayPiece>(&p))
      out.push_back(RayPiece{M * r->g});
    else if (const LinePiece* l = std::get_if<LinePiece>(&p))
      out.push_back(LinePiece{M * l->g});
    else if (const SectorPiece* s = std::get_if<SectorPiece>(&p))
      out.push_back(SectorPiece{M * s->g1, M * s->g2});
    else
      out.push_back(p);
  }
  return Cone2::of(std::move(out));
}

Cone2 coderivative_graph(const SVMap1& F, double x, double y) {
  // (xi, w) with (w, -xi) in N: rotate normal-cone pieces by +90 degrees
  Eigen::Matrix2d R;
  R << 0, -1, 1, 0;
  return linear_map(limiting_normal_at(F, x, y), R);
}

// ---------------------------------------------------------------------------
// exact tangent/normal cones from the piece classification

namespace {

enum TouchKind {
  kArcInterior,
  kArcLeftEnd,
  kArcRightEnd,
  kVSegInterior,
  kVSegBottom,
  kVSegTop,
  kIsolated
};

struct Touch {
  TouchKind kind;
  double slope = 0.0;
};

std::vector<Touch> classify(const SVMap1& F, double x, double y) {
  const double tol = 1e-9;
  std::vector<Touch> touches;
  for (const GraphPiece& p : F.pieces()) {
    if (const Arc* a = std::get_if<Arc>(&p)) {
      if (a->dom.dist(x) > tol) continue;
      double zc = a->dom.clamp(x);
      double v;
      try {
        v = a->y.eval(zc);
      } catch (const DomainError&) {
        continue;
      }
      if (std::abs(v - y) > tol) continue;
      double s = a->y.derivative().eval(zc);
      bool at_left = std::isfinite(a->dom.lo) && std::abs(x - a->dom.lo) <= tol;
      bool at_right = std::isfinite(a->dom.hi) && std::abs(x - a->dom.hi) <= tol;
      if (at_left && at_right)
        touches.push_back({kIsolated, 0.0});  // degenerate arc
      else if (at_left)
        touches.push_back({kArcLeftEnd, s});
      else if (at_right)
        touches.push_back({kArcRightEnd, s});
      else
        touches.push_back({kArcInterior, s});
    } else if (const VSeg* s = std::get_if<VSeg>(&p)) {
      if (std::abs(x - s->z0) > tol || s->yiv.dist(y) > tol) continue;
      bool at_bot = std::isfinite(s->yiv.lo) && std::abs(y - s->yiv.lo) <= tol;
      bool at_top = std::isfinite(s->yiv.hi) && std::abs(y - s->yiv.hi) <= tol;
      if (at_bot && at_top)
        touches.push_back({kIsolated, 0.0});
      else if (at_bot)
        touches.push_back({kVSegBottom, 0.0});
      else if (at_top)
        touches.push_back({kVSegTop, 0.0});
      else
        touches.push_back({kVSegInterior, 0.0});
    } else {
      const GPoint& g = std::get<GPoint>(p);
      if (std::hypot(x - g.z0, y - g.y0) <= tol) touches.push_back({kIsolated, 0.0});
    }
  }
  if (touches.empty())
    throw ModelError("point (" + std::to_string(x) + ", " + std::to_string(y) +
                     ") is not on the graph");
  if (touches.size() > 4)
    throw UnsupportedGeometry("more than four graph pieces meet at the point");
  return touches;
}

}  // namespace

Cone2 contingent_at(const SVMap1& F, double x, double y) {
  std::vector<ConePiece> pieces;
  for (const Touch& t : classify(F, x, y)) {
    switch (t.kind) {
      case kArcInterior:
        pieces.push_back(LinePiece{Vec2(1.0, t.slope)});
        break;
      case kArcLeftEnd:
        pieces.push_back(RayPiece{Vec2(1.0, t.slope)});
        break;
      case kArcRightEnd:
        pieces.push_back(RayPiece{Vec2(-1.0, -t.slope)});
        break;
      case kVSegInterior:
        pieces.push_back(LinePiece{Vec2(0.0, 1.0)});
        break;
      case kVSegBottom:
        pieces.push_back(RayPiece{Vec2(0.0, 1.0)});
        break;
      case kVSegTop:
        pieces.push_back(RayPiece{Vec2(0.0, -1.0)});
        break;
      case kIsolated:
        break;
    }
  }
  if (pieces.empty()) return Cone2::origin();
  return Cone2::of(std::move(pieces));
}

Cone2 paratingent_at(const SVMap1& F, double x, double y) {
  // Inward unit rays of the branches leaving the point; an interior touch
  // contributes both halves of its edge.
  std::vector<Vec2> rays;
  for (const Touch& t : classify(F, x, y)) {
    switch (t.kind) {
      case kArcInterior:
        rays.push_back(Vec2(1.0, t.slope).normalized());
        rays.push_back(Vec2(-1.0, -t.slope).normalized());
        break;
      case kArcLeftEnd:
        rays.push_back(Vec2(1.0, t.slope).normalized());
        break;
      case kArcRightEnd:
        rays.push_back(Vec2(-1.0, -t.slope).normalized());
        break;
      case kVSegInterior:
        rays.push_back(Vec2(0.0, 1.0));
        rays.push_back(Vec2(0.0, -1.0));
        break;
      case kVSegBottom:
        rays.push_back(Vec2(0.0, 1.0));
        break;
      case kVSegTop:
        rays.push_back(Vec2(0.0, -1.0));
        break;
      case kIsolated:
        break;
    }
  }
  if (rays.empty()) return Cone2::origin();
  // Same-branch point pairs give the full tangent lines; pairs on distinct
  // branches give every direction in cone{r_i, -r_j} (difference quotients
  // with moving base points), which is a sector when the rays are
  // independent.
  std::vector<ConePiece> pieces;
  for (const Vec2& r : rays) pieces.push_back(LinePiece{r});
  for (size_t i = 0; i < rays.size(); ++i) {
    for (size_t j = 0; j < rays.size(); ++j) {
      if (i == j) continue;
      Vec2 u = rays[i], w = -rays[j];
      double cross = u.x() * w.y() - u.y() * w.x();
      if (std::abs(cross) <= 1e-12) continue;  // parallel: inside the lines
      if (cross > 0.0)
        pieces.push_back(SectorPiece{u, w});
      else
        pieces.push_back(SectorPiece{w, u});
    }
  }
  return Cone2::of(std::move(pieces));
}

Cone2 frechet_normal_at(const SVMap1& F, double x, double y) {
  return polar(contingent_at(F, x, y));
}

Cone2 limiting_normal_at(const SVMap1& F, double x, double y) {
  // normals attainable along the adjoining piece interiors, plus the
  // Frechet normals at the point itself
  std::vector<ConePiece> pieces;
  for (const Touch& t : classify(F, x, y)) {
    switch (t.kind) {
      case kArcInterior:
      case kArcLeftEnd:
      case kArcRightEnd:
        pieces.push_back(LinePiece{Vec2(-t.slope, 1.0)});
        break;
      case kVSegInterior:
      case kVSegBottom:
      case kVSegTop:
        pieces.push_back(LinePiece{Vec2(1.0, 0.0)});
        break;
      case kIsolated:
        break;
    }
  }
  Cone2 interior = pieces.empty() ? Cone2::origin() : Cone2::of(std::move(pieces));
  return interior.unite(frechet_normal_at(F, x, y));
}

// ---------------------------------------------------------------------------
// definition-based sampled membership

bool numeric_member(ConeKind kind, const SVMap1& F, double x, double y, const Vec2& v) {
  double nv = v.norm();
  if (nv <= 1e-15) return true;
  Vec2 u = v / nv;
  const double accept = 1e-3;

  auto t_values = []() {
    std::vector<double> ts;
    for (int k = 3; k <= 20; ++k) ts.push_back(std::ldexp(1.0, -k));
    return ts;
  };

  switch (kind) {
    case ConeKind::Contingent: {
      double best = kInf;
      for (double t : t_values()) {
        double d = F.graph_dist(x + t * u.x(), y + t * u.y()) / t;
        best = std::min(best, d);
      }
      return best <= accept;
    }
    case ConeKind::Paratingent: {
      // moving-base difference quotients: some graph point a within O(t)
      // of (x, y) must land back on the graph at a + t v.  Bases are kept
      // at the scale of t so unrelated graph features cannot certify, and
      // the best base is refined along the graph until the quotient
      // settles.
      for (int k = 8; k <= 20; ++k) {
        double t = std::ldexp(1.0, -k);
        auto probe = [&](double ax, double ay) {
          return F.graph_dist(ax + t * u.x(), ay + t * u.y()) / t;
        };
        double d = probe(x, y);
        std::pair<double, double> base{x, y};
        for (double r : {0.5 * t, t, 2.0 * t, 4.0 * t})
          for (const auto& a : F.sample_near(x, y, r, 9)) {
            double da = probe(a.first, a.second);
            if (da < d) {
              d = da;
              base = a;
            }
          }
        for (double rho = t; d > 0.25 * accept && rho > 1e-4 * t; rho *= 0.5)
          for (const auto& a : F.sample_near(base.first, base.second, rho, 7)) {
            double da = probe(a.first, a.second);
            if (da < d) {
              d = da;
              base = a;
            }
          }
        if (d <= accept) return true;
      }
      return false;
    }
    case ConeKind::FrechetNormal: {
      double worst = -kInf;
      for (int k = 5; k <= 20; ++k) {
        double r = std::ldexp(1.0, -k);
        for (const auto& q : F.sample_near(x, y, r, 8)) {
          double dx = q.first - x, dy = q.second - y;
          double nq = std::hypot(dx, dy);
          if (nq < 1e-13) continue;
          worst = std::max(worst, (u.x() * dx + u.y() * dy) / nq);
        }
      }
      return worst <= accept;
    }
    case ConeKind::LimitingNormal: {
      std::vector<std::pair<double, double>> bases;
      for (int k = 4; k <= 16; k += 2) {
        double r = std::ldexp(1.0, -k);
        for (const auto& q : F.sample_near(x, y, r, 5)) bases.push_back(q);
      }
      bases.emplace_back(x, y);
      // dedupe coarse
      std::sort(bases.begin(), bases.end());
      bases.erase(std::unique(bases.begin(), bases.end(),
                              [](const auto& a, const auto& b) {
                                return std::hypot(a.first - b.first, a.second - b.second) < 1e-12;
                              }),
                  bases.end());
      for (const auto& b : bases) {
        double worst = -kInf;
        for (int k = 6; k <= 18; ++k) {
          double r = std::ldexp(1.0, -k);
          for (const auto& q : F.sample_near(b.first, b.second, r, 6)) {
            double dx = q.first - b.first, dy = q.second - b.second;
            double nq = std::hypot(dx, dy);
            if (nq < 1e-13) continue;
            worst = std::max(worst, (u.x() * dx + u.y() * dy) / nq);
          }
        }
        if (worst <= accept && worst > -kInf) return true;
        if (worst == -kInf && std::hypot(b.first - x, b.second - y) < 1e-12) {
          // isolated point: every direction is a Frechet normal there
          return true;
        }
      }
      return false;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// mapping norms of a planar positively homogeneous map

double outer_norm(const Cone2& graph) {
  double sup = 0.0;
  for (double u : {1.0, -1.0, 0.0}) {
    for (const Interval& iv : graph.slice_at(u)) {
      if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) return kInf;
      sup = std::max({sup, std::abs(iv.lo), std::abs(iv.hi)});
    }
  }
  return sup;
}

double inner_norm(const Cone2& graph) {
  double sup = 0.0;
  for (double u : {1.0, -1.0}) {
    auto parts = graph.slice_at(u);
    if (parts.empty()) return kInf;  // inf over empty set
    double inf = kInf;
    for (const Interval& iv : parts) inf = std::min(inf, iv.dist(0.0));
    sup = std::max(sup, inf);
  }
  return sup;
}

}  // namespace varreg
