#include "varreg/solver.hpp"

#include <algorithm>
#include <cmath>

namespace varreg {

namespace {

constexpr double kTruncate = 1e6;
constexpr double kResidualAccept = 1e-8;
constexpr double kDedupe = 1e-9;

double box_dist(const Vec& a, const SolutionBox& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    double d = 0.0;
    if (a(i) < b.lo(i)) d = b.lo(i) - a(i);
    if (a(i) > b.hi(i)) d = a(i) - b.hi(i);
    s += d * d;
  }
  return std::sqrt(s);
}

void add_point(SolutionSet& out, const GenEq& ge, const Vec& p, const Vec& z,
               std::vector<int> branch) {
  for (const SolutionBox& b : out.boxes)
    if (box_dist(z, b) <= kDedupe) return;
  for (const Solution& s : out.points)
    if ((s.z - z).norm() <= kDedupe) return;
  double r = ge.residual(p, z);
  if (r > kResidualAccept) return;
  out.points.push_back(Solution{z, r, std::move(branch)});
}

}  // namespace

std::vector<Vec> SolutionSet::sample_points() const {
  std::vector<Vec> out;
  for (const Solution& s : points) out.push_back(s.z);
  for (const SolutionBox& b : boxes) {
    out.push_back(b.lo);
    out.push_back(b.hi);
    out.push_back(0.5 * (b.lo + b.hi));
  }
  return out;
}

// ---------------------------------------------------------------------------
// scalar scan

SolutionSet solve_1d(const GenEq& ge, double p) {
  if (ge.n != 1 || ge.m != 1 || std::abs(ge.B(0, 0) - 1.0) > 1e-14 ||
      std::abs(ge.C(0, 0) - 1.0) > 1e-14)
    throw PreconditionError("scalar solver requires n = m = 1 with B = C = 1");
  SolutionSet out;
  Vec pv(1);
  pv << p;

  // kink locations of f split the scan into smooth windows
  std::vector<double> fkinks;
  if (!ge.f_is_affine()) fkinks = std::get<Sep1DFn>(ge.f).fn.breakpoints();
  auto feval = [&](double z) {
    Vec zz(1);
    zz << z;
    return ge.f_eval(zz)(0);
  };

  const auto& pieces = ge.F.comps[0].pieces();
  for (size_t pi = 0; pi < pieces.size(); ++pi) {
    const GraphPiece& gp = pieces[pi];
    if (const VSeg* s = std::get_if<VSeg>(&gp)) {
      double w = p - feval(s->z0);
      if (s->yiv.dist(w) <= 1e-9) {
        Vec z(1);
        z << s->z0;
        add_point(out, ge, pv, z, {static_cast<int>(pi)});
      }
      continue;
    }
    if (const GPoint* g = std::get_if<GPoint>(&gp)) {
      if (std::abs(feval(g->z0) + g->y0 - p) <= 1e-9) {
        Vec z(1);
        z << g->z0;
        add_point(out, ge, pv, z, {static_cast<int>(pi)});
      }
      continue;
    }
    const Arc& a = std::get<Arc>(gp);
    double L = std::max(a.dom.lo, -kTruncate);
    double H = std::min(a.dom.hi, kTruncate);
    if (L > H) continue;
    // affine f against a polynomial arc: closed-form roots
    if (const AffineFn* afp = std::get_if<AffineFn>(&ge.f)) {
      if (auto pf = ge.F.comps[0].arc_poly(static_cast<int>(pi))) {
        double q2 = pf->c2, q1 = afp->A(0, 0) + pf->c1, q0 = afp->c(0) + pf->c0 - p;
        std::vector<double> roots;
        bool flat = false;
        if (std::abs(q2) <= 1e-14) {
          if (std::abs(q1) <= 1e-14) {
            flat = std::abs(q0) <= 1e-12 * (1.0 + std::abs(p));
          } else {
            roots.push_back(-q0 / q1);
          }
        } else {
          double disc = q1 * q1 - 4.0 * q2 * q0;
          if (disc >= -1e-13 * (q1 * q1 + std::abs(4.0 * q2 * q0) + 1e-30)) {
            double sd = std::sqrt(std::max(0.0, disc));
            roots.push_back((-q1 - sd) / (2.0 * q2));
            roots.push_back((-q1 + sd) / (2.0 * q2));
          }
        }
        if (flat) {
          SolutionBox bx;
          bx.lo = Vec(1);
          bx.hi = Vec(1);
          bx.lo << L;
          bx.hi << H;
          bx.truncated = (a.dom.lo < -kTruncate) || (a.dom.hi > kTruncate);
          out.boxes.push_back(bx);
        } else {
          for (double r : roots) {
            if (r < L - 1e-12 || r > H + 1e-12) continue;
            Vec zr(1);
            zr << std::min(std::max(r, L), H);
            add_point(out, ge, pv, zr, {static_cast<int>(pi)});
          }
        }
        continue;
      }
    }
    auto h = [&](double z) { return feval(z) + a.y.eval(z) - p; };
    if (L == H) {
      if (std::abs(h(L)) <= 1e-9) {
        Vec z(1);
        z << L;
        add_point(out, ge, pv, z, {static_cast<int>(pi)});
      }
      continue;
    }
    // windows between f-kinks
    std::vector<double> cuts{L};
    for (double k : fkinks)
      if (k > L && k < H) cuts.push_back(k);
    cuts.push_back(H);
    std::sort(cuts.begin(), cuts.end());
    for (size_t w = 0; w + 1 < cuts.size(); ++w) {
      double lo = cuts[w], hi = cuts[w + 1];
      // Scan nodes: linear for desk-scale windows; truncated unbounded
      // windows additionally get end-anchored cubic warps so dips near the
      // finite structure are not stepped over by the coarse linear grid.
      const int kScan = 512;
      std::vector<double> nodes;
      nodes.reserve(2 * kScan + 2);
      double span = hi - lo;
      if (span <= 1e3) {
        for (int k = 0; k <= kScan; ++k) nodes.push_back(lo + span * k / kScan);
      } else {
        for (int k = 0; k <= kScan; ++k) {
          double u = static_cast<double>(k) / kScan;
          nodes.push_back(lo + span * u * u * u);
          nodes.push_back(hi - span * u * u * u);
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
      }
      double prev = nodes[0];
      double hprev;
      try {
        hprev = h(prev);
      } catch (const DomainError&) {
        hprev = kInf;
      }
      bool all_zero = std::abs(hprev) <= 1e-12;
      double scale = 1.0 + std::abs(p);
      double near_tol = 1e-7 * scale;
      std::vector<std::pair<double, double>> near_nodes;  // (node, local spacing)
      for (size_t k = 1; k < nodes.size(); ++k) {
        double z = nodes[k];
        double hz;
        try {
          hz = h(z);
        } catch (const DomainError&) {
          prev = z;
          hprev = kInf;
          all_zero = false;
          continue;
        }
        if (std::abs(hz) > 1e-12) all_zero = false;
        if (std::isfinite(hprev) &&
            ((hprev <= 0.0 && hz >= 0.0) || (hprev >= 0.0 && hz <= 0.0))) {
          double blo = prev, bhi = z, flo = hprev;
          for (int it = 0; it < 90; ++it) {
            double mid = 0.5 * (blo + bhi);
            double fm = h(mid);
            if ((flo <= 0.0) == (fm <= 0.0)) {
              blo = mid;
              flo = fm;
            } else {
              bhi = mid;
            }
          }
          Vec zr(1);
          zr << 0.5 * (blo + bhi);
          add_point(out, ge, pv, zr, {static_cast<int>(pi)});
        } else if (std::abs(hz) < near_tol && std::isfinite(hprev) &&
                   (hprev == 0.0 || (hprev > 0.0) == (hz > 0.0))) {
          near_nodes.push_back({z, z - prev});
        }
        prev = z;
        hprev = hz;
      }
      if (all_zero) {
        SolutionBox b;
        b.lo = Vec(1);
        b.hi = Vec(1);
        b.lo << lo;
        b.hi << hi;
        b.truncated = (a.dom.lo < -kTruncate && lo == -kTruncate) ||
                      (a.dom.hi > kTruncate && hi == kTruncate);
        out.boxes.push_back(b);
        continue;
      }
      // tangential near-zeros: golden-section polish of |h|
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      for (auto [z0, sp] : near_nodes) {
        double blo = std::max(lo, z0 - sp);
        double bhi = std::min(hi, z0 + sp);
        double x1 = bhi - gr * (bhi - blo), x2 = blo + gr * (bhi - blo);
        auto av = [&](double z) { return std::abs(h(z)); };
        double f1 = av(x1), f2 = av(x2);
        for (int it = 0; it < 100; ++it) {
          if (f1 < f2) {
            bhi = x2;
            x2 = x1;
            f2 = f1;
            x1 = bhi - gr * (bhi - blo);
            f1 = av(x1);
          } else {
            blo = x1;
            x1 = x2;
            f1 = f2;
            x2 = blo + gr * (bhi - blo);
            f2 = av(x2);
          }
        }
        double zm = 0.5 * (blo + bhi);
        if (av(zm) <= 1e-11 * scale) {
          Vec zr(1);
          zr << zm;
          add_point(out, ge, pv, zr, {static_cast<int>(pi)});
        }
      }
    }
  }
  // drop points swallowed by boxes, sort by z
  auto& pts = out.points;
  pts.erase(std::remove_if(pts.begin(), pts.end(),
                           [&](const Solution& s) {
                             for (const SolutionBox& b : out.boxes)
                               if (box_dist(s.z, b) <= kDedupe) return true;
                             return false;
                           }),
            pts.end());
  std::sort(pts.begin(), pts.end(),
            [](const Solution& a, const Solution& b) { return a.z(0) < b.z(0); });
  return out;
}

// ---------------------------------------------------------------------------
// affine enumeration

namespace {

struct PieceRel {
  // relation for one coordinate: eqs over (x_j, v_j), plus interval bounds
  enum Kind { AffineArc, QuadArc, Segment, PointRel } kind;
  double slope = 0, inter = 0;  // v = slope*x + inter (arc); quad adds curv*x^2
  double curv = 0;
  double z0 = 0;  // segment/point abscissa
  double y0 = 0;  // point ordinate
  Interval bound;  // arc: x-range; segment: v-range
  int piece_index = 0;
};

std::vector<PieceRel> relations_for(const SVMap1& F) {
  std::vector<PieceRel> rels;
  const auto& ps = F.pieces();
  for (size_t i = 0; i < ps.size(); ++i) {
    if (const Arc* a = std::get_if<Arc>(&ps[i])) {
      auto pf = F.arc_poly(static_cast<int>(i));
      if (!pf) throw UnsupportedGeometry("enumeration solver needs polynomial arcs");
      PieceRel r{pf->quadratic() ? PieceRel::QuadArc : PieceRel::AffineArc,
                 pf->c1, pf->c0, pf->c2, 0, 0, a->dom, static_cast<int>(i)};
      rels.push_back(r);
    } else if (const VSeg* s = std::get_if<VSeg>(&ps[i])) {
      rels.push_back(
          PieceRel{PieceRel::Segment, 0, 0, 0, s->z0, 0, s->yiv, static_cast<int>(i)});
    } else {
      const GPoint& g = std::get<GPoint>(ps[i]);
      rels.push_back(PieceRel{PieceRel::PointRel, 0, 0, 0, g.z0, g.y0,
                              Interval::point(g.y0), static_cast<int>(i)});
    }
  }
  return rels;
}

// v_row . x = c0 + c1 (u_row . x) + c2 (u_row . x)^2
struct QuadCon {
  Eigen::RowVectorXd u_row, v_row;
  double c0, c1, c2;
};

}  // namespace

SolutionSet solve_enum(const GenEq& ge, const Vec& p) {
  const AffineFn* af = std::get_if<AffineFn>(&ge.f);
  if (!af) throw PreconditionError("enumeration solver requires affine f");
  const int n = ge.n, m = ge.m;
  std::vector<std::vector<PieceRel>> rels;
  long combos = 1;
  for (int j = 0; j < m; ++j) {
    rels.push_back(relations_for(ge.F.comps[j]));
    combos *= static_cast<long>(rels.back().size());
    if (combos > 100000) throw CapExceeded("assignment enumeration exceeds 1e5 branches");
  }
  SolutionSet out;
  Vec rhs0 = p - af->c;
  std::vector<int> pick(m, 0);
  for (long cidx = 0; cidx < combos; ++cidx) {
    long rem = cidx;
    for (int j = 0; j < m; ++j) {
      pick[j] = static_cast<int>(rem % rels[j].size());
      rem /= rels[j].size();
    }
    // unknowns x = (z, v)
    std::vector<Eigen::RowVectorXd> eq_rows;
    std::vector<double> eq_rhs;
    auto add_eq = [&](const Eigen::RowVectorXd& r, double b) {
      eq_rows.push_back(r);
      eq_rhs.push_back(b);
    };
    for (int i = 0; i < n; ++i) {
      Eigen::RowVectorXd r(n + m);
      r << af->A.row(i), ge.B.row(i);
      add_eq(r, rhs0(i));
    }
    // interval constraints as (row, interval) over x
    std::vector<std::pair<Eigen::RowVectorXd, Interval>> bounds;
    std::vector<QuadCon> quads;
    for (int j = 0; j < m; ++j) {
      const PieceRel& pr = rels[j][pick[j]];
      Eigen::RowVectorXd cx = Eigen::RowVectorXd::Zero(n + m);
      cx.head(n) = ge.C.row(j);
      Eigen::RowVectorXd vj = Eigen::RowVectorXd::Zero(n + m);
      vj(n + j) = 1.0;
      switch (pr.kind) {
        case PieceRel::AffineArc:
          add_eq(vj - pr.slope * cx, pr.inter);
          bounds.emplace_back(cx, pr.bound);
          break;
        case PieceRel::QuadArc:
          quads.push_back(QuadCon{cx, vj, pr.inter, pr.slope, pr.curv});
          bounds.emplace_back(cx, pr.bound);
          break;
        case PieceRel::Segment:
          add_eq(cx, pr.z0);
          bounds.emplace_back(vj, pr.bound);
          break;
        case PieceRel::PointRel:
          add_eq(cx, pr.z0);
          add_eq(vj, pr.y0);
          break;
      }
    }
    Mat M(static_cast<int>(eq_rows.size()), n + m);
    Vec b(static_cast<int>(eq_rows.size()));
    for (size_t r = 0; r < eq_rows.size(); ++r) {
      M.row(static_cast<int>(r)) = eq_rows[r];
      b(static_cast<int>(r)) = eq_rhs[r];
    }
    Eigen::FullPivLU<Mat> lu(M);
    lu.setThreshold(1e-10);
    Vec x0 = lu.solve(b);
    if ((M * x0 - b).norm() > 1e-9 * (1.0 + b.norm())) continue;  // inconsistent
    Mat K = lu.kernel();
    int kdim = (lu.rank() < n + m) ? static_cast<int>(K.cols()) : 0;
    auto quads_ok = [&](const Vec& x) {
      for (const QuadCon& qc : quads) {
        double u = qc.u_row.dot(x);
        double err = qc.v_row.dot(x) - (qc.c0 + qc.c1 * u + qc.c2 * u * u);
        if (std::abs(err) > 1e-8 * (1.0 + std::abs(u) + std::abs(qc.v_row.dot(x)))) return false;
      }
      return true;
    };
    auto bounds_ok = [&](const Vec& x) {
      for (const auto& bc : bounds)
        if (bc.second.dist(bc.first.dot(x)) > 1e-9) return false;
      return true;
    };
    if (kdim == 0) {
      if (bounds_ok(x0) && quads_ok(x0)) add_point(out, ge, p, x0.head(n), pick);
      continue;
    }
    if (kdim > 1) throw UnsupportedGeometry("solution family of dimension >= 2");
    if (!quads.empty()) {
      // one free parameter t; the first effective quadratic relation pins it
      Vec kv = K.col(0);
      bool resolved = false;
      bool infeasible = false;
      for (const QuadCon& qc : quads) {
        double ua = qc.u_row.dot(x0), ub = qc.u_row.dot(kv);
        double va = qc.v_row.dot(x0), vb = qc.v_row.dot(kv);
        double qa = qc.c2 * ub * ub;
        double qb = qc.c1 * ub + 2.0 * qc.c2 * ua * ub - vb;
        double qg = qc.c0 + qc.c1 * ua + qc.c2 * ua * ua - va;
        if (std::abs(qa) <= 1e-12 && std::abs(qb) <= 1e-12) {
          if (std::abs(qg) > 1e-9) infeasible = true;
          continue;  // vacuous along the family
        }
        std::vector<double> ts;
        if (std::abs(qa) <= 1e-12) {
          ts.push_back(-qg / qb);
        } else {
          double disc = qb * qb - 4.0 * qa * qg;
          if (disc >= -1e-12 * (qb * qb + std::abs(4.0 * qa * qg) + 1e-30)) {
            double sd = std::sqrt(std::max(0.0, disc));
            ts.push_back((-qb - sd) / (2.0 * qa));
            ts.push_back((-qb + sd) / (2.0 * qa));
          }
        }
        for (double t : ts) {
          Vec x = x0 + t * kv;
          if (bounds_ok(x) && quads_ok(x)) add_point(out, ge, p, x.head(n), pick);
        }
        resolved = true;
        break;
      }
      if (resolved || infeasible) continue;
      // every quadratic degenerates to an identity: fall through to the
      // interval-family handling below
    }
    Vec k = K.col(0);
    double tlo = -kInf, thi = kInf;
    bool feasible = true;
    for (const auto& bc : bounds) {
      double base = bc.first.dot(x0);
      double dir = bc.first.dot(k);
      if (std::abs(dir) < 1e-12) {
        if (bc.second.dist(base) > 1e-9) feasible = false;
        continue;
      }
      double t1 = (bc.second.lo - base) / dir;
      double t2 = (bc.second.hi - base) / dir;
      if (t1 > t2) std::swap(t1, t2);
      tlo = std::max(tlo, t1);
      thi = std::min(thi, t2);
    }
    if (!feasible || tlo > thi + 1e-12) continue;
    Vec kz = k.head(n);
    if (kz.norm() < 1e-12) {
      double t = std::isfinite(tlo) ? tlo : (std::isfinite(thi) ? thi : 0.0);
      add_point(out, ge, p, (x0 + t * k).head(n), pick);
      continue;
    }
    bool trunc = false;
    if (!std::isfinite(tlo)) {
      tlo = -kTruncate;
      trunc = true;
    }
    if (!std::isfinite(thi)) {
      thi = kTruncate;
      trunc = true;
    }
    Vec zlo = (x0 + tlo * k).head(n);
    Vec zhi = (x0 + thi * k).head(n);
    if ((zhi - zlo).norm() <= kDedupe) {
      add_point(out, ge, p, zlo, pick);
      continue;
    }
    SolutionBox box;
    box.lo = zlo.cwiseMin(zhi);
    box.hi = zlo.cwiseMax(zhi);
    box.truncated = trunc;
    // verify a few samples
    bool ok = ge.residual(p, zlo) <= kResidualAccept && ge.residual(p, zhi) <= kResidualAccept &&
              ge.residual(p, 0.5 * (zlo + zhi)) <= kResidualAccept;
    if (!ok) continue;
    bool dup = false;
    for (const SolutionBox& e : out.boxes)
      if ((e.lo - box.lo).norm() <= kDedupe && (e.hi - box.hi).norm() <= kDedupe) dup = true;
    if (!dup) out.boxes.push_back(box);
  }
  auto& pts = out.points;
  pts.erase(std::remove_if(pts.begin(), pts.end(),
                           [&](const Solution& s) {
                             for (const SolutionBox& bx : out.boxes)
                               if (box_dist(s.z, bx) <= kDedupe) return true;
                             return false;
                           }),
            pts.end());
  std::sort(pts.begin(), pts.end(), [](const Solution& a, const Solution& b) {
    for (int i = 0; i < a.z.size(); ++i) {
      if (a.z(i) < b.z(i) - kDedupe) return true;
      if (a.z(i) > b.z(i) + kDedupe) return false;
    }
    return false;
  });
  return out;
}

SolutionSet solve(const GenEq& ge, const Vec& p) {
  if (ge.n == 1 && ge.m == 1 && std::abs(ge.B(0, 0) - 1.0) <= 1e-14 &&
      std::abs(ge.C(0, 0) - 1.0) <= 1e-14)
    return solve_1d(ge, p(0));
  if (ge.f_is_affine()) return solve_enum(ge, p);
  throw PreconditionError("no solver for this model shape");
}

SolutionSet local_solve(const GenEq& ge, const Vec& p, const Vec& center, double radius) {
  SolutionSet full = solve(ge, p);
  SolutionSet out;
  for (Solution& s : full.points)
    if ((s.z - center).norm() <= radius + 1e-12) out.points.push_back(std::move(s));
  for (SolutionBox& b : full.boxes) {
    Vec probe = center.cwiseMax(b.lo).cwiseMin(b.hi);
    if ((probe - center).norm() > radius + 1e-12) continue;
    // clip per coordinate to the bounding box of the ball
    SolutionBox c = b;
    for (int i = 0; i < c.lo.size(); ++i) {
      c.lo(i) = std::max(c.lo(i), center(i) - radius);
      c.hi(i) = std::min(c.hi(i), center(i) + radius);
    }
    if ((c.hi - c.lo).norm() <= kDedupe) {
      bool dup = false;
      for (const Solution& s : out.points)
        if ((s.z - c.lo).norm() <= kDedupe) dup = true;
      if (!dup) out.points.push_back(Solution{c.lo, ge.residual(p, c.lo), {}});
    } else {
      out.boxes.push_back(std::move(c));
    }
  }
  return out;
}

double solution_excess(const SolutionSet& A, const SolutionSet& B) {
  if (B.empty()) return kInf;
  std::vector<Vec> as = A.sample_points();
  if (as.empty()) return 0.0;
  double sup = 0.0;
  for (const Vec& a : as) {
    double d = kInf;
    for (const Solution& s : B.points) d = std::min(d, (a - s.z).norm());
    for (const SolutionBox& bx : B.boxes) d = std::min(d, box_dist(a, bx));
    sup = std::max(sup, d);
  }
  return sup;
}

}  // namespace varreg
