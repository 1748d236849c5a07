#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "varreg/cones.hpp"
#include "varreg/geneq.hpp"

using namespace varreg;

namespace {

Expr Z() { return Expr::var(); }

Cone2 qi() { return Cone2::sector(1, 0, 0, 1); }
Cone2 qii() { return Cone2::sector(0, 1, -1, 0); }
Cone2 qiii() { return Cone2::sector(-1, 0, 0, -1); }
Cone2 qiv() { return Cone2::sector(0, -1, 1, 0); }

double ang_dist(const Vec2& a, const Vec2& b) {
  return std::abs(std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b)));
}

// the clamp branch of the example models under test
SVMap1 diac_clamp() {
  auto [ge, refs] = example("diac");
  return ge.F.comps[0];
}

// arc along the positive z-axis plus a vertical segment up the y-axis
SVMap1 axes_map() {
  return SVMap1({Arc{Interval::at_least(0.0), Expr::constant(0.0)},
                 VSeg{0.0, Interval::at_least(0.0)}});
}

// brute-force mapping norms through slice_at on a dense |u| <= 1 grid
std::pair<double, double> norms_by_slices(const Cone2& K) {
  double outer = 0.0, inner = 0.0;
  for (int k = -1000; k <= 1000; ++k) {
    double u = k / 1000.0;
    auto parts = K.slice_at(u);
    if (parts.empty()) {
      inner = kInf;
      continue;
    }
    double worst = 0.0, best = kInf;
    for (const Interval& iv : parts) {
      worst = std::max({worst, std::abs(iv.lo), std::abs(iv.hi)});
      best = std::min(best, iv.contains(0.0, 1e-15) ? 0.0 : std::min(std::abs(iv.lo), std::abs(iv.hi)));
    }
    outer = std::max(outer, worst);
    inner = std::max(inner, best);
  }
  return {outer, inner};
}

void check_numeric_agreement(const SVMap1& F, double x, double y, int ndirs) {
  using ExactFn = std::function<Cone2(const SVMap1&, double, double)>;
  const std::vector<std::pair<ConeKind, ExactFn>> kinds = {
      {ConeKind::Contingent, contingent_at},
      {ConeKind::Paratingent, paratingent_at},
      {ConeKind::FrechetNormal, frechet_normal_at},
      {ConeKind::LimitingNormal, limiting_normal_at}};
  for (const auto& [kind, exact] : kinds) {
    Cone2 K = exact(F, x, y);
    auto bnd = K.boundary_dirs();
    for (int k = 0; k < ndirs; ++k) {
      double th = 2.0 * M_PI * k / ndirs + 0.0137;
      Vec2 v(std::cos(th), std::sin(th));
      bool near_boundary = false;
      for (const Vec2& b : bnd)
        if (ang_dist(v, b) < 1e-2) near_boundary = true;
      if (near_boundary) continue;
      bool ex = K.contains(v);
      bool nm = numeric_member(kind, F, x, y, v);
      CHECK_MESSAGE(ex == nm, "kind=", static_cast<int>(kind), " at (", x, ",", y,
                    ") dir angle=", th, " exact=", ex, " sampled=", nm);
    }
  }
}

}  // namespace

TEST_CASE("tangent cones at clamp junctions and smooth points") {
  SVMap1 F = diac_clamp();

  // corner where the vertical segment meets the upper arc
  Cone2 t_top = contingent_at(F, 0.0, 1.0);
  CHECK(t_top.structurally_equal(Cone2::ray(0, -1).unite(Cone2::ray(1, 0))));

  // interior of the vertical segment: a full vertical line
  CHECK(contingent_at(F, 0.0, 0.0).structurally_equal(Cone2::line(0, 1)));

  // smooth arc interior: the tangent line with the arc's slope
  auto [gz, rz] = example("scr_zener");
  const SVMap1& scr = gz.F.comps[0];
  double y45 = scr.values(0.45).parts[0].lo;
  CHECK(y45 == doctest::Approx(0.46125).epsilon(1e-12));
  CHECK(contingent_at(scr, 0.45, y45).structurally_equal(Cone2::line(1.0, 0.45 - 1.2)));
  // smooth points: no extra limiting directions, normals coincide
  CHECK(paratingent_at(scr, 0.45, y45).structurally_equal(contingent_at(scr, 0.45, y45)));
  CHECK(limiting_normal_at(scr, 0.45, y45)
            .structurally_equal(frechet_normal_at(scr, 0.45, y45)));
  CHECK(frechet_normal_at(scr, 0.45, y45).structurally_equal(Cone2::line(0.45 - 1.2, -1.0)));

  // flat arc interior of the clamp
  CHECK(contingent_at(F, 2.0, 1.0).structurally_equal(Cone2::line(1, 0)));
}

TEST_CASE("paratingent cones pick up cross-branch sectors at junctions") {
  SVMap1 F = diac_clamp();

  // lower corner: branch rays (-1,0) and (0,1); secants between the two
  // branches sweep the third and first quadrants
  Cone2 tp = paratingent_at(F, 0.0, -1.0);
  Cone2 expect = Cone2::line(1, 0).unite(Cone2::line(0, 1)).unite(qiii()).unite(qi());
  CHECK(tp.structurally_equal(expect));
  CHECK(tp.contains(Vec2(-0.6, -0.8)));
  CHECK(tp.contains(Vec2(0.6, 0.8)));
  CHECK_FALSE(tp.contains(Vec2(-0.6, 0.8)));

  // axes example: branch rays (1,0) and (0,1) give second/fourth quadrants
  Cone2 tpa = paratingent_at(axes_map(), 0.0, 0.0);
  CHECK(tpa.structurally_equal(Cone2::line(1, 0).unite(Cone2::line(0, 1)).unite(qii()).unite(qiv())));

  // the contingent cone is always a subset of the paratingent cone
  for (const Vec2& v : contingent_at(F, 0.0, -1.0).sample_dirs())
    CHECK(tp.contains(v, 1e-7));
}

TEST_CASE("regular and limiting normal cones at clamp corners") {
  SVMap1 F = diac_clamp();

  // regular normals polar to the tangent rays at the top corner
  CHECK(frechet_normal_at(F, 0.0, 1.0).structurally_equal(qii()));

  // limiting normals add the line limits from both adjoining branches
  Cone2 n_bot = limiting_normal_at(F, 0.0, -1.0);
  CHECK(n_bot.structurally_equal(Cone2::line(1, 0).unite(Cone2::line(0, 1)).unite(qiv())));
  Cone2 n_top = limiting_normal_at(F, 0.0, 1.0);
  CHECK(n_top.structurally_equal(Cone2::line(1, 0).unite(Cone2::line(0, 1)).unite(qii())));

  // axes junction
  CHECK(limiting_normal_at(axes_map(), 0.0, 0.0)
            .structurally_equal(Cone2::line(1, 0).unite(Cone2::line(0, 1)).unite(qiii())));
  CHECK(frechet_normal_at(axes_map(), 0.0, 0.0).structurally_equal(qiii()));

  // regular normals embed into limiting normals
  for (const Vec2& v : frechet_normal_at(F, 0.0, -1.0).sample_dirs())
    CHECK(n_bot.contains(v, 1e-7));

  // coderivative graph is the limiting normal cone rotated a quarter turn
  Eigen::Matrix2d rot;
  rot << 0, -1, 1, 0;
  CHECK(coderivative_graph(F, 0.0, 1.0).structurally_equal(linear_map(n_top, rot)));
}

TEST_CASE("polar cone algebra") {
  CHECK(polar(Cone2::full()).is_origin());
  CHECK(polar(Cone2::origin()).is_full());

  // polar of a single ray is a half-plane, stored as two sectors
  CHECK(polar(Cone2::ray(1, 0)).structurally_equal(qii().unite(qiii())));

  // polar of a line is the perpendicular line
  CHECK(polar(Cone2::line(1, 2)).structurally_equal(Cone2::line(-2, 1)));

  // bipolar identity on a convex sector
  CHECK(polar(polar(qi())).structurally_equal(qi()));

  // polar of the first-quadrant sector is the third-quadrant sector
  CHECK(polar(qi()).structurally_equal(qiii()));

  // negation flips sectors through the origin
  CHECK(negate(qi()).structurally_equal(qiii()));
  CHECK(negate(Cone2::line(1, 2)).structurally_equal(Cone2::line(1, 2)));
}

TEST_CASE("cone canonicalization, unions, and linear images") {
  // opposite rays merge into a line
  CHECK(Cone2::ray(1, 0).unite(Cone2::ray(-1, 0)).structurally_equal(Cone2::line(1, 0)));
  CHECK(Cone2::of({RayPiece{Vec2(0, 1)}, RayPiece{Vec2(0, -1)}}).structurally_equal(Cone2::line(0, 1)));

  // rays inside a sector are dropped
  CHECK(qi().unite(Cone2::ray(1, 1)).structurally_equal(qi()));

  // anything united with the full plane is the full plane
  CHECK(qi().unite(Cone2::full()).is_full());

  // rotation by a quarter turn
  Eigen::Matrix2d rot;
  rot << 0, -1, 1, 0;
  CHECK(linear_map(Cone2::ray(1, 0), rot).structurally_equal(Cone2::ray(0, 1)));
  CHECK(linear_map(qi(), rot).structurally_equal(qii()));
  CHECK(linear_map(Cone2::line(1, 0), rot).structurally_equal(Cone2::line(0, 1)));

  // shear maps rays to rays
  Eigen::Matrix2d shear;
  shear << 1, 1, 0, 1;
  CHECK(linear_map(Cone2::ray(0, 1), shear).structurally_equal(Cone2::ray(1, 1)));

  // sampled directions always lie in their cone; boundary directions are
  // reported for sectors
  Cone2 mix = Cone2::ray(0, -1).unite(qi());
  for (const Vec2& v : mix.sample_dirs()) CHECK(mix.contains(v, 1e-9));
  bool saw10 = false, saw01 = false;
  for (const Vec2& b : qi().boundary_dirs()) {
    if (ang_dist(b, Vec2(1, 0)) < 1e-9) saw10 = true;
    if (ang_dist(b, Vec2(0, 1)) < 1e-9) saw01 = true;
  }
  CHECK(saw10);
  CHECK(saw01);
}

TEST_CASE("cone slices and mapping norms") {
  // line with slope two: slice is a single point
  auto s = Cone2::line(1, 2).slice_at(1.0);
  REQUIRE(s.size() == 1);
  CHECK(s[0].lo == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s[0].hi == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s[0].lo_closed);

  // vertical ray: slice at zero is the closed upper half-line
  auto sv = Cone2::ray(0, 1).slice_at(0.0);
  REQUIRE(sv.size() == 1);
  CHECK(sv[0].lo == 0.0);
  CHECK(sv[0].lo_closed);
  CHECK(std::isinf(sv[0].hi));
  CHECK_FALSE(sv[0].hi_closed);

  // sector slices: empty outside the shadow of the sector
  CHECK(qi().slice_at(-0.5).empty());
  auto sq = qi().slice_at(1.0);
  REQUIRE(sq.size() == 1);
  CHECK(sq[0].lo == 0.0);
  CHECK(std::isinf(sq[0].hi));

  // frozen norms
  CHECK(outer_norm(Cone2::line(1, 2)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(inner_norm(Cone2::line(1, 2)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isinf(outer_norm(Cone2::line(0, 1))));
  CHECK(std::isinf(inner_norm(Cone2::line(0, 1))));
  SVMap1 F = diac_clamp();
  Cone2 t_bot = contingent_at(F, 0.0, -1.0);
  CHECK(std::isinf(outer_norm(t_bot)));
  CHECK(std::isinf(inner_norm(t_bot)));

  // dense slice oracle agrees on a spread of shapes
  for (const Cone2& K : {Cone2::line(1, 2), qi(), t_bot, Cone2::full(), Cone2::ray(0, 1),
                         Cone2::line(1, 0).unite(Cone2::ray(0, -1))}) {
    auto [outer_ref, inner_ref] = norms_by_slices(K);
    double o = outer_norm(K), i = inner_norm(K);
    if (std::isinf(outer_ref))
      CHECK(std::isinf(o));
    else
      CHECK(o == doctest::Approx(outer_ref).epsilon(1e-9));
    if (std::isinf(inner_ref))
      CHECK(std::isinf(i));
    else
      CHECK(i == doctest::Approx(inner_ref).epsilon(1e-9));
  }
}

TEST_CASE("sampled membership oracle agrees with the exact classification") {
  SVMap1 F = diac_clamp();
  check_numeric_agreement(F, 0.0, 1.0, 48);
  check_numeric_agreement(F, 0.0, -1.0, 48);
  check_numeric_agreement(F, 2.0, 1.0, 32);
  check_numeric_agreement(axes_map(), 0.0, 0.0, 48);
}

TEST_CASE("monotone graphs put tangents and normals in signed quadrants") {
  const char* names[] = {"regulator", "diac", "scr_zener", "sampling_gate", "scr_alone", "led_pair"};
  int tested = 0;
  for (const char* nm : names) {
    auto [ge, refs] = example(nm);
    for (const SVMap1& c : ge.F.comps) {
      if (!is_monotone(c) || !is_maximal_monotone(c)) continue;
      for (double x : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
        ValueSet vs = c.values(x);
        if (vs.empty()) continue;
        std::vector<double> ys;
        for (const Interval& iv : vs.parts) {
          if (std::isfinite(iv.lo)) ys.push_back(iv.lo);
          if (iv.hi != iv.lo && std::isfinite(iv.hi)) ys.push_back(iv.hi);
        }
        for (double y : ys) {
          // secant limits of a monotone graph never enter the open
          // second/fourth quadrants; normals never enter the first/third
          for (const Vec2& v : paratingent_at(c, x, y).sample_dirs())
            CHECK(v.x() * v.y() >= -1e-9);
          for (const Vec2& v : limiting_normal_at(c, x, y).sample_dirs())
            CHECK(v.x() * v.y() <= 1e-9);
          ++tested;
        }
      }
    }
  }
  CHECK(tested >= 10);
}

TEST_CASE("degenerate and rejected inputs") {
  SVMap1 F = diac_clamp();
  CHECK_THROWS_AS(contingent_at(F, 5.0, 0.0), ModelError);
  CHECK_THROWS_AS(frechet_normal_at(F, 0.5, 0.2), ModelError);

  // isolated graph point: only the zero tangent, every normal
  SVMap1 iso({GPoint{0.5, 2.0}});
  CHECK(contingent_at(iso, 0.5, 2.0).is_origin());
  CHECK(paratingent_at(iso, 0.5, 2.0).is_origin());
  CHECK(frechet_normal_at(iso, 0.5, 2.0).is_full());
  CHECK(limiting_normal_at(iso, 0.5, 2.0).is_full());

  // five branches through one point exceed the supported junction size
  SVMap1 spray({Arc{Interval::closed(0.0, 1.0), Z()},
                Arc{Interval::closed(0.0, 1.0), Expr::constant(2.0) * Z()},
                Arc{Interval::closed(0.0, 1.0), Expr::constant(3.0) * Z()},
                Arc{Interval::closed(-1.0, 0.0), -Z()},
                VSeg{0.0, Interval::closed(-1.0, 0.0)}});
  CHECK_THROWS_AS(contingent_at(spray, 0.0, 0.0), UnsupportedGeometry);
}
