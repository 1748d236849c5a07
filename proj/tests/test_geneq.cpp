#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "varreg/gedoc.hpp"
#include "varreg/geneq.hpp"

using namespace varreg;

namespace {

const char* kModels[] = {"regulator", "diac",     "scr_zener",
                         "sampling_gate", "led_pair", "scr_alone"};

std::string circuit_path(const std::string& name) {
  return std::string(VARREG_CIRCUIT_DIR) + "/" + name + ".json";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Expr Z() { return Expr::var(); }

SVMap1 identity_line() { return SVMap1({Arc{Interval::all(), Z()}}); }

}  // namespace

TEST_CASE("reference points satisfy their models") {
  for (const char* nm : kModels) {
    CAPTURE(nm);
    auto [ge, refs] = example(nm);
    REQUIRE(!refs.empty());
    for (const RefPoint& rp : refs) {
      CHECK(ge.residual(rp.p, rp.z) <= 1e-8);
      // the stored multiplier reproduces p - f(z) through B
      CHECK((ge.B * rp.v - (rp.p - ge.f_eval(rp.z))).norm() <= 1e-8);
    }
  }
}

TEST_CASE("shipped circuit documents match the builders") {
  std::mt19937 rng(20240811);
  for (const char* nm : kModels) {
    CAPTURE(nm);
    auto [ge, refs] = example(nm);
    GEDocument doc = load_document(circuit_path(nm));
    CHECK(doc.ge.name == ge.name);
    CHECK(doc.ge.n == ge.n);
    CHECK(doc.ge.m == ge.m);
    CHECK(doc.ge.B.isApprox(ge.B, 1e-15));
    CHECK(doc.ge.C.isApprox(ge.C, 1e-15));
    REQUIRE(doc.refpoints.size() == refs.size());
    for (size_t i = 0; i < refs.size(); ++i) {
      CHECK((doc.refpoints[i].p - refs[i].p).norm() <= 1e-12);
      CHECK((doc.refpoints[i].z - refs[i].z).norm() <= 1e-12);
      CHECK((doc.refpoints[i].v - refs[i].v).norm() <= 1e-12);
    }
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int t = 0; t < 10; ++t) {
      Vec z(ge.n);
      for (int i = 0; i < ge.n; ++i) z[i] = U(rng);
      CHECK((doc.ge.f_eval(z) - ge.f_eval(z)).norm() <= 1e-12);
      Vec w = doc.ge.C * z;
      for (int j = 0; j < ge.m; ++j) {
        double y = U(rng);
        CHECK(doc.ge.F.comps[j].graph_dist(w[j], y) ==
              doctest::Approx(ge.F.comps[j].graph_dist(w[j], y)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("documents reserialize byte-identically") {
  for (const char* nm : kModels) {
    CAPTURE(nm);
    std::string text = slurp(circuit_path(nm));
    GEDocument doc = parse_document(text);
    CHECK(document_to_json(doc) == text);
  }
}

TEST_CASE("assumption audit across the model family") {
  auto flags = [](const char* nm) { return example(nm).first.assumptions(); };

  for (const char* nm : {"regulator", "diac", "scr_zener", "led_pair"}) {
    CAPTURE(nm);
    Assumptions a = flags(nm);
    CHECK(a.injective_B);
    CHECK(a.smooth_f);
    CHECK(a.closed_graph);
    CHECK(a.surjective_C);
    CHECK(a.product_F);
  }

  // the gate's incidence matrices are rank-deficient (3 x 4 with B C^T)
  Assumptions gate = flags("sampling_gate");
  CHECK_FALSE(gate.injective_B);
  CHECK_FALSE(gate.surjective_C);
  CHECK(gate.smooth_f);
  CHECK(gate.closed_graph);

  // the stand-alone thyristor keeps its kinked f
  Assumptions scr = flags("scr_alone");
  CHECK_FALSE(scr.smooth_f);
  CHECK(scr.injective_B);
  CHECK(scr.closed_graph);
  CHECK(scr.surjective_C);
}

TEST_CASE("reference point construction rules") {
  auto [gate, grefs] = example("sampling_gate");
  const RefPoint& g0 = grefs[0];

  // a rank-deficient B needs the multiplier spelled out
  CHECK_THROWS_WITH_AS(make_refpoint(gate, g0.p, g0.z), "explicit v required when B has a nontrivial kernel",
                       ModelError);

  // multiplier off the product graph
  Vec bad = g0.v;
  bad[0] = 2.0;  // outside [-0.3, 0.7]
  CHECK_THROWS_AS(make_refpoint(gate, g0.p, g0.z, bad), ModelError);

  // multiplier on the graph but violating the equation itself
  Vec skew = g0.v;
  skew[0] += 0.5;  // still a diode value, but B*skew misses p - f(z)
  CHECK_THROWS_WITH_AS(make_refpoint(gate, g0.p, g0.z, skew),
                       "reference point does not satisfy the inclusion", ModelError);

  auto [reg, rrefs] = example("regulator");
  Vec p1(1), z1(1), v_wrong(1);
  p1 << 1.7;
  z1 << 1.0;
  v_wrong << 0.2;
  CHECK_THROWS_WITH_AS(make_refpoint(reg, p1, z1, v_wrong),
                       "explicit v disagrees with the least-squares multiplier", ModelError);

  // computed multiplier lands off the graph
  Vec p5(1), z0(1);
  p5 << 5.0;
  z0 << 0.0;
  CHECK_THROWS_AS(make_refpoint(reg, p5, z0), ModelError);

  Vec pshort(2);
  pshort << 0.0, 0.0;
  CHECK_THROWS_AS(make_refpoint(reg, pshort, z0), ModelError);
}

TEST_CASE("least-squares multiplier and residual values") {
  auto [reg, refs] = example("regulator");
  Vec p(1), z(1);
  p << 1.7;
  z << 1.0;
  CHECK(reg.pseudo_v(p, z)[0] == doctest::Approx(0.7).epsilon(1e-12));

  // distance from p - f(0) = 2 to the clamp values [-5, 0.7]
  Vec p2(1), z0(1);
  p2 << 2.0;
  z0 << 0.0;
  CHECK(reg.residual(p2, z0) == doctest::Approx(1.3).epsilon(1e-12));

  auto [diac10, drefs] = example("diac", {{"V", 10.0}});
  Vec zero1 = Vec::Zero(1);
  CHECK(diac10.residual(zero1, zero1) == 0.0);

  auto [gate, grefs] = example("sampling_gate");
  CHECK_THROWS_AS(gate.pseudo_v(grefs[0].p, grefs[0].z), PreconditionError);

  Vec pbad(2);
  pbad << 0.0, 0.0;
  CHECK_THROWS_AS(reg.residual(pbad, z0), PreconditionError);
}

TEST_CASE("structure of the bridge gate and the source pair") {
  auto [gate, grefs] = example("sampling_gate");
  Mat B(3, 4);
  B << 0, -1, 0, 1, 0, 0, 1, 1, 1, 1, -1, -1;
  CHECK((gate.B - B).norm() == 0.0);
  CHECK((gate.C - B.transpose()).norm() == 0.0);
  CHECK(gate.n == 3);
  CHECK(gate.m == 4);
  CHECK(matrix_rank_tolerant(gate.B) == 3.0);

  auto [led, lrefs] = example("led_pair");
  const auto& af = std::get<AffineFn>(led.f);
  CHECK(matrix_rank_tolerant(af.A) == 1.0);

  Mat near_singular(2, 2);
  near_singular << 1.0, 2.0, 2.0, 4.0 + 1e-14;
  CHECK(matrix_rank_tolerant(near_singular) == 1.0);
  Mat full2(2, 2);
  full2 << 2.0, 1.0, 1.0, 2.0;
  CHECK(matrix_rank_tolerant(full2) == 2.0);
}

TEST_CASE("unknown model names are schema errors") {
  CHECK_THROWS_AS(example("thermistor"), SchemaError);
}

TEST_CASE("mesh assembly mirrors the hand-built gate") {
  auto [gate, grefs] = example("sampling_gate");
  const auto& af = std::get<AffineFn>(gate.f);
  GenEq mesh = from_mesh("gate_mesh", af.A, gate.B, gate.C, gate.F, gate.params);
  CHECK(mesh.n == gate.n);
  CHECK(mesh.m == gate.m);
  CHECK((mesh.B - gate.B).norm() == 0.0);
  CHECK((mesh.C - gate.C).norm() == 0.0);
  Vec z(3);
  z << 0.3, -1.2, 0.9;
  CHECK((mesh.f_eval(z) - gate.f_eval(z)).norm() <= 1e-14);
  CHECK(mesh.assumptions().injective_B == gate.assumptions().injective_B);

  SVProd one{{identity_line()}};
  SVProd two{{identity_line(), identity_line()}};
  CHECK_THROWS_WITH_AS(from_mesh("m", Mat::Ones(2, 3), Mat::Ones(2, 1), Mat::Ones(1, 2), one),
                       "loop matrix must be square", DimensionError);
  CHECK_THROWS_WITH_AS(from_mesh("m", Mat::Identity(2, 2), Mat::Ones(3, 1), Mat::Ones(1, 2), one),
                       "diode incidence B must be n x m", DimensionError);
  CHECK_THROWS_WITH_AS(from_mesh("m", Mat::Identity(2, 2), Mat::Ones(2, 2), Mat::Ones(2, 3), two),
                       "diode incidence C must be m x n", DimensionError);
}

TEST_CASE("model construction validation") {
  SVProd one{{identity_line()}};

  CHECK_THROWS_WITH_AS(GenEq::make("bad", AffineFn{Mat::Ones(2, 3), Vec::Zero(2)},
                                   Mat::Identity(2, 2), Mat::Identity(2, 2),
                                   SVProd{{identity_line(), identity_line()}}),
                       "affine f must be square with matching offset", ModelError);

  CHECK_THROWS_WITH_AS(GenEq::make("bad", AffineFn{Mat::Identity(1, 1), Vec::Zero(1)},
                                   Mat::Ones(2, 1), Mat::Ones(1, 1), one),
                       "B must be n x m", ModelError);

  CHECK_THROWS_WITH_AS(GenEq::make("bad", AffineFn{Mat::Identity(1, 1), Vec::Zero(1)},
                                   Mat::Ones(1, 1), Mat::Ones(1, 2), one),
                       "C must be m x n", ModelError);

  PiecewiseFn jump({FnPiece{Interval::at_most(0.0, true), Expr::constant(0.0)},
                    FnPiece{Interval::at_least(0.0, false), Expr::constant(1.0)}},
                   /*allow_discontinuous=*/true);
  CHECK_THROWS_WITH_AS(GenEq::make("bad", Sep1DFn{jump}, Mat::Ones(1, 1), Mat::Ones(1, 1), one),
                       "separable f must be continuous", ModelError);
}
