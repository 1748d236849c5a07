// Acceptance gates for the regularity toolkit.  Each gate re-derives a
// closed-form verdict table, modulus, or bound and checks the library
// against it; one PASS/FAIL line per gate, non-zero exit if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

#include "varreg/cones.hpp"
#include "varreg/geneq.hpp"
#include "varreg/regularity.hpp"
#include "varreg/solver.hpp"
#include "varreg/trajectory.hpp"

using namespace varreg;

namespace {

struct Gate {
  std::string label;
  bool pass = true;
  std::string detail;
  double secs = 0.0;
};

void fail(Gate& g, const std::string& why) {
  g.pass = false;
  if (!g.detail.empty()) g.detail += "; ";
  g.detail += why;
}

Vec vec1(double v) {
  Vec x(1);
  x << v;
  return x;
}

double ang_dist(const Vec2& a, const Vec2& b) {
  return std::abs(std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b)));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------
// fixture graph points: junctions (closed piece endpoints) plus one
// representative interior point per piece, across every example model

std::vector<std::pair<double, double>> comp_points(const SVMap1& F) {
  std::vector<std::pair<double, double>> pts;
  auto add = [&](double x, double y) {
    for (auto [px, py] : pts)
      if (std::abs(px - x) < 1e-12 && std::abs(py - y) < 1e-12) return;
    pts.emplace_back(x, y);
  };
  for (const GraphPiece& gp : F.pieces()) {
    if (const Arc* a = std::get_if<Arc>(&gp)) {
      std::vector<double> xs;
      if (std::isfinite(a->dom.lo) && a->dom.lo_closed) xs.push_back(a->dom.lo);
      if (std::isfinite(a->dom.hi) && a->dom.hi_closed) xs.push_back(a->dom.hi);
      if (a->dom.bounded())
        xs.push_back(a->dom.lo + 0.6 * (a->dom.hi - a->dom.lo));
      else if (std::isfinite(a->dom.lo))
        xs.push_back(a->dom.lo + 0.8);
      else if (std::isfinite(a->dom.hi))
        xs.push_back(a->dom.hi - 0.8);
      else
        xs.push_back(0.7);
      for (double x : xs) add(x, a->y.eval(x));
    } else if (const VSeg* v = std::get_if<VSeg>(&gp)) {
      if (std::isfinite(v->yiv.lo) && v->yiv.lo_closed) add(v->z0, v->yiv.lo);
      if (std::isfinite(v->yiv.hi) && v->yiv.hi_closed) add(v->z0, v->yiv.hi);
      if (v->yiv.bounded())
        add(v->z0, 0.5 * (v->yiv.lo + v->yiv.hi));
      else if (std::isfinite(v->yiv.lo))
        add(v->z0, v->yiv.lo + 1.0);
      else if (std::isfinite(v->yiv.hi))
        add(v->z0, v->yiv.hi - 1.0);
    } else {
      const GPoint& p = std::get<GPoint>(gp);
      add(p.z0, p.y0);
    }
  }
  return pts;
}

struct FixtureComp {
  std::string tag;
  SVMap1 F;
  bool monotone;
  std::vector<std::pair<double, double>> pts;
};

const std::vector<FixtureComp>& fixtures() {
  static const std::vector<FixtureComp> fx = [] {
    std::vector<FixtureComp> out;
    for (const char* nm :
         {"regulator", "diac", "scr_zener", "sampling_gate", "led_pair", "scr_alone"}) {
      auto [ge, refs] = example(nm);
      // the four gate diodes share one characteristic
      int mcount = std::string(nm) == "sampling_gate" ? 1 : ge.m;
      for (int k = 0; k < mcount; ++k) {
        const SVMap1& F = ge.F.comps[k];
        out.push_back({std::string(nm) + "[" + std::to_string(k) + "]", F,
                       is_monotone(F) && is_maximal_monotone(F), comp_points(F)});
      }
    }
    return out;
  }();
  return fx;
}

// ---------------------------------------------------------------------
// gates

// clamp family (R = V = 1): Aubin/isolated-calmness verdicts at the four
// reference parameters; a < R holds everywhere, a = R fails only at +-V,
// a > R loses Aubin at +-V but keeps isolated calmness on [-V, V]
void gate_verdict_table(Gate& g) {
  struct Row {
    double a;
    int ref;  // 0: p=-V, 1: p=0, 2: p=+V, 3: p=-V/2
    bool aubin, ic;
  };
  const Row rows[] = {
      {0.5, 0, true, true},   {0.5, 1, true, true},  {0.5, 2, true, true},
      {0.5, 3, true, true},   {1.0, 0, false, false}, {1.0, 1, true, true},
      {1.0, 2, false, false}, {1.0, 3, true, true},  {2.0, 0, false, true},
      {2.0, 1, true, true},   {2.0, 2, false, true}, {2.0, 3, true, true},
  };
  for (const Row& r : rows) {
    auto [ge, refs] = example("diac", {{"a", r.a}});
    bool aubin = check_aubin(ge, refs[r.ref]).verdict == Verdict::Holds;
    bool ic = check_isolated_calmness(ge, refs[r.ref]).verdict == Verdict::Holds;
    std::ostringstream at;
    at << "a=" << r.a << " ref=" << r.ref;
    if (aubin != r.aubin) fail(g, "aubin verdict at " + at.str());
    if (ic != r.ic) fail(g, "isolated-calmness verdict at " + at.str());
  }
  g.detail = "12 (a, refpoint) combinations";
}

// calmness modulus at the lower corner: 1/|1-a|, infinite at a = 1
void gate_calmness_modulus(Gate& g) {
  for (double a : {0.5, 1.0, 2.0}) {
    auto [ge, refs] = example("diac", {{"a", a}});
    CheckResult I = check_isolated_calmness(ge, refs[0]);
    std::ostringstream at;
    at << "a=" << a;
    if (a == 1.0) {
      if (!std::isinf(I.modulus.hi)) fail(g, "expected infinite clm at " + at.str());
      continue;
    }
    double want = 1.0 / std::abs(1.0 - a);
    if (!I.modulus.known || !I.modulus.exact) fail(g, "clm not exact at " + at.str());
    if (std::abs(I.modulus.hi - want) > 1e-9) fail(g, "clm off at " + at.str());
  }
}

// strong regularity: holds at the segment interior for every a, and at the
// lower corner exactly when a < R
void gate_smr(Gate& g) {
  for (double a : {0.5, 1.0, 2.0}) {
    auto [ge, refs] = example("diac", {{"a", a}});
    std::ostringstream at;
    at << "a=" << a;
    if (check_smr(ge, refs[1]).verdict != Verdict::Holds)
      fail(g, "interior smr at " + at.str());
    Verdict corner = check_smr(ge, refs[0]).verdict;
    if (corner != (a < 1.0 ? Verdict::Holds : Verdict::Fails))
      fail(g, "corner smr at " + at.str());
  }
}

// two-component rectifier: Aubin fails exactly on the slope band
// phi'(z1) in [-R, -R b/(b+R)] = [-1, -0.5]
void gate_slope_band(Gate& g) {
  auto [ge, refs] = example("scr_zener");
  const double slopes[5] = {-1.1, -1.0, -0.75, -0.5, -0.4};
  const bool holds[5] = {true, false, false, false, true};
  for (int k = 0; k < 5; ++k) {
    bool got = check_aubin(ge, refs[k]).verdict == Verdict::Holds;
    if (got != holds[k]) {
      std::ostringstream at;
      at << "slope " << slopes[k];
      fail(g, "aubin verdict at " + at.str());
    }
  }
}

// bridge gate with a rank-deficient incidence matrix: the kernel/range
// audit certifies, and isolated calmness holds at the cited point
void gate_bridge(Gate& g) {
  auto [ge, refs] = example("sampling_gate");
  Vec p_expect(3);
  p_expect << 0.0, -0.6, 0.0;
  if ((refs[0].p - p_expect).norm() > 1e-12 || refs[0].z.norm() > 1e-12)
    fail(g, "unexpected reference point");
  if (!aux_range_condition(ge, refs[0])) fail(g, "range audit refused");
  if (check_isolated_calmness(ge, refs[0]).verdict != Verdict::Holds)
    fail(g, "isolated calmness not certified");
}

// piecewise-smooth f: strong regularity certified over the whole
// derivative bundle at both operating points
void gate_nonsmooth(Gate& g) {
  auto [ge, refs] = example("scr_alone");
  for (size_t k = 0; k < refs.size(); ++k) {
    NonsmoothResult r = check_nonsmooth(ge, refs[k]);
    std::ostringstream at;
    at << "refpoint " << k;
    if (r.smr != Verdict::Holds) fail(g, "smr verdict at " + at.str());
    bool noted = false;
    for (const std::string& n : r.notes)
      if (n.find("holds (sufficient)") != std::string::npos) noted = true;
    if (!noted) fail(g, "missing sufficiency note at " + at.str());
  }
}

// regulator solution map on a 201-point grid against the three-branch
// closed form z = p - 0.7 / 0 / p + 5
void gate_regulator_grid(Gate& g) {
  auto [ge, refs] = example("regulator");
  double worst = 0.0;
  for (int k = 0; k <= 200; ++k) {
    double p = -8.0 + 16.0 * k / 200.0;
    SolutionSet s = solve(ge, vec1(p));
    if (s.points.size() != 1) {
      fail(g, "expected a unique solution across the grid");
      return;
    }
    double z_expect = p > 0.7 ? p - 0.7 : (p < -5.0 ? p + 5.0 : 0.0);
    worst = std::max(worst, std::abs(s.points[0].z[0] - z_expect));
  }
  if (worst > 1e-9) fail(g, "max deviation above 1e-9");
  std::ostringstream d;
  d << "max |z - formula| = " << worst;
  g.detail = d.str();
}

// every exact cone agrees with the definitional membership oracle on 64
// directions per point, excluding a 1e-2 rad band around cone boundaries
void gate_cone_oracle(Gate& g) {
  const std::pair<ConeKind, Cone2 (*)(const SVMap1&, double, double)> kinds[] = {
      {ConeKind::Contingent, contingent_at},
      {ConeKind::Paratingent, paratingent_at},
      {ConeKind::FrechetNormal, frechet_normal_at},
      {ConeKind::LimitingNormal, limiting_normal_at}};
  int npts = 0;
  long checked = 0;
  for (const FixtureComp& fc : fixtures()) {
    for (auto [x, y] : fc.pts) {
      ++npts;
      for (const auto& [kind, exact] : kinds) {
        Cone2 K = exact(fc.F, x, y);
        std::vector<Vec2> bnd = K.boundary_dirs();
        for (int k = 0; k < 64; ++k) {
          double th = 2.0 * M_PI * k / 64 + 0.0137;
          Vec2 v(std::cos(th), std::sin(th));
          bool near = false;
          for (const Vec2& b : bnd)
            if (ang_dist(v, b) < 1e-2) near = true;
          if (near) continue;
          ++checked;
          if (K.contains(v) != numeric_member(kind, fc.F, x, y, v)) {
            std::ostringstream at;
            at << fc.tag << " at (" << x << ", " << y << ") kind "
               << static_cast<int>(kind) << " angle " << th;
            fail(g, at.str());
            return;
          }
        }
      }
    }
  }
  std::ostringstream d;
  d << npts << " graph points, " << checked << " memberships";
  g.detail = d.str();
}

// structural polarity and inclusion laws, plus the monotone sign
// conditions on at least 1000 sampled cone directions
void gate_polarity(Gate& g) {
  long mono_samples = 0;
  for (const FixtureComp& fc : fixtures()) {
    for (auto [x, y] : fc.pts) {
      std::ostringstream at;
      at << fc.tag << " at (" << x << ", " << y << ")";
      Cone2 T = contingent_at(fc.F, x, y);
      Cone2 Tp = paratingent_at(fc.F, x, y);
      Cone2 Nf = frechet_normal_at(fc.F, x, y);
      Cone2 Nl = limiting_normal_at(fc.F, x, y);
      if (!Nf.structurally_equal(polar(T))) fail(g, "polarity at " + at.str());
      for (const Vec2& d : T.sample_dirs(7))
        if (!Tp.contains(d, 1e-7)) fail(g, "contingent not in paratingent at " + at.str());
      for (const Vec2& d : Nf.sample_dirs(7))
        if (!Nl.contains(d, 1e-7)) fail(g, "frechet not in limiting at " + at.str());
      if (!fc.monotone) continue;
      for (const Vec2& d : Tp.sample_dirs(30)) {
        ++mono_samples;
        if (d.x() * d.y() < -1e-9) fail(g, "tangent sign at " + at.str());
      }
      for (const Vec2& d : Nl.sample_dirs(30)) {
        ++mono_samples;
        if (d.x() * d.y() > 1e-9) fail(g, "normal sign at " + at.str());
      }
    }
  }
  if (mono_samples < 1000) fail(g, "fewer than 1000 monotone samples");
  std::ostringstream d;
  d << mono_samples << " monotone samples";
  g.detail = d.str();
}

// tracking a full input period at 1000 base steps: residuals, per-step
// Lipschitz bound with the estimated kappa, and the perturbation bound
// sup||ztilde - z|| <= min(kappa eps, 4 a eps / b) for eps = b/8
void gate_tracking(Gate& g) {
  auto [ge, refs] = example("regulator");
  Signal sig = Signal::parse("sin:2,1,0,0", 1);
  Trajectory tr = track(ge, sig, Vec::Zero(1), 1.0 / 1000);
  if (tr.times.size() < 1000) fail(g, "fewer than 1000 steps");
  double maxres = 0.0;
  for (double r : tr.residuals) maxres = std::max(maxres, r);
  if (maxres > 1e-7) fail(g, "max residual above 1e-7");

  UniformConstants uc = estimate_uniform_constants(ge, sig, tr);
  for (size_t i = 1; i < tr.times.size(); ++i) {
    double dp = std::abs(sig(tr.times[i])[0] - sig(tr.times[i - 1])[0]);
    if (std::abs(tr.z[i][0] - tr.z[i - 1][0]) > (uc.kappa + 1e-6) * dp + 1e-9) {
      fail(g, "Lipschitz step bound violated");
      break;
    }
  }

  double eps = uc.b / 8.0;
  PerturbReport rep = perturb_experiment(ge, sig, sig.shifted(vec1(eps)), tr);
  if (rep.sup_diff > std::min(uc.kappa * eps, 4.0 * uc.a * eps / uc.b) * 1.05)
    fail(g, "perturbation bound violated");
  std::ostringstream d;
  d << tr.times.size() << " steps, max residual " << maxres << ", sup diff "
    << rep.sup_diff;
  g.detail = d.str();
}

// the localized inverse satisfies the shifted-inverse identity on 100
// random probes, and identical CLI runs emit byte-identical reports
void gate_identity_determinism(Gate& g) {
  auto [ge, refs] = example("regulator");
  Signal sig = Signal::parse("sin:2,1,0,0", 1);
  Trajectory tr = track(ge, sig, Vec::Zero(1), 1.0 / 64);
  double worst = g_relation_check(ge, sig, tr);
  if (worst > 1e-8) fail(g, "shifted-inverse identity above 1e-8");

  std::string base = std::string(VARREG_CLI_PATH) + " analyze " + VARREG_CIRCUIT_DIR +
                     "/diac.json --refpoint 0";
  int rc1 = std::system((base + " >/tmp/varreg_acc_1.json 2>/dev/null").c_str());
  int rc2 = std::system((base + " >/tmp/varreg_acc_2.json 2>/dev/null").c_str());
  if (!WIFEXITED(rc1) || WEXITSTATUS(rc1) != 0 || !WIFEXITED(rc2) || WEXITSTATUS(rc2) != 0)
    fail(g, "CLI run failed");
  std::string a = slurp("/tmp/varreg_acc_1.json"), b = slurp("/tmp/varreg_acc_2.json");
  if (a.empty() || a != b) fail(g, "CLI reports differ between runs");
  std::ostringstream d;
  d << "identity deviation " << worst;
  g.detail = d.str();
}

}  // namespace

int main() {
  struct Entry {
    const char* label;
    void (*fn)(Gate&);
    double budget_secs;  // 0 = no gate on runtime
  };
  const Entry entries[] = {
      {"clamp-family Aubin / isolated-calmness verdict table", gate_verdict_table, 1.0},
      {"corner calmness modulus 1/|1-a|", gate_calmness_modulus, 0.0},
      {"strong regularity at interior and corner points", gate_smr, 0.0},
      {"negative-slope band Aubin verdicts", gate_slope_band, 0.0},
      {"bridge-gate range audit and isolated calmness", gate_bridge, 1.0},
      {"nonsmooth strong-regularity certificates", gate_nonsmooth, 0.0},
      {"regulator three-branch closed form on a 201-point grid", gate_regulator_grid, 0.0},
      {"exact cones match the definitional membership oracle", gate_cone_oracle, 0.0},
      {"polarity, inclusions, and monotone sign conditions", gate_polarity, 0.0},
      {"tracked trajectory residuals, steps, and perturbation bound", gate_tracking, 10.0},
      {"shifted-inverse identity and deterministic reports", gate_identity_determinism, 0.0},
  };

  bool all = true;
  int id = 0;
  for (const Entry& e : entries) {
    ++id;
    Gate gate{e.label};
    auto t0 = std::chrono::steady_clock::now();
    try {
      e.fn(gate);
    } catch (const std::exception& ex) {
      fail(gate, std::string("exception: ") + ex.what());
    }
    gate.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (e.budget_secs > 0.0 && gate.secs > e.budget_secs) {
      std::ostringstream d;
      d << "runtime " << gate.secs << " s above budget " << e.budget_secs << " s";
      fail(gate, d.str());
    }
    std::printf("[%s] %2d %s (%.2f s)%s%s\n", gate.pass ? "PASS" : "FAIL", id, e.label,
                gate.secs, gate.detail.empty() ? "" : " -- ", gate.detail.c_str());
    all = all && gate.pass;
  }
  return all ? 0 : 1;
}
