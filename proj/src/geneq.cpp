#include "varreg/geneq.hpp"

#include <cmath>

namespace varreg {

double matrix_rank_tolerant(const Mat& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(M);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  double tol = rel_tol * std::max(smax, 1.0);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

GenEq GenEq::make(std::string name, std::variant<AffineFn, Sep1DFn> f, Mat B, Mat C, SVProd F,
                  std::map<std::string, double> params, std::string notes) {
  GenEq ge;
  ge.name = std::move(name);
  ge.f = std::move(f);
  ge.B = std::move(B);
  ge.C = std::move(C);
  ge.F = std::move(F);
  ge.params = std::move(params);
  ge.notes = std::move(notes);
  ge.m = ge.F.dim();
  if (const AffineFn* af = std::get_if<AffineFn>(&ge.f)) {
    ge.n = static_cast<int>(af->A.cols());
    if (af->A.rows() != ge.n || af->c.size() != ge.n)
      throw ModelError("affine f must be square with matching offset");
  } else {
    ge.n = 1;
    const Sep1DFn& sf = std::get<Sep1DFn>(ge.f);
    if (!sf.fn.is_continuous()) throw ModelError("separable f must be continuous");
    sf.fn.validate();
  }
  if (ge.B.rows() != ge.n || ge.B.cols() != ge.m)
    throw ModelError("B must be n x m");
  if (ge.C.rows() != ge.m || ge.C.cols() != ge.n)
    throw ModelError("C must be m x n");
  ge.audit();
  return ge;
}

void GenEq::audit() {
  asm_.rank_tol = 1e-10;
  asm_.injective_B = matrix_rank_tolerant(B) == m;
  asm_.surjective_C = matrix_rank_tolerant(C) == m;
  asm_.closed_graph = F.graph_closed();
  asm_.product_F = true;
  if (f_is_affine()) {
    asm_.smooth_f = true;
  } else {
    const PiecewiseFn& fn = std::get<Sep1DFn>(f).fn;
    asm_.smooth_f = true;
    for (double b : fn.breakpoints()) {
      try {
        fn.deriv(b, Side::TwoSided);
      } catch (const KinkError&) {
        asm_.smooth_f = false;
      }
    }
  }
}

Vec GenEq::f_eval(const Vec& z) const {
  if (const AffineFn* af = std::get_if<AffineFn>(&f)) return af->A * z + af->c;
  Vec out(1);
  out(0) = std::get<Sep1DFn>(f).fn.eval(z(0));
  return out;
}

Mat GenEq::jac_f(const Vec& z) const {
  if (const AffineFn* af = std::get_if<AffineFn>(&f)) return af->A;
  Mat J(1, 1);
  J(0, 0) = std::get<Sep1DFn>(f).fn.deriv(z(0), Side::TwoSided);
  return J;
}

Vec GenEq::pseudo_v(const Vec& p, const Vec& z) const {
  if (!asm_.injective_B)
    throw PreconditionError("value multiplier requires an injective B");
  Vec w = p - f_eval(z);
  return (B.transpose() * B).ldlt().solve(B.transpose() * w);
}

double GenEq::residual(const Vec& p, const Vec& z) const {
  if (p.size() != n || z.size() != n) throw PreconditionError("residual dimension mismatch");
  Vec w = p - f_eval(z);
  Vec x = C * z;
  std::vector<ValueSet> V(m);
  for (int j = 0; j < m; ++j) {
    V[j] = F.comps[j].values_near(x(j), 1e-9);
    if (V[j].empty()) return kInf;
  }
  bool identity_B = (n == m) && B.isIdentity(1e-14);
  if (identity_B) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      double d = V[j].dist(w(j));
      s += d * d;
    }
    return std::sqrt(s);
  }
  // enumerate interval combinations; box-constrained least squares on each
  long combos = 1;
  for (int j = 0; j < m; ++j) {
    combos *= static_cast<long>(V[j].parts.size());
    if (combos > 1000) throw CapExceeded("too many value-interval combinations in residual");
  }
  Mat BtB = B.transpose() * B;
  Vec Btw = B.transpose() * w;
  Vec col_sq(m);
  for (int j = 0; j < m; ++j) col_sq(j) = B.col(j).squaredNorm();
  double best = kInf;
  std::vector<int> idx(m, 0);
  for (long c = 0; c < combos; ++c) {
    long rem = c;
    for (int j = 0; j < m; ++j) {
      idx[j] = static_cast<int>(rem % V[j].parts.size());
      rem /= V[j].parts.size();
    }
    // start from the unconstrained least-squares point when available
    Vec v(m);
    Vec v0 = asm_.injective_B ? Vec(BtB.ldlt().solve(Btw)) : Vec(Vec::Zero(m));
    for (int j = 0; j < m; ++j) v(j) = V[j].parts[idx[j]].clamp_finite(v0(j));
    for (int sweep = 0; sweep < 200; ++sweep) {
      double change = 0.0;
      Vec r = w - B * v;
      for (int j = 0; j < m; ++j) {
        if (col_sq(j) < 1e-300) continue;
        double free_j = v(j) + B.col(j).dot(r) / col_sq(j);
        double nj = V[j].parts[idx[j]].clamp_finite(free_j);
        if (nj != v(j)) {
          r += B.col(j) * (v(j) - nj);
          change = std::max(change, std::abs(nj - v(j)));
          v(j) = nj;
        }
      }
      if (change < 1e-14) break;
    }
    best = std::min(best, (w - B * v).norm());
  }
  return best;
}

RefPoint make_refpoint(const GenEq& ge, Vec p, Vec z, std::optional<Vec> v_explicit) {
  if (p.size() != ge.n || z.size() != ge.n)
    throw ModelError("reference point must have p, z in R^n");
  RefPoint rp;
  rp.p = std::move(p);
  rp.z = std::move(z);
  if (ge.assumptions().injective_B) {
    Vec v = ge.pseudo_v(rp.p, rp.z);
    if (v_explicit) {
      if ((*v_explicit - v).norm() > 1e-8 * (1.0 + v.norm()))
        throw ModelError("explicit v disagrees with the least-squares multiplier");
    }
    rp.v = v;
  } else {
    if (!v_explicit)
      throw ModelError("explicit v required when B has a nontrivial kernel");
    if (v_explicit->size() != ge.m) throw ModelError("explicit v must be in R^m");
    rp.v = *v_explicit;
  }
  Vec x = ge.C * rp.z;
  for (int j = 0; j < ge.m; ++j) {
    ValueSet vs = ge.F.comps[j].values_near(x(j), 1e-9);
    if (vs.dist(rp.v(j)) > 1e-8)
      throw ModelError("reference multiplier is not a value of component " + std::to_string(j));
  }
  Vec gap = rp.p - ge.f_eval(rp.z) - ge.B * rp.v;
  if (gap.norm() > 1e-8 * (1.0 + rp.p.norm()))
    throw ModelError("reference point does not satisfy the inclusion");
  return rp;
}

// ---------------------------------------------------------------------------
// named circuit models

namespace {

double param(const std::map<std::string, double>& ps, const std::string& k, double dflt) {
  auto it = ps.find(k);
  return it == ps.end() ? dflt : it->second;
}

std::map<std::string, double> merged(std::map<std::string, double> defaults,
                                     const std::map<std::string, double>& overrides) {
  for (const auto& kv : overrides) defaults[kv.first] = kv.second;
  return defaults;
}

Mat mat1(double v) {
  Mat M(1, 1);
  M << v;
  return M;
}

Expr c(double v) { return Expr::constant(v); }
Expr Z() { return Expr::var(); }

std::pair<GenEq, std::vector<RefPoint>> build_regulator(
    const std::map<std::string, double>& ov) {
  auto ps = merged({{"R", 1.0}, {"vF", 0.7}, {"vB", 5.0}}, ov);
  double R = ps["R"], vF = ps["vF"], vB = ps["vB"];
  SVMap1 F({Arc{Interval::at_most(0.0, false), c(-vB)},
            VSeg{0.0, Interval::closed(-vB, vF)},
            Arc{Interval::at_least(0.0, false), c(vF)}});
  GenEq ge = GenEq::make("regulator", AffineFn{mat1(R), Vec::Zero(1)}, mat1(1), mat1(1),
                         SVProd{{F}}, ps);
  std::vector<RefPoint> refs;
  refs.push_back(make_refpoint(ge, Vec::Zero(1), Vec::Zero(1)));
  Vec p1(1), z1(1);
  z1 << 1.0;
  p1 << R + vF;
  refs.push_back(make_refpoint(ge, p1, z1));
  return {std::move(ge), std::move(refs)};
}

std::pair<GenEq, std::vector<RefPoint>> build_diac(const std::map<std::string, double>& ov) {
  auto ps = merged({{"a", 1.0}, {"R", 1.0}, {"V", 1.0}}, ov);
  double a = ps["a"], R = ps["R"], V = ps["V"];
  // f(z) = R z -+ V (1 - 1/sqrt(1 -+ 2 a z / V)) on z < 0 / z >= 0
  Expr root_neg = Expr::sqrt(c(1.0) - (c(2.0 * a) * Z()) / c(V));
  Expr f_neg = c(R) * Z() + (c(V) - c(V) / root_neg);
  Expr root_pos = Expr::sqrt(c(1.0) + (c(2.0 * a) * Z()) / c(V));
  Expr f_pos = c(R) * Z() + (c(V) / root_pos - c(V));
  PiecewiseFn f({FnPiece{Interval::at_most(0.0, false), f_neg},
                 FnPiece{Interval::at_least(0.0, true), f_pos}});
  SVMap1 F({Arc{Interval::at_most(0.0, false), c(-V)},
            VSeg{0.0, Interval::closed(-V, V)},
            Arc{Interval::at_least(0.0, false), c(V)}});
  GenEq ge =
      GenEq::make("diac", Sep1DFn{f}, mat1(1), mat1(1), SVProd{{F}}, ps);
  std::vector<RefPoint> refs;
  for (double pv : {-V, 0.0, V, -0.5 * V}) {
    Vec p(1), z(1);
    p << pv;
    z << 0.0;
    refs.push_back(make_refpoint(ge, p, z));
  }
  return {std::move(ge), std::move(refs)};
}

std::pair<GenEq, std::vector<RefPoint>> build_scr_zener(
    const std::map<std::string, double>& ov) {
  auto ps = merged({{"R", 1.0},
                    {"a", 1.0},
                    {"b", 1.0},
                    {"V", 1.0},
                    {"V1", 0.2},
                    {"c0", 0.9},
                    {"c1", -1.2},
                    {"c2", 0.5},
                    {"alpha", 2.0}},
                   ov);
  double R = ps["R"], a = ps["a"], b = ps["b"], V = ps["V"], V1 = ps["V1"];
  double c0 = ps["c0"], c1 = ps["c1"], c2 = ps["c2"], al = ps["alpha"];
  auto phi = [&](double z) { return c0 + c1 * z + c2 * z * z; };
  Expr phi_e = c(c0) + c(c1) * Z() + c(c2) * (Z() * Z());
  SVMap1 F1({Arc{Interval::at_most(0.0, false), c(a) * Z() + c(V1)},
             VSeg{0.0, Interval::closed(V1, c0)},
             Arc{Interval::closed(0.0, al), phi_e},
             Arc{Interval::at_least(al, false), c(a) * (Z() - c(al)) + c(phi(al))}});
  SVMap1 F2({Arc{Interval::at_most(0.0, false), c(b) * Z() - c(V)},
             VSeg{0.0, Interval::closed(-V, V)},
             Arc{Interval::at_least(0.0, false), c(b) * Z() + c(V)}});
  Mat A(2, 2);
  A << R, R, R, R;
  GenEq ge = GenEq::make("scr_zener", AffineFn{A, Vec::Zero(2)}, Mat::Identity(2, 2),
                         Mat::Identity(2, 2), SVProd{{F1, F2}}, ps);
  std::vector<RefPoint> refs;
  for (double z1 : {0.1, 0.2, 0.45, 0.7, 0.8}) {
    Vec p(2), z(2);
    z << z1, 0.0;
    p << R * z1 + phi(z1), R * z1 + V;
    refs.push_back(make_refpoint(ge, p, z));
  }
  {
    // both components on their outer smooth branches
    Vec p(2), z(2);
    z << -1.0, -1.0;
    p << R * (-2.0) + (a * (-1.0) + V1), R * (-2.0) + (b * (-1.0) - V);
    refs.push_back(make_refpoint(ge, p, z));
  }
  return {std::move(ge), std::move(refs)};
}

std::pair<GenEq, std::vector<RefPoint>> build_sampling_gate(
    const std::map<std::string, double>& ov) {
  auto ps = merged({{"RL", 1.0}, {"Rc", 1.0}, {"VD1", -0.3}, {"VD2", 0.7}}, ov);
  double RL = ps["RL"], Rc = ps["Rc"], VD1 = ps["VD1"], VD2 = ps["VD2"];
  Mat A = Mat::Zero(3, 3);
  A(0, 0) = RL;
  A(1, 1) = 2.0 * Rc;
  Mat B(3, 4);
  B << 0, -1, 0, 1, 0, 0, 1, 1, 1, 1, -1, -1;
  Mat C = B.transpose();
  SVMap1 FD({Arc{Interval::at_most(0.0, false), c(VD1)},
             VSeg{0.0, Interval::closed(VD1, VD2)},
             Arc{Interval::at_least(0.0, false), c(VD2)}});
  GenEq ge = GenEq::make("sampling_gate", AffineFn{A, Vec::Zero(3)}, B, C,
                         SVProd{{FD, FD, FD, FD}}, ps);
  Vec p(3), z(3), v(4);
  p << 0.0, 2.0 * VD1, 0.0;
  z.setZero();
  v.setConstant(VD1);
  std::vector<RefPoint> refs{make_refpoint(ge, p, z, v)};
  return {std::move(ge), std::move(refs)};
}

std::pair<GenEq, std::vector<RefPoint>> build_led_pair(const std::map<std::string, double>& ov) {
  auto ps = merged({{"R", 1.0}, {"vs", 2.0}, {"VL", 1.8}}, ov);
  double R = ps["R"], vs = ps["vs"], VL = ps["VL"];
  // voltage -> current characteristics (conventional orientation)
  SVMap1 G1({Arc{Interval::at_most(0.0, true), c(0.0)}, VSeg{0.0, Interval::at_least(0.0)}});
  SVMap1 G2({Arc{Interval::at_most(VL, true), c(0.0)}, VSeg{VL, Interval::at_least(0.0)}});
  // current -> voltage, then value-reflected by the sign normalization
  SVMap1 F1 = reflect_values(inverse(G1));
  SVMap1 F2 = reflect_values(inverse(G2));
  Mat A(2, 2);
  A << -R, R, R, -R;
  GenEq ge = GenEq::make(
      "led_pair", AffineFn{A, Vec::Zero(2)}, Mat::Identity(2, 2), Mat::Identity(2, 2),
      SVProd{{F1, F2}}, ps,
      "source model B + A U in F(U); characteristics inverted per coordinate to current base "
      "variables, inclusion negated: p = (vs, -vs), values reflected");
  Vec p(2), z(2);
  p << vs, -vs;
  z << 0.0, (vs - VL) / R;
  std::vector<RefPoint> refs{make_refpoint(ge, p, z)};
  return {std::move(ge), std::move(refs)};
}

std::pair<GenEq, std::vector<RefPoint>> build_scr_alone(
    const std::map<std::string, double>& ov) {
  auto ps = merged(
      {{"R", 1.0}, {"a", 2.0}, {"c0", 0.9}, {"c1", -0.3}, {"c2", 0.5}, {"alpha", 1.0},
       {"V1", 0.5}},
      ov);
  double R = ps["R"], a = ps["a"], c0 = ps["c0"], c1 = ps["c1"], c2 = ps["c2"];
  double al = ps["alpha"], V1 = ps["V1"];
  Expr left = c(R + a) * Z();
  Expr mid = c(R) * Z() + (c(c1) * Z() + c(c2) * (Z() * Z()));
  Expr right = c(R) * Z() + (c(a) * (Z() - c(al)) + c(c1 * al + c2 * al * al));
  PiecewiseFn f({FnPiece{Interval::at_most(0.0, false), left},
                 FnPiece{Interval::closed(0.0, al), mid},
                 FnPiece{Interval::at_least(al, false), right}});
  SVMap1 F({Arc{Interval::at_most(0.0, false), c(V1)},
            VSeg{0.0, Interval::closed(V1, c0)},
            Arc{Interval::at_least(0.0, false), c(c0)}});
  GenEq ge = GenEq::make("scr_alone", Sep1DFn{f}, mat1(1), mat1(1), SVProd{{F}}, ps);
  std::vector<RefPoint> refs;
  Vec p(1), z(1);
  p << V1;
  z << 0.0;
  refs.push_back(make_refpoint(ge, p, z));
  p << R * al + c1 * al + c2 * al * al + c0;
  z << al;
  refs.push_back(make_refpoint(ge, p, z));
  return {std::move(ge), std::move(refs)};
}

}  // namespace

std::pair<GenEq, std::vector<RefPoint>> example(const std::string& name,
                                                const std::map<std::string, double>& overrides) {
  if (name == "regulator") return build_regulator(overrides);
  if (name == "diac") return build_diac(overrides);
  if (name == "scr_zener") return build_scr_zener(overrides);
  if (name == "sampling_gate") return build_sampling_gate(overrides);
  if (name == "led_pair") return build_led_pair(overrides);
  if (name == "scr_alone") return build_scr_alone(overrides);
  throw SchemaError("unknown example '" + name + "'");
}

GenEq from_mesh(std::string name, Mat A, Mat B, Mat C, SVProd F,
                std::map<std::string, double> params) {
  const int n = (int)A.rows();
  const int m = (int)F.comps.size();
  if (A.cols() != n) throw DimensionError("loop matrix must be square");
  if (B.rows() != n || B.cols() != m)
    throw DimensionError("diode incidence B must be n x m");
  if (C.rows() != m || C.cols() != n)
    throw DimensionError("diode incidence C must be m x n");
  Vec c = Vec::Zero(n);
  return GenEq::make(std::move(name), AffineFn{std::move(A), std::move(c)}, std::move(B),
                     std::move(C), std::move(F), std::move(params));
}

}  // namespace varreg
