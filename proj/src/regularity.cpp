#include "varreg/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <variant>

#include <Eigen/Dense>
#include <json.hpp>

#include "varreg/errors.hpp"

namespace varreg {

std::string verdict_str(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    default: return "unknown";
  }
}

namespace {

using RowVec = Eigen::RowVectorXd;

constexpr double kFeasTol = 1e-9;
constexpr double kRowCap = 20000;
constexpr double kBoxCap = 1e6;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

double mat_norm2(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

// ------------------------------------------------------------------
// Fourier-Motzkin elimination with witness reconstruction.
// System: rows * t >= rhs over nv variables.
// ------------------------------------------------------------------

struct FMStage {
  Mat rows;
  Vec rhs;
};

// Drops vacuous rows, normalizes the rest to unit max-coefficient.
// Returns false when a constant row is infeasible.
bool fm_normalize(Mat& A, Vec& b) {
  std::vector<int> keep;
  for (int i = 0; i < A.rows(); ++i) {
    double mx = A.cols() > 0 ? A.row(i).cwiseAbs().maxCoeff() : 0.0;
    if (mx <= 1e-12) {
      if (b(i) > kFeasTol) return false;
      continue;
    }
    keep.push_back(i);
  }
  Mat A2((int)keep.size(), A.cols());
  Vec b2((int)keep.size());
  for (int k = 0; k < (int)keep.size(); ++k) {
    double mx = A.row(keep[k]).cwiseAbs().maxCoeff();
    A2.row(k) = A.row(keep[k]) / mx;
    b2(k) = b(keep[k]) / mx;
  }
  A = std::move(A2);
  b = std::move(b2);
  return true;
}

std::optional<Vec> fm_solve(Mat A, Vec b, int nv) {
  std::vector<FMStage> stages;
  for (int v = nv; v > 0; --v) {
    if (!fm_normalize(A, b)) return std::nullopt;
    if (A.rows() > kRowCap) throw CapExceeded("inequality elimination exceeded the row cap");
    stages.push_back({A, b});
    std::vector<int> pos, neg, zer;
    for (int i = 0; i < A.rows(); ++i) {
      double c = A(i, v - 1);
      if (c > 1e-12) pos.push_back(i);
      else if (c < -1e-12) neg.push_back(i);
      else zer.push_back(i);
    }
    Mat A2((int)(zer.size() + pos.size() * neg.size()), v - 1);
    Vec b2(A2.rows());
    int r = 0;
    for (int i : zer) {
      A2.row(r) = A.row(i).head(v - 1);
      b2(r) = b(i);
      ++r;
    }
    for (int i : pos)
      for (int j : neg) {
        double cp = A(i, v - 1), cn = A(j, v - 1);
        A2.row(r) = (-cn) * A.row(i).head(v - 1) + cp * A.row(j).head(v - 1);
        b2(r) = (-cn) * b(i) + cp * b(j);
        ++r;
      }
    A = std::move(A2);
    b = std::move(b2);
  }
  for (int i = 0; i < A.rows(); ++i)
    if (b(i) > kFeasTol) return std::nullopt;

  Vec t = Vec::Zero(nv);
  for (int v = 0; v < nv; ++v) {
    const FMStage& st = stages[nv - 1 - v];
    double lo = -kInf, hi = kInf;
    for (int i = 0; i < st.rows.rows(); ++i) {
      double c = st.rows(i, v);
      double rest = v > 0 ? st.rows.row(i).head(v).dot(t.head(v)) : 0.0;
      double bound = st.rhs(i) - rest;
      if (c > 1e-12) lo = std::max(lo, bound / c);
      else if (c < -1e-12) hi = std::min(hi, bound / c);
    }
    double val;
    if (std::isfinite(lo) && std::isfinite(hi)) val = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) val = lo + 1.0;
    else if (std::isfinite(hi)) val = hi - 1.0;
    else val = 0.0;
    t(v) = val;
  }
  return t;
}

// Convex-piece membership as homogeneous rows on (u, w) = (ru . xi, rw . xi).
void piece_rows(const ConePiece& pc, const RowVec& ru, const RowVec& rw,
                std::vector<RowVec>* eqs, std::vector<RowVec>* ineqs) {
  if (std::holds_alternative<OriginPiece>(pc)) {
    eqs->push_back(ru);
    eqs->push_back(rw);
  } else if (const auto* rp = std::get_if<RayPiece>(&pc)) {
    eqs->push_back(rp->g.x() * rw - rp->g.y() * ru);
    ineqs->push_back(rp->g.x() * ru + rp->g.y() * rw);
  } else if (const auto* lp = std::get_if<LinePiece>(&pc)) {
    eqs->push_back(lp->g.x() * rw - lp->g.y() * ru);
  } else if (const auto* sp = std::get_if<SectorPiece>(&pc)) {
    ineqs->push_back(sp->g1.x() * rw - sp->g1.y() * ru);  // cross(g1, (u,w)) >= 0
    ineqs->push_back(sp->g2.y() * ru - sp->g2.x() * rw);  // cross((u,w), g2) >= 0
  }
  // FullPiece: unconstrained
}

}  // namespace

std::optional<Vec> cone_feasible(const ConeCondition& cond) {
  const int d = (int)cond.rows_u.cols();
  const int mm = (int)cond.cones.size();
  if (d > 6) throw UnsupportedSize("cone_feasible supports at most 6 variables");
  if (cond.rows_w.cols() != d || cond.rows_u.rows() != mm || cond.rows_w.rows() != mm ||
      (cond.eq.size() > 0 && cond.eq.cols() != d) || cond.pivot.cols() != d)
    throw ModelError("cone condition dimensions disagree");
  for (const auto& K : cond.cones)
    if ((int)K.pieces().size() > 6) throw UnsupportedSize("cone with more than 6 convex pieces");

  // An empty piece list is the origin cone.
  std::vector<std::vector<ConePiece>> choices(mm);
  for (int j = 0; j < mm; ++j) {
    choices[j] = cond.cones[j].pieces();
    if (choices[j].empty()) choices[j].push_back(OriginPiece{});
  }

  std::vector<int> combo(mm, 0);
  while (true) {
    std::vector<RowVec> eqs, ineqs;
    for (int i = 0; i < cond.eq.rows(); ++i) eqs.push_back(cond.eq.row(i));
    for (int j = 0; j < mm; ++j)
      piece_rows(choices[j][combo[j]], cond.rows_u.row(j), cond.rows_w.row(j), &eqs, &ineqs);

    Mat N;
    int k;
    if (eqs.empty()) {
      N = Mat::Identity(d, d);
      k = d;
    } else {
      Mat E((int)eqs.size(), d);
      for (int i = 0; i < (int)eqs.size(); ++i) E.row(i) = eqs[i];
      Eigen::FullPivLU<Mat> lu(E);
      lu.setThreshold(1e-9);
      k = (int)lu.dimensionOfKernel();
      if (k > 0) N = lu.kernel();
    }
    if (k > 0) {
      Mat Gq((int)ineqs.size(), k);
      for (int i = 0; i < (int)ineqs.size(); ++i) Gq.row(i) = ineqs[i] * N;
      Mat P = cond.pivot * N;

      for (int r = 0; r < P.rows(); ++r) {
        for (double s : {1.0, -1.0}) {
          RowVec q = s * P.row(r);
          double qmax = q.cwiseAbs().maxCoeff();
          if (qmax < 1e-9) continue;
          int jm = 0;
          q.cwiseAbs().maxCoeff(&jm);
          // Substitute q . t = 1 and eliminate t_jm.
          Mat A(Gq.rows(), k - 1);
          Vec b(Gq.rows());
          for (int i = 0; i < Gq.rows(); ++i) {
            int col = 0;
            for (int c = 0; c < k; ++c) {
              if (c == jm) continue;
              A(i, col++) = Gq(i, c) - Gq(i, jm) * q(c) / q(jm);
            }
            b(i) = -Gq(i, jm) / q(jm);
          }
          auto tred = fm_solve(A, b, k - 1);
          if (!tred) continue;
          Vec t(k);
          {
            int col = 0;
            double acc = 0.0;
            for (int c = 0; c < k; ++c) {
              if (c == jm) continue;
              t(c) = (*tred)(col++);
              acc += q(c) * t(c);
            }
            t(jm) = (1.0 - acc) / q(jm);
          }
          Vec xi = N * t;
          double nrm = xi.norm();
          if (nrm < 1e-12) continue;
          xi /= nrm;
          // Verify against the original condition before accepting.
          if (cond.eq.rows() > 0 && (cond.eq * xi).cwiseAbs().maxCoeff() > 1e-8) continue;
          bool ok = true;
          for (int j = 0; j < mm && ok; ++j) {
            Vec2 pr(cond.rows_u.row(j).dot(xi), cond.rows_w.row(j).dot(xi));
            if (!cond.cones[j].contains(pr, 1e-8 * (1.0 + pr.norm()))) ok = false;
          }
          if (!ok) continue;
          if ((cond.pivot * xi).cwiseAbs().maxCoeff() < 1e-7) continue;
          return xi;
        }
      }
    }
    // odometer
    int j = 0;
    while (j < mm && ++combo[j] == (int)choices[j].size()) combo[j++] = 0;
    if (j == mm) break;
  }
  return std::nullopt;
}

// ------------------------------------------------------------------
// Exact planar ratio suprema.
// ------------------------------------------------------------------

double cone_ratio_sup(const Cone2& K, const Vec2& alpha, const Vec2& beta) {
  const double anorm = std::max(alpha.norm(), 1e-300);
  const double bnorm = std::max(beta.norm(), 1.0);
  auto dir_ratio = [&](Vec2 u) -> double {
    double un = u.norm();
    if (un < 1e-300) return 0.0;
    u /= un;
    double a = alpha.dot(u), b = beta.dot(u);
    if (std::abs(a) <= 1e-12 * anorm) return std::abs(b) <= 1e-12 * bnorm ? 0.0 : kInf;
    return std::abs(b) / std::abs(a);
  };
  double best = 0.0;
  for (const auto& pc : K.pieces()) {
    if (std::holds_alternative<OriginPiece>(pc)) continue;
    if (std::holds_alternative<FullPiece>(pc)) {
      if (std::abs(cross2(alpha, beta)) <= 1e-12 * std::max(1.0, alpha.norm() * beta.norm()))
        best = std::max(best, alpha.norm() < 1e-300 ? 0.0 : beta.norm() / alpha.norm());
      else
        best = kInf;
    } else if (const auto* rp = std::get_if<RayPiece>(&pc)) {
      best = std::max(best, dir_ratio(rp->g));
    } else if (const auto* lp = std::get_if<LinePiece>(&pc)) {
      best = std::max(best, dir_ratio(lp->g));
    } else if (const auto* sp = std::get_if<SectorPiece>(&pc)) {
      best = std::max(best, dir_ratio(sp->g1));
      best = std::max(best, dir_ratio(sp->g2));
      // The ratio of two linear functionals is monotone in the angle between
      // poles of alpha, so interior maxima occur only where alpha vanishes.
      Vec2 pole(alpha.y(), -alpha.x());
      if (pole.norm() > 1e-300) {
        pole.normalize();
        Vec2 npole = -pole;
        for (const Vec2& dv : {pole, npole}) {
          if (cross2(sp->g1, dv) >= -1e-12 && cross2(dv, sp->g2) >= -1e-12 &&
              std::abs(beta.dot(dv)) > 1e-12 * bnorm)
            best = kInf;
        }
      }
    }
    if (best == kInf) break;
  }
  return best;
}

namespace {

// ------------------------------------------------------------------
// Sampled modulus estimates for n >= 2.
// sup over unit u of 1 / min_w || M1 u + M2 w ||, w ranging over the
// product of cone slices taken at (Y u)_j.
// ------------------------------------------------------------------

std::vector<Vec> unit_directions(int k, int* density) {
  std::vector<Vec> dirs;
  if (k == 1) {
    dirs.push_back(Vec::Ones(1));
    dirs.push_back(-Vec::Ones(1));
  } else if (k == 2) {
    for (int i = 0; i < 720; ++i) {
      double th = M_PI * i / 360.0;
      Vec d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
    }
  } else {
    // Fibonacci sphere for k = 3, golden-ratio lattice pushed through
    // inverse-normal-ish mixing for higher k.
    int count = k == 3 ? 1500 : 2000;
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      Vec d(k);
      if (k == 3) {
        double y = 1.0 - 2.0 * (i + 0.5) / count;
        double rr = std::sqrt(std::max(0.0, 1.0 - y * y));
        d << rr * std::cos(ga * i), y, rr * std::sin(ga * i);
      } else {
        for (int c = 0; c < k; ++c) d(c) = std::cos(ga * (i + 1) * (c + 1) + 0.7 * c);
        if (d.norm() < 1e-9) continue;
        d.normalize();
      }
      dirs.push_back(d);
    }
  }
  for (int c = 0; c < k; ++c) {
    Vec e = Vec::Zero(k);
    e(c) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (density) *density = (int)dirs.size();
  return dirs;
}

double box_min_norm(const Vec& base, const Mat& M2, const std::vector<Interval>& box) {
  const int mm = (int)M2.cols();
  Vec w(mm);
  for (int j = 0; j < mm; ++j) w(j) = box[j].clamp_finite(0.0, kBoxCap);
  Vec res = base + M2 * w;
  for (int sweep = 0; sweep < 200; ++sweep) {
    bool moved = false;
    for (int j = 0; j < mm; ++j) {
      double denom = M2.col(j).squaredNorm();
      if (denom <= 1e-30) continue;
      Vec r = res - M2.col(j) * w(j);
      double target = -M2.col(j).dot(r) / denom;
      double nw = box[j].clamp_finite(target, kBoxCap);
      if (std::abs(nw - w(j)) > 1e-14) {
        res += M2.col(j) * (nw - w(j));
        w(j) = nw;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return res.norm();
}

Modulus sampled_sup(const Mat& M1, const Mat& M2, const Mat& Y, const std::vector<Cone2>& cones,
                    const char* what) {
  const int k = (int)M1.cols();
  const int mm = (int)cones.size();
  int density = 0;
  double best = 0.0;
  bool any = false;
  for (const Vec& u : unit_directions(k, &density)) {
    Vec y = Y * u;
    std::vector<std::vector<Interval>> slices(mm);
    bool active = true;
    long combos = 1;
    for (int j = 0; j < mm && active; ++j) {
      slices[j] = cones[j].slice_at(y(j));
      if (slices[j].empty()) active = false;
      combos *= (long)slices[j].size();
    }
    if (!active || combos > 4096) continue;
    any = true;
    Vec base = M1 * u;
    std::vector<int> pick(mm, 0);
    double mu = kInf;
    while (true) {
      std::vector<Interval> box(mm);
      for (int j = 0; j < mm; ++j) box[j] = slices[j][pick[j]];
      mu = std::min(mu, box_min_norm(base, M2, box));
      int j = 0;
      while (j < mm && ++pick[j] == (int)slices[j].size()) pick[j++] = 0;
      if (j == mm) break;
    }
    best = std::max(best, mu <= 1e-9 ? kInf : 1.0 / mu);
    if (best == kInf) break;
  }
  Modulus M;
  M.known = any;
  M.exact = false;
  M.lo = best;
  M.hi = std::isfinite(best) ? best * 1.02 : best;
  std::ostringstream os;
  os << what << "; sampled over " << density << " unit directions, coordinate-descent inner min";
  M.method = os.str();
  return M;
}

bool scalar_identity(const GenEq& ge) {
  return ge.n == 1 && ge.m == 1 && std::abs(ge.B(0, 0) - 1.0) <= 1e-12 &&
         std::abs(ge.C(0, 0) - 1.0) <= 1e-12;
}

Modulus exact_mod(double v, const char* method) {
  Modulus M;
  M.known = true;
  M.exact = true;
  M.lo = M.hi = v;
  M.method = method;
  return M;
}

Mat drop_zero_rows(const Mat& A) {
  std::vector<int> keep;
  for (int i = 0; i < A.rows(); ++i)
    if (A.row(i).cwiseAbs().maxCoeff() > 1e-12) keep.push_back(i);
  Mat R((int)keep.size(), A.cols());
  for (int i = 0; i < (int)keep.size(); ++i) R.row(i) = A.row(keep[i]);
  return R;
}

std::string vec_str(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < v.size(); ++i) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.6g", v(i));
    os << (i ? ", " : "") << buf;
  }
  os << ")";
  return os.str();
}

}  // namespace

// ------------------------------------------------------------------
// Aubin property via the limiting-normal implication.
// ------------------------------------------------------------------

CheckResult check_aubin(const GenEq& ge, const RefPoint& ref) {
  CheckResult out;
  const Assumptions& as = ge.assumptions();
  if (!ge.F.graph_closed())
    throw AssumptionError("Aubin check needs closed component graphs");
  Mat J;
  try {
    J = ge.jac_f(ref.z);
  } catch (const KinkError&) {
    out.notes.push_back("f is not differentiable at the reference point");
    return out;
  }
  if (!as.injective_B || !as.surjective_C) {
    out.notes.push_back("normal-cone criterion needs injective B and surjective C; verdict left open");
    return out;
  }

  const int n = ge.n, m = ge.m;
  Vec u = ge.C * ref.z;
  std::vector<Cone2> cones;
  std::vector<Cone2> limiting;
  for (int j = 0; j < m; ++j) {
    Cone2 N = limiting_normal_at(ge.F.comps[j], u(j), ref.v(j));
    limiting.push_back(N);
    cones.push_back(negate(N));
  }

  Mat CCt = ge.C * ge.C.transpose();
  ConeCondition cond;
  cond.rows_u = CCt.ldlt().solve(ge.C * J.transpose());
  cond.rows_w = ge.B.transpose();
  cond.cones = cones;
  cond.eq = drop_zero_rows((Mat::Identity(n, n) - ge.C.transpose() * CCt.ldlt().solve(ge.C)) *
                           J.transpose());
  cond.pivot = Mat::Identity(n, n);

  auto w = cone_feasible(cond);
  if (w) {
    out.verdict = Verdict::Fails;
    out.witness = *w;
    out.notes.push_back("nonzero multiplier " + vec_str(*w) + " satisfies the normal-cone system");
    out.modulus = exact_mod(kInf, "criterion witness: modulus infinite");
    return out;
  }
  out.verdict = Verdict::Holds;
  if (scalar_identity(ge)) {
    double fp = J(0, 0);
    double v = cone_ratio_sup(limiting[0], Vec2(1.0, -fp), Vec2(0.0, 1.0));
    out.modulus = exact_mod(v, "closed form over limiting-normal pieces");
  } else {
    std::vector<Cone2> co;
    for (int j = 0; j < m; ++j) co.push_back(coderivative_graph(ge.F.comps[j], u(j), ref.v(j)));
    out.modulus =
        sampled_sup(J.transpose(), ge.C.transpose(), ge.B.transpose(), co, "coderivative slices");
  }
  return out;
}

// ------------------------------------------------------------------
// Isolated calmness via the contingent implication, with a joint-variable
// sufficient fallback when B is not injective or C is not surjective.
// ------------------------------------------------------------------

CheckResult check_isolated_calmness(const GenEq& ge, const RefPoint& ref) {
  CheckResult out;
  Mat J;
  try {
    J = ge.jac_f(ref.z);
  } catch (const KinkError&) {
    out.notes.push_back("f is not differentiable at the reference point");
    return out;
  }
  const Assumptions& as = ge.assumptions();
  const int n = ge.n, m = ge.m;
  Vec u = ge.C * ref.z;
  std::vector<Cone2> cones;
  for (int j = 0; j < m; ++j)
    cones.push_back(contingent_at(ge.F.comps[j], u(j), ref.v(j)));

  if (as.injective_B && as.surjective_C) {
    Mat BtB = ge.B.transpose() * ge.B;
    ConeCondition cond;
    cond.rows_u = ge.C;
    cond.rows_w = -BtB.ldlt().solve(ge.B.transpose() * J);
    cond.cones = cones;
    cond.eq = drop_zero_rows(
        (Mat::Identity(n, n) - ge.B * BtB.ldlt().solve(Mat(ge.B.transpose()))) * J);
    cond.pivot = Mat::Identity(n, n);
    auto w = cone_feasible(cond);
    if (w) {
      out.verdict = Verdict::Fails;
      out.witness = *w;
      out.notes.push_back("direction " + vec_str(*w) + " satisfies the contingent system");
      out.modulus = exact_mod(kInf, "criterion witness: modulus infinite");
      return out;
    }
    out.verdict = Verdict::Holds;
    if (scalar_identity(ge)) {
      double fp = J(0, 0);
      double v = cone_ratio_sup(cones[0], Vec2(fp, 1.0), Vec2(1.0, 0.0));
      out.modulus = exact_mod(v, "closed form over contingent pieces");
    } else {
      out.modulus = sampled_sup(J, ge.B, ge.C, cones, "contingent slices");
    }
    return out;
  }

  // Joint (b, w) sufficient criterion: f'(z)b + Bw = 0, (Cb, w) in T, b != 0.
  std::string aux_detail;
  bool aux = aux_range_condition(ge, ref, &aux_detail);
  out.notes.push_back(aux_detail);
  const int d0 = n + m;
  Mat eq0(n, d0), ru0(m, d0), rw0(m, d0), pv0(n, d0);
  eq0 << J, ge.B;
  ru0 << ge.C, Mat::Zero(m, m);
  rw0 << Mat::Zero(m, n), Mat::Identity(m, m);
  pv0 << Mat::Identity(n, n), Mat::Zero(n, m);

  std::optional<Vec> witness_b;
  bool only_zero = false;
  if (d0 <= 6) {
    ConeCondition cond{ru0, rw0, cones, eq0, pv0};
    auto w = cone_feasible(cond);
    if (w) witness_b = Vec(w->head(n));
    else only_zero = true;
  } else {
    // Reduce onto the kernel of [J B] so the feasibility kernel stays small.
    Eigen::FullPivLU<Mat> lu(eq0);
    lu.setThreshold(1e-9);
    int k = (int)lu.dimensionOfKernel();
    if (k == 0) {
      only_zero = true;
    } else if (k > 6) {
      out.notes.push_back("joint criterion kernel larger than the feasibility guard; verdict left open");
      return out;
    } else {
      Mat N = lu.kernel();
      ConeCondition cond{ru0 * N, rw0 * N, cones, Mat(0, k), pv0 * N};
      auto t = cone_feasible(cond);
      if (t) witness_b = Vec((pv0 * N) * *t);
      else only_zero = true;
    }
  }

  if (witness_b) {
    out.verdict = Verdict::Unknown;
    out.witness = *witness_b;
    out.notes.push_back("joint criterion is only sufficient; nonzero direction " +
                        vec_str(*witness_b) + " found, verdict left open");
  } else if (only_zero && aux) {
    out.verdict = Verdict::Holds;
    out.notes.push_back("holds (sufficient): joint contingent criterion with the range audit");
  } else {
    out.verdict = Verdict::Unknown;
    out.notes.push_back("joint criterion passed but the range audit did not certify the cone gap");
  }
  out.modulus = sampled_sup(J, ge.B, ge.C, cones, "contingent slices");
  out.modulus.exact = false;
  return out;
}

// ------------------------------------------------------------------
// Strong metric regularity: paratingent implication (b) + local
// solvability grid (a).
// ------------------------------------------------------------------

namespace {

// 41 sample points spread over the closed delta-ball around p.
std::vector<Vec> ball_grid(const Vec& p, double delta) {
  std::vector<Vec> out;
  const int n = (int)p.size();
  if (n == 1) {
    for (int i = 0; i < 41; ++i) {
      Vec q(1);
      q(0) = p(0) + delta * (-1.0 + 2.0 * i / 40.0);
      out.push_back(q);
    }
    return out;
  }
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < 41; ++i) {
    Vec d(n);
    if (n == 2) {
      double th = ga * i;
      d << std::cos(th), std::sin(th);
    } else {
      double y = 1.0 - 2.0 * (i + 0.5) / 41.0;
      double rr = std::sqrt(std::max(0.0, 1.0 - y * y));
      d.setZero();
      d(0) = rr * std::cos(ga * i);
      d(1) = y;
      if (n >= 3) d(2) = rr * std::sin(ga * i);
    }
    double r = delta * std::pow((i + 1.0) / 41.0, 1.0 / n);
    out.push_back(p + r * d);
  }
  return out;
}

// Condition (a): nonempty local solution set around z for every grid p.
enum class Solvability { Verified, Empty, Undecided };

// Condition (a): local solutions must exist for every p near the reference
// value.  The local solver enumerates pieces exactly, so an empty result is
// a genuine counterexample, while a solver guard leaves the condition open.
Solvability smr_solvability(const GenEq& ge, const RefPoint& ref, std::string* note) {
  const double radius = 0.125 * (1.0 + ref.z.norm());
  for (double delta : {1e-2, 1e-3}) {
    for (const Vec& p : ball_grid(ref.p, delta)) {
      SolutionSet s;
      try {
        s = local_solve(ge, p, ref.z, radius);
      } catch (const Error& e) {
        *note = std::string("local solver guard at p = ") + vec_str(p) + ": " + e.what();
        return Solvability::Undecided;
      }
      if (s.empty()) {
        std::ostringstream os;
        os << "no local solution at p = " << vec_str(p) << " (delta " << delta << ", radius "
           << radius << ")";
        *note = os.str();
        return Solvability::Empty;
      }
    }
  }
  std::ostringstream os;
  os << "local solvability verified on 41-point grids, delta in {1e-2, 1e-3}, radius " << radius;
  *note = os.str();
  return Solvability::Verified;
}

}  // namespace

CheckResult check_smr(const GenEq& ge, const RefPoint& ref) {
  CheckResult out;
  Mat J;
  try {
    J = ge.jac_f(ref.z);
  } catch (const KinkError&) {
    NonsmoothResult nr = check_nonsmooth(ge, ref);
    out.verdict = nr.smr;
    out.notes.push_back("piecewise-derivative sufficient path");
    out.notes.insert(out.notes.end(), nr.notes.begin(), nr.notes.end());
    out.modulus.known = false;
    out.modulus.method = "piecewise-derivative path: no single modulus";
    return out;
  }
  const Assumptions& as = ge.assumptions();
  if (!as.injective_B || !as.surjective_C) {
    out.notes.push_back("strong regularity criterion needs injective B and surjective C; verdict left open");
    return out;
  }
  const int n = ge.n, m = ge.m;
  Vec u = ge.C * ref.z;
  std::vector<Cone2> cones;
  for (int j = 0; j < m; ++j)
    cones.push_back(paratingent_at(ge.F.comps[j], u(j), ref.v(j)));

  Mat BtB = ge.B.transpose() * ge.B;
  ConeCondition cond;
  cond.rows_u = ge.C;
  cond.rows_w = -BtB.ldlt().solve(ge.B.transpose() * J);
  cond.cones = cones;
  cond.eq = drop_zero_rows(
      (Mat::Identity(n, n) - ge.B * BtB.ldlt().solve(Mat(ge.B.transpose()))) * J);
  cond.pivot = Mat::Identity(n, n);
  auto w = cone_feasible(cond);
  if (w) {
    out.verdict = Verdict::Fails;
    out.witness = *w;
    out.notes.push_back("direction " + vec_str(*w) + " satisfies the paratingent system");
    out.modulus = exact_mod(kInf, "criterion witness: modulus infinite");
    return out;
  }
  std::string note;
  Solvability solvable = smr_solvability(ge, ref, &note);
  out.notes.push_back(note);
  if (solvable == Solvability::Empty) {
    out.verdict = Verdict::Fails;
    out.notes.push_back("local solvability fails: nearby values have no solution close to z");
    out.modulus = exact_mod(kInf, "unsolvable nearby value: modulus infinite");
    return out;
  }
  if (solvable == Solvability::Undecided) {
    out.verdict = Verdict::Unknown;
    out.notes.push_back("(a)-unknown: paratingent criterion passed but solvability is undecided");
    return out;
  }
  out.verdict = Verdict::Holds;
  if (scalar_identity(ge)) {
    double fp = J(0, 0);
    double v = cone_ratio_sup(cones[0], Vec2(fp, 1.0), Vec2(1.0, 0.0));
    out.modulus = exact_mod(v, "closed form over paratingent pieces");
  } else {
    out.modulus = sampled_sup(J, ge.B, ge.C, cones, "paratingent slices");
  }
  return out;
}

// ------------------------------------------------------------------
// P-matrix / maximal-monotonicity shortcuts (n = m, B = C = I).
// ------------------------------------------------------------------

ShortcutResult check_shortcuts(const GenEq& ge, const RefPoint& ref) {
  ShortcutResult s;
  if (ge.n != ge.m) return s;
  if (!ge.B.isIdentity(1e-12) || !ge.C.isIdentity(1e-12)) return s;
  s.applicable = true;

  Mat J;
  bool have_j = true;
  try {
    J = ge.jac_f(ref.z);
  } catch (const KinkError&) {
    have_j = false;
    s.notes.push_back("derivative unavailable at the reference point; P-matrix test skipped");
  }
  if (have_j) {
    s.p_matrix = true;
    const int n = ge.n;
    for (int mask = 1; mask < (1 << n) && s.p_matrix; ++mask) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) idx.push_back(i);
      Mat sub((int)idx.size(), (int)idx.size());
      for (size_t a = 0; a < idx.size(); ++a)
        for (size_t b = 0; b < idx.size(); ++b) sub((int)a, (int)b) = J(idx[a], idx[b]);
      if (sub.determinant() <= 1e-12) s.p_matrix = false;
    }
    s.notes.push_back(s.p_matrix ? "jacobian of f is a P-matrix"
                                 : "jacobian of f is not a P-matrix");
  }

  s.all_maximal_monotone = true;
  for (const auto& comp : ge.F.comps) {
    bool mm = false;
    try {
      mm = is_maximal_monotone(comp);
    } catch (const PreconditionError&) {
      mm = false;
    }
    if (!mm) {
      s.all_maximal_monotone = false;
      break;
    }
  }
  s.notes.push_back(s.all_maximal_monotone ? "every component map is maximal monotone"
                                           : "some component map is not maximal monotone");
  if (s.p_matrix && s.all_maximal_monotone)
    s.notes.push_back(
        "shortcut: P-matrix with maximal monotone components gives the Aubin property and strong "
        "regularity at this point");
  return s;
}

// ------------------------------------------------------------------
// Piecewise-derivative (nonsmooth) strong-regularity path, n = m = 1.
// ------------------------------------------------------------------

NonsmoothResult check_nonsmooth(const GenEq& ge, const RefPoint& ref) {
  NonsmoothResult out;
  if (ge.n != 1 || ge.m != 1)
    throw AssumptionError("piecewise-derivative path needs a scalar model");

  double dl, dr;
  if (const auto* sep = std::get_if<Sep1DFn>(&ge.f)) {
    dl = sep->fn.deriv(ref.z(0), Side::Left);
    dr = sep->fn.deriv(ref.z(0), Side::Right);
  } else {
    dl = dr = std::get<AffineFn>(ge.f).A(0, 0);
  }
  out.bouligand = {dl};
  if (std::abs(dr - dl) > 1e-12) out.bouligand.push_back(dr);
  std::sort(out.bouligand.begin(), out.bouligand.end());
  out.clarke = Interval::closed(out.bouligand.front(), out.bouligand.back());

  std::vector<double> samples;
  if (out.bouligand.size() == 1) {
    samples.push_back(out.bouligand[0]);
  } else {
    double lo = out.clarke.lo, hi = out.clarke.hi;
    for (int i = 0; i <= 10; ++i) samples.push_back(lo + (hi - lo) * i / 10.0);
  }

  Vec fz = ge.f_eval(ref.z);
  bool all_hold = true;
  std::string first_bad;
  for (double A : samples) {
    Mat Am(1, 1);
    Am(0, 0) = A;
    Vec c = fz - Am * ref.z;
    GenEq lin = GenEq::make(ge.name + "-selection", AffineFn{Am, c}, ge.B, ge.C, ge.F, ge.params,
                            "derivative selection");
    RefPoint rl = make_refpoint(lin, ref.p, ref.z, ref.v);
    CheckResult r = check_smr(lin, rl);
    if (r.verdict != Verdict::Holds) {
      all_hold = false;
      if (first_bad.empty()) {
        std::ostringstream os;
        os << "selection A = " << A << " did not certify strong regularity";
        first_bad = os.str();
      }
    }
  }
  if (all_hold) {
    out.smr = Verdict::Holds;
    std::ostringstream os;
    os << "holds (sufficient): strong regularity certified for " << samples.size()
       << " derivative selections spanning [" << out.clarke.lo << ", " << out.clarke.hi
       << "]; interval endpoints plus interior samples only";
    out.notes.push_back(os.str());
  } else {
    out.smr = Verdict::Unknown;
    out.notes.push_back(first_bad);
  }
  return out;
}

// ------------------------------------------------------------------
// Distance-function calmness probe.
// ------------------------------------------------------------------

ProbeResult calmness_probe(const GenEq& ge, const RefPoint& ref) {
  ProbeResult pr;
  if (!ge.assumptions().injective_B) {
    pr.notes.push_back("probe needs injective B; inconclusive");
    return pr;
  }
  const int n = ge.n, m = ge.m;
  Mat BtB = ge.B.transpose() * ge.B;
  Mat M = BtB.ldlt().solve(Mat(ge.B.transpose()));  // (B^T B)^{-1} B^T
  pr.K = mat_norm2(M) + 1.0;                        // parameter-Lipschitz factor of g
  Eigen::HouseholderQR<Mat> qr(ge.B);
  Mat Q = qr.householderQ() * Mat::Identity(n, m);

  auto h = [&](const Vec& z) -> double {
    Vec rhs = ref.p - ge.f_eval(z);
    Vec uu = ge.C * z;
    Vec vv = M * rhs;
    double d1 = ge.F.graph_dist(to_std(uu), to_std(vv));
    Vec off = rhs - Q * (Q.transpose() * rhs);
    return std::sqrt(d1 * d1 + off.squaredNorm());
  };

  std::vector<double> candidates;
  for (int c = 0; c < n; ++c) {
    for (double sgn : {1.0, -1.0}) {
      Vec dir = Vec::Zero(n);
      dir(c) = sgn;
      std::optional<double> cand;
      for (int l = 0; l < 16; ++l) {
        double r = std::pow(2.0, -4.0 - l) * (1.0 + ref.z.norm());
        Vec z = ref.z + r * dir;
        double hv;
        try {
          hv = h(z);
        } catch (const Error&) {
          continue;
        }
        if (hv <= 1e-13 || hv > 10.0 * r) continue;
        auto grad = [&](double delta) -> std::optional<Vec> {
          Vec g(n);
          for (int i = 0; i < n; ++i) {
            Vec e = Vec::Zero(n);
            e(i) = delta;
            try {
              g(i) = (h(z + e) - h(z - e)) / (2.0 * delta);
            } catch (const Error&) {
              return std::nullopt;
            }
          }
          return g;
        };
        auto g1 = grad(1e-3 * r), g2 = grad(1e-4 * r);
        if (!g1 || !g2) continue;
        if ((*g1 - *g2).norm() > 1e-4 * (1.0 + g1->norm())) continue;
        cand = g1->norm();  // smallest accepted radius wins
      }
      if (cand) candidates.push_back(*cand);
    }
  }
  if (candidates.empty()) {
    pr.notes.push_back("h(z) did not decay C1-stably along any sampled direction; inconclusive");
    return pr;
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<std::vector<double>> groups{{candidates[0]}};
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i] - groups.back().back() > 1e-3 * (1.0 + groups.back().back()))
      groups.push_back({});
    groups.back().push_back(candidates[i]);
  }
  for (const auto& g : groups) {
    double s = 0;
    for (double v : g) s += v;
    pr.clusters.push_back(s / g.size());
  }
  pr.gamma = candidates.front();
  if (pr.gamma <= 1e-3) {
    pr.outcome = ProbeResult::Outcome::ZeroInOuterSubdiff;
    pr.notes.push_back("a limiting gradient norm vanishes; the probe cannot certify calmness");
  } else {
    pr.outcome = ProbeResult::Outcome::CalmSufficient;
    pr.bound = pr.K / pr.gamma;
    std::ostringstream os;
    os << "calmness bound " << pr.bound << " from K = " << pr.K << " and gamma = " << pr.gamma;
    pr.notes.push_back(os.str());
  }
  return pr;
}

// ------------------------------------------------------------------
// Sampled audit of the auxiliary range condition.
// ------------------------------------------------------------------

bool aux_range_condition(const GenEq& ge, const RefPoint& ref, std::string* detail) {
  Eigen::FullPivLU<Mat> lu(ge.B);
  lu.setThreshold(1e-9);
  int k = (int)lu.dimensionOfKernel();
  if (k == 0) {
    if (detail) *detail = "B is injective; range condition holds trivially";
    return true;
  }
  Mat Kb = lu.kernel();
  Eigen::HouseholderQR<Mat> qr(Kb);
  Mat Qk = qr.householderQ() * Mat::Identity(ge.m, k);

  const std::array<double, 7> levels{-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
  const int n = ge.n, m = ge.m;
  long zcount = 1;
  for (int i = 0; i < n; ++i) zcount *= (long)levels.size();
  double worst = 0.0;
  long samples = 0;
  for (long zi = 0; zi < zcount; ++zi) {
    Vec z(n);
    long rem = zi;
    for (int i = 0; i < n; ++i) {
      z(i) = levels[rem % levels.size()];
      rem /= levels.size();
    }
    Vec u = ge.C * z;
    std::vector<std::vector<double>> vals(m);
    bool ok = true;
    for (int j = 0; j < m && ok; ++j) {
      ValueSet vs = ge.F.comps[j].values(u(j));
      if (vs.empty()) {
        ok = false;
        break;
      }
      for (const Interval& iv : vs.parts) {
        double lo = std::isfinite(iv.lo) ? iv.lo : ref.v(j) - 1e3;
        double hi = std::isfinite(iv.hi) ? iv.hi : ref.v(j) + 1e3;
        vals[j].push_back(lo);
        if (hi != lo) {
          vals[j].push_back(hi);
          vals[j].push_back(0.5 * (lo + hi));
        }
      }
    }
    if (!ok) continue;
    std::vector<int> pick(m, 0);
    while (true) {
      Vec w(m);
      for (int j = 0; j < m; ++j) w(j) = vals[j][pick[j]];
      Vec dv = w - ref.v;
      double nd = dv.norm();
      if (nd > 1e-12) {
        worst = std::max(worst, (Qk.transpose() * dv).norm() / nd);
        ++samples;
      }
      int j = 0;
      while (j < m && ++pick[j] == (int)vals[j].size()) pick[j++] = 0;
      if (j == m) break;
    }
  }
  bool pass = worst <= 1.0 - 1e-3 && samples > 0;
  if (detail) {
    std::ostringstream os;
    os << "range audit: max alignment of rge F_C - v with ker B is " << worst << " over "
       << samples << " samples" << (pass ? " (cone gap certified)" : " (no certificate)");
    *detail = os.str();
  }
  return pass;
}

// ------------------------------------------------------------------
// Report assembly.
// ------------------------------------------------------------------

namespace {

nlohmann::json num_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(num_json(v(i)));
  return a;
}

nlohmann::json modulus_json(const Modulus& m) {
  nlohmann::json j;
  j["known"] = m.known;
  j["exact"] = m.exact;
  j["lo"] = num_json(m.lo);
  j["hi"] = num_json(m.hi);
  j["method"] = m.method;
  return j;
}

std::string modulus_str(const Modulus& m) {
  if (!m.known) return "unknown";
  char buf[80];
  if (!std::isfinite(m.lo)) return "inf";
  if (m.exact || m.lo == m.hi) {
    snprintf(buf, sizeof buf, "%.9g%s", m.lo, m.exact ? "" : " (sampled)");
  } else {
    snprintf(buf, sizeof buf, "[%.6g, %.6g] (sampled)", m.lo, m.hi);
  }
  return buf;
}

}  // namespace

std::string RegReport::to_json(int indent) const {
  nlohmann::json j;
  j["model"] = model;
  j["refpoint_index"] = refpoint_index;
  j["p"] = vec_json(p);
  j["z"] = vec_json(z);
  nlohmann::json jv;
  for (const auto& [k, v] : verdicts) jv[k] = verdict_str(v);
  j["verdicts"] = jv;
  nlohmann::json jm;
  for (const auto& [k, v] : moduli) jm[k] = modulus_json(v);
  j["moduli"] = jm;
  nlohmann::json jw;
  for (const auto& [k, v] : witnesses) jw[k] = vec_json(v);
  j["witnesses"] = jw;
  j["assumptions"] = {{"injective_B", assumptions.injective_B},
                      {"smooth_f", assumptions.smooth_f},
                      {"closed_graph", assumptions.closed_graph},
                      {"surjective_C", assumptions.surjective_C},
                      {"product_F", assumptions.product_F}};
  if (aux_range) j["aux_range_condition"] = *aux_range;
  if (shortcuts.applicable) {
    j["shortcuts"] = {{"applicable", shortcuts.applicable},
                      {"p_matrix", shortcuts.p_matrix},
                      {"all_maximal_monotone", shortcuts.all_maximal_monotone},
                      {"notes", shortcuts.notes}};
  }
  if (probe) {
    std::string oc = probe->outcome == ProbeResult::Outcome::CalmSufficient ? "calm_sufficient"
                     : probe->outcome == ProbeResult::Outcome::ZeroInOuterSubdiff
                         ? "zero_in_outer_subdiff"
                         : "inconclusive";
    nlohmann::json pj;
    pj["outcome"] = oc;
    pj["gamma"] = num_json(probe->gamma);
    pj["K"] = num_json(probe->K);
    pj["bound"] = num_json(probe->bound);
    nlohmann::json cl = nlohmann::json::array();
    for (double c : probe->clusters) cl.push_back(num_json(c));
    pj["clusters"] = cl;
    pj["notes"] = probe->notes;
    j["calmness_probe"] = pj;
  }
  if (nonsmooth) {
    nlohmann::json nj;
    nj["smr"] = verdict_str(nonsmooth->smr);
    nj["bouligand"] = nonsmooth->bouligand;
    nj["clarke"] = {num_json(nonsmooth->clarke.lo), num_json(nonsmooth->clarke.hi)};
    nj["notes"] = nonsmooth->notes;
    j["nonsmooth"] = nj;
  }
  j["notes"] = notes;
  return j.dump(indent);
}

std::string RegReport::table() const {
  std::ostringstream os;
  os << "model: " << model;
  if (refpoint_index >= 0) os << "  refpoint " << refpoint_index;
  os << "\n  p = " << vec_str(p) << "   z = " << vec_str(z) << "\n";
  static const std::vector<std::pair<std::string, std::string>> rows = {
      {"aubin", "lip"},
      {"isolated_calmness", "clm"},
      {"smsr", "subreg"},
      {"smr", "reg"},
      {"calmness_probe", ""}};
  char line[160];
  for (const auto& [vk, mk] : rows) {
    auto it = verdicts.find(vk);
    if (it == verdicts.end()) continue;
    std::string mod;
    if (!mk.empty()) {
      auto mit = moduli.find(mk);
      if (mit != moduli.end()) mod = mk + " = " + modulus_str(mit->second);
    }
    snprintf(line, sizeof line, "  %-20s %-8s %s\n", vk.c_str(), verdict_str(it->second).c_str(),
             mod.c_str());
    os << line;
  }
  for (const auto& n : notes) os << "  - " << n << "\n";
  return os.str();
}

RegReport analyze(const GenEq& ge, const RefPoint& ref, const std::set<std::string>& checks) {
  auto want = [&](const std::string& c) { return checks.empty() || checks.count(c) > 0; };
  RegReport rep;
  rep.model = ge.name;
  rep.p = ref.p;
  rep.z = ref.z;
  rep.assumptions = ge.assumptions();

  try {
    rep.shortcuts = check_shortcuts(ge, ref);
  } catch (const Error& e) {
    rep.notes.push_back(std::string("shortcuts: ") + e.what());
  }
  if (!ge.assumptions().injective_B || !ge.assumptions().surjective_C) {
    try {
      std::string detail;
      rep.aux_range = aux_range_condition(ge, ref, &detail);
      rep.notes.push_back(detail);
    } catch (const Error& e) {
      rep.notes.push_back(std::string("range audit: ") + e.what());
    }
  }

  bool kinked = false;
  if (ge.n == 1) {
    try {
      ge.jac_f(ref.z);
    } catch (const KinkError&) {
      kinked = true;
    }
  }

  auto run = [&](const char* name, auto&& fn, const char* vkey, const char* mkey) {
    CheckResult r;
    try {
      r = fn();
    } catch (const Error& e) {
      r = CheckResult{};
      r.notes.push_back(std::string(name) + " raised: " + e.what());
    }
    rep.verdicts[vkey] = r.verdict;
    if (r.modulus.known || !r.modulus.method.empty()) rep.moduli[mkey] = r.modulus;
    if (r.witness) rep.witnesses[vkey] = *r.witness;
    for (const auto& n : r.notes) rep.notes.push_back(std::string(name) + ": " + n);
    return r;
  };

  if (want("aubin"))
    run("aubin", [&] { return check_aubin(ge, ref); }, "aubin", "lip");
  if (want("ic")) {
    CheckResult r =
        run("isolated_calmness", [&] { return check_isolated_calmness(ge, ref); },
            "isolated_calmness", "clm");
    // Isolated calmness of the solution map is equivalent to strong metric
    // subregularity of the generalized equation at the same point.
    rep.verdicts["smsr"] = r.verdict;
    auto it = rep.moduli.find("clm");
    if (it != rep.moduli.end()) rep.moduli["subreg"] = it->second;
    rep.notes.push_back("smsr: mirrors isolated_calmness (inverse-map equivalence)");
  }
  if (want("smr")) {
    if (kinked) {
      try {
        rep.nonsmooth = check_nonsmooth(ge, ref);
        rep.verdicts["smr"] = rep.nonsmooth->smr;
        Modulus m;
        m.method = "piecewise-derivative path: no single modulus";
        rep.moduli["reg"] = m;
        for (const auto& n : rep.nonsmooth->notes) rep.notes.push_back("smr: " + n);
      } catch (const Error& e) {
        rep.verdicts["smr"] = Verdict::Unknown;
        rep.notes.push_back(std::string("smr: ") + e.what());
      }
    } else {
      run("smr", [&] { return check_smr(ge, ref); }, "smr", "reg");
    }
  }
  if (want("calm")) {
    try {
      rep.probe = calmness_probe(ge, ref);
      rep.verdicts["calmness_probe"] =
          rep.probe->outcome == ProbeResult::Outcome::CalmSufficient ? Verdict::Holds
                                                                     : Verdict::Unknown;
      for (const auto& n : rep.probe->notes) rep.notes.push_back("calmness_probe: " + n);
    } catch (const Error& e) {
      rep.verdicts["calmness_probe"] = Verdict::Unknown;
      rep.notes.push_back(std::string("calmness_probe: ") + e.what());
    }
  }

  if (rep.shortcuts.applicable && rep.shortcuts.p_matrix && rep.shortcuts.all_maximal_monotone) {
    for (const char* key : {"aubin", "smr"}) {
      auto it = rep.verdicts.find(key);
      if (it == rep.verdicts.end()) {
        if (want(std::string(key) == "aubin" ? "aubin" : "smr")) rep.verdicts[key] = Verdict::Holds;
      } else if (it->second == Verdict::Unknown) {
        it->second = Verdict::Holds;
        rep.notes.push_back(std::string(key) + ": upgraded to holds by the shortcut");
      } else if (it->second == Verdict::Fails) {
        rep.notes.push_back(std::string(key) +
                            ": shortcut and cone criterion disagree; keeping the cone verdict");
      }
    }
    rep.notes.push_back("shortcut active: P-matrix + maximal monotone components");
  }
  return rep;
}

}  // namespace varreg
