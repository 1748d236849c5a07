#include "varreg/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "varreg/errors.hpp"

namespace varreg {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw SchemaError("trailing characters in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw SchemaError("not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw SchemaError("number out of range: '" + s + "'");
  }
}

Vec parse_group(const std::string& s, int n, const char* what) {
  auto parts = split(s, '|');
  Vec v(n);
  if ((int)parts.size() == 1) {
    v.setConstant(parse_num(parts[0]));
  } else if ((int)parts.size() == n) {
    for (int i = 0; i < n; ++i) v(i) = parse_num(parts[i]);
  } else {
    throw SchemaError(std::string("signal ") + what + " needs 1 or " + std::to_string(n) +
                      " values");
  }
  return v;
}

}  // namespace

Signal Signal::sinusoid(Vec amplitude, Vec frequency, Vec phase, Vec offset) {
  if (amplitude.size() != frequency.size() || amplitude.size() != phase.size() ||
      amplitude.size() != offset.size())
    throw SchemaError("sinusoid coordinate counts disagree");
  Signal s;
  s.impl_ = Sinusoid{std::move(amplitude), std::move(frequency), std::move(phase),
                     std::move(offset)};
  return s;
}

Signal Signal::sampled(std::vector<double> times, std::vector<Vec> values) {
  if (times.size() != values.size() || times.size() < 2)
    throw SchemaError("sampled signal needs matching times/values, at least two samples");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw SchemaError("sampled signal times must increase");
  for (const Vec& v : values)
    if (v.size() != values[0].size()) throw SchemaError("sampled signal value sizes disagree");
  Signal s;
  s.impl_ = SampledSignal{std::move(times), std::move(values)};
  return s;
}

Signal Signal::constant(const Vec& p) {
  int n = (int)p.size();
  return sinusoid(Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), p);
}

Signal Signal::parse(const std::string& spec, int n) {
  if (spec.rfind("sin:", 0) == 0) {
    auto groups = split(spec.substr(4), ',');
    if (groups.size() != 4)
      throw SchemaError("sinusoid spec needs amplitude,frequency,phase,offset");
    return sinusoid(parse_group(groups[0], n, "amplitude"), parse_group(groups[1], n, "frequency"),
                    parse_group(groups[2], n, "phase"), parse_group(groups[3], n, "offset"));
  }
  std::ifstream in(spec);
  if (!in) throw SchemaError("cannot open signal file '" + spec + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty signal file '" + spec + "'");
  auto header = split(line, ',');
  if ((int)header.size() != n + 1 || header[0] != "t")
    throw SchemaError("signal CSV header must be t,p1..p" + std::to_string(n));
  std::vector<double> times;
  std::vector<Vec> values;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if ((int)cells.size() != n + 1)
      throw SchemaError("signal CSV line " + std::to_string(lineno) + ": wrong column count");
    times.push_back(parse_num(cells[0]));
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = parse_num(cells[i + 1]);
    values.push_back(v);
  }
  return sampled(std::move(times), std::move(values));
}

Vec Signal::operator()(double t) const {
  if (const auto* sn = std::get_if<Sinusoid>(&impl_)) {
    int n = (int)sn->amplitude.size();
    Vec v(n);
    for (int i = 0; i < n; ++i)
      v(i) = sn->amplitude(i) * std::sin(2.0 * M_PI * sn->frequency(i) * t + sn->phase(i)) +
             sn->offset(i);
    return v;
  }
  const auto& sp = std::get<SampledSignal>(impl_);
  if (t <= sp.times.front()) return sp.values.front();
  if (t >= sp.times.back()) return sp.values.back();
  auto it = std::upper_bound(sp.times.begin(), sp.times.end(), t);
  size_t hi = (size_t)(it - sp.times.begin());
  size_t lo = hi - 1;
  double w = (t - sp.times[lo]) / (sp.times[hi] - sp.times[lo]);
  return (1.0 - w) * sp.values[lo] + w * sp.values[hi];
}

int Signal::dim() const {
  if (const auto* sn = std::get_if<Sinusoid>(&impl_)) return (int)sn->amplitude.size();
  return (int)std::get<SampledSignal>(impl_).values[0].size();
}

Signal Signal::shifted(const Vec& offset) const {
  Signal s = *this;
  if (auto* sn = std::get_if<Sinusoid>(&s.impl_)) {
    sn->offset += offset;
  } else {
    auto& sp = std::get<SampledSignal>(s.impl_);
    for (Vec& v : sp.values) v += offset;
  }
  return s;
}

// ------------------------------------------------------------------
// Local strong-regularity probe: find radii (a, b) around (t, z) such that
// y -> local_solve(p(t) + y, z, a) is single-valued over B_b, and record the
// Lipschitz ratio of that selection.
// ------------------------------------------------------------------

namespace {

struct ProbeOut {
  double a = 0, b = 0, kappa = 0;
};

std::vector<Vec> ball_offsets(int n, double radius) {
  std::vector<Vec> out;
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < 20; ++i) {
    double r = radius * (i + 1) / 20.0;
    Vec d(n);
    if (n == 1) {
      d(0) = (i % 2 == 0) ? 1.0 : -1.0;
    } else if (n == 2) {
      double th = ga * (i + 1);
      d << std::cos(th), std::sin(th);
    } else {
      double y = 1.0 - 2.0 * (i + 0.5) / 20.0;
      double rr = std::sqrt(std::max(0.0, 1.0 - y * y));
      d.setZero();
      d(0) = rr * std::cos(ga * i);
      d(1) = y;
      d(2) = rr * std::sin(ga * i);
    }
    out.push_back(r * d);
  }
  return out;
}

std::optional<ProbeOut> probe_point(const GenEq& ge, const Vec& pt, const Vec& z) {
  const double scale = 1.0 + z.norm();
  for (double af : {0.5, 0.25, 0.125, 0.0625}) {
    double a = af * scale;
    for (double bf : {0.5, 0.25, 0.125}) {
      double b = bf * a;
      bool ok = true;
      std::vector<Vec> ys = ball_offsets(ge.n, b);
      ys.insert(ys.begin(), Vec::Zero(ge.n));
      std::vector<Vec> sols;
      for (const Vec& y : ys) {
        SolutionSet s;
        try {
          s = local_solve(ge, pt + y, z, a);
        } catch (const Error&) {
          ok = false;
          break;
        }
        if (s.points.size() != 1 || !s.boxes.empty()) {
          ok = false;
          break;
        }
        sols.push_back(s.points[0].z);
      }
      if (!ok) continue;
      double kappa = 0.0;
      for (size_t i = 0; i < ys.size(); ++i)
        for (size_t j = i + 1; j < ys.size(); ++j) {
          double dy = (ys[i] - ys[j]).norm();
          if (dy < 1e-12) continue;
          kappa = std::max(kappa, (sols[i] - sols[j]).norm() / dy);
        }
      return ProbeOut{a, b, kappa};
    }
  }
  return std::nullopt;
}

}  // namespace

Trajectory track(const GenEq& ge, const Signal& p, const Vec& z0, double base_step) {
  if (p.dim() != ge.n)
    throw SchemaError("signal dimension does not match the model");
  Vec p0 = p(0.0);
  if (ge.residual(p0, z0) > 1e-8)
    throw PreconditionError("seed is not a solution at t = 0 (residual above 1e-8)");

  auto pb = probe_point(ge, p0, z0);
  if (!pb) throw TrackingFailure("seed probe found no admissible regularity radii");
  double a_loc = pb->a, b_loc = pb->b;

  Trajectory traj;
  auto append = [&](double t, const Vec& z) {
    SolutionSet s = local_solve(ge, p(t), z, 1e-6 * (1.0 + z.norm()));
    std::vector<int> br;
    if (s.points.size() == 1) br = s.points[0].branch;
    traj.times.push_back(t);
    traj.z.push_back(z);
    traj.residuals.push_back(ge.residual(p(t), z));
    traj.branch.push_back(br);
  };
  append(0.0, z0);

  double t = 0.0;
  Vec z = z0;
  double step = base_step;
  int failures = 0;
  while (t < 1.0 - 1e-12) {
    double dt = std::min(step, 1.0 - t);
    while ((p(t + dt) - p(t)).norm() > 0.5 * b_loc && dt > 1e-9) dt *= 0.5;
    if (dt < 1e-9)
      throw TrackingFailure("step underflow while bounding the input increment; pointwise strong "
                            "regularity lost near t = " +
                            std::to_string(t));
    SolutionSet s;
    bool ambiguous = false;
    try {
      s = local_solve(ge, p(t + dt), z, a_loc);
      ambiguous = s.points.size() != 1 || !s.boxes.empty();
    } catch (const Error&) {
      ambiguous = true;
    }
    if (!ambiguous) {
      t += dt;
      z = s.points[0].z;
      traj.times.push_back(t);
      traj.z.push_back(z);
      traj.residuals.push_back(s.points[0].residual);
      traj.branch.push_back(s.points[0].branch);
      failures = 0;
      step = std::min(base_step, std::max(step * 2.0, 1e-6));
      continue;
    }
    ++failures;
    step *= 0.5;
    if (step < 1e-9)
      throw TrackingFailure("ambiguous localized inverse persisted down to step 1e-9 near t = " +
                            std::to_string(t));
    if (failures % 3 == 0) {
      auto re = probe_point(ge, p(t), z);
      if (!re)
        throw TrackingFailure("re-probe after repeated ambiguity failed near t = " +
                              std::to_string(t));
      a_loc = re->a;
      b_loc = re->b;
    }
  }
  return traj;
}

namespace {

// Nearest tracked sample, refined by a localized solve at exactly time t.
Vec trajectory_at(const GenEq& ge, const Signal& p, const Trajectory& traj, double t) {
  auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
  size_t hi = std::min((size_t)(it - traj.times.begin()), traj.times.size() - 1);
  size_t lo = hi > 0 ? hi - 1 : 0;
  Vec guess;
  if (hi == lo || traj.times[hi] <= traj.times[lo]) {
    guess = traj.z[lo];
  } else {
    double w = (t - traj.times[lo]) / (traj.times[hi] - traj.times[lo]);
    w = std::clamp(w, 0.0, 1.0);
    guess = (1.0 - w) * traj.z[lo] + w * traj.z[hi];
  }
  SolutionSet s = local_solve(ge, p(t), guess, 0.25 * (1.0 + guess.norm()));
  if (s.points.size() == 1 && s.boxes.empty()) return s.points[0].z;
  if (!s.points.empty()) {
    // pick the point closest to the interpolant
    Vec best = s.points[0].z;
    for (const auto& sp : s.points)
      if ((sp.z - guess).norm() < (best - guess).norm()) best = sp.z;
    return best;
  }
  throw EstimationFailure("no localized solution at grid time " + std::to_string(t));
}

}  // namespace

UniformConstants estimate_uniform_constants(const GenEq& ge, const Signal& p, Trajectory& traj) {
  if (traj.times.empty()) throw PreconditionError("constants estimation needs a tracked trajectory");
  double a_min = kInf, b_min = kInf, kappa = 0.0;
  for (int i = 0; i <= 32; ++i) {
    double t = i / 32.0;
    Vec z = trajectory_at(ge, p, traj, t);
    auto pb = probe_point(ge, p(t), z);
    if (!pb)
      throw EstimationFailure("no admissible radius pair at grid time " + std::to_string(t));
    a_min = std::min(a_min, pb->a);
    b_min = std::min(b_min, pb->b);
    kappa = std::max(kappa, pb->kappa);
  }
  UniformConstants uc;
  uc.a = 0.5 * a_min;
  uc.kappa = std::max(kappa, 1e-9);
  uc.b = std::min(uc.a / uc.kappa, 0.5 * b_min);
  uc.schedule =
      "33 grid times; radii {1/2,1/4,1/8,1/16}x(1+|z|) with offsets {1/2,1/4,1/8}xa; 20 "
      "ball samples per pair; estimate only";
  traj.a = uc.a;
  traj.b = uc.b;
  traj.kappa = uc.kappa;
  traj.constants_estimated = true;
  return uc;
}

PerturbReport perturb_experiment(const GenEq& ge, const Signal& p, const Signal& ptilde,
                                 const Trajectory& traj) {
  if (!traj.constants_estimated)
    throw PreconditionError("perturbation experiment needs estimated uniform constants");
  PerturbReport rep;
  double eps = 0.0;
  for (int i = 0; i <= 128; ++i) {
    double t = i / 128.0;
    eps = std::max(eps, (ptilde(t) - p(t)).norm());
  }
  rep.eps = eps;
  rep.bound = 4.0 * traj.a * eps / traj.b;
  rep.sharper = traj.kappa * eps;
  if (eps >= traj.b / 4.0) {
    std::ostringstream os;
    os << "perturbation size " << eps << " reaches the b/4 gate (" << traj.b / 4.0 << ")";
    throw PerturbationTooLarge(os.str());
  }
  double sup = 0.0;
  int count = 0;
  for (size_t i = 0; i < traj.times.size(); ++i) {
    double t = traj.times[i];
    SolutionSet s = local_solve(ge, ptilde(t), traj.z[i], traj.a);
    if (s.points.size() != 1 || !s.boxes.empty())
      throw TrackingFailure("perturbed localized inverse not single-valued at t = " +
                            std::to_string(t));
    sup = std::max(sup, (s.points[0].z - traj.z[i]).norm());
    ++count;
  }
  rep.sup_diff = sup;
  rep.grid_points = count;
  rep.within_bound = sup <= rep.bound + 1e-12;
  rep.within_sharper = sup <= rep.sharper + 1e-12;
  return rep;
}

double g_relation_check(const GenEq& ge, const Signal& p, const Trajectory& traj, int count,
                        unsigned seed) {
  if (traj.times.empty()) throw PreconditionError("relation check needs a tracked trajectory");
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double radius = traj.constants_estimated ? traj.a : 0.25;
  double wmax = traj.constants_estimated ? traj.b / 2.0 : 0.05;
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    double t = uni(gen), tp = uni(gen);
    size_t idx = std::min((size_t)(uni(gen) * traj.times.size()), traj.times.size() - 1);
    const Vec& zc = traj.z[idx];
    Vec w(ge.n);
    for (int i = 0; i < ge.n; ++i) w(i) = (2.0 * uni(gen) - 1.0) * wmax;
    // G_t^{-1}(w) vs G_{t'}^{-1}(w + p(t) - p(t')), both as localized solves
    SolutionSet A = local_solve(ge, p(t) + w, zc, radius);
    Vec shifted = (w + p(t) - p(tp)) + p(tp);
    SolutionSet B = local_solve(ge, shifted, zc, radius);
    double e1 = solution_excess(A, B), e2 = solution_excess(B, A);
    if (A.empty() && B.empty()) continue;
    worst = std::max({worst, e1, e2});
  }
  return worst;
}

void write_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  int n = traj.z.empty() ? 0 : (int)traj.z[0].size();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",z" << i;
  out << ",residual,branch\n";
  char buf[40];
  for (size_t k = 0; k < traj.times.size(); ++k) {
    snprintf(buf, sizeof buf, "%.12g", traj.times[k]);
    out << buf;
    for (int i = 0; i < n; ++i) {
      snprintf(buf, sizeof buf, "%.12g", traj.z[k](i));
      out << ',' << buf;
    }
    snprintf(buf, sizeof buf, "%.3g", traj.residuals[k]);
    out << ',' << buf << ',';
    for (size_t j = 0; j < traj.branch[k].size(); ++j)
      out << (j ? "|" : "") << traj.branch[k][j];
    out << '\n';
  }
}

}  // namespace varreg
