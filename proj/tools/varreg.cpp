// varreg: inspect, solve, analyze, and track generalized-equation circuit
// models given as JSON documents.  JSON results go to stdout, human-readable
// tables to stderr.  Exit codes: 0 ok, 2 malformed document, 3 model
// invariant, 4 precondition/tracking, 5 internal.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "varreg/cones.hpp"
#include "varreg/errors.hpp"
#include "varreg/gedoc.hpp"
#include "varreg/geneq.hpp"
#include "varreg/regularity.hpp"
#include "varreg/solver.hpp"
#include "varreg/trajectory.hpp"

using nlohmann::json;
using namespace varreg;

namespace {

int env_threads() {
  const char* s = std::getenv("VARREG_THREADS");
  if (!s) return 1;
  int v = std::atoi(s);
  return v >= 1 ? v : 1;
}

json envelope(const std::string& command, const std::string& path, unsigned seed) {
  json j;
  j["command"] = command;
  j["file"] = path;
  j["seed"] = seed;
  j["threads"] = env_threads();
  return j;
}

json num_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json();
  return json(v);
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(num_json(v(i)));
  return a;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string piece = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    char* end = nullptr;
    double v = std::strtod(piece.c_str(), &end);
    if (piece.empty() || end != piece.c_str() + piece.size())
      throw SchemaError(flag + ": expected comma-separated numbers, got '" + text + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

json solution_json(const SolutionSet& sols) {
  json j;
  json pts = json::array();
  for (const Solution& s : sols.points) {
    json b = json::array();
    for (int k : s.branch) b.push_back(k);
    pts.push_back({{"z", vec_json(s.z)}, {"residual", s.residual}, {"branch", b}});
  }
  json boxes = json::array();
  for (const SolutionBox& b : sols.boxes)
    boxes.push_back({{"lo", vec_json(b.lo)}, {"hi", vec_json(b.hi)}, {"truncated", b.truncated}});
  j["points"] = pts;
  j["boxes"] = boxes;
  return j;
}

json cone_json(const Cone2& K) {
  json pieces = json::array();
  for (const ConePiece& p : K.pieces()) {
    if (std::holds_alternative<OriginPiece>(p)) {
      pieces.push_back({{"kind", "origin"}});
    } else if (std::holds_alternative<FullPiece>(p)) {
      pieces.push_back({{"kind", "full"}});
    } else if (const RayPiece* r = std::get_if<RayPiece>(&p)) {
      pieces.push_back({{"kind", "ray"}, {"g", {r->g.x(), r->g.y()}}});
    } else if (const LinePiece* l = std::get_if<LinePiece>(&p)) {
      pieces.push_back({{"kind", "line"}, {"g", {l->g.x(), l->g.y()}}});
    } else {
      const SectorPiece& s = std::get<SectorPiece>(p);
      pieces.push_back({{"kind", "sector"},
                        {"g1", {s.g1.x(), s.g1.y()}},
                        {"g2", {s.g2.x(), s.g2.y()}}});
    }
  }
  return pieces;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path, unsigned seed) {
  GEDocument doc = load_document(path);
  const GenEq& ge = doc.ge;
  const Assumptions& as = ge.assumptions();
  json out = envelope("validate", path, seed);
  out["model"] = ge.name;
  out["n"] = ge.n;
  out["m"] = ge.m;
  out["assumptions"] = {{"injective_B", as.injective_B},
                        {"smooth_f", as.smooth_f},
                        {"closed_graph", as.closed_graph},
                        {"surjective_C", as.surjective_C},
                        {"product_F", as.product_F}};
  std::fprintf(stderr, "%s: n=%d m=%d\n", ge.name.c_str(), ge.n, ge.m);
  std::fprintf(stderr, "  A1 injective B   : %s\n", as.injective_B ? "true" : "false");
  std::fprintf(stderr, "  A2 smooth f      : %s\n", as.smooth_f ? "true" : "false");
  std::fprintf(stderr, "  A3 closed graph  : %s\n", as.closed_graph ? "true" : "false");
  std::fprintf(stderr, "  A4 surjective C  : %s\n", as.surjective_C ? "true" : "false");
  std::fprintf(stderr, "  A5 product F     : %s\n", as.product_F ? "true" : "false");
  json refs = json::array();
  for (size_t k = 0; k < doc.refpoints.size(); ++k) {
    const RefPoint& r = doc.refpoints[k];
    std::string detail;
    bool aux = aux_range_condition(ge, r, &detail);
    refs.push_back({{"index", static_cast<int>(k)},
                    {"p", vec_json(r.p)},
                    {"z", vec_json(r.z)},
                    {"v", vec_json(r.v)},
                    {"residual", ge.residual(r.p, r.z)},
                    {"aux_range_condition", aux}});
    std::fprintf(stderr, "  refpoint %zu: Ã1 %s (%s)\n", k, aux ? "true" : "false",
                 detail.c_str());
  }
  out["refpoints"] = refs;
  emit(out);
  return 0;
}

int cmd_solve(const std::string& path, const std::string& p_text, const std::string& grid_text,
              unsigned seed) {
  GEDocument doc = load_document(path);
  const GenEq& ge = doc.ge;
  json out = envelope("solve", path, seed);
  out["model"] = ge.name;
  if (!grid_text.empty()) {
    if (ge.n != 1) throw PreconditionError("--grid requires a scalar model");
    double lo, hi;
    int count;
    if (std::sscanf(grid_text.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 2)
      throw SchemaError("--grid: expected lo:hi:count with count >= 2");
    json rows = json::array();
    for (int i = 0; i < count; ++i) {
      Vec p(1);
      p << lo + (hi - lo) * i / (count - 1);
      SolutionSet sols = solve(ge, p);
      rows.push_back({{"p", p(0)}, {"solutions", solution_json(sols)}});
    }
    out["grid"] = {{"lo", lo}, {"hi", hi}, {"count", count}};
    out["rows"] = rows;
    std::fprintf(stderr, "%s: %d grid rows on [%g, %g]\n", ge.name.c_str(), count, lo, hi);
    emit(out);
    return 0;
  }
  if (p_text.empty()) throw SchemaError("solve needs --p or --grid");
  Vec p = to_vec(parse_doubles(p_text, "--p"));
  if (p.size() != ge.n)
    throw PreconditionError("--p needs " + std::to_string(ge.n) + " coordinates");
  SolutionSet sols = solve(ge, p);
  out["p"] = vec_json(p);
  out["solutions"] = solution_json(sols);
  std::fprintf(stderr, "%s at p=%s: %zu point(s), %zu box(es)\n", ge.name.c_str(),
               p_text.c_str(), sols.points.size(), sols.boxes.size());
  for (const Solution& s : sols.points) {
    std::string zs;
    for (int i = 0; i < s.z.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.10g", i ? ", " : "", s.z(i));
      zs += buf;
    }
    std::fprintf(stderr, "  z = (%s)  residual %.3e\n", zs.c_str(), s.residual);
  }
  emit(out);
  return 0;
}

int cmd_cones(const std::string& path, const std::string& at_text, int coordinate,
              unsigned seed) {
  GEDocument doc = load_document(path);
  const GenEq& ge = doc.ge;
  std::vector<double> at = parse_doubles(at_text, "--at");
  if (at.size() != 2) throw SchemaError("--at: expected x,v (a graph point)");
  if (coordinate < 0 || coordinate >= ge.m)
    throw PreconditionError("--coordinate out of range [0, " + std::to_string(ge.m) + ")");
  const SVMap1& F = ge.F.comps[coordinate];
  Cone2 T = contingent_at(F, at[0], at[1]);
  Cone2 Tp = paratingent_at(F, at[0], at[1]);
  Cone2 Nf = frechet_normal_at(F, at[0], at[1]);
  Cone2 Nl = limiting_normal_at(F, at[0], at[1]);
  json out = envelope("cones", path, seed);
  out["model"] = ge.name;
  out["coordinate"] = coordinate;
  out["at"] = {at[0], at[1]};
  out["contingent"] = cone_json(T);
  out["paratingent"] = cone_json(Tp);
  out["frechet_normal"] = cone_json(Nf);
  out["limiting_normal"] = cone_json(Nl);
  std::fprintf(stderr, "%s F[%d] at (%g, %g):\n", ge.name.c_str(), coordinate, at[0], at[1]);
  std::fprintf(stderr, "  contingent      %s\n", T.str().c_str());
  std::fprintf(stderr, "  paratingent     %s\n", Tp.str().c_str());
  std::fprintf(stderr, "  frechet normal  %s\n", Nf.str().c_str());
  std::fprintf(stderr, "  limiting normal %s\n", Nl.str().c_str());
  emit(out);
  return 0;
}

int cmd_analyze(const std::string& path, int refpoint, const std::string& checks_text,
                unsigned seed) {
  GEDocument doc = load_document(path);
  if (refpoint < 0 || refpoint >= static_cast<int>(doc.refpoints.size()))
    throw PreconditionError("--refpoint out of range: document has " +
                            std::to_string(doc.refpoints.size()) + " refpoint(s)");
  std::set<std::string> checks;
  if (!checks_text.empty()) {
    size_t pos = 0;
    while (pos <= checks_text.size()) {
      size_t comma = checks_text.find(',', pos);
      std::string c = checks_text.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (c != "aubin" && c != "ic" && c != "smr" && c != "calm")
        throw SchemaError("--checks: unknown check '" + c + "'");
      checks.insert(c);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  RegReport rep = analyze(doc.ge, doc.refpoints[refpoint], checks);
  rep.refpoint_index = refpoint;
  json out = envelope("analyze", path, seed);
  out["report"] = json::parse(rep.to_json());
  std::fputs(rep.table().c_str(), stderr);
  emit(out);
  return 0;
}

// Starting point for tracking: the chosen refpoint if it solves p(0),
// otherwise the solution of p(0) closest to it.
Vec track_seed(const GenEq& ge, const Signal& sig, const RefPoint& ref) {
  Vec p0 = sig(0.0);
  if (ge.residual(p0, ref.z) <= 1e-8) return ref.z;
  SolutionSet sols = solve(ge, p0);
  std::vector<Vec> cands = sols.sample_points();
  if (cands.empty()) throw PreconditionError("no solution at p(0) to seed tracking");
  Vec best = cands[0];
  for (const Vec& c : cands)
    if ((c - ref.z).norm() < (best - ref.z).norm()) best = c;
  return best;
}

json constants_json(const Trajectory& traj, const std::string& schedule) {
  if (!traj.constants_estimated) return json();
  return json{{"a", traj.a}, {"b", traj.b}, {"kappa", traj.kappa}, {"schedule", schedule}};
}

int cmd_track(const std::string& path, const std::string& signal_text, const std::string& out_csv,
              int refpoint, unsigned seed) {
  GEDocument doc = load_document(path);
  const GenEq& ge = doc.ge;
  std::string spec = !signal_text.empty() ? signal_text
                     : doc.signal         ? *doc.signal
                                          : "";
  if (spec.empty()) throw SchemaError("no --signal given and the document has none");
  Signal sig = Signal::parse(spec, ge.n);
  if (refpoint < 0 || refpoint >= static_cast<int>(doc.refpoints.size()))
    throw PreconditionError("--refpoint out of range");
  Trajectory traj = track(ge, sig, track_seed(ge, sig, doc.refpoints[refpoint]));
  std::string schedule;
  try {
    UniformConstants uc = estimate_uniform_constants(ge, sig, traj);
    schedule = uc.schedule;
  } catch (const TrackingFailure& e) {
    schedule = std::string("estimation failed: ") + e.what();
  }
  write_csv(traj, out_csv);
  double max_res = 0.0;
  for (double r : traj.residuals) max_res = std::max(max_res, r);
  json out = envelope("track", path, seed);
  out["model"] = ge.name;
  out["signal"] = spec;
  out["csv"] = out_csv;
  out["steps"] = traj.times.size();
  out["t_end"] = traj.times.empty() ? 0.0 : traj.times.back();
  out["max_residual"] = max_res;
  out["constants"] = constants_json(traj, schedule);
  std::fprintf(stderr, "%s: tracked %zu steps to t=%g, max residual %.3e -> %s\n",
               ge.name.c_str(), traj.times.size(),
               traj.times.empty() ? 0.0 : traj.times.back(), max_res, out_csv.c_str());
  emit(out);
  return 0;
}

int cmd_perturb(const std::string& path, const std::string& signal_text, double eps,
                int refpoint, unsigned seed) {
  GEDocument doc = load_document(path);
  const GenEq& ge = doc.ge;
  std::string spec = !signal_text.empty() ? signal_text
                     : doc.signal         ? *doc.signal
                                          : "";
  if (spec.empty()) throw SchemaError("no --signal given and the document has none");
  Signal sig = Signal::parse(spec, ge.n);
  if (refpoint < 0 || refpoint >= static_cast<int>(doc.refpoints.size()))
    throw PreconditionError("--refpoint out of range");
  Trajectory traj = track(ge, sig, track_seed(ge, sig, doc.refpoints[refpoint]));
  estimate_uniform_constants(ge, sig, traj);
  Signal ptilde = sig.shifted(Vec::Constant(ge.n, eps));
  PerturbReport rep = perturb_experiment(ge, sig, ptilde, traj);
  json out = envelope("perturb", path, seed);
  out["model"] = ge.name;
  out["signal"] = spec;
  out["offset"] = eps;
  out["eps"] = rep.eps;
  out["sup_diff"] = rep.sup_diff;
  out["bound"] = rep.bound;
  out["sharper"] = rep.sharper;
  out["within_bound"] = rep.within_bound;
  out["within_sharper"] = rep.within_sharper;
  out["grid_points"] = rep.grid_points;
  out["constants"] = json{{"a", traj.a}, {"b", traj.b}, {"kappa", traj.kappa}};
  std::fprintf(stderr,
               "%s: eps=%.4g sup||ztilde-z||=%.4g bound=%.4g sharper=%.4g  [%s]\n",
               ge.name.c_str(), rep.eps, rep.sup_diff, rep.bound, rep.sharper,
               rep.within_bound ? "within bound" : "BOUND VIOLATED");
  emit(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized-equation circuit models: validate, solve, cones, analyze, track"};
  app.require_subcommand(1);

  std::string path, p_text, grid_text, at_text, checks_text, signal_text, out_csv = "track.csv";
  int coordinate = 0, refpoint = 0;
  double eps = 0.0;
  unsigned seed = 20240811u;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("path", path, "model document (JSON)")->required();
    sub->add_option("--seed", seed, "RNG seed recorded in the output");
  };

  CLI::App* validate = app.add_subcommand("validate", "parse + assumption audit");
  add_common(validate);

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve p = f(z) + B F(Cz)");
  add_common(solve_cmd);
  solve_cmd->add_option("--p", p_text, "parameter vector, comma-separated");
  solve_cmd->add_option("--grid", grid_text, "scalar p-grid lo:hi:count");

  CLI::App* cones_cmd = app.add_subcommand("cones", "tangent/normal cones of one component");
  add_common(cones_cmd);
  cones_cmd->add_option("--at", at_text, "graph point x,v")->required();
  cones_cmd->add_option("--coordinate", coordinate, "component index (default 0)");

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "regularity report at a refpoint");
  add_common(analyze_cmd);
  analyze_cmd->add_option("--refpoint", refpoint, "refpoint index (default 0)");
  analyze_cmd->add_option("--checks", checks_text, "subset of aubin,ic,smr,calm");

  CLI::App* track_cmd = app.add_subcommand("track", "follow the solution of a time signal");
  add_common(track_cmd);
  track_cmd->add_option("--signal", signal_text, "sin:A,f,phase,offset or CSV path");
  track_cmd->add_option("--out", out_csv, "output CSV (default track.csv)");
  track_cmd->add_option("--refpoint", refpoint, "seed refpoint index (default 0)");

  CLI::App* perturb_cmd = app.add_subcommand("perturb", "perturbed-trajectory bound check");
  add_common(perturb_cmd);
  perturb_cmd->add_option("--signal", signal_text, "sin:A,f,phase,offset or CSV path");
  perturb_cmd->add_option("--eps", eps, "uniform signal offset")->required();
  perturb_cmd->add_option("--refpoint", refpoint, "seed refpoint index (default 0)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(path, seed);
    if (solve_cmd->parsed()) return cmd_solve(path, p_text, grid_text, seed);
    if (cones_cmd->parsed()) return cmd_cones(path, at_text, coordinate, seed);
    if (analyze_cmd->parsed()) return cmd_analyze(path, refpoint, checks_text, seed);
    if (track_cmd->parsed()) return cmd_track(path, signal_text, out_csv, refpoint, seed);
    if (perturb_cmd->parsed()) return cmd_perturb(path, signal_text, eps, refpoint, seed);
    return 5;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ModelError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const TrackingFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 5;
  }
}
