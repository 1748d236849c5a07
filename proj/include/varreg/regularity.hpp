#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "varreg/cones.hpp"
#include "varreg/geneq.hpp"
#include "varreg/solver.hpp"

namespace varreg {

enum class Verdict { Holds, Fails, Unknown };
std::string verdict_str(Verdict v);

struct Modulus {
  bool known = false;
  bool exact = false;   // closed-form 1-D path; otherwise sampled bounds
  double lo = 0.0;
  double hi = 0.0;
  std::string method;
};

// Homogeneous cone-feasibility problem: find xi with eq * xi = 0,
// (rows_u.row(j) xi, rows_w.row(j) xi) in cones[j] for every j, and
// pivot * xi != 0.  "Only xi = 0" means no such xi exists.
struct ConeCondition {
  Mat rows_u, rows_w;        // m x d
  std::vector<Cone2> cones;  // size m
  Mat eq;                    // extra equalities, 0..e rows over d columns
  Mat pivot;                 // q x d; nonzero through this map
};

// Exact decision over convex-piece combinations via Fourier-Motzkin
// elimination (tolerance 1e-9).  Returns a unit witness or nullopt when the
// condition forces pivot * xi = 0.  Guards: d <= 6 variables, <= 6 pieces
// per cone.
std::optional<Vec> cone_feasible(const ConeCondition& cond);

struct CheckResult {
  Verdict verdict = Verdict::Unknown;
  Modulus modulus;
  std::optional<Vec> witness;
  std::vector<std::string> notes;
};

// Aubin property of the solution map at (p, z); modulus = Lipschitz modulus.
CheckResult check_aubin(const GenEq& ge, const RefPoint& ref);
// Isolated calmness at (p, z); modulus = calmness modulus.  Falls back to a
// sufficient joint-variable criterion plus a sampled range audit when B has
// a kernel or C is not surjective.
CheckResult check_isolated_calmness(const GenEq& ge, const RefPoint& ref);
// Strong metric regularity at z for p: exact cone condition on the
// paratingent side plus a numeric local-solvability grid; modulus = reg.
CheckResult check_smr(const GenEq& ge, const RefPoint& ref);

struct ShortcutResult {
  bool applicable = false;           // n = m, B = C = I
  bool p_matrix = false;             // all principal minors of jac f positive
  bool all_maximal_monotone = false; // every component map
  std::vector<std::string> notes;
};
ShortcutResult check_shortcuts(const GenEq& ge, const RefPoint& ref);

// Piecewise-smooth f (n = 1): Bouligand / Clarke generalized derivative at
// z, strong regularity sufficient check over sampled Jacobians.
struct NonsmoothResult {
  Verdict smr = Verdict::Unknown;  // Holds means "holds (sufficient)"
  std::vector<double> bouligand;
  Interval clarke{0.0, 0.0, true, true};
  std::vector<std::string> notes;
};
NonsmoothResult check_nonsmooth(const GenEq& ge, const RefPoint& ref);

struct ProbeResult {
  enum class Outcome { CalmSufficient, Inconclusive, ZeroInOuterSubdiff };
  Outcome outcome = Outcome::Inconclusive;
  double gamma = 0.0;  // smallest limiting gradient-norm cluster
  double K = 0.0;      // Lipschitz factor of the auxiliary map
  double bound = kInf; // calmness bound K / gamma when conclusive
  std::vector<double> clusters;
  std::vector<std::string> notes;
};
// Distance-function calmness probe: h(z) = d(g(z), gph F x rge B) with
// g(z) = (Cz, (B^T B)^{-1} B^T (p - f(z)), p - f(z)); samples approach
// directions with h > 0 and clusters limiting gradient norms.
ProbeResult calmness_probe(const GenEq& ge, const RefPoint& ref);

// Sampled audit of the auxiliary range condition used when B has a kernel:
// the cone generated by rge F_C - v must meet ker B only at the origin.
bool aux_range_condition(const GenEq& ge, const RefPoint& ref, std::string* detail = nullptr);

// sup over unit directions g in K of |beta . g| / |alpha . g| with the
// closed-form per-piece rule (infinite when K meets the line alpha . g = 0
// away from beta's kernel).  Backs the exact 1-D moduli.
double cone_ratio_sup(const Cone2& K, const Vec2& alpha, const Vec2& beta);

struct RegReport {
  std::string model;
  int refpoint_index = -1;
  Vec p, z;
  std::map<std::string, Verdict> verdicts;  // aubin, isolated_calmness, smr, smsr, calmness_probe
  std::map<std::string, Modulus> moduli;    // lip, clm, reg, subreg
  std::map<std::string, Vec> witnesses;
  Assumptions assumptions;
  std::optional<bool> aux_range;
  ShortcutResult shortcuts;
  std::optional<ProbeResult> probe;
  std::optional<NonsmoothResult> nonsmooth;
  std::vector<std::string> notes;

  std::string to_json(int indent = 2) const;  // deterministic
  std::string table() const;
};

// Runs the requested checks ("aubin", "ic", "smr", "calm"; empty = all) and
// assembles the report; shortcut notes and the isolated-calmness / strong
// sub-regularity equivalence are filled in automatically.
RegReport analyze(const GenEq& ge, const RefPoint& ref, const std::set<std::string>& checks = {});

}  // namespace varreg
