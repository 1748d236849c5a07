#pragma once

#include <string>
#include <variant>
#include <vector>

#include "varreg/geneq.hpp"
#include "varreg/solver.hpp"

namespace varreg {

// Per-coordinate A sin(2 pi f t + phase) + offset.
struct Sinusoid {
  Vec amplitude, frequency, phase, offset;
};

// Piecewise-linear interpolation of samples on strictly increasing times.
struct SampledSignal {
  std::vector<double> times;
  std::vector<Vec> values;
};

class Signal {
 public:
  static Signal sinusoid(Vec amplitude, Vec frequency, Vec phase, Vec offset);
  static Signal sampled(std::vector<double> times, std::vector<Vec> values);
  static Signal constant(const Vec& p);
  // "sin:A,f,phase,offset" with '|'-separated per-coordinate lists (scalars
  // broadcast), or a CSV path with header t,p1..pn.
  static Signal parse(const std::string& spec, int n);

  Vec operator()(double t) const;
  int dim() const;
  // Uniform offset convenience used by perturbation experiments.
  Signal shifted(const Vec& offset) const;

 private:
  std::variant<Sinusoid, SampledSignal> impl_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> z;
  std::vector<double> residuals;
  std::vector<std::vector<int>> branch;
  // uniform strong-regularity constants (estimates), set by
  // estimate_uniform_constants
  double a = 0.0, b = 0.0, kappa = 0.0;
  bool constants_estimated = false;
};

struct UniformConstants {
  double a = 0.0, b = 0.0, kappa = 0.0;
  std::string schedule;  // probe parameters, for reproducibility
};

struct PerturbReport {
  double eps = 0.0;        // sup_t ||ptilde(t) - p(t)||
  double sup_diff = 0.0;   // sup_t ||ztilde(t) - z(t)||
  double bound = 0.0;      // 4 a eps / b
  double sharper = 0.0;    // kappa * eps
  bool within_bound = false;
  bool within_sharper = false;
  int grid_points = 0;
};

// Follows the solution of p(t) in f(z) + F_loc from a seeded solution at
// t = 0, with adaptive steps bounded by the local regularity constants.
Trajectory track(const GenEq& ge, const Signal& p, const Vec& z0, double base_step = 1.0 / 64);

// 33-point grid estimate of uniform (a, b, kappa); also stored on traj.
UniformConstants estimate_uniform_constants(const GenEq& ge, const Signal& p, Trajectory& traj);

// Pointwise reconstruction of the perturbed trajectory and bound check.
PerturbReport perturb_experiment(const GenEq& ge, const Signal& p, const Signal& ptilde,
                                 const Trajectory& traj);

// Spot-checks the shift identity between localized inverses at random
// (t, t', w) triples; returns the max discrepancy observed.
double g_relation_check(const GenEq& ge, const Signal& p, const Trajectory& traj, int count = 100,
                        unsigned seed = 20240811u);

void write_csv(const Trajectory& traj, const std::string& path);

}  // namespace varreg
