#pragma once

#include "varreg/geneq.hpp"

namespace varreg {

struct Solution {
  Vec z;
  double residual = 0.0;
  std::vector<int> branch;  // graph-piece index per coordinate
};

// Connected one-parameter family of solutions (degenerate directions).
struct SolutionBox {
  Vec lo, hi;
  bool truncated = false;  // an unbounded family clipped at |z| = 1e6
};

struct SolutionSet {
  std::vector<Solution> points;
  std::vector<SolutionBox> boxes;
  bool empty() const { return points.empty() && boxes.empty(); }
  // points + box corners/midpoints, for set-distance computations
  std::vector<Vec> sample_points() const;
};

// Scalar path: n = m = 1, B = C = [1].  Scans every graph piece of F
// against f, refining sign changes by bisection; whole sub-intervals on
// which f + F is constant at p become boxes.
SolutionSet solve_1d(const GenEq& ge, double p);

// Affine path: enumerates piece assignments (affine arcs, segments, points)
// and solves the resulting linear systems; assignment count is capped at
// 1e5 (CapExceeded).  Kernel dimension 1 produces boxes, >= 2 is rejected.
SolutionSet solve_enum(const GenEq& ge, const Vec& p);

// Dispatcher: scalar models use solve_1d, affine models solve_enum.
SolutionSet solve(const GenEq& ge, const Vec& p);

// Solutions within the closed ball around `center`; boxes are clipped.
SolutionSet local_solve(const GenEq& ge, const Vec& p, const Vec& center, double radius);

// Excess e(A, B) = sup_{a in A} d(a, B) over solution sets, with
// e(empty, B) = 0 for nonempty B and +inf for empty B.
double solution_excess(const SolutionSet& A, const SolutionSet& B);

}  // namespace varreg
