#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "varreg/funcs.hpp"
#include "varreg/interval.hpp"

namespace varreg {

// A planar graph piece of a set-valued map R -> subsets of R.
struct Arc {
  Interval dom;  // z-interval
  Expr y;        // single-valued branch on dom
};
struct VSeg {
  double z0;
  Interval yiv;  // vertical extent, may be half-open / unbounded
};
struct GPoint {
  double z0;
  double y0;
};
using GraphPiece = std::variant<Arc, VSeg, GPoint>;

// Finite union of disjoint-ish intervals: the value set F(z).
struct ValueSet {
  std::vector<Interval> parts;  // sorted by lo, overlaps merged

  bool empty() const { return parts.empty(); }
  bool contains(double y, double tol = 0.0) const;
  double dist(double y) const;  // distance to the closure; +inf when empty
  double min_abs() const;       // distance from 0, convenience
};

// Degree-<=2 polynomial descriptor for an arc that is exactly polynomial.
struct PolyFit {
  double c0 = 0, c1 = 0, c2 = 0;
  bool quadratic() const { return c2 != 0.0; }
};

// Set-valued map on R represented by an explicit list of graph pieces.
// The graph is audited for closedness at construction (open arc/segment ends
// whose limit point is not covered by another piece mark the map non-closed).
class SVMap1 {
 public:
  explicit SVMap1(std::vector<GraphPiece> pieces);

  const std::vector<GraphPiece>& pieces() const { return pieces_; }
  bool graph_closed() const { return closed_; }

  // Exact value set at z (endpoint flags honoured).
  ValueSet values(double z) const;
  // Value set of the closure within |z' - z| <= tol; used by residual and
  // reference-point audits to absorb floating-point fuzz.
  ValueSet values_near(double z, double tol = 1e-9) const;

  // Euclidean distance from (x, y) to the graph (closure, pieces truncated
  // to |z| <= 1e6).  Accurate to ~1e-9 for the supported piece classes.
  double graph_dist(double x, double y) const;

  // Graph samples within the given radius of (x, y); per_piece bounds the
  // sample count contributed by each piece.
  std::vector<std::pair<double, double>> sample_near(double x, double y, double radius,
                                                     int per_piece = 9) const;

  // Exact polynomial descriptor of an arc piece, when it is one (degree<=2).
  std::optional<PolyFit> arc_poly(int piece_index) const;

  std::string describe() const;

 private:
  std::vector<GraphPiece> pieces_;
  std::vector<std::optional<PolyFit>> poly_;  // per piece, arcs only
  bool closed_ = true;

  void audit_closedness();
  double arc_dist(int idx, double x, double y) const;
};

bool is_monotone(const SVMap1& F);
// Maximal monotonicity audit; throws PreconditionError when F is not
// monotone.  Maximal = closure chain-connected and unbounded on both ends.
bool is_maximal_monotone(const SVMap1& F);

// Graph transpose {(y, z) : y in F(z)}.  Nonaffine arcs are inverted
// symbolically (exact quadratics, single-occurrence chains) after splitting
// at stationary points; unsupported shapes raise UnsupportedGeometry.
SVMap1 inverse(const SVMap1& F);

// Value reflection {(z, -y) : y in F(z)}.
SVMap1 reflect_values(const SVMap1& F);

// Coordinate product of scalar maps.
struct SVProd {
  std::vector<SVMap1> comps;

  int dim() const { return static_cast<int>(comps.size()); }
  bool graph_closed() const;
  // Euclidean distance from ((x_j), (v_j)) to the product graph.
  double graph_dist(const std::vector<double>& x, const std::vector<double>& v) const;
};

// Excess of A over B: sup_{a in A} d(a, B), with e(empty, B) = 0 for
// nonempty B and +inf when B is empty.
double excess(const std::vector<double>& A, const std::vector<Interval>& B);

}  // namespace varreg
