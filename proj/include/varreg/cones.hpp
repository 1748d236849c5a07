#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "varreg/setvalued.hpp"

namespace varreg {

using Vec2 = Eigen::Vector2d;

// Pieces of a planar cone (union of finitely many convex cones).
struct RayPiece {
  Vec2 g;  // unit direction
};
struct LinePiece {
  Vec2 g;  // unit direction, sign-canonical
};
struct SectorPiece {
  Vec2 g1, g2;  // unit extreme rays, counter-clockwise, angle in (0, pi)
};
struct OriginPiece {};
struct FullPiece {};
using ConePiece = std::variant<OriginPiece, RayPiece, LinePiece, SectorPiece, FullPiece>;

// Closed cone in R^2 stored as a canonical finite union of pieces.
// Canonical form: unit directions, lines sign-normalized (first nonzero
// coordinate positive), opposite rays merged into lines, duplicates and
// dominated rays dropped, pieces sorted by (type, angle).  Angular
// comparisons use tolerance 1e-9.
class Cone2 {
 public:
  Cone2() { pieces_.push_back(OriginPiece{}); }
  static Cone2 origin() { return Cone2(); }
  static Cone2 full();
  static Cone2 of(std::vector<ConePiece> pieces);
  static Cone2 ray(double gx, double gy);
  static Cone2 line(double gx, double gy);
  static Cone2 sector(double ax, double ay, double bx, double by);

  const std::vector<ConePiece>& pieces() const { return pieces_; }
  bool is_origin() const;
  bool is_full() const;

  bool contains(const Vec2& v, double tol = 1e-9) const;
  bool structurally_equal(const Cone2& other, double tol = 1e-9) const;
  // Union with another cone.
  Cone2 unite(const Cone2& other) const;

  // Representative directions (piece interiors and boundaries).
  std::vector<Vec2> sample_dirs(int per_sector = 5) const;
  // Boundary directions of the pieces (for exclusion bands in sampling).
  std::vector<Vec2> boundary_dirs() const;

  // Slice {w : (u, w) in cone} at a fixed first coordinate, as closed
  // intervals (graph-of-mapping view of the cone).
  std::vector<Interval> slice_at(double u) const;

  std::string str() const;

 private:
  std::vector<ConePiece> pieces_;
  void canonicalize();
};

Cone2 polar(const Cone2& K);
Cone2 negate(const Cone2& K);
// Image under an invertible linear map (pieces map to pieces).
Cone2 linear_map(const Cone2& K, const Eigen::Matrix2d& M);

// Tangent and normal cones to the graph of a scalar set-valued map at a
// point (x, y) of its graph.  Points where more than four pieces meet raise
// UnsupportedGeometry; off-graph points raise ModelError.
Cone2 contingent_at(const SVMap1& F, double x, double y);
Cone2 paratingent_at(const SVMap1& F, double x, double y);
Cone2 frechet_normal_at(const SVMap1& F, double x, double y);
Cone2 limiting_normal_at(const SVMap1& F, double x, double y);

// Graphs of the derivative objects as planar cones.
inline Cone2 graphical_derivative_graph(const SVMap1& F, double x, double y) {
  return contingent_at(F, x, y);
}
inline Cone2 strict_derivative_graph(const SVMap1& F, double x, double y) {
  return paratingent_at(F, x, y);
}
// Coderivative graph {(xi, w) : (w, -xi) in N((x,y); gph F)}.
Cone2 coderivative_graph(const SVMap1& F, double x, double y);

enum class ConeKind { Contingent, Paratingent, FrechetNormal, LimitingNormal };

// Definition-based sampled membership test; independent of the exact
// classification above.  Deterministic.
bool numeric_member(ConeKind kind, const SVMap1& F, double x, double y, const Vec2& v);

// Mapping norms of a positively homogeneous map given by its graph cone.
// outer: sup_{|u|<=1} sup_{w in H(u)} |w| (sup over empty set = -inf, so
// empty slices contribute nothing); inner: sup_{|u|<=1} inf_{w in H(u)} |w|
// (inf over empty set = +inf).
double outer_norm(const Cone2& graph);
double inner_norm(const Cone2& graph);

}  // namespace varreg
