#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varreg/errors.hpp"

namespace varreg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional interval with independently open/closed finite endpoints.
// Infinite endpoints are always open.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  Interval() = default;
  Interval(double l, double h, bool lc, bool hc) : lo(l), hi(h), lo_closed(lc), hi_closed(hc) {
    if (!(lo <= hi)) throw ModelError("interval endpoints out of order");
    if (std::isinf(lo)) lo_closed = false;
    if (std::isinf(hi)) hi_closed = false;
    if (lo == hi && !(lo_closed && hi_closed))
      throw ModelError("degenerate interval must be closed");
  }

  static Interval all() { return Interval(); }
  static Interval closed(double l, double h) { return Interval(l, h, true, true); }
  static Interval open(double l, double h) { return Interval(l, h, false, false); }
  static Interval left_open(double l, double h) { return Interval(l, h, false, true); }
  static Interval right_open(double l, double h) { return Interval(l, h, true, false); }
  static Interval point(double v) { return Interval(v, v, true, true); }
  static Interval at_least(double l, bool closed_end = true) {
    return Interval(l, kInf, closed_end, false);
  }
  static Interval at_most(double h, bool closed_end = true) {
    return Interval(-kInf, h, false, closed_end);
  }

  bool is_point() const { return lo == hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

  // Membership.  tol > 0 relaxes toward the closure.
  bool contains(double z, double tol = 0.0) const {
    if (z < lo - tol || z > hi + tol) return false;
    if (tol == 0.0) {
      if (z == lo && !lo_closed) return false;
      if (z == hi && !hi_closed) return false;
    }
    return true;
  }

  // Distance to the closure.
  double dist(double z) const {
    if (z < lo) return lo - z;
    if (z > hi) return z - hi;
    return 0.0;
  }

  double clamp(double z) const { return std::min(std::max(z, lo), hi); }

  // Clamp to the closure with infinite ends truncated at +-cap.
  double clamp_finite(double z, double cap = 1e6) const {
    double l = std::max(lo, -cap), h = std::min(hi, cap);
    return std::min(std::max(z, l), h);
  }

  bool intersects(const Interval& o) const {
    double l = std::max(lo, o.lo), h = std::min(hi, o.hi);
    if (l > h) return false;
    if (l < h) return true;
    // touching at a single point: both sides must admit it
    bool left_ok = (l > lo) || lo_closed || (o.lo < l) || o.lo_closed;
    (void)left_ok;
    bool mine = contains(l, 0.0) || (l == lo && lo_closed) || (l == hi && hi_closed);
    bool theirs = o.contains(l, 0.0);
    return mine && theirs;
  }

  std::string str() const;
};

inline std::string Interval::str() const {
  auto num = [](double v) {
    if (v == kInf) return std::string("inf");
    if (v == -kInf) return std::string("-inf");
    char buf[32];
    snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return std::string(lo_closed ? "[" : "(") + num(lo) + ", " + num(hi) + (hi_closed ? "]" : ")");
}

}  // namespace varreg
