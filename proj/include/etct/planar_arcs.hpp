#pragma once

#include "etct/cone_geom.hpp"

#include <vector>

namespace etct {

// Subset of the projective line of R^2, parametrized by phi = 2*theta in
// [0, 2pi) with x = (cos theta, sin theta). Intervals are disjoint, sorted and
// never wrap (a wrapping piece is split at 0).
class ArcSet {
 public:
  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = true;
    bool hi_closed = true;
  };

  static ArcSet full();
  static ArcSet empty();
  // Solution set of x'Nx rel 0 for symmetric 2x2 N.
  static ArcSet from_constraint(const Matrix& N, Relation rel);

  ArcSet intersect(const ArcSet& other) const;
  bool is_empty() const { return intervals_.empty(); }
  double measure() const;
  // Midpoint of the longest interval, as a unit vector.
  Vector witness() const;
  const std::vector<Interval>& intervals() const { return intervals_; }

  static Vector point(double phi);
  static double phi_of(const Vector& x);

 private:
  std::vector<Interval> intervals_;
  void add(double lo, double hi, bool lo_closed, bool hi_closed);
  void normalize();
};

ArcSet region_arcs(const Region& r);
FeasibilityVerdict planar_feasible(const Region& r, const FeasibilityBudget& budget);

}  // namespace etct
