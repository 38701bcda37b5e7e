#include "etct/planar_arcs.hpp"

#include "etct/errors.hpp"

#include <algorithm>
#include <cmath>

namespace etct {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

}  // namespace

ArcSet ArcSet::full() {
  ArcSet s;
  s.intervals_.push_back({0.0, kTwoPi, true, false});
  return s;
}

ArcSet ArcSet::empty() { return ArcSet{}; }

Vector ArcSet::point(double phi) {
  Vector x(2);
  x << std::cos(0.5 * phi), std::sin(0.5 * phi);
  return x;
}

double ArcSet::phi_of(const Vector& x) {
  if (x.size() != 2) throw DimensionError("arc sets live in R^2");
  return wrap(2.0 * std::atan2(x(1), x(0)));
}

// Adds the arc from lo to lo + (hi - lo) counterclockwise, splitting at 0.
void ArcSet::add(double lo, double hi, bool lo_closed, bool hi_closed) {
  const double len = hi - lo;
  if (len >= kTwoPi) {
    intervals_.push_back({0.0, kTwoPi, true, false});
    return;
  }
  const double a = wrap(lo);
  const double b = a + len;
  if (b <= kTwoPi) {
    if (b == kTwoPi && hi_closed) {
      intervals_.push_back({a, kTwoPi, lo_closed, false});
      intervals_.push_back({0.0, 0.0, true, true});
    } else {
      intervals_.push_back({a, b, lo_closed, hi_closed});
    }
  } else {
    intervals_.push_back({a, kTwoPi, lo_closed, false});
    intervals_.push_back({0.0, b - kTwoPi, true, hi_closed});
  }
}

void ArcSet::normalize() {
  std::vector<Interval> keep;
  for (const auto& iv : intervals_) {
    if (iv.lo < iv.hi || (iv.lo == iv.hi && iv.lo_closed && iv.hi_closed)) keep.push_back(iv);
  }
  std::sort(keep.begin(), keep.end(), [](const Interval& a, const Interval& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    return a.lo_closed && !b.lo_closed;
  });
  std::vector<Interval> merged;
  for (const auto& iv : keep) {
    if (!merged.empty()) {
      auto& m = merged.back();
      const bool touches = iv.lo < m.hi || (iv.lo == m.hi && (iv.lo_closed || m.hi_closed));
      if (touches) {
        if (iv.hi > m.hi) {
          m.hi = iv.hi;
          m.hi_closed = iv.hi_closed;
        } else if (iv.hi == m.hi) {
          m.hi_closed = m.hi_closed || iv.hi_closed;
        }
        continue;
      }
    }
    merged.push_back(iv);
  }
  intervals_ = std::move(merged);
}

ArcSet ArcSet::from_constraint(const Matrix& Nin, Relation rel) {
  if (Nin.rows() != 2 || Nin.cols() != 2) throw DimensionError("arc sets need 2x2 constraints");
  Matrix N = symmetrize(Nin);
  const double nrm = N.norm();
  if (nrm > 0.0) N /= nrm;
  // x'Nx = a + b cos(phi) + c sin(phi) = a + R cos(phi - phi0), x = (cos phi/2, sin phi/2)
  const double a = 0.5 * (N(0, 0) + N(1, 1));
  const double b = 0.5 * (N(0, 0) - N(1, 1));
  const double c = N(0, 1);
  const double R = std::hypot(b, c);
  ArcSet s;
  if (R <= 1e-15) {
    bool ok = false;
    switch (rel) {
      case Relation::GT: ok = a > 0.0; break;
      case Relation::GE: ok = a >= 0.0; break;
      case Relation::EQ: ok = a == 0.0; break;
      case Relation::LE: ok = a <= 0.0; break;
      case Relation::LT: ok = a < 0.0; break;
    }
    return ok ? full() : empty();
  }
  const double phi0 = std::atan2(c, b);
  const double c0 = -a / R;  // compare cos(phi - phi0) with c0
  switch (rel) {
    case Relation::GT:
      if (c0 < -1.0) return full();
      if (c0 >= 1.0) return empty();
      {
        const double w = std::acos(c0);
        s.add(phi0 - w, phi0 + w, false, false);
      }
      break;
    case Relation::GE:
      if (c0 <= -1.0) return full();
      if (c0 > 1.0) return empty();
      {
        const double w = std::acos(c0);
        s.add(phi0 - w, phi0 + w, true, true);
      }
      break;
    case Relation::LE:
      if (c0 >= 1.0) return full();
      if (c0 < -1.0) return empty();
      {
        const double w = std::acos(c0);
        s.add(phi0 + w, phi0 + kTwoPi - w, true, true);
      }
      break;
    case Relation::LT:
      if (c0 > 1.0) return full();
      if (c0 <= -1.0) return empty();
      {
        const double w = std::acos(c0);
        s.add(phi0 + w, phi0 + kTwoPi - w, false, false);
      }
      break;
    case Relation::EQ:
      if (c0 < -1.0 || c0 > 1.0) return empty();
      {
        const double w = std::acos(c0);
        s.add(phi0 + w, phi0 + w, true, true);
        s.add(phi0 - w, phi0 - w, true, true);
      }
      break;
  }
  s.normalize();
  return s;
}

ArcSet ArcSet::intersect(const ArcSet& other) const {
  ArcSet out;
  size_t i = 0;
  size_t j = 0;
  const auto& A = intervals_;
  const auto& B = other.intervals_;
  while (i < A.size() && j < B.size()) {
    const Interval& x = A[i];
    const Interval& y = B[j];
    Interval r;
    if (x.lo > y.lo) {
      r.lo = x.lo;
      r.lo_closed = x.lo_closed;
    } else if (y.lo > x.lo) {
      r.lo = y.lo;
      r.lo_closed = y.lo_closed;
    } else {
      r.lo = x.lo;
      r.lo_closed = x.lo_closed && y.lo_closed;
    }
    if (x.hi < y.hi) {
      r.hi = x.hi;
      r.hi_closed = x.hi_closed;
    } else if (y.hi < x.hi) {
      r.hi = y.hi;
      r.hi_closed = y.hi_closed;
    } else {
      r.hi = x.hi;
      r.hi_closed = x.hi_closed && y.hi_closed;
    }
    if (r.lo < r.hi || (r.lo == r.hi && r.lo_closed && r.hi_closed)) out.intervals_.push_back(r);
    // Advance whichever interval ends first.
    if (x.hi < y.hi || (x.hi == y.hi && !x.hi_closed)) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

double ArcSet::measure() const {
  double m = 0.0;
  for (const auto& iv : intervals_) m += iv.hi - iv.lo;
  return m;
}

Vector ArcSet::witness() const {
  if (intervals_.empty()) throw DomainError("empty arc set has no witness");
  const Interval* best = &intervals_.front();
  for (const auto& iv : intervals_) {
    if (iv.hi - iv.lo > best->hi - best->lo) best = &iv;
  }
  return point(0.5 * (best->lo + best->hi));
}

ArcSet region_arcs(const Region& r) {
  if (r.dim != 2) throw DimensionError("planar arithmetic needs n_x = 2");
  ArcSet s = ArcSet::full();
  for (const auto& c : r.constraints) {
    s = s.intersect(ArcSet::from_constraint(c.N, c.rel));
    if (s.is_empty()) break;
  }
  return s;
}

FeasibilityVerdict planar_feasible(const Region& r, const FeasibilityBudget&) {
  FeasibilityVerdict v;
  v.exact = true;
  v.engine = "planar";
  ArcSet s = region_arcs(r);
  if (s.is_empty()) {
    v.status = FeasibilityStatus::Unsat;
  } else {
    v.status = FeasibilityStatus::Sat;
    v.witness = s.witness();
  }
  return v;
}

}  // namespace etct
