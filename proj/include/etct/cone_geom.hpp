#pragma once

#include "etct/system.hpp"

#include <string>

namespace etct {

enum class Relation { GT, GE, EQ, LE, LT };

struct SignedQuadConstraint {
  Matrix N;
  Relation rel = Relation::GT;
};

// Conjunction of homogeneous constraints x'N_i x rel_i 0.
struct Region {
  int dim = 0;
  std::vector<SignedQuadConstraint> constraints;
  // Points worth trying first when searching for a witness (eigenvectors,
  // simulated states). Not part of the region's definition.
  std::vector<Vector> hints;

  void add(const Matrix& N, Relation rel);
  // Smallest slack over all constraints for unit x, sign adjusted so that a
  // satisfied constraint has non-negative slack (strict ones need > margin).
  bool contains(const Vector& x, double strict_margin = 1e-10, double eq_tol = 1e-9) const;
};

enum class FeasibilityStatus { Sat, Unsat, Unknown };

enum class BackendKind {
  Sampling,  // randomized search, never proves emptiness
  Exact,     // planar arc arithmetic for n = 2, SMT solver otherwise
  Smt,       // always the external SMT solver
};

struct FeasibilityBudget {
  BackendKind backend = BackendKind::Exact;
  int samples = 20000;
  std::uint64_t seed = 1;
  double strict_margin = 1e-10;
  double eq_tol = 1e-9;
  std::string smt_command;  // empty: ETC_SMT_SOLVER_CMD or "z3 -in -smt2"
  double smt_timeout_s = 30.0;
};

struct FeasibilityVerdict {
  FeasibilityStatus status = FeasibilityStatus::Unknown;
  Vector witness;              // unit vector when Sat
  bool exact = false;          // decided by an exact method
  std::string engine;          // "sampling", "planar", "smt"
};

Region isochronous_region(const EtcSystem& sys, int k);
Region isochronous_region_cetc(const EtcSystem& sys, double s);
Region isosequential_region(const EtcSystem& sys, const KSequence& sigma);
Region region_closure(const Region& r);
bool subspace_in_region(const Matrix& V, const Region& r, double psd_tol = 1e-9);

FeasibilityVerdict region_feasible(const Region& r, const FeasibilityBudget& budget);
FeasibilityVerdict sample_feasible(const Region& r, const FeasibilityBudget& budget);

// Product M(k_m h) ... M(k_1 h).
Matrix sequence_product(const EtcSystem& sys, const KSequence& sigma);

// Appends the constraints that make x'N(k'h)x <= 0 for k' < k and, unless
// k is k_bar, x'N(kh)x > 0, each pulled back by Pi.
void append_step_constraints(const EtcSystem& sys, const Matrix& Pi, int k, Region& r);

std::string to_string(Relation rel);

}  // namespace etct
