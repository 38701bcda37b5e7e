#pragma once

#include "etct/cone_geom.hpp"

#include <complex>
#include <optional>
#include <string>

namespace etct {

using Complex = std::complex<double>;

struct SpectralProfile {
  std::vector<Complex> eigenvalues;  // sorted by magnitude, descending
  Eigen::MatrixXcd eigenvectors;     // column j belongs to eigenvalues[j]
  bool mixed = false;
  bool irrational_rotations = false;
  bool nonsingular = false;
  bool schur = false;
  bool diagonalizable = false;
};

struct SpectralOptions {
  double psd_tol = 1e-9;
  double magnitude_tol = 1e-9;  // relative tie tolerance on |lambda|
  int q_max = 64;               // largest denominator treated as a rational rotation
  double angle_tol = 1e-9;
};

SpectralProfile spectral_profile(const Matrix& M, const SpectralOptions& opt = {});

// True if x is within tol of p/q for some q <= q_max (continued fractions).
bool is_near_rational(double x, int q_max, double tol);

struct Invariant {
  Matrix basis;  // n x 1 (o-line) or n x 2 (o-plane), orthonormal columns
  Complex eigenvalue;
};

// One o-line per real eigenvalue, one o-plane per conjugate pair, in
// profile order. Throws DomainError unless the profile is mixed or
// allow_non_mixed is set.
std::vector<Invariant> candidate_invariants(const SpectralProfile& profile, bool allow_non_mixed = false);

enum class CycleClass { Stable, Unstable, AbsolutelyUnstable, Unclassified };
std::string to_string(CycleClass c);

struct CycleWitness {
  KSequence sigma;
  Matrix M_sigma;
  Matrix invariant;  // empty when nothing verified
  Complex eigenvalue;
  bool verified = false;
  bool nonsingular = false;
  bool mixed = false;
  bool irrational_rotations = false;
  // Verification failure is conclusive only under the side conditions above.
  bool conclusive = false;
  CycleClass classification = CycleClass::Unclassified;
  std::string note;

  double average(double h) const;
};

CycleWitness verify_cycle(const EtcSystem& sys, const KSequence& sigma);

bool schur_check(const Matrix& M, double psd_tol = 1e-9);

struct SccContext {
  bool simple_cycle = false;  // the cycle is the only one in its SCC
  int l = 0;                  // abstraction depth the context comes from
};

struct InstabilityResult {
  CycleClass classification = CycleClass::Unclassified;
  std::string reason;
};

InstabilityResult instability_check(const EtcSystem& sys, const KSequence& sigma,
                                    std::optional<SccContext> ctx = std::nullopt);

// Continuous-triggering fixed lines.
enum class ThetaConvention {
  SinCos,  // x = [sin t, cos t], angle = atan(x1 / x2)
  CosSin,  // x = [cos t, sin t], angle = atan(x2 / x1)
};

double line_angle(const Vector& x, ThetaConvention conv);

struct FixedLine {
  double t = 0.0;
  Vector direction;  // unit vector
  double eigenvalue = 0.0;
};

// grid_points samples of [Inf, tau_bar]; hits refined by bisection to 1e-10
// and kept only when tau(direction) reproduces t within hit_tol.
std::vector<FixedLine> fixed_oline_search_cetc(const EtcSystem& sys, int grid_points = 2000,
                                               double hit_tol = 1e-6);

Matrix jacobian_sample_map(const EtcSystem& sys, const Vector& x);

struct AttractivityResult {
  bool attractive = false;
  double lambda = 0.0;
  std::vector<Complex> ratio_spectrum;
};

AttractivityResult attractivity_check(const EtcSystem& sys, const Vector& x, double line_tol = 1e-5);

enum class PlaneMode { StrictPositive, Zero };

bool plane_in_quadric(const Matrix& N, PlaneMode mode, double psd_tol = 1e-9);
// Basis of a plane with x'Nx > 0 (resp. = 0) on it minus the origin.
std::optional<Matrix> plane_in_quadric_witness(const Matrix& N, PlaneMode mode, double psd_tol = 1e-9);

struct StructuralAdvice {
  bool fixed_oline_guaranteed = false;  // assuming f continuous and nonvanishing
  bool isochronous_plane_possible = false;
  std::vector<std::string> notes;
};

StructuralAdvice structural_advice(const EtcSystem& sys);

}  // namespace etct
