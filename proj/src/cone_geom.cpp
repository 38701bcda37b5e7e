#include "etct/cone_geom.hpp"

#include "etct/errors.hpp"
#include "etct/planar_arcs.hpp"
#include "etct/rng.hpp"
#include "etct/smt_backend.hpp"

#include <cmath>

namespace etct {

namespace {

bool satisfies(double v, Relation rel, double strict_margin, double eq_tol) {
  switch (rel) {
    case Relation::GT: return v > strict_margin;
    case Relation::GE: return v >= 0.0;
    case Relation::EQ: return std::abs(v) <= eq_tol;
    case Relation::LE: return v <= 0.0;
    case Relation::LT: return v < -strict_margin;
  }
  return false;
}

FeasibilityVerdict line_feasible(const Region& r) {
  // n = 1: the only unit vectors are +-1, so x'Nx = N.
  FeasibilityVerdict v;
  v.exact = true;
  v.engine = "direct";
  Vector x = Vector::Ones(1);
  v.status = r.contains(x, 0.0, 0.0) ? FeasibilityStatus::Sat : FeasibilityStatus::Unsat;
  if (v.status == FeasibilityStatus::Sat) v.witness = x;
  return v;
}

}  // namespace

std::string to_string(Relation rel) {
  switch (rel) {
    case Relation::GT: return ">";
    case Relation::GE: return ">=";
    case Relation::EQ: return "=";
    case Relation::LE: return "<=";
    case Relation::LT: return "<";
  }
  return "?";
}

void Region::add(const Matrix& N, Relation rel) {
  if (dim == 0) dim = static_cast<int>(N.rows());
  if (N.rows() != dim || N.cols() != dim) throw DimensionError("constraint has wrong dimension");
  Matrix S = symmetrize(N);
  const double nrm = S.norm();
  if (nrm > 0.0 && std::isfinite(nrm)) S /= nrm;
  if (!S.allFinite()) throw NumericError("non-finite constraint matrix");
  constraints.push_back({std::move(S), rel});
}

bool Region::contains(const Vector& x, double strict_margin, double eq_tol) const {
  const double nx2 = x.squaredNorm();
  if (!(nx2 > 0.0)) return false;
  for (const auto& c : constraints) {
    const double v = x.dot(c.N * x) / nx2;
    if (!satisfies(v, c.rel, strict_margin, eq_tol)) return false;
  }
  return true;
}

Matrix sequence_product(const EtcSystem& sys, const KSequence& sigma) {
  Matrix P = Matrix::Identity(sys.n(), sys.n());
  for (int k : sigma) P = sys.M_k(k) * P;
  return P;
}

void append_step_constraints(const EtcSystem& sys, const Matrix& Pi, int k, Region& r) {
  if (k < 1 || k > sys.k_bar()) throw DomainError("k out of range 1..k_bar");
  for (int kp = 1; kp < k; ++kp) {
    r.add(Pi.transpose() * sys.N_k(kp) * Pi, Relation::LE);
  }
  if (k < sys.k_bar()) r.add(Pi.transpose() * sys.N_k(k) * Pi, Relation::GT);
}

Region isochronous_region(const EtcSystem& sys, int k) {
  if (!sys.is_petc()) throw DomainError("isochronous_region(k) is for PETC; use the CETC overload");
  Region r;
  r.dim = sys.n();
  append_step_constraints(sys, Matrix::Identity(sys.n(), sys.n()), k, r);
  return r;
}

Region isochronous_region_cetc(const EtcSystem& sys, double s) {
  if (sys.is_petc()) throw DomainError("isochronous_region_cetc is for CETC");
  if (!(s > 0.0 && s <= sys.tau_bar())) throw DomainError("s must lie in (0, tau_bar]");
  Region r;
  r.dim = sys.n();
  // The universal quantifier over s' < s is sampled on the scan grid.
  for (int i = 1; i <= sys.grid_points() && i * sys.grid_step() < s; ++i) {
    r.add(sys.N_grid(i), Relation::LE);
  }
  if (s < sys.tau_bar()) {
    r.add(build_N(sys, s).N, Relation::EQ);
    r.add(build_Ndot(sys, s).N, Relation::GT);
  }
  return r;
}

Region isosequential_region(const EtcSystem& sys, const KSequence& sigma) {
  if (!sys.is_petc()) throw DomainError("isosequential regions are built for PETC");
  if (sigma.empty()) throw DomainError("empty sequence");
  Region r;
  r.dim = sys.n();
  Matrix Pi = Matrix::Identity(sys.n(), sys.n());
  for (int k : sigma) {
    append_step_constraints(sys, Pi, k, r);
    Pi = sys.M_k(k) * Pi;
  }
  return r;
}

Region region_closure(const Region& r) {
  Region out = r;
  for (auto& c : out.constraints) {
    if (c.rel == Relation::GT) c.rel = Relation::GE;
    if (c.rel == Relation::LT) c.rel = Relation::LE;
  }
  return out;
}

bool subspace_in_region(const Matrix& V, const Region& r, double psd_tol) {
  if (V.rows() != r.dim && !r.constraints.empty()) throw DimensionError("basis has wrong row count");
  if (V.cols() < 1) throw DomainError("empty basis");
  Eigen::ColPivHouseholderQR<Matrix> qr(V);
  if (qr.rank() < V.cols()) throw DomainError("subspace basis is rank deficient");
  const Matrix Qfull = qr.householderQ();
  const Matrix U = Qfull.leftCols(V.cols());
  for (const auto& c : r.constraints) {
    const Matrix S = symmetrize(U.transpose() * c.N * U);
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    bool ok = false;
    switch (c.rel) {
      case Relation::GT: ok = lo > psd_tol; break;
      case Relation::GE: ok = lo >= -psd_tol; break;
      case Relation::EQ: ok = lo >= -psd_tol && hi <= psd_tol; break;
      case Relation::LE: ok = hi <= psd_tol; break;
      case Relation::LT: ok = hi < -psd_tol; break;
    }
    if (!ok) return false;
  }
  return true;
}

FeasibilityVerdict sample_feasible(const Region& r, const FeasibilityBudget& budget) {
  FeasibilityVerdict v;
  v.engine = "sampling";
  const int n = r.dim;
  auto accept = [&](const Vector& x) {
    if (x.size() != n || !(x.norm() > 0.0)) return false;
    if (!r.contains(x, budget.strict_margin, budget.eq_tol)) return false;
    v.status = FeasibilityStatus::Sat;
    v.witness = x.normalized();
    return true;
  };
  for (const auto& h : r.hints) {
    if (accept(h)) return v;
  }
  for (const auto& c : r.constraints) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.N);
    if (es.info() != Eigen::Success) continue;
    for (int j = 0; j < n; ++j) {
      const Vector e = es.eigenvectors().col(j);
      if (accept(e) || accept(-e)) return v;
    }
  }
  Rng rng(budget.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(n);
  for (int i = 0; i < budget.samples; ++i) {
    for (int j = 0; j < n; ++j) x(j) = gauss(rng);
    if (accept(x)) return v;
  }
  v.status = FeasibilityStatus::Unknown;
  return v;
}

FeasibilityVerdict region_feasible(const Region& r, const FeasibilityBudget& budget) {
  if (r.constraints.empty()) {
    FeasibilityVerdict v;
    v.status = FeasibilityStatus::Sat;
    v.exact = true;
    v.engine = "direct";
    v.witness = Vector::Unit(std::max(r.dim, 1), 0);
    return v;
  }
  if (r.dim == 1 && budget.backend != BackendKind::Sampling) return line_feasible(r);
  switch (budget.backend) {
    case BackendKind::Sampling:
      return sample_feasible(r, budget);
    case BackendKind::Exact:
      if (r.dim == 2) return planar_feasible(r, budget);
      [[fallthrough]];
    case BackendKind::Smt:
      try {
        return smt_feasible(r, budget);
      } catch (const BackendError&) {
        FeasibilityVerdict v = sample_feasible(r, budget);
        v.engine = "sampling (solver failed)";
        return v;
      }
  }
  return sample_feasible(r, budget);
}

}  // namespace etct
