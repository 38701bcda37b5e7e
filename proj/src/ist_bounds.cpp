#include "etct/ist_bounds.hpp"

#include "etct/errors.hpp"
#include "etct/planar_arcs.hpp"
#include "etct/rng.hpp"

#include <cmath>

namespace etct {

namespace {

double lambda_max(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

IstBound sup_by_sampling(const EtcSystem& sys, const FeasibilityBudget& budget) {
  Rng rng(budget.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(sys.n());
  double best = 0.0;
  const int n_samples = std::max(1, std::min(budget.samples, 5000));
  for (int i = 0; i < n_samples; ++i) {
    for (int j = 0; j < sys.n(); ++j) x(j) = gauss(rng);
    if (x.norm() == 0.0) continue;
    best = std::max(best, tau(sys, x));
  }
  return {best, sys.tau_bar(), best >= sys.tau_bar()};
}

}  // namespace

IstBound inf_ist(const EtcSystem& sys) {
  const double tol = sys.tolerances().psd_tol;
  if (sys.is_petc()) {
    for (int k = 1; k <= sys.k_bar(); ++k) {
      if (lambda_max(sys.N_k(k)) >= -tol) return {k * sys.h(), k * sys.h(), true};
    }
    return {sys.tau_bar(), sys.tau_bar(), true};
  }
  const double step = sys.grid_step();
  for (int i = 1; i <= sys.grid_points(); ++i) {
    if (lambda_max(sys.N_grid(i)) < -tol) continue;
    double lo = (i - 1) * step;
    double hi = i * step;
    while (hi - lo > sys.tolerances().cetc_tol) {
      const double mid = 0.5 * (lo + hi);
      if (lambda_max(build_N(sys, mid).N) >= -tol) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return {hi, hi, true};
  }
  return {sys.tau_bar(), sys.tau_bar(), true};
}

IstBound sup_ist(const EtcSystem& sys, const FeasibilityBudget& budget) {
  if (sys.is_petc()) {
    Region r;
    r.dim = sys.n();
    for (int k = 1; k < sys.k_bar(); ++k) {
      r.add(sys.N_k(k), Relation::LE);
      FeasibilityBudget b = budget;
      b.seed = derive_seed(budget.seed, static_cast<std::uint64_t>(k));
      const FeasibilityVerdict v = region_feasible(r, b);
      if (v.status == FeasibilityStatus::Unsat) return {k * sys.h(), k * sys.h(), true};
      if (v.status == FeasibilityStatus::Unknown) return {k * sys.h(), sys.tau_bar(), false};
    }
    return {sys.tau_bar(), sys.tau_bar(), true};
  }
  if (sys.n() != 2 || budget.backend == BackendKind::Sampling) return sup_by_sampling(sys, budget);
  // States that have not triggered by s: intersection of {x'N(s')x <= 0} over
  // grid points s' <= s. Sup is where it first becomes empty.
  ArcSet alive = ArcSet::full();
  const double step = sys.grid_step();
  for (int i = 1; i <= sys.grid_points(); ++i) {
    ArcSet next = alive.intersect(ArcSet::from_constraint(sys.N_grid(i), Relation::LE));
    if (next.is_empty()) {
      double lo = (i - 1) * step;
      double hi = i * step;
      while (hi - lo > sys.tolerances().cetc_tol) {
        const double mid = 0.5 * (lo + hi);
        ArcSet probe = alive.intersect(ArcSet::from_constraint(build_N(sys, mid).N, Relation::LE));
        if (probe.is_empty()) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      return {hi, hi, true};
    }
    alive = std::move(next);
  }
  return {sys.tau_bar(), sys.tau_bar(), true};
}

}  // namespace etct
