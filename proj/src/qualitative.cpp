#include "etct/qualitative.hpp"

#include "etct/errors.hpp"
#include "etct/ist_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace etct {

namespace {

bool is_real(const Complex& z, double tol) { return std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z)); }

Matrix orthonormal_columns(const Matrix& V) {
  Eigen::HouseholderQR<Matrix> qr(V);
  Matrix Q = qr.householderQ() * Matrix::Identity(V.rows(), V.cols());
  return Q;
}

Vector normalized_real(const Eigen::VectorXcd& v) {
  Vector r = v.real();
  if (r.norm() < 1e-12) r = v.imag();
  r.normalize();
  Eigen::Index idx = 0;
  r.cwiseAbs().maxCoeff(&idx);
  if (r(idx) < 0.0) r = -r;
  return r;
}

// Region with every non-strict inequality made strict.
Region strict_interior(const Region& r) {
  Region out = r;
  for (auto& c : out.constraints) {
    if (c.rel == Relation::GE) c.rel = Relation::GT;
    if (c.rel == Relation::LE) c.rel = Relation::LT;
  }
  return out;
}

// Dominant o-line or o-plane; empty when the top magnitudes tie without
// being a conjugate pair.
Matrix dominant_invariant(const SpectralProfile& p, double tol) {
  const auto& ev = p.eigenvalues;
  if (ev.empty()) return {};
  const Complex l1 = ev[0];
  if (is_real(l1, tol)) {
    if (ev.size() > 1 && std::abs(std::abs(ev[1]) - std::abs(l1)) <= tol * std::max(1.0, std::abs(l1))) return {};
    Matrix b(p.eigenvectors.rows(), 1);
    b.col(0) = normalized_real(p.eigenvectors.col(0));
    return b;
  }
  Matrix b(p.eigenvectors.rows(), 2);
  b.col(0) = p.eigenvectors.col(0).real();
  b.col(1) = p.eigenvectors.col(0).imag();
  return orthonormal_columns(b);
}

double det_shift(const Matrix& M, double a) {
  return (M - a * Matrix::Identity(M.rows(), M.cols())).determinant();
}

double bisect(const std::function<double(double)>& g, double lo, double hi, double tol) {
  double glo = g(lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string to_string(CycleClass c) {
  switch (c) {
    case CycleClass::Stable: return "stable";
    case CycleClass::Unstable: return "unstable";
    case CycleClass::AbsolutelyUnstable: return "absolutely_unstable";
    case CycleClass::Unclassified: return "unclassified";
  }
  return "unclassified";
}

double CycleWitness::average(double h) const {
  if (sigma.empty()) return 0.0;
  return h * std::accumulate(sigma.begin(), sigma.end(), 0.0) / static_cast<double>(sigma.size());
}

bool is_near_rational(double x, int q_max, double tol) {
  // Convergents p/q of the continued fraction of x.
  double r = x;
  long long p0 = 1, q0 = 0;
  long long p1 = static_cast<long long>(std::floor(r)), q1 = 1;
  if (std::abs(x - static_cast<double>(p1)) <= tol) return true;
  double frac = r - std::floor(r);
  for (int it = 0; it < 64 && frac > 1e-15; ++it) {
    r = 1.0 / frac;
    const long long a = static_cast<long long>(std::floor(r));
    frac = r - std::floor(r);
    const long long p2 = a * p1 + p0;
    const long long q2 = a * q1 + q0;
    if (q2 > q_max) break;
    if (std::abs(x - static_cast<double>(p2) / static_cast<double>(q2)) <= tol) return true;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
  }
  return false;
}

SpectralProfile spectral_profile(const Matrix& M, const SpectralOptions& opt) {
  if (M.rows() != M.cols() || M.rows() == 0) throw DimensionError("spectral profile needs a square matrix");
  Eigen::EigenSolver<Matrix> es(M);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed");
  const int n = static_cast<int>(M.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(ev(a)), mb = std::abs(ev(b));
    if (ma != mb) return ma > mb;
    if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
    return ev(a).imag() > ev(b).imag();
  });
  SpectralProfile p;
  p.eigenvectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    p.eigenvalues.push_back(ev(order[j]));
    Eigen::VectorXcd v = es.eigenvectors().col(order[j]);
    v.normalize();
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (std::abs(v(idx)) > 0.0) v *= std::conj(v(idx)) / std::abs(v(idx));
    p.eigenvectors.col(j) = v;
  }
  // Snap conjugate pairs so that partners are ordered (+imag, -imag).
  for (int j = 0; j + 1 < n; ++j) {
    if (!is_real(p.eigenvalues[j], opt.magnitude_tol) &&
        std::abs(p.eigenvalues[j] - std::conj(p.eigenvalues[j + 1])) <= opt.magnitude_tol * std::max(1.0, std::abs(p.eigenvalues[j])) &&
        p.eigenvalues[j].imag() < 0.0) {
      std::swap(p.eigenvalues[j], p.eigenvalues[j + 1]);
      Eigen::VectorXcd t = p.eigenvectors.col(j);
      p.eigenvectors.col(j) = p.eigenvectors.col(j + 1);
      p.eigenvectors.col(j + 1) = t;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(p.eigenvectors);
  const auto& sv = svd.singularValues();
  p.diagonalizable = sv(n - 1) > 1e-10 * sv(0);

  bool mixed = p.diagonalizable;
  auto tied = [&](const Complex& a, const Complex& b) {
    return std::abs(std::abs(a) - std::abs(b)) <= opt.magnitude_tol * std::max(1.0, std::abs(a));
  };
  for (int i = 0; i + 1 < n && mixed;) {
    const Complex a = p.eigenvalues[i], b = p.eigenvalues[i + 1];
    if (!tied(a, b)) {
      ++i;
      continue;
    }
    const bool pair = !is_real(a, opt.magnitude_tol) &&
                      std::abs(a - std::conj(b)) <= opt.magnitude_tol * std::max(1.0, std::abs(a));
    if (!pair || (i + 2 < n && tied(b, p.eigenvalues[i + 2]))) mixed = false;
    i += 2;
  }
  p.mixed = mixed;

  bool irr = true;
  for (const auto& z : p.eigenvalues) {
    if (is_real(z, opt.magnitude_tol)) continue;
    if (is_near_rational(std::arg(z) / M_PI, opt.q_max, opt.angle_tol)) irr = false;
  }
  p.irrational_rotations = irr;
  p.nonsingular = std::abs(p.eigenvalues.back()) > opt.psd_tol;
  p.schur = std::abs(p.eigenvalues.front()) < 1.0 - opt.psd_tol;
  return p;
}

std::vector<Invariant> candidate_invariants(const SpectralProfile& p, bool allow_non_mixed) {
  if (!p.mixed && !allow_non_mixed) throw DomainError("candidate invariants need a mixed matrix");
  std::vector<Invariant> out;
  const int n = static_cast<int>(p.eigenvalues.size());
  std::vector<bool> used(n, false);
  for (int j = 0; j < n; ++j) {
    if (used[j]) continue;
    const Complex z = p.eigenvalues[j];
    if (is_real(z, 1e-9)) {
      Matrix b(p.eigenvectors.rows(), 1);
      b.col(0) = normalized_real(p.eigenvectors.col(j));
      out.push_back({b, Complex(z.real(), 0.0)});
      used[j] = true;
      continue;
    }
    int partner = -1;
    for (int k = j + 1; k < n; ++k) {
      if (!used[k] && std::abs(p.eigenvalues[k] - std::conj(z)) <= 1e-9 * std::max(1.0, std::abs(z))) {
        partner = k;
        break;
      }
    }
    used[j] = true;
    if (partner >= 0) used[partner] = true;
    Matrix b(p.eigenvectors.rows(), 2);
    b.col(0) = p.eigenvectors.col(j).real();
    b.col(1) = p.eigenvectors.col(j).imag();
    out.push_back({orthonormal_columns(b), z});
  }
  return out;
}

bool schur_check(const Matrix& M, double psd_tol) {
  Eigen::EigenSolver<Matrix> es(M, false);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff() < 1.0 - psd_tol;
}

InstabilityResult instability_check(const EtcSystem& sys, const KSequence& sigma, std::optional<SccContext> ctx) {
  InstabilityResult res;
  const double tol = sys.tolerances().psd_tol;
  const Matrix M = sequence_product(sys, sigma);
  const SpectralProfile p = spectral_profile(M, {tol});
  if (!p.nonsingular) {
    res.reason = "cycle matrix is singular";
    return res;
  }
  if (!p.mixed) {
    res.reason = "cycle matrix is not mixed";
    return res;
  }
  const Matrix dom = dominant_invariant(p, tol);
  if (dom.size() == 0) {
    res.reason = "dominant eigenvalue magnitude is tied";
    return res;
  }
  const Region closure = region_closure(isosequential_region(sys, sigma));
  if (subspace_in_region(dom, closure, tol)) {
    res.reason = "dominant invariant lies in the closure of the region";
    return res;
  }
  if (ctx && ctx->simple_cycle) {
    res.classification = CycleClass::AbsolutelyUnstable;
    res.reason = "dominant invariant leaves the closure; only cycle of its component at l=" + std::to_string(ctx->l);
  } else {
    res.classification = CycleClass::Unstable;
    res.reason = "dominant invariant leaves the closure";
  }
  return res;
}

CycleWitness verify_cycle(const EtcSystem& sys, const KSequence& sigma) {
  if (sigma.empty()) throw DomainError("empty cycle");
  const double tol = sys.tolerances().psd_tol;
  CycleWitness w;
  w.sigma = sigma;
  w.M_sigma = sequence_product(sys, sigma);
  const SpectralProfile p = spectral_profile(w.M_sigma, {tol});
  w.nonsingular = p.nonsingular;
  w.mixed = p.mixed;
  w.irrational_rotations = p.irrational_rotations;
  w.conclusive = p.nonsingular && p.mixed && p.irrational_rotations;
  if (!p.nonsingular) {
    w.note = "singular cycle matrix; verification inconclusive";
    return w;
  }
  const Region Q = isosequential_region(sys, sigma);
  const auto candidates = candidate_invariants(p, true);
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (!subspace_in_region(candidates[i].basis, Q, tol)) continue;
    w.verified = true;
    w.invariant = candidates[i].basis;
    w.eigenvalue = candidates[i].eigenvalue;
    // Dominant and strictly inside: nearby states align with it without
    // leaving the region, so the pattern persists under perturbation.
    const Matrix dom = p.mixed ? dominant_invariant(p, tol) : Matrix();
    const bool is_dominant = i == 0 && dom.size() > 0 && dom.cols() == w.invariant.cols();
    if (is_dominant && subspace_in_region(w.invariant, strict_interior(Q), tol)) {
      w.classification = CycleClass::Stable;
    }
    break;
  }
  if (w.classification != CycleClass::Stable) {
    const InstabilityResult inst = instability_check(sys, sigma);
    w.classification = inst.classification;
    if (!w.verified) w.note = inst.reason;
  }
  if (!w.verified && w.note.empty()) w.note = "no invariant o-line or o-plane inside the region";
  return w;
}

double line_angle(const Vector& x, ThetaConvention conv) {
  if (x.size() != 2) throw DimensionError("line angle needs n_x = 2");
  const double num = conv == ThetaConvention::SinCos ? x(0) : x(1);
  const double den = conv == ThetaConvention::SinCos ? x(1) : x(0);
  if (den == 0.0) return -M_PI / 2.0;
  double a = std::atan(num / den);
  if (a >= M_PI / 2.0) a -= M_PI;
  return a;
}

std::vector<FixedLine> fixed_oline_search_cetc(const EtcSystem& sys, int grid_points, double hit_tol) {
  if (sys.is_petc()) throw DomainError("fixed o-line search is for CETC");
  if (grid_points < 2) throw DomainError("search grid needs at least two points");
  const double t_lo = inf_ist(sys).value;
  const double t_hi = sys.tau_bar();
  std::vector<double> ts(grid_points + 1);
  for (int i = 0; i <= grid_points; ++i) ts[i] = t_lo + (t_hi - t_lo) * i / grid_points;
  std::vector<Matrix> Ms;
  Ms.reserve(ts.size());
  for (double t : ts) Ms.push_back(build_M(sys, t));

  std::vector<FixedLine> hits;
  auto accept = [&](double t, double a_target) {
    const Matrix M = build_M(sys, t);
    Eigen::EigenSolver<Matrix> es(M);
    if (es.info() != Eigen::Success) return;
    int best = -1;
    double gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < M.rows(); ++j) {
      const Complex z = es.eigenvalues()(j);
      if (!is_real(z, 1e-7)) continue;
      if (std::abs(z.real() - a_target) < gap) {
        gap = std::abs(z.real() - a_target);
        best = j;
      }
    }
    if (best < 0) return;
    const Vector v = normalized_real(es.eigenvectors().col(best));
    if (std::abs(tau(sys, v) - t) >= hit_tol) return;
    for (const auto& h : hits) {
      if (std::abs(h.t - t) < 1e-7 && std::abs(std::abs(h.direction.dot(v)) - 1.0) < 1e-7) return;
    }
    hits.push_back({t, v, es.eigenvalues()(best).real()});
  };

  auto scan_target = [&](const std::function<double(double)>& target) {
    auto g = [&](double t) { return det_shift(build_M(sys, t), target(t)); };
    std::vector<double> gv(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) gv[i] = det_shift(Ms[i], target(ts[i]));
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
      if (gv[i] == 0.0) {
        accept(ts[i], target(ts[i]));
      } else if ((gv[i] > 0.0) != (gv[i + 1] > 0.0) && gv[i + 1] != 0.0) {
        const double t = bisect(g, ts[i], ts[i + 1], 1e-10);
        accept(t, target(t));
      }
    }
    if (gv.back() == 0.0) accept(ts.back(), target(ts.back()));
  };

  if (auto* tr = std::get_if<RelativeErrorTrigger>(&sys.trigger())) {
    const double a = 1.0 / (1.0 + tr->sigma);
    scan_target([a](double) { return a; });
  } else if (auto* mz = std::get_if<LyapunovDecayTrigger>(&sys.trigger())) {
    const double rho = mz->rho;
    scan_target([rho](double t) { return std::exp(-rho * t); });
    scan_target([rho](double t) { return -std::exp(-rho * t); });
  } else {
    // Track tau(v_j(t)) - t for real eigenvectors, ordered by eigenvalue.
    const int n = sys.n();
    auto eig_real = [&](const Matrix& M, int j, Vector& v, double& lam) {
      Eigen::EigenSolver<Matrix> es(M);
      std::vector<int> idx;
      for (int i = 0; i < n; ++i) {
        if (is_real(es.eigenvalues()(i), 1e-7)) idx.push_back(i);
      }
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return es.eigenvalues()(a).real() > es.eigenvalues()(b).real(); });
      if (j >= static_cast<int>(idx.size())) return false;
      v = normalized_real(es.eigenvectors().col(idx[j]));
      lam = es.eigenvalues()(idx[j]).real();
      return true;
    };
    for (int j = 0; j < n; ++j) {
      auto d = [&](double t, bool& ok) {
        Vector v;
        double lam = 0.0;
        ok = eig_real(build_M(sys, t), j, v, lam);
        return ok ? tau(sys, v) - t : 0.0;
      };
      bool ok_prev = false;
      double d_prev = d(ts[0], ok_prev);
      for (size_t i = 1; i < ts.size(); ++i) {
        bool ok = false;
        const double di = d(ts[i], ok);
        if (ok && ok_prev && (di > 0.0) != (d_prev > 0.0)) {
          double lo = ts[i - 1], hi = ts[i];
          double dlo = d_prev;
          while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            bool okm = false;
            const double dm = d(mid, okm);
            if (!okm) break;
            if ((dm > 0.0) == (dlo > 0.0)) {
              lo = mid;
              dlo = dm;
            } else {
              hi = mid;
            }
          }
          const double t = 0.5 * (lo + hi);
          Vector v;
          double lam = 0.0;
          if (eig_real(build_M(sys, t), j, v, lam) && std::abs(tau(sys, v) - t) < hit_tol) {
            hits.push_back({t, v, lam});
          }
        }
        ok_prev = ok;
        d_prev = di;
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const FixedLine& a, const FixedLine& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.eigenvalue > b.eigenvalue;
  });
  return hits;
}

Matrix jacobian_sample_map(const EtcSystem& sys, const Vector& x) {
  if (sys.is_petc()) throw DomainError("the sample map Jacobian is defined for CETC");
  const double t = tau(sys, x);
  const Matrix M = build_M(sys, t);
  if (t >= sys.tau_bar()) return M;  // capped: tau is locally constant
  const Matrix N = build_N(sys, t).N;
  const Matrix Nd = build_Ndot(sys, t).N;
  const double d = x.dot(Nd * x);
  if (std::abs(d) <= 1e-14 * std::max(1.0, Nd.norm()) * x.squaredNorm()) {
    throw NumericError("triggering boundary is tangent; Jacobian undefined");
  }
  const Matrix Md = build_Mdot(sys, t);
  return (-2.0 / d) * (Md * x) * (x.transpose() * N) + M;
}

AttractivityResult attractivity_check(const EtcSystem& sys, const Vector& x, double line_tol) {
  const SampleStep st = sample_map(sys, x);
  const double lambda = x.dot(st.x_next) / x.squaredNorm();
  if (std::abs(lambda) <= 1e-12 * st.x_next.norm() / x.norm()) throw NumericError("degenerate fixed line (lambda ~ 0)");
  if ((st.x_next - lambda * x).norm() > line_tol * st.x_next.norm()) {
    throw DomainError("point is not on a fixed o-line");
  }
  const int n = sys.n();
  AttractivityResult res;
  res.lambda = lambda;
  if (n == 1) {
    res.attractive = true;
    return res;
  }
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix Qfull = qr.householderQ();
  const Matrix O = Qfull.rightCols(n - 1);
  const Matrix J = jacobian_sample_map(sys, x);
  const Matrix R = (O.transpose() * J * O) / lambda;
  Eigen::EigenSolver<Matrix> es(R, false);
  double rho = 0.0;
  for (int i = 0; i < R.rows(); ++i) {
    res.ratio_spectrum.push_back(es.eigenvalues()(i));
    rho = std::max(rho, std::abs(es.eigenvalues()(i)));
  }
  res.attractive = rho < 1.0 - sys.tolerances().psd_tol;
  return res;
}

namespace {

struct Signature {
  std::vector<std::pair<double, Vector>> pos, neg;
};

Signature signature(const Matrix& N, double psd_tol) {
  if (N.rows() != N.cols()) throw DimensionError("quadric matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(N));
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  Signature s;
  for (int i = 0; i < N.rows(); ++i) {
    const double l = es.eigenvalues()(i);
    if (std::abs(l) <= psd_tol) throw DomainError("quadric matrix is singular");
    if (l > 0.0) {
      s.pos.push_back({l, es.eigenvectors().col(i)});
    } else {
      s.neg.push_back({l, es.eigenvectors().col(i)});
    }
  }
  return s;
}

}  // namespace

bool plane_in_quadric(const Matrix& N, PlaneMode mode, double psd_tol) {
  const Signature s = signature(N, psd_tol);
  if (mode == PlaneMode::StrictPositive) return s.pos.size() >= 2;
  return N.rows() >= 4 && s.pos.size() >= 2 && s.neg.size() >= 2;
}

std::optional<Matrix> plane_in_quadric_witness(const Matrix& N, PlaneMode mode, double psd_tol) {
  if (!plane_in_quadric(N, mode, psd_tol)) return std::nullopt;
  const Signature s = signature(N, psd_tol);
  Matrix V(N.rows(), 2);
  if (mode == PlaneMode::StrictPositive) {
    V.col(0) = s.pos[0].second;
    V.col(1) = s.pos[1].second;
    return V;
  }
  // Pair each positive direction with a negative one so the form cancels.
  for (int j = 0; j < 2; ++j) {
    V.col(j) = s.pos[j].second / std::sqrt(s.pos[j].first) + s.neg[j].second / std::sqrt(-s.neg[j].first);
  }
  return orthonormal_columns(V);
}

StructuralAdvice structural_advice(const EtcSystem& sys) {
  StructuralAdvice a;
  const int n = sys.n();
  if (n % 2 == 1) {
    a.fixed_oline_guaranteed = true;
    a.notes.push_back("odd state dimension: a fixed o-line exists if the sample map is continuous and never maps to the origin (assumed, not checked)");
  } else {
    a.notes.push_back("even state dimension: no topological guarantee of a fixed o-line");
  }
  const double inf = inf_ist(sys).value;
  const bool periodic = std::abs(inf - sys.tau_bar()) <= 1e-12 * sys.tau_bar();
  if (n == 2) {
    a.isochronous_plane_possible = periodic;
    a.notes.push_back(periodic ? "periodic sampling: the whole plane is fixed and isochronous"
                               : "n_x = 2 with Inf < tau_bar: no isochronous fixed o-plane unless N(y) is singular");
  } else if (n == 3) {
    a.isochronous_plane_possible = sys.is_petc();
    a.notes.push_back(sys.is_petc() ? "n_x = 3 PETC: an isochronous fixed o-plane is possible"
                                    : "n_x = 3 CETC: no isochronous fixed o-plane unless N(y) is singular");
  } else if (n >= 4) {
    a.isochronous_plane_possible = true;
    a.notes.push_back("n_x >= 4: an isochronous fixed o-plane is possible");
  }
  return a;
}

}  // namespace etct
