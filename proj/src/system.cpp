#include "etct/system.hpp"

#include "etct/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace etct {

namespace {

constexpr double kFdStep = 1e-6;

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entries (overflow)");
  }
}

// exp([[A, BK], [0, 0]] s) = [[e^{As}, int_0^s e^{At} dt BK], [0, I]]
Matrix augmented_exp(const EtcSystem& sys, double s) {
  const int n = sys.n();
  Matrix Z = Matrix::Zero(2 * n, 2 * n);
  Z.topLeftCorner(n, n) = sys.A() * s;
  Z.topRightCorner(n, n) = sys.BK() * s;
  Matrix E = Z.exp();
  require_finite(E, "matrix exponential");
  return E;
}

double lambda_min(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return es.eigenvalues().minCoeff();
}

void check_point(const EtcSystem& sys, const Vector& x) {
  if (x.size() != sys.n()) throw DimensionError("state has wrong dimension");
  if (!x.allFinite()) throw DomainError("state has non-finite entries");
  if (x.norm() < sys.tolerances().zero_norm) throw DomainError("inter-sample time undefined at the origin");
}

double quad(const Matrix& N, const Vector& x) { return x.dot(N * x); }

}  // namespace

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

GeneralQuadratic GeneralQuadratic::from_constant(const Matrix& Q) {
  GeneralQuadratic g;
  Matrix q = symmetrize(Q);
  g.Q = [q](double) { return q; };
  Matrix z = Matrix::Zero(q.rows(), q.cols());
  g.Qdot = [z](double) { return z; };
  g.constant = q;
  return g;
}

EtcSystem::EtcSystem(Matrix A, Matrix B, Matrix K, TriggeringSpec trigger, SystemKind kind,
                     double h, double tau_bar, Tolerances tol)
    : A_(std::move(A)),
      B_(std::move(B)),
      K_(std::move(K)),
      trigger_(std::move(trigger)),
      kind_(kind),
      h_(h),
      tau_bar_(tau_bar),
      tol_(tol) {
  const auto n = A_.rows();
  if (n < 1 || A_.cols() != n) throw DimensionError("A must be square with n_x >= 1");
  if (B_.rows() != n) throw DimensionError("B must have n_x rows");
  if (K_.rows() != B_.cols() || K_.cols() != n) throw DimensionError("K must be n_u x n_x");
  if (!A_.allFinite() || !B_.allFinite() || !K_.allFinite()) throw ConfigError("non-finite system matrices");
  if (!(tau_bar_ > 0.0) || !std::isfinite(tau_bar_)) throw ConfigError("tau_bar must be positive");
  if (tol_.cetc_grid_points < 1) throw ConfigError("cetc grid needs at least one point");
  BK_ = B_ * K_;

  if (auto* t = std::get_if<RelativeErrorTrigger>(&trigger_)) {
    if (!(t->sigma > 0.0 && t->sigma < 1.0)) throw ConfigError("sigma must lie in (0, 1)");
  } else if (auto* m = std::get_if<LyapunovDecayTrigger>(&trigger_)) {
    if (m->P.rows() != n || m->P.cols() != n) throw DimensionError("P must be n_x x n_x");
    if (!(m->rho > 0.0 && m->rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
    m->P = symmetrize(m->P);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m->P, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) throw ConfigError("P must be positive definite");
  } else {
    auto& g = std::get<GeneralQuadratic>(trigger_);
    if (!g.Q) throw ConfigError("general quadratic trigger needs Q(s)");
    Matrix q0 = g.Q(0.0);
    if (q0.rows() != 2 * n || q0.cols() != 2 * n) throw DimensionError("Q must be 2n_x x 2n_x");
  }

  if (kind_ == SystemKind::PETC) {
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw ConfigError("PETC needs a positive h");
    const double ratio = tau_bar_ / h_;
    k_bar_ = static_cast<int>(std::lround(ratio));
    if (k_bar_ < 1 || std::abs(ratio - k_bar_) > 1e-9 * std::max(1.0, ratio)) {
      throw ConfigError("tau_bar must be an integer multiple of h");
    }
    M_table_.reserve(k_bar_);
    N_table_.reserve(k_bar_);
    for (int k = 1; k <= k_bar_; ++k) {
      M_table_.push_back(build_M(*this, k * h_));
      N_table_.push_back(build_N(*this, k * h_).N);
    }
  } else {
    N_grid_.reserve(tol_.cetc_grid_points + 1);
    for (int i = 0; i <= tol_.cetc_grid_points; ++i) {
      N_grid_.push_back(build_N(*this, i * grid_step()).N);
    }
  }
}

Matrix EtcSystem::Q(double s) const {
  const int n = this->n();
  if (auto* t = std::get_if<RelativeErrorTrigger>(&trigger_)) {
    Matrix q(2 * n, 2 * n);
    Matrix I = Matrix::Identity(n, n);
    q << (1.0 - t->sigma * t->sigma) * I, -I, -I, I;
    return q;
  }
  if (auto* m = std::get_if<LyapunovDecayTrigger>(&trigger_)) {
    Matrix q = Matrix::Zero(2 * n, 2 * n);
    q.topLeftCorner(n, n) = m->P;
    q.bottomRightCorner(n, n) = -std::exp(-2.0 * m->rho * s) * m->P;
    return q;
  }
  return symmetrize(std::get<GeneralQuadratic>(trigger_).Q(s));
}

Matrix EtcSystem::Qdot(double s) const {
  const int n = this->n();
  if (std::holds_alternative<RelativeErrorTrigger>(trigger_)) return Matrix::Zero(2 * n, 2 * n);
  if (auto* m = std::get_if<LyapunovDecayTrigger>(&trigger_)) {
    Matrix q = Matrix::Zero(2 * n, 2 * n);
    q.bottomRightCorner(n, n) = 2.0 * m->rho * std::exp(-2.0 * m->rho * s) * m->P;
    return q;
  }
  const auto& g = std::get<GeneralQuadratic>(trigger_);
  if (g.Qdot) return symmetrize(g.Qdot(s));
  if (!g.finite_difference) throw ConfigError("trigger has no Qdot and finite differences are disabled");
  const double lo = std::max(0.0, s - kFdStep);
  const double hi = s + kFdStep;
  return symmetrize((g.Q(hi) - g.Q(lo)) / (hi - lo));
}

const Matrix& EtcSystem::M_k(int k) const {
  if (kind_ != SystemKind::PETC) throw DomainError("M_k is only tabulated for PETC");
  if (k < 1 || k > k_bar_) throw DomainError("k out of range 1..k_bar");
  return M_table_[k - 1];
}

const Matrix& EtcSystem::N_k(int k) const {
  if (kind_ != SystemKind::PETC) throw DomainError("N_k is only tabulated for PETC");
  if (k < 1 || k > k_bar_) throw DomainError("k out of range 1..k_bar");
  return N_table_[k - 1];
}

const Matrix& EtcSystem::N_grid(int i) const {
  if (kind_ != SystemKind::CETC) throw DomainError("N grid is only tabulated for CETC");
  if (i < 0 || i > tol_.cetc_grid_points) throw DomainError("grid index out of range");
  return N_grid_[i];
}

Matrix build_M(const EtcSystem& sys, double s) {
  if (!(s >= 0.0)) throw DomainError("build_M needs s >= 0");
  const int n = sys.n();
  Matrix E = augmented_exp(sys, s);
  return E.topLeftCorner(n, n) + E.topRightCorner(n, n);
}

Matrix build_Mdot(const EtcSystem& sys, double s) {
  if (!(s >= 0.0)) throw DomainError("build_Mdot needs s >= 0");
  Matrix eAs = (sys.A() * s).exp();
  require_finite(eAs, "matrix exponential");
  return eAs * (sys.A() + sys.BK());
}

QuadForm build_N(const EtcSystem& sys, double s) {
  const int n = sys.n();
  Matrix G(2 * n, n);
  G.topRows(n) = build_M(sys, s);
  G.bottomRows(n) = Matrix::Identity(n, n);
  Matrix N = symmetrize(G.transpose() * sys.Q(s) * G);
  require_finite(N, "triggering matrix");
  return {N, s};
}

QuadForm build_Ndot(const EtcSystem& sys, double s) {
  const int n = sys.n();
  Matrix G(2 * n, n);
  G.topRows(n) = build_M(sys, s);
  G.bottomRows(n) = Matrix::Identity(n, n);
  Matrix Gd = Matrix::Zero(2 * n, n);
  Gd.topRows(n) = build_Mdot(sys, s);
  const Matrix Q = sys.Q(s);
  Matrix Nd = Gd.transpose() * Q * G + G.transpose() * Q * Gd + G.transpose() * sys.Qdot(s) * G;
  Nd = symmetrize(Nd);
  require_finite(Nd, "triggering derivative");
  return {Nd, s};
}

int tau_steps(const EtcSystem& sys, const Vector& x) {
  if (!sys.is_petc()) throw DomainError("tau_steps is defined for PETC only");
  check_point(sys, x);
  for (int k = 1; k < sys.k_bar(); ++k) {
    if (quad(sys.N_k(k), x) > 0.0) return k;
  }
  return sys.k_bar();
}

double tau(const EtcSystem& sys, const Vector& x) {
  if (sys.is_petc()) return sys.h() * tau_steps(sys, x);
  check_point(sys, x);
  const Vector u = x.normalized();
  const int G = sys.grid_points();
  const double step = sys.grid_step();
  for (int i = 1; i <= G; ++i) {
    if (quad(sys.N_grid(i), u) <= 0.0) continue;
    double lo = (i - 1) * step;
    double hi = i * step;
    const double tol = sys.tolerances().cetc_tol;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (quad(build_N(sys, mid).N, u) > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return std::min(hi, sys.tau_bar());
  }
  return sys.tau_bar();
}

SampleStep sample_map(const EtcSystem& sys, const Vector& x) {
  SampleStep out;
  if (sys.is_petc()) {
    const int k = tau_steps(sys, x);
    out.y = k * sys.h();
    out.x_next = sys.M_k(k) * x;
  } else {
    out.y = tau(sys, x);
    out.x_next = build_M(sys, out.y) * x;
  }
  return out;
}

SampleTrajectory simulate(const EtcSystem& sys, const Vector& x0, int n, bool renormalize) {
  if (n < 1) throw DomainError("simulate needs n >= 1");
  check_point(sys, x0);
  SampleTrajectory traj;
  traj.states.reserve(n + 1);
  traj.outputs.reserve(n);
  Vector x = renormalize ? Vector(x0.normalized()) : x0;
  traj.states.push_back(x);
  for (int i = 0; i < n; ++i) {
    SampleStep st;
    if (sys.is_petc()) {
      const int k = tau_steps(sys, x);
      traj.steps.push_back(k);
      st.y = k * sys.h();
      st.x_next = sys.M_k(k) * x;
    } else {
      st = sample_map(sys, x);
    }
    x = st.x_next;
    if (renormalize) {
      const double nx = x.norm();
      if (!(nx > sys.tolerances().zero_norm)) throw NumericError("trajectory collapsed to the origin");
      x /= nx;
    }
    traj.outputs.push_back(st.y);
    traj.states.push_back(x);
  }
  return traj;
}

Vector theta_embed(double theta) {
  Vector x(2);
  x << std::sin(theta), std::cos(theta);
  return x;
}

double theta_angle(const Vector& x) {
  if (x.size() != 2) throw DimensionError("theta map needs n_x = 2");
  if (x(1) == 0.0) return -M_PI / 2.0;
  double a = std::atan(x(0) / x(1));
  if (a >= M_PI / 2.0) a -= M_PI;
  return a;
}

ThetaStep theta_map(const EtcSystem& sys, double theta) {
  if (sys.n() != 2) throw DimensionError("theta map needs n_x = 2");
  SampleStep st = sample_map(sys, theta_embed(theta));
  return {theta_angle(st.x_next), st.y};
}

CrossingCertificate single_crossing_certificate(const EtcSystem& sys, int grid_points) {
  if (grid_points < 1) throw DomainError("certificate grid needs at least one point");
  CrossingCertificate cert;
  cert.holds = true;
  cert.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= grid_points; ++i) {
    const double s = sys.tau_bar() * i / grid_points;
    const Matrix N = build_N(sys, s).N;
    const Matrix Nd = build_Ndot(sys, s).N;
    // lambda -> lambda_min(lambda N + Nd) is concave; golden-section search.
    const double scale = std::max(1.0, Nd.norm() / std::max(N.norm(), 1e-12));
    double lo = -1e4 * scale;
    double hi = 1e4 * scale;
    auto g = [&](double lam) { return lambda_min(lam * N + Nd); };
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - ratio * (hi - lo);
    double b = lo + ratio * (hi - lo);
    double ga = g(a);
    double gb = g(b);
    double best = std::max(ga, gb);
    for (int it = 0; it < 200 && best <= 0.0 && hi - lo > 1e-12 * scale; ++it) {
      if (ga < gb) {
        lo = a;
        a = b;
        ga = gb;
        b = lo + ratio * (hi - lo);
        gb = g(b);
      } else {
        hi = b;
        b = a;
        gb = ga;
        a = hi - ratio * (hi - lo);
        ga = g(a);
      }
      best = std::max({best, ga, gb});
    }
    if (best < cert.worst_margin) {
      cert.worst_margin = best;
      cert.worst_s = s;
    }
    if (best <= 0.0) cert.holds = false;
  }
  return cert;
}

std::string to_string(const KSequence& seq) {
  std::ostringstream os;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (i) os << ',';
    os << seq[i];
  }
  return os.str();
}

KSequence parse_ksequence(const std::string& text) {
  KSequence out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad k-sequence entry '" + item + "'");
    }
    while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
    if (pos != item.size()) throw ConfigError("bad k-sequence entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty k-sequence");
  return out;
}

}  // namespace etct
