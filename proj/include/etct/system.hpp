#pragma once

#include "etct/types.hpp"

#include <functional>
#include <optional>
#include <variant>

namespace etct {

enum class SystemKind { PETC, CETC };

// |x - xhat| > sigma |x|
struct RelativeErrorTrigger {
  double sigma = 0.0;
};

// x'Px > exp(-2 rho s) xhat'P xhat
struct LyapunovDecayTrigger {
  Matrix P;
  double rho = 0.0;
};

// Trigger fires when [x; xhat]' Q(s) [x; xhat] > 0.
struct GeneralQuadratic {
  std::function<Matrix(double)> Q;
  std::function<Matrix(double)> Qdot;  // may be empty
  bool finite_difference = true;       // fallback when Qdot is empty
  std::optional<Matrix> constant;      // set for time-invariant Q

  static GeneralQuadratic from_constant(const Matrix& Q);
};

using TriggeringSpec = std::variant<RelativeErrorTrigger, LyapunovDecayTrigger, GeneralQuadratic>;

struct QuadForm {
  Matrix N;
  double s = 0.0;
};

struct SampleTrajectory {
  std::vector<Vector> states;   // x_0 .. x_n
  std::vector<double> outputs;  // y_0 .. y_{n-1}
  std::vector<int> steps;       // PETC only: y_i / h
};

class EtcSystem {
 public:
  EtcSystem(Matrix A, Matrix B, Matrix K, TriggeringSpec trigger, SystemKind kind, double h,
            double tau_bar, Tolerances tol = {});

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& K() const { return K_; }
  const Matrix& BK() const { return BK_; }
  const TriggeringSpec& trigger() const { return trigger_; }
  SystemKind kind() const { return kind_; }
  bool is_petc() const { return kind_ == SystemKind::PETC; }
  double h() const { return h_; }
  double tau_bar() const { return tau_bar_; }
  int k_bar() const { return k_bar_; }
  int n() const { return static_cast<int>(A_.rows()); }
  const Tolerances& tolerances() const { return tol_; }

  // Q(s) and dQ/ds of the triggering condition, 2n x 2n.
  Matrix Q(double s) const;
  Matrix Qdot(double s) const;

  // PETC tables, k in 1..k_bar.
  const Matrix& M_k(int k) const;
  const Matrix& N_k(int k) const;

  // CETC scan grid: s_i = i * grid_step(), i in 0..grid_points().
  int grid_points() const { return tol_.cetc_grid_points; }
  double grid_step() const { return tau_bar_ / tol_.cetc_grid_points; }
  const Matrix& N_grid(int i) const;

 private:
  Matrix A_, B_, K_, BK_;
  TriggeringSpec trigger_;
  SystemKind kind_;
  double h_;
  double tau_bar_;
  int k_bar_ = 0;
  Tolerances tol_;
  std::vector<Matrix> M_table_;
  std::vector<Matrix> N_table_;
  std::vector<Matrix> N_grid_;
};

Matrix build_M(const EtcSystem& sys, double s);
Matrix build_Mdot(const EtcSystem& sys, double s);
QuadForm build_N(const EtcSystem& sys, double s);
QuadForm build_Ndot(const EtcSystem& sys, double s);

// Inter-sample time; for PETC tau_steps gives the multiple of h.
double tau(const EtcSystem& sys, const Vector& x);
int tau_steps(const EtcSystem& sys, const Vector& x);

struct SampleStep {
  Vector x_next;
  double y = 0.0;
};

SampleStep sample_map(const EtcSystem& sys, const Vector& x);
SampleTrajectory simulate(const EtcSystem& sys, const Vector& x0, int n, bool renormalize);

// Planar systems only: x = [sin(theta), cos(theta)], result angle in [-pi/2, pi/2).
struct ThetaStep {
  double theta_next = 0.0;
  double y = 0.0;
};

ThetaStep theta_map(const EtcSystem& sys, double theta);
Vector theta_embed(double theta);
double theta_angle(const Vector& x);

// Sufficient condition for a unique crossing of x'N(s)x on every grid point:
// exists lambda with lambda N(s) + Ndot(s) > 0.
struct CrossingCertificate {
  bool holds = false;
  double worst_margin = 0.0;  // min over s of max over lambda of lambda_min
  double worst_s = 0.0;
};

CrossingCertificate single_crossing_certificate(const EtcSystem& sys, int grid_points = 200);

Matrix symmetrize(const Matrix& m);

}  // namespace etct
