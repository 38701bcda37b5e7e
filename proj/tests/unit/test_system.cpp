#include "cases.hpp"
#include "oracles.hpp"

#include "etct/errors.hpp"

#include <gtest/gtest.h>

using namespace etct;
using namespace etct::testing;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST(SystemMatrices, MAtZeroIsIdentity) {
  const EtcSystem s = cetc_case2();
  EXPECT_TRUE(build_M(s, 0.0).isApprox(Matrix::Identity(2, 2), 1e-14));
}

TEST(SystemMatrices, MIntegratesIdentityWhenPlantIsZero) {
  const EtcSystem s(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2), RelativeErrorTrigger{0.1},
                    SystemKind::CETC, 0.0, 3.0);
  EXPECT_TRUE(build_M(s, 2.0).isApprox(3.0 * Matrix::Identity(2, 2), 1e-12));
}

TEST(SystemMatrices, MMatchesFrozenQuadrature) {
  // scipy expm + adaptive quadrature (tests/support/freeze_oracles.py)
  const EtcSystem s = cetc_case2();
  const Matrix ref = mat2(0.7720663675821274, 0.0215566897558449, -1.4107151740189252, -1.3440063934462603);
  EXPECT_LT((build_M(s, 0.3903) - ref).norm(), 1e-12);
  const Matrix ref2 = mat2(0.9509808186790694, 0.1233643955183085, -0.540843878962201, 0.13971500023576766);
  EXPECT_LT((build_M(s, 0.2) - ref2).norm(), 1e-12);
}

TEST(SystemMatrices, MMatchesGaussLegendre) {
  const EtcSystem s = petc_case1();
  for (double t : {0.05, 0.4, 1.0, 1.7}) {
    const Matrix ref = oracle::quadrature_M(s.A(), s.BK(), t);
    EXPECT_LT((build_M(s, t) - ref).norm(), 1e-10) << t;
  }
}

TEST(SystemMatrices, EigenvaluesAtFixedTime) {
  Eigen::EigenSolver<Matrix> es(build_M(cetc_case2(), 0.3903));
  std::vector<double> ev = {es.eigenvalues()(0).real(), es.eigenvalues()(1).real()};
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], -1.33, 0.01);
  EXPECT_NEAR(ev[1], 0.757, 0.005);
}

TEST(SystemMatrices, MdotAtZeroAndFrozen) {
  const EtcSystem s = cetc_case2();
  EXPECT_TRUE(build_Mdot(s, 0.0).isApprox(s.A() + s.BK(), 1e-13));
  const Matrix ref = mat2(-0.540843878962201, 0.13971500023576788, -3.5244932742447412, -5.827583790329313);
  EXPECT_LT((build_Mdot(s, 0.2) - ref).norm(), 1e-11);
  const double eps = 1e-6;
  const Matrix fd = (build_M(s, 0.2 + eps) - build_M(s, 0.2 - eps)) / (2 * eps);
  EXPECT_LT((fd - build_Mdot(s, 0.2)).norm(), 1e-8);
}

TEST(SystemMatrices, MdotIsBKWithoutDrift) {
  const EtcSystem s(Matrix::Zero(2, 2), plant_B(), gain(-3), RelativeErrorTrigger{0.2}, SystemKind::CETC, 0.0, 1.0);
  EXPECT_TRUE(build_Mdot(s, 0.7).isApprox(s.BK(), 1e-13));
}

TEST(TriggerForm, RelativeErrorAtZero) {
  const QuadForm q = build_N(cetc_case2(), 0.0);
  EXPECT_TRUE(q.N.isApprox(-0.32 * 0.32 * Matrix::Identity(2, 2), 1e-13));
}

TEST(TriggerForm, LyapunovAtZeroVanishes) {
  const EtcSystem s(plant_A(), plant_B(), gain(-6), LyapunovDecayTrigger{Matrix::Identity(2, 2), 0.5}, SystemKind::CETC, 0.0,
                    1.0);
  EXPECT_LT(build_N(s, 0.0).N.norm(), 1e-14);
  const Matrix Qd = s.Qdot(0.0);
  EXPECT_NEAR(Qd(2, 2), 2 * 0.5, 1e-12);
  EXPECT_NEAR(Qd(3, 3), 2 * 0.5, 1e-12);
  EXPECT_NEAR(Qd.topLeftCorner(2, 2).norm(), 0.0, 1e-12);
  // first-order term is negative definite so nothing triggers immediately
  EXPECT_GT(inf_ist(s).value, 0.0);
}

TEST(TriggerForm, FrozenAndSymmetric) {
  const Matrix N = build_N(cetc_case2(), 0.1).N;
  const Matrix ref = mat2(-0.05151917533432675, 0.08954208405010428, 0.08954208405010428, 0.09364060874994831);
  EXPECT_LT((N - ref).norm(), 1e-12);
  EXPECT_EQ(N, N.transpose());
}

TEST(TriggerForm, ZeroOnFixedLine) {
  const EtcSystem s = cetc_case2();
  Eigen::EigenSolver<Matrix> es(build_M(s, 0.3903));
  int i = std::abs(es.eigenvalues()(0).real() - 0.7576) < 0.01 ? 0 : 1;
  Vector v = es.eigenvectors().col(i).real().normalized();
  EXPECT_NEAR(v.dot(build_N(s, 0.3903).N * v), 0.0, 1e-4);
}

TEST(TriggerForm, NdotConstantWithoutDynamics) {
  const EtcSystem s(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), RelativeErrorTrigger{0.3},
                    SystemKind::CETC, 0.0, 1.0);
  EXPECT_LT(build_Ndot(s, 0.4).N.norm(), 1e-14);
}

TEST(TriggerForm, NdotFiniteDifference) {
  const EtcSystem s = cetc_case2();
  const double eps = 1e-6;
  const Matrix fd = (build_N(s, 0.1 + eps).N - build_N(s, 0.1 - eps).N) / (2 * eps);
  EXPECT_LT((fd - build_Ndot(s, 0.1).N).norm(), 1e-6);
}

TEST(TriggerForm, GeneralQuadraticMatchesRelativeError) {
  const double sg = 0.32;
  Matrix Q(4, 4);
  Q << (1 - sg * sg) * Matrix::Identity(2, 2), -Matrix::Identity(2, 2), -Matrix::Identity(2, 2),
      Matrix::Identity(2, 2);
  const EtcSystem g(plant_A(), plant_B(), gain(-6), GeneralQuadratic::from_constant(Q), SystemKind::PETC, 0.05, 1.0);
  const EtcSystem t = petc_case3();
  for (int k = 1; k <= 20; ++k) EXPECT_LT((g.N_k(k) - t.N_k(k)).norm(), 1e-12);
}

TEST(InterSample, PetcMatchesSignScan) {
  // steps from a direct sign scan in freeze_oracles.py
  const EtcSystem c1 = petc_case1(), c3 = petc_case3();
  const std::vector<std::tuple<double, int, int>> cases = {{0.0, 2, 3}, {0.7, 2, 2}, {1.9, 2, 2}, {2.6, 5, 10}};
  for (auto [th, k1, k3] : cases) {
    EXPECT_EQ(tau_steps(c1, unit_at(th)), k1) << th;
    EXPECT_EQ(tau_steps(c3, unit_at(th)), k3) << th;
    EXPECT_DOUBLE_EQ(tau(c3, unit_at(th)), 0.05 * k3);
  }
}

TEST(InterSample, PetcSelfOracleScan) {
  const EtcSystem s = petc_case1();
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vector x = random_unit(rng, 2);
    int k = 1;
    while (k < s.k_bar() && x.dot(s.N_k(k) * x) <= 0) ++k;
    EXPECT_EQ(tau_steps(s, x), k);
  }
}

TEST(InterSample, CetcFixedLineTime) {
  const EtcSystem s = cetc_case2();
  Eigen::EigenSolver<Matrix> es(build_M(s, 0.3903));
  int i = std::abs(es.eigenvalues()(0).real() - 0.7576) < 0.01 ? 0 : 1;
  const Vector v = es.eigenvectors().col(i).real().normalized();
  EXPECT_NEAR(tau(s, v), 0.3903, 1e-3);
  const SampleStep st = sample_map(s, v);
  EXPECT_LT((st.x_next - 0.7576 * v).norm(), 5e-3);
}

TEST(InterSample, ZeroVectorRejected) {
  EXPECT_THROW(tau(petc_case1(), Vector::Zero(2)), DomainError);
}

TEST(InterSample, RenormalizationKeepsOutputs) {
  // the first case settles on a cycle, so rounding differences stay harmless
  const EtcSystem s = petc_case1();
  const Vector x0 = unit_at(0.4);
  const SampleTrajectory a = simulate(s, x0, 60, true);
  const SampleTrajectory b = simulate(s, 7.0 * x0, 60, false);
  EXPECT_EQ(a.steps, b.steps);
  for (double y : a.outputs) {
    const double k = y / 0.05;
    EXPECT_NEAR(k, std::round(k), 1e-12);
    EXPECT_GE(k, 1.0);
    EXPECT_LE(k, 20.0);
  }
  for (std::size_t i = 0; i + 1 < a.states.size(); ++i) {
    const Vector next = build_M(s, a.outputs[i]) * a.states[i];
    EXPECT_LT((next.normalized() - a.states[i + 1]).norm(), 1e-12);
  }
}

TEST(InterSample, SupremumCetcCase4) {
  EXPECT_NEAR(sup_ist(cetc_case4()).value, 0.76, 0.01);
}

TEST(InterSample, InfimumPetcCase3) {
  const EtcSystem s = petc_case3();
  // lambda_max(N(h)) = -0.0341, lambda_max(N(2h)) = 0.1363 by sign scan
  EXPECT_LT(Eigen::SelfAdjointEigenSolver<Matrix>(s.N_k(1)).eigenvalues().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(inf_ist(s).value, 0.1);
}

TEST(CircleMap, FixedPointsCase2) {
  const EtcSystem s = cetc_case2();
  // the map is written in the sin/cos convention; the fixed lines sit at
  // angle -0.6 and -1.3 in the cos/sin one
  for (double target : {-0.591, -1.264}) {
    Vector x = unit_at(target);
    const double th = theta_angle(x);
    const ThetaStep st = theta_map(s, th);
    EXPECT_NEAR(std::remainder(st.theta_next - th, M_PI), 0.0, 5e-3) << target;
  }
}

TEST(CircleMap, ConsistentWithSampleMap) {
  const EtcSystem s = cetc_case3();
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const double th = std::uniform_real_distribution<double>(-M_PI / 2, M_PI / 2)(rng);
    const ThetaStep st = theta_map(s, th);
    const SampleStep sm = sample_map(s, theta_embed(th));
    EXPECT_NEAR(st.y, sm.y, 1e-12);
    EXPECT_NEAR(std::remainder(theta_angle(sm.x_next) - st.theta_next, M_PI), 0.0, 1e-9);
  }
}

TEST(SystemConstruction, DimensionAndDomainErrors) {
  EXPECT_THROW(EtcSystem(plant_A(), plant_B(), Matrix::Zero(1, 3), RelativeErrorTrigger{0.2}, SystemKind::PETC, 0.05, 1.0),
               DimensionError);
  EXPECT_THROW(EtcSystem(plant_A(), plant_B(), gain(-6), RelativeErrorTrigger{0.2}, SystemKind::PETC, 0.05, 1.01), Error);
}
