// Randomized invariants. Each suite draws from a fixed seed.

#include "cases.hpp"

#include <gtest/gtest.h>

using namespace etct;
using namespace etct::testing;

namespace {

Matrix random_orthonormal(Rng& rng, int n, int k) {
  Matrix G(n, k);
  std::normal_distribution<double> g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) G(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ() * Matrix::Identity(n, k);
}

Matrix random_symmetric(Rng& rng, int n) {
  std::normal_distribution<double> g;
  Matrix S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = g(rng);
  return 0.5 * (S + S.transpose());
}

}  // namespace

TEST(Property, HomogeneityOfTauAndSampleMap) {
  const std::vector<EtcSystem> systems = {petc_case1(), petc_case3(), cetc_case2(), cetc_case4()};
  Rng rng(100);
  std::uniform_real_distribution<double> scale(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const EtcSystem& s = systems[i % systems.size()];
    const Vector x = random_unit(rng, 2) * std::exp(scale(rng) / 10.0);
    double lam = scale(rng);
    if (std::abs(lam) < 1e-3) lam = 1.0;
    const SampleStep a = sample_map(s, x);
    const SampleStep b = sample_map(s, lam * x);
    if (s.is_petc()) {
      ASSERT_EQ(a.y, b.y) << i;
    } else {
      ASSERT_NEAR(a.y, b.y, 1e-9) << i;
    }
    EXPECT_LT((lam * a.x_next - b.x_next).norm(), 1e-6 * (lam * a.x_next).norm()) << i;
  }
}

TEST(Property, SimulatedTracesBelongToTheModel) {
  const EtcSystem s = petc_case3();
  const TrafficModel m = build_model(s, 6, exact_build());
  Rng rng(200);
  for (int i = 0; i < 1000; ++i) {
    const SampleTrajectory t = simulate(s, random_unit(rng, 2), 40, true);
    ASSERT_TRUE(check_trace_membership(m, t.steps)) << i;
  }
}

TEST(Property, SamplingOuterModelsContainTraces) {
  const EtcSystem s = petc_case1();
  BuildOptions o;
  o.budget.backend = BackendKind::Sampling;
  o.budget.samples = 300;
  const TrafficModel m = build_model(s, 3, o);
  Rng rng(201);
  for (int i = 0; i < 1000; ++i) {
    const SampleTrajectory t = simulate(s, random_unit(rng, 2), 30, true);
    ASSERT_TRUE(check_trace_membership(m, t.steps)) << i;
  }
}

TEST(Property, MonotonicityAcrossRefinement) {
  // the four-step-deep models of the first case are small and quick
  for (const EtcSystem& s : {petc_case1(), petc_case2(), petc_case3()}) {
    TrafficModel m = build_model(s, 1, exact_build());
    double prev_ila = -1, prev_ili = -1, prev_bits = 1e9;
    for (int l = 1; l <= 6; ++l) {
      if (l > 1) m = refine_model(m, s, exact_build());
      const SccDecomposition d = scc_decompose(m);
      const double ila = karp_min_avg_cycle(m, d).value;
      const double ili = inf_lim_inf(m, d).value;
      const double bits = behavioral_entropy(m, d).bits;
      EXPECT_GE(ila, prev_ila - 1e-12) << l;
      EXPECT_GE(ili, prev_ili - 1e-12) << l;
      EXPECT_LE(bits, prev_bits + 1e-9) << l;
      EXPECT_GE(ila, ili - 1e-12);
      prev_ila = ila;
      prev_ili = ili;
      prev_bits = bits;
    }
  }
}

TEST(Property, LimitAverageBoundsEmpiricalAverages) {
  const EtcSystem s = petc_case3();
  const TrafficModel m = build_model(s, 3, exact_build());
  const SccDecomposition d = scc_decompose(m);
  const ModelCycle c = karp_min_avg_cycle(m, d);
  // A walk of N edges is a union of cycles plus a simple path, so its mean
  // is at least lambda - V (lambda - w_min) / N.
  const double lambda = c.steps.value();
  const int V = static_cast<int>(m.size());
  const int N = 4000;
  const double slack = V * (lambda - 1.0) / N;
  Rng rng(300);
  for (int i = 0; i < 1000; ++i) {
    const SampleTrajectory t = simulate(s, random_unit(rng, 2), N, true);
    double sum = 0;
    for (int k : t.steps) sum += k;
    ASSERT_GE(sum / N, lambda - slack - 1e-12) << i;
  }
}

TEST(Property, JacobianMatchesCentralDifferences) {
  Tolerances tol;
  tol.cetc_tol = 1e-14;
  std::vector<EtcSystem> systems;
  for (double sg : {0.32, 0.5}) {
    systems.emplace_back(plant_A(), plant_B(), gain(-6), RelativeErrorTrigger{sg}, SystemKind::CETC, 0.0, 2.0, tol);
  }
  Rng rng(400);
  int checked = 0;
  for (int i = 0; i < 40; ++i) {
    const EtcSystem& s = systems[i % 2];
    const Vector x = random_unit(rng, 2);
    Vector d(2);
    d << -x(1), x(0);
    const Matrix J = jacobian_sample_map(s, x);
    auto err = [&](double eps) {
      const Vector fd = (sample_map(s, x + eps * d).x_next - sample_map(s, x - eps * d).x_next) / (2 * eps);
      return (J * d - fd).norm();
    };
    const double e1 = err(2e-3), e2 = err(1e-3);
    if (e1 < 1e-9) continue;  // locally linear, nothing to measure
    EXPECT_GT(e1 / e2, 3.0) << i;
    EXPECT_LT(e1 / e2, 5.0) << i;
    EXPECT_LT(e1, 1e-2) << i;
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Property, SubspaceTestAgreesWithDenseSampling) {
  Rng rng(500);
  int agreed = 0, skipped = 0;
  for (int t = 0; t < 300; ++t) {
    const int n = 3 + t % 2;
    const int k = 1 + t % 2;
    Region r;
    r.dim = n;
    const int nc = 1 + t % 3;
    for (int c = 0; c < nc; ++c) {
      Matrix N = random_symmetric(rng, n);
      N += (1.0 + c) * Matrix::Identity(n, n);
      r.add(N, c % 2 ? Relation::GE : Relation::GT);
    }
    const Matrix V = random_orthonormal(rng, n, k);
    double worst = 1e300;
    const int samples = k == 1 ? 1 : 20000;
    for (int i = 0; i < samples; ++i) {
      const double a = M_PI * i / samples;
      const Vector x = k == 1 ? Vector(V.col(0)) : Vector(std::cos(a) * V.col(0) + std::sin(a) * V.col(1));
      for (const auto& c : r.constraints) worst = std::min(worst, x.dot(c.N * x));
    }
    if (std::abs(worst) < 1e-4) {
      ++skipped;
      continue;
    }
    EXPECT_EQ(subspace_in_region(V, r), worst > 0) << t;
    ++agreed;
  }
  EXPECT_GT(agreed, 250);
  EXPECT_LT(skipped, 50);
}

TEST(Property, PlaneInQuadricAgainstRandomSearch) {
  Rng rng(600);
  std::uniform_real_distribution<double> mag(0.5, 3.0);
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + t % 3;
    const int pos = 1 + static_cast<int>(rng() % (n - 1));
    Vector ev(n);
    for (int i = 0; i < n; ++i) ev(i) = (i < pos ? 1 : -1) * mag(rng);
    const Matrix Qm = random_orthonormal(rng, n, n);
    const Matrix N = Qm * ev.asDiagonal() * Qm.transpose();

    bool found = false;
    for (int i = 0; i < 20000 && !found; ++i) {
      const Matrix P = random_orthonormal(rng, n, 2);
      Eigen::SelfAdjointEigenSolver<Matrix> es(P.transpose() * N * P);
      found = es.eigenvalues().minCoeff() > 1e-9;
    }
    EXPECT_EQ(plane_in_quadric(N, PlaneMode::StrictPositive), found) << t << " pos=" << pos;

    const bool zero = plane_in_quadric(N, PlaneMode::Zero);
    EXPECT_EQ(zero, std::min(pos, n - pos) >= 2) << t;
    if (zero) {
      const auto w = plane_in_quadric_witness(N, PlaneMode::Zero);
      ASSERT_TRUE(w.has_value());
      EXPECT_LT((w->transpose() * N * *w).norm(), 1e-9);
      EXPECT_NEAR((w->transpose() * *w - Matrix::Identity(2, 2)).norm(), 0.0, 1e-9);
    }
  }
}

TEST(Property, PermutationTestIsCalibrated) {
  Rng rng(700);
  std::discrete_distribution<int> d({1, 3, 4, 2, 1});
  int rejected_cvm = 0, rejected_ks = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> a(100), b(100);
    for (double& v : a) v = d(rng);
    for (double& v : b) v = d(rng);
    if (cvm_two_sample(a, b, {199, static_cast<std::uint64_t>(r), 1}).p_value <= 0.05) ++rejected_cvm;
    if (ks_two_sample(a, b, {199, static_cast<std::uint64_t>(r), 1}).p_value <= 0.05) ++rejected_ks;
  }
  EXPECT_GE(rejected_cvm, 2);
  EXPECT_LE(rejected_cvm, 20);
  EXPECT_GE(rejected_ks, 2);
  EXPECT_LE(rejected_ks, 20);
}
