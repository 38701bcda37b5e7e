#pragma once

#include "etct/config.hpp"
#include "etct/ergodic.hpp"
#include "etct/graph_metrics.hpp"
#include "etct/ist_bounds.hpp"
#include "etct/rng.hpp"

#include <random>

namespace etct::testing {

inline Matrix plant_A() {
  Matrix A(2, 2);
  A << 0, 1, -2, 3;
  return A;
}

inline Matrix plant_B() {
  Matrix B(2, 1);
  B << 0, 1;
  return B;
}

inline Matrix gain(double k2) {
  Matrix K(1, 2);
  K << 0, k2;
  return K;
}

// Sampled systems checked every 50 ms, maximum 1 s.
inline EtcSystem petc(double k2, double sigma) {
  return EtcSystem(plant_A(), plant_B(), gain(k2), RelativeErrorTrigger{sigma}, SystemKind::PETC, 0.05, 1.0);
}
inline EtcSystem petc_case1() { return petc(-5, 0.2); }
inline EtcSystem petc_case2() { return petc(-6, 0.2); }
inline EtcSystem petc_case3() { return petc(-6, 0.32); }

inline EtcSystem cetc(double k2, double sigma) {
  return EtcSystem(plant_A(), plant_B(), gain(k2), RelativeErrorTrigger{sigma}, SystemKind::CETC, 0.0, 2.0);
}
inline EtcSystem cetc_case1() { return cetc(-5, 0.2); }
inline EtcSystem cetc_case2() { return cetc(-6, 0.32); }
inline EtcSystem cetc_case3() { return cetc(-6, 0.5); }
inline EtcSystem cetc_case4() { return cetc(-6, 0.6); }

inline BuildOptions exact_build() {
  BuildOptions o;
  o.budget.backend = BackendKind::Exact;
  return o;
}

inline Vector random_unit(Rng& rng, int n) {
  std::normal_distribution<double> g;
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = g(rng);
  return x / x.norm();
}

inline Vector unit_at(double angle) {
  Vector x(2);
  x << std::cos(angle), std::sin(angle);
  return x;
}

}  // namespace etct::testing
