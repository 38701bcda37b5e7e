#include "cases.hpp"

#include "etct/errors.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

using namespace etct;
using namespace etct::testing;

namespace {

TrafficModel hand_model(int l, std::vector<KSequence> states) {
  TrafficModel m;
  m.l = l;
  m.k_bar = 2;
  m.h = 1.0;
  m.states = std::move(states);
  m.tags.assign(m.states.size(), FeasibilityTag::Witnessed);
  m.witnesses.assign(m.states.size(), Vector());
  m.rebuild_edges();
  return m;
}

}  // namespace

TEST(Domino, TwoStepHandModel) {
  const TrafficModel m = hand_model(2, {{1, 1}, {1, 2}, {2, 2}});
  ASSERT_TRUE(domino_well_formed(m));
  const std::vector<std::vector<int>> expected = {{0, 1}, {2}, {2}};
  EXPECT_EQ(m.successors, expected);
  EXPECT_EQ(m.edge_count(), 4u);
}

TEST(Domino, OneStepCompleteGraph) {
  const TrafficModel m = hand_model(1, {{1}, {2}});
  const std::vector<std::vector<int>> expected = {{0, 1}, {0, 1}};
  EXPECT_EQ(m.successors, expected);
  EXPECT_NEAR(behavioral_entropy(m).bits, 1.0, 1e-12);
}

TEST(Build, LevelOneStatesAreFeasibleSteps) {
  const EtcSystem s = petc_case3();
  const TrafficModel m = build_model(s, 1, exact_build());
  std::vector<KSequence> expected;
  FeasibilityBudget b;
  for (int k = 1; k <= s.k_bar(); ++k) {
    if (region_feasible(isochronous_region(s, k), b).status == FeasibilityStatus::Sat) expected.push_back({k});
  }
  EXPECT_EQ(m.states, expected);
  EXPECT_EQ(m.states.size(), 9u);
  EXPECT_FALSE(m.incomplete);
  EXPECT_TRUE(domino_well_formed(m));
}

TEST(Build, RefineEqualsDirectBuild) {
  const EtcSystem s = petc_case1();
  const TrafficModel m3 = build_model(s, 3, exact_build());
  const TrafficModel r4 = refine_model(m3, s, exact_build());
  const TrafficModel m4 = build_model(s, 4, exact_build());
  EXPECT_EQ(r4.states, m4.states);
  EXPECT_EQ(r4.successors, m4.successors);
  for (std::size_t i = 0; i < m4.size(); ++i) {
    const KSequence prefix(m4.states[i].begin(), m4.states[i].end() - 1);
    EXPECT_GE(m3.index_of(prefix), 0);
  }
}

TEST(Build, StatesNonDecreasingForChaoticCase) {
  const EtcSystem s = petc_case3();
  TrafficModel m = build_model(s, 1, exact_build());
  std::size_t prev = m.size();
  for (int l = 2; l <= 5; ++l) {
    m = refine_model(m, s, exact_build());
    EXPECT_GE(m.size(), prev);
    prev = m.size();
  }
}

TEST(Build, NonBlocking) {
  const TrafficModel m = build_model(petc_case2(), 5, exact_build());
  for (const auto& s : m.successors) EXPECT_FALSE(s.empty());
}

TEST(TraceMembership, KnownCycleAndRejection) {
  const EtcSystem s = petc_case3();
  const TrafficModel m = build_model(s, 6, exact_build());
  KSequence cyc;
  for (int r = 0; r < 6; ++r) cyc.insert(cyc.end(), {6, 9, 8, 10});
  EXPECT_TRUE(check_trace_membership(m, cyc));
  std::vector<double> outs;
  for (int k : cyc) outs.push_back(0.05 * k);
  EXPECT_TRUE(check_trace_membership(m, outs));
  KSequence bad = cyc;
  bad[3] = 1;  // step 1 is certified empty
  EXPECT_FALSE(check_trace_membership(m, bad));
}

TEST(FixedPoint, Detection) {
  const TrafficModel a = hand_model(2, {{1, 2}, {2, 1}});
  const TrafficModel b = hand_model(3, {{1, 2, 1}, {2, 1, 2}});
  EXPECT_TRUE(refinement_fixed_point(a, b));
  const TrafficModel one = hand_model(1, {{1}, {2}});
  const TrafficModel c = hand_model(2, {{1, 1}, {1, 2}, {2, 2}});
  EXPECT_FALSE(refinement_fixed_point(one, c));
}

TEST(ModelIo, JsonRoundTripIsByteIdentical) {
  const TrafficModel m = build_model(petc_case2(), 4, exact_build());
  const std::string j = model_to_json(m);
  const TrafficModel back = model_from_json(j);
  EXPECT_EQ(model_to_json(back), j);
  EXPECT_EQ(back.states, m.states);
  EXPECT_EQ(back.successors, m.successors);
  EXPECT_NE(model_to_dot(m).find("digraph"), std::string::npos);
}

TEST(ModelIo, RejectsBadInput) {
  EXPECT_THROW(model_from_json("{\"format_version\": 99}"), Error);
  EXPECT_THROW(model_from_json("not json"), Error);
}

TEST(Cache, PersistsAndChecksFingerprint) {
  const EtcSystem s = petc_case2();
  const auto path = (std::filesystem::temp_directory_path() / "etct_cache_test.json").string();
  FeasibilityCache c(system_fingerprint(s, BackendKind::Exact));
  BuildOptions o = exact_build();
  o.cache = &c;
  const TrafficModel m = build_model(s, 3, o);
  ASSERT_GT(c.size(), 0u);
  c.save(path);
  FeasibilityCache d(system_fingerprint(s, BackendKind::Exact));
  d.load(path);
  EXPECT_EQ(d.size(), c.size());
  FeasibilityCache other(system_fingerprint(petc_case3(), BackendKind::Exact));
  other.load(path);
  EXPECT_EQ(other.size(), 0u);
  BuildOptions o2 = exact_build();
  o2.cache = &d;
  BuildStats st;
  const TrafficModel m2 = build_model(s, 3, o2, &st);
  EXPECT_EQ(m2.states, m.states);
  EXPECT_GT(st.cached, 0);
  std::remove(path.c_str());
}

TEST(Build, SamplingOuterPolicyOverApproximates) {
  const EtcSystem s = petc_case3();
  BuildOptions o;
  o.budget.backend = BackendKind::Sampling;
  o.budget.samples = 300;
  const TrafficModel outer = build_model(s, 3, o);
  const TrafficModel exact = build_model(s, 3, exact_build());
  EXPECT_GE(outer.size(), exact.size());
  for (const KSequence& st : exact.states) EXPECT_GE(outer.index_of(st), 0) << to_string(st);
}
