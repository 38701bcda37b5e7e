#include "cases.hpp"

#include "etct/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace etct;

namespace {

const char* kMinimal = R"({"format_version": 1,
  "system": {"kind": "petc", "A": [[0, 1], [-2, 3]], "B": [[0], [1]], "K": [[0, -6]],
             "trigger": {"type": "relative_error", "sigma": 0.2}, "h": 0.05, "tau_bar": 1.0}})";

}  // namespace

TEST(Config, ShippedConfigsRoundTripByteIdentical) {
  for (const auto& entry : std::filesystem::directory_iterator(ETCT_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const RunConfig cfg = load_config(entry.path().string());
    const std::string once = config_to_json(cfg);
    EXPECT_EQ(config_to_json(parse_config(once)), once) << entry.path();
    EXPECT_NO_THROW(make_system(cfg)) << entry.path();
  }
}

TEST(Config, MinimalUsesDefaults) {
  const RunConfig cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.analysis.l_max, 10);
  EXPECT_EQ(cfg.analysis.backend, "exact");
  const EtcSystem s = make_system(cfg);
  EXPECT_EQ(s.k_bar(), 20);
  EXPECT_EQ(make_build_options(cfg).budget.backend, BackendKind::Exact);
}

TEST(Config, StrictRejections) {
  const std::string base = kMinimal;
  auto with = [&](const std::string& from, const std::string& to) {
    std::string s = base;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  EXPECT_THROW(parse_config(with("\"h\"", "\"hh\"")), ConfigError);
  EXPECT_THROW(parse_config(with("\"format_version\": 1", "\"format_version\": 2")), ConfigError);
  EXPECT_THROW(make_system(parse_config(with("[[0, -6]]", "[[0, -6, 1]]"))), ConfigError);
  EXPECT_THROW(make_system(parse_config(with("\"tau_bar\": 1.0", "\"tau_bar\": 1.01"))), ConfigError);
  EXPECT_THROW(parse_config(with("[[0], [1]]", "[[0], [1, 2]]")), ConfigError);
  EXPECT_THROW(parse_config(with("\"sigma\": 0.2", "\"sigma\": \"x\"")), ConfigError);
  EXPECT_THROW(parse_config(with("relative_error", "bogus")), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
}

TEST(Config, AnalysisSection) {
  std::string s = kMinimal;
  s.insert(s.rfind('}'), R"(, "analysis": {"l_max": 4, "backend": "sampling", "samples": 500, "seed": 7,
      "ergodic": {"n_points": 50, "split": "halves"}})");
  const RunConfig cfg = parse_config(s);
  EXPECT_EQ(cfg.analysis.l_max, 4);
  EXPECT_EQ(make_build_options(cfg).budget.backend, BackendKind::Sampling);
  EXPECT_EQ(make_build_options(cfg).budget.samples, 500);
  EXPECT_EQ(make_ergodic_options(cfg).n_points, 50);
  EXPECT_EQ(make_ergodic_options(cfg).split, ErgodicOptions::Split::Halves);
  std::string bad = kMinimal;
  bad.insert(bad.rfind('}'), R"(, "analysis": {"backend": "magic"})");
  EXPECT_THROW(parse_config(bad), ConfigError);
}
