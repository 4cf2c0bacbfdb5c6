#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "magsim/config.hpp"
#include "magsim/errors.hpp"

using namespace magsim;
using nlohmann::json;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    return e.what();
  }
  ADD_FAILURE() << "no error";
  return "";
}

std::string temp_file(const std::string& text) {
  const std::string path = testing::TempDir() + "magsim_config_test.json";
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  const json j = to_json(c);
  EXPECT_EQ(to_json(config_from_json(j)), j);
  EXPECT_EQ(to_json(config_from_json(json::parse(j.dump()))), j);
  EXPECT_DOUBLE_EQ(c.physical.t1_magnon_ns, 128.0);
  EXPECT_EQ(c.shots.shots, 82500u);
}

TEST(Config, UnknownKeysAreRejectedWithTheirPath) {
  json j = to_json(RunConfig{});
  j["physical"]["t1_magnon"] = 1.0;
  EXPECT_NE(message_of([&] { config_from_json(j); }).find("physical.t1_magnon"), std::string::npos);
  EXPECT_NE(message_of([] { load_config("", {"nonsense=1"}); }).find("nonsense"), std::string::npos);
}

TEST(Config, WrongTypesAreRejected) {
  json j = to_json(RunConfig{});
  j["seed"] = "abc";
  EXPECT_NE(message_of([&] { config_from_json(j); }).find("seed"), std::string::npos);
  j = to_json(RunConfig{});
  j["physical"]["exchange_model"] = "quantum";
  EXPECT_NE(message_of([&] { config_from_json(j); }).find("exchange_model"), std::string::npos);
}

TEST(Config, OverridesParseJsonOrString) {
  const RunConfig c = load_config("", {"seed=7", "physical.t1_magnon_ns=150.5", "experiments.tomography.target=vacuum",
                                       "shots.enabled=false", "protocol.swap_duration_ns=44"});
  EXPECT_EQ(c.seed, 7u);
  EXPECT_DOUBLE_EQ(c.physical.t1_magnon_ns, 150.5);
  EXPECT_EQ(c.tomography.target, "vacuum");
  EXPECT_FALSE(c.shot_model().has_value());
  EXPECT_DOUBLE_EQ(*c.protocol.swap_duration_ns, 44.0);
  EXPECT_NE(message_of([] { load_config("", {"seed"}); }).find("seed"), std::string::npos);
}

TEST(Config, FileThenOverrides) {
  const std::string path = temp_file(R"({"seed": 3, "physical": {"t1_qubit_us": 5.0}})");
  const RunConfig c = load_config(path, {"seed=4"});
  EXPECT_EQ(c.seed, 4u);
  EXPECT_DOUBLE_EQ(c.physical.t1_qubit_us, 5.0);
  EXPECT_DOUBLE_EQ(c.physical.t1_magnon_ns, 128.0);
  std::remove(path.c_str());
  const std::string bad = temp_file(R"({"physical": {"t1_qubit": 5.0}})");
  EXPECT_NE(message_of([&] { load_config(bad, {}); }).find("t1_qubit"), std::string::npos);
  std::remove(bad.c_str());
  EXPECT_FALSE(message_of([] { load_config("/nonexistent/magsim.json", {}); }).empty());
}

TEST(Config, ShotModelCarriesTheSeed) {
  const RunConfig c = load_config("", {"seed=99"});
  ASSERT_TRUE(c.shot_model().has_value());
  EXPECT_EQ(c.shot_model()->seed, 99u);
  EXPECT_TRUE(c.evolve_options().isolate_pulses);
}
