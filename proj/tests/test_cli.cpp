#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSmallSwap = " --set experiments.swap.tau_ns.last=80 --set shots.count=2000";

std::string cli() {
  if (const char* path = std::getenv("MAGSIM_CLI_PATH")) return path;
  return MAGSIM_CLI_PATH;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + cli() + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// JSON document without the wall-clock field.
std::string stable_json(const fs::path& p) {
  json j = json::parse(read(p));
  j.erase("timestamp");
  return j.dump();
}

class Cli : public testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(testing::TempDir()) / ("magsim_cli_" + std::string(testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out(const std::string& sub) const { return " --out \"" + (dir_ / sub).string() + "\""; }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, VersionAndUsage) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
}

TEST_F(Cli, ExitCodesByErrorClass) {
  EXPECT_EQ(run("swap --set nonsense=1" + out("a")), 2);
  EXPECT_EQ(run("swap --format xml" + out("a")), 2);
  EXPECT_EQ(run("swap --config /nonexistent.json" + out("a")), 2);
  EXPECT_EQ(run("anticross --set physical.magnon_cavity_coupling_mhz=200" + out("a")), 4);
  EXPECT_EQ(run("reconstruct --set experiments.tomography.d_rec=12" + out("a")), 4);
  EXPECT_EQ(run("swap --set experiments.swap.tau_ns.last=10" + out("a")), 3);
  EXPECT_FALSE(fs::exists(dir_ / "a" / "swap.csv"));
}

TEST_F(Cli, WritesCsvAndJsonWithProvenanceHeader) {
  ASSERT_EQ(run(std::string("swap") + kSmallSwap + out("r")), 0);
  const std::string csv = read(dir_ / "r" / "swap.csv");
  EXPECT_EQ(csv.rfind("# magsim ", 0), 0u);
  EXPECT_NE(csv.find("seed=20240611"), std::string::npos);
  EXPECT_NE(csv.find("\ntau_ns,"), std::string::npos);
  const json j = json::parse(read(dir_ / "r" / "swap.json"));
  EXPECT_EQ(j["command"], "swap");
  EXPECT_EQ(j["seed"], 20240611);
  EXPECT_TRUE(j.contains("timestamp"));
  EXPECT_GT(j["result"]["metadata"]["first_minimum_ns"].get<double>(), 40.0);

  ASSERT_EQ(run(std::string("swap --format csv") + kSmallSwap + out("c")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "c" / "swap.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "c" / "swap.json"));
}

TEST_F(Cli, RepeatedRunsAndWorkerCountsAgree) {
  ASSERT_EQ(run(std::string("swap --workers 1") + kSmallSwap + out("a")), 0);
  ASSERT_EQ(run(std::string("swap --workers 1") + kSmallSwap + out("b")), 0);
  ASSERT_EQ(run(std::string("swap --workers 3") + kSmallSwap + out("c")), 0);
  const std::string a = read(dir_ / "a" / "swap.csv");
  EXPECT_EQ(a, read(dir_ / "b" / "swap.csv"));
  EXPECT_EQ(a, read(dir_ / "c" / "swap.csv"));
  EXPECT_EQ(stable_json(dir_ / "a" / "swap.json"), stable_json(dir_ / "c" / "swap.json"));

  ASSERT_EQ(run(std::string("swap --seed 5") + kSmallSwap + out("d")), 0);
  EXPECT_NE(a, read(dir_ / "d" / "swap.csv"));
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  const fs::path env_dir = dir_ / "env";
  ASSERT_EQ(run(std::string("swap") + kSmallSwap, "MAGSIM_OUT_DIR=\"" + env_dir.string() + "\""), 0);
  EXPECT_TRUE(fs::exists(env_dir / "swap.csv"));
  ASSERT_EQ(run(std::string("swap") + kSmallSwap + out("flag"), "MAGSIM_OUT_DIR=\"" + env_dir.string() + "x\""), 0);
  EXPECT_TRUE(fs::exists(dir_ / "flag" / "swap.csv"));
  EXPECT_FALSE(fs::exists(env_dir.string() + "x"));
}

TEST_F(Cli, ConfigFileIsApplied) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "cfg.json") << R"({"seed": 11, "shots": {"count": 2000}, "experiments": {"swap": {"tau_ns": {"first": 0, "last": 80, "step": 1}}}})";
  ASSERT_EQ(run("swap --config \"" + (dir_ / "cfg.json").string() + "\"" + out("f")), 0);
  const json j = json::parse(read(dir_ / "f" / "swap.json"));
  EXPECT_EQ(j["seed"], 11);
  EXPECT_EQ(j["config"]["shots"]["count"], 2000);
}

TEST_F(Cli, Selftest) { EXPECT_EQ(run("selftest"), 0); }
