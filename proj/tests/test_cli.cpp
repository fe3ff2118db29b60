#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qdread/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::path(QDREAD_TEST_TMP) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome run(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + QDREAD_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Cli, VersionAndHelp) {
  const auto dir = scratch("version");
  const auto v = run("--version", dir);
  EXPECT_EQ(v.code, 0);
  EXPECT_TRUE(contains(v.out, "qdread " + std::string(qdread::tool_version()))) << v.out;
  const auto h = run("--help", dir);
  EXPECT_EQ(h.code, 0);
  EXPECT_TRUE(contains(h.out, "reproduce")) << h.out;
}

TEST(Cli, MissingConfigIsConfigError) {
  const auto dir = scratch("missing");
  const auto r = run("iv --config \"" + (dir / "nope.cfg").string() + "\"", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "nope.cfg")) << r.err;
}

TEST(Cli, UnknownOverrideKey) {
  const auto dir = scratch("unknown");
  const auto r = run("iv --set device.u0=1e-4 --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "u0")) << r.err;
}

TEST(Cli, UsageErrors) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run("reproduce --figure fig99", dir).code, 2);
  EXPECT_EQ(run("circuit", dir).code, 2);
  EXPECT_EQ(run("frobnicate", dir).code, 2);
}

TEST(Cli, ReproduceFig3) {
  const auto dir = scratch("fig3");
  const auto r = run("reproduce --figure fig3 --workers 1 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "fig3_iv.csv"));
  EXPECT_TRUE(fs::exists(dir / "fig3.manifest.json"));
  EXPECT_TRUE(contains(r.out, "fig3.manifest.json")) << r.out;
}

TEST(Cli, ConfigFileIsNotModified) {
  const auto dir = scratch("config");
  const auto cfg = dir / "run.cfg";
  {
    std::ofstream(cfg) << "[experiment]\nname = run\n\n[device]\ne1_eV = 1.2e-3\ne2_0_eV = 1.1e-3\n"
                          "w12_eV = 2e-4\nw23_eV = 2e-4\ndelta_eV = 1.6e-4\n\n[leads]\nef_eV = 1e-3\n"
                          "gamma_l_eV = 2e-6\ngamma_r_eV = 2e-6\ntemperature_K = 0.1\n\n[sweep]\n"
                          "stop = 1e-3\npoints = 5\n";
  }
  const auto before = slurp(cfg);
  const auto stamp = fs::last_write_time(cfg);
  const auto r = run("sweep --config \"" + cfg.string() + "\" --set device.delta_eV=2e-4 --out \"" +
                         (dir / "out").string() + "\"",
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(cfg), before);
  EXPECT_EQ(fs::last_write_time(cfg), stamp);
  EXPECT_TRUE(fs::exists(dir / "out" / "run_iv.csv"));
  EXPECT_TRUE(contains(slurp(dir / "out" / "run.manifest.json"), "device.delta_eV"));
}

TEST(Cli, CircuitToStdout) {
  const auto dir = scratch("circuit");
  const auto r = run("circuit --vd 1.5e-3", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::stringstream ss(r.out);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, qdread::circuit_header);
  int rows = 0;
  while (std::getline(ss, line)) {
    if (!line.empty()) ++rows;
  }
  EXPECT_EQ(rows, 5);
}

TEST(Cli, Selftest) {
  const auto dir = scratch("selftest");
  const auto r = run("selftest", dir);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(contains(r.out, "PASS")) << r.out;
  EXPECT_FALSE(contains(r.out, "FAIL")) << r.out;
}
