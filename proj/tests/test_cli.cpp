#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "snap/bench.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string("\"") + SNAP_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool has_line(const std::string& text, const std::string& key, const std::string& value) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(key, 0) == 0 && line.find(value, key.size()) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Cli, SolveExampleOneWritesTrace) {
  const fs::path trace = fs::temp_directory_path() / "snap_cli_test_trace.csv";
  fs::remove(trace);
  const auto r = run("solve --preset example1 --algo snap --eps-g 1e-6 --canonical --trace " + trace.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("\"status\": \"SOSP1-certified\""), std::string::npos) << r.out;
  ASSERT_TRUE(fs::exists(trace));
  const auto tr = snap::read_trace_csv(trace);
  ASSERT_FALSE(tr.empty());
  EXPECT_EQ(tr.back().step_kind, snap::StepKind::oracle_call);
}

TEST(Cli, CheckExampleOneOrigin) {
  const auto r = run("check --preset example1 --point 0,0");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has_line(r.out, "SOSP1 ", "true")) << r.out;
  EXPECT_TRUE(has_line(r.out, "SOSP2(brute) ", "false")) << r.out;
  EXPECT_TRUE(has_line(r.out, "min quadratic form", "-4")) << r.out;
}

TEST(Cli, CheckCornerIsSecondOrder) {
  const auto r = run("check --preset example1 --point 1,1");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has_line(r.out, "SOSP1 ", "true")) << r.out;
  EXPECT_TRUE(has_line(r.out, "SOSP2(brute) ", "true")) << r.out;
}

TEST(Cli, MissingSpecIsUsageError) {
  const auto r = run("bench --spec missing.file");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("missing.file"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run("solve --bogus").code, 2); }

TEST(Cli, MissingSubcommandIsUsageError) { EXPECT_EQ(run("").code, 2); }

TEST(Cli, DimensionMismatchIsUsageError) {
  EXPECT_EQ(run("check --preset example1 --point 0,0,0").code, 2);
}

TEST(Cli, BenchWritesSummaryAndFigures) {
  const fs::path out = fs::temp_directory_path() / "snap_cli_test_bench";
  fs::remove_all(out);
  const auto r = run("bench --spec example1 --canonical --threads 1 --output " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / "figures"));
}
