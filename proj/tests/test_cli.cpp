#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "convexcert/report.hpp"

namespace {

struct ToolRun {
  int code = -1;
  std::string out;
};

// Runs the tool with stderr appended to `err_path` (or discarded).
ToolRun run_tool(const std::string& args, const std::string& err_path = "/dev/null") {
  const std::string cmd = std::string(CONVEXCERT_BIN) + " " + args + " 2>" + err_path;
  ToolRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string problem(const char* name) { return std::string(CONVEXCERT_PROBLEMS) + "/" + name; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, IntervalCertify) {
  const ToolRun r = run_tool("--mode certify " + problem("interval.txt"));
  EXPECT_EQ(r.code, 0);
  const convexcert::Report rep = convexcert::parse_report(r.out);
  EXPECT_EQ(rep.verdict, "convex");
  ASSERT_EQ(rep.constraints.size(), 1u);
  EXPECT_TRUE(rep.constraints[0].certificate.has_value());
}

TEST(Cli, ParabolaCertifyOnlyIsInconclusive) {
  const ToolRun r = run_tool("--mode certify --max-degree 3 " + problem("parabola.txt"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(convexcert::parse_report(r.out).verdict, "inconclusive");
}

TEST(Cli, ParabolaRefute) {
  const ToolRun r = run_tool("--mode refute --max-order 3 " + problem("parabola.txt"));
  EXPECT_EQ(r.code, 0);
  const convexcert::Report rep = convexcert::parse_report(r.out);
  EXPECT_EQ(rep.verdict, "not convex");
  ASSERT_TRUE(rep.constraints[0].witness);
  for (const auto& a : rep.constraints[0].witness->atoms) {
    EXPECT_NEAR(a.midpoint(0), 0.0, 1e-2);
    EXPECT_NEAR(a.midpoint(1), 1.0, 1e-2);
  }
}

TEST(Cli, IntervalRefuteFindsNothing) {
  const ToolRun r = run_tool("--mode refute " + problem("interval.txt"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(convexcert::parse_report(r.out).summary, "no non-convexity found");
}

TEST(Cli, TwoIntervalUnprovenSignal) {
  const ToolRun r = run_tool("--mode refute " + problem("two_interval.txt"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("relaxation suggests non-convexity (unproven)"), std::string::npos);
}

TEST(Cli, AnalyzeVerdicts) {
  EXPECT_EQ(run_tool(problem("interval.txt")).code, 0);
  const ToolRun half = run_tool(problem("halfspace.txt"));
  EXPECT_EQ(half.code, 0);
  EXPECT_EQ(convexcert::parse_report(half.out).verdict, "convex");
  const ToolRun par = run_tool("--max-degree 3 " + problem("parabola.txt"));
  EXPECT_EQ(par.code, 0);
  EXPECT_EQ(convexcert::parse_report(par.out).verdict, "not convex");
}

TEST(Cli, DeterministicOutput) {
  const std::string args = "--seed 7 --max-degree 3 " + problem("parabola.txt");
  const ToolRun a = run_tool(args);
  const ToolRun b = run_tool(args);
  EXPECT_EQ(a.code, b.code);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, WritesOutFile) {
  const auto path = std::filesystem::temp_directory_path() / "convexcert_cli_out.json";
  std::filesystem::remove(path);
  const ToolRun r = run_tool("--mode certify --out " + path.string() + " " + problem("disk.txt"));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(convexcert::parse_report(read_file(path)).verdict, "convex");
  std::filesystem::remove(path);
}

TEST(Cli, MalformedFileExits64) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto bad = dir / "convexcert_bad_problem.txt";
  const auto err = dir / "convexcert_bad_problem.err";
  {
    std::ofstream out(bad);
    out << "vars: x1\ng: 1 - x1^-1\n";
  }
  const ToolRun r = run_tool(bad.string(), err.string());
  EXPECT_EQ(r.code, 64);
  const std::string msg = read_file(err);
  EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("exponent"), std::string::npos) << msg;
  std::filesystem::remove(bad);
  std::filesystem::remove(err);
}

TEST(Cli, UsageErrorsExit64) {
  EXPECT_EQ(run_tool("").code, 64);
  EXPECT_EQ(run_tool("--mode nope " + problem("interval.txt")).code, 64);
  EXPECT_EQ(run_tool("-d 5 --max-degree 2 " + problem("interval.txt")).code, 64);
  EXPECT_EQ(run_tool(problem("does_not_exist.txt")).code, 64);
}

TEST(Cli, VersionExitsZero) {
  const ToolRun r = run_tool("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("convexcert"), std::string::npos);
}
