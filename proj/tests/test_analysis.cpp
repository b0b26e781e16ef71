#include <gtest/gtest.h>

#include <filesystem>

#include "convexcert/analysis.hpp"
#include "convexcert/errors.hpp"

using namespace convexcert;

namespace {

const char* kInterval = "vars: x1\ng: 1 - x1^2\n";
const char* kHalf = "vars: x1\ng: x1\n";
const char* kParabola = "vars: x1 x2\ng: x1^2 - x2\ng: 1 - x1^2\ng: 1 - x2^2\n";
const char* kTwoInterval = "vars: x1\ng: x1^2 - 1\ng: 4 - x1^2\n";

ProblemSpec spec_of(const char* text) { return parse_problem(text); }

RunConfig config_for(Mode mode) {
  RunConfig c;
  c.mode = mode;
  return c;
}

}  // namespace

TEST(Resolve, Defaults) {
  const ReportParameters p = resolve(RunConfig{}, spec_of(kParabola));
  EXPECT_EQ(p.degree, 2u);
  EXPECT_EQ(p.max_degree, 5u);
  EXPECT_EQ(p.order, 1u);
  EXPECT_EQ(p.max_order, 3u);
  EXPECT_EQ(p.epsilons, kDefaultEpsilons);
  const ReportParameters h = resolve(RunConfig{}, spec_of(kHalf));
  EXPECT_EQ(h.degree, 2u);
  EXPECT_EQ(h.order, 1u);
}

TEST(Resolve, RejectsInconsistentSettings) {
  const ProblemSpec spec = spec_of(kInterval);
  RunConfig c;
  c.degree = 4;
  c.max_degree = 3;
  EXPECT_THROW(resolve(c, spec), StructuralError);
  c = RunConfig{};
  c.order = 0;
  EXPECT_THROW(resolve(c, spec), StructuralError);
  c = RunConfig{};
  c.tol_feas = 0.0;
  EXPECT_THROW(resolve(c, spec), StructuralError);
  c = RunConfig{};
  c.epsilons = {-1.0};
  EXPECT_THROW(resolve(c, spec), StructuralError);
  c = RunConfig{};
  c.order = 3;
  c.max_order = 2;
  EXPECT_THROW(resolve(c, spec), StructuralError);
}

TEST(RunCertify, IntervalConvex) {
  const Report r = run_certify(config_for(Mode::certify), spec_of(kInterval));
  EXPECT_EQ(r.verdict, "convex");
  EXPECT_EQ(r.exit_code, kExitConclusive);
  ASSERT_EQ(r.constraints.size(), 1u);
  ASSERT_TRUE(r.constraints[0].certificate);
  EXPECT_EQ(r.constraints[0].certificate->epsilon, 0.0);
  EXPECT_TRUE(verify_certificate(*r.constraints[0].certificate, r.problem).accepted);
}

TEST(RunCertify, ParabolaInconclusive) {
  RunConfig c = config_for(Mode::certify);
  c.max_degree = 3;
  const Report r = run_certify(c, spec_of(kParabola));
  EXPECT_EQ(r.verdict, "inconclusive");
  EXPECT_EQ(r.exit_code, kExitInconclusive);
  EXPECT_NE(r.constraints[0].verdict, ConstraintVerdict::certified);
}

TEST(RunCertify, EpsilonOnlyDoesNotCertify) {
  // Only positive epsilons: any success is an epsilon-certificate.
  RunConfig c = config_for(Mode::certify);
  c.epsilons = {1e-2};
  const Report r = run_certify(c, spec_of(kInterval));
  EXPECT_NE(r.verdict, "convex");
  EXPECT_NE(r.constraints[0].note.find("epsilon"), std::string::npos);
}

TEST(RunRefute, ParabolaNotConvex) {
  const ProblemSpec spec = spec_of(kParabola);
  const Report r = run_refute(config_for(Mode::refute), spec);
  EXPECT_EQ(r.verdict, "not convex");
  EXPECT_EQ(r.exit_code, kExitConclusive);
  ASSERT_TRUE(r.constraints[0].witness);
  EXPECT_TRUE(recheck_witness(*r.constraints[0].witness, spec));
  for (const auto& a : r.constraints[0].witness->atoms) {
    EXPECT_NEAR(a.midpoint(0), 0.0, 1e-2);
    EXPECT_NEAR(a.midpoint(1), 1.0, 1e-2);
  }
}

TEST(RunRefute, IntervalFindsNothing) {
  const Report r = run_refute(config_for(Mode::refute), spec_of(kInterval));
  EXPECT_EQ(r.verdict, "inconclusive");
  EXPECT_EQ(r.exit_code, kExitInconclusive);
  EXPECT_EQ(r.summary, "no non-convexity found");
  for (const auto& a : r.constraints[0].attempts) {
    ASSERT_TRUE(a.rho);
    EXPECT_GE(*a.rho, -1e-6);
  }
}

TEST(RunRefute, TwoIntervalSignal) {
  const Report r = run_refute(config_for(Mode::refute), spec_of(kTwoInterval));
  EXPECT_EQ(r.exit_code, kExitUnprovenSignal);
  EXPECT_TRUE(r.constraints[0].nonconvexity_signal);
  ASSERT_FALSE(r.constraints[0].attempts.empty());
  EXPECT_NEAR(*r.constraints[0].attempts[0].rho, -1.0, 0.05);
}

TEST(RunAnalyze, Verdicts) {
  EXPECT_EQ(run_analyze(config_for(Mode::analyze), spec_of(kInterval)).verdict, "convex");
  EXPECT_EQ(run_analyze(config_for(Mode::analyze), spec_of(kHalf)).verdict, "convex");
  RunConfig c = config_for(Mode::analyze);
  c.max_degree = 3;
  const Report r = run_analyze(c, spec_of(kParabola));
  EXPECT_EQ(r.verdict, "not convex");
  EXPECT_EQ(r.exit_code, kExitConclusive);
  for (std::size_t j = 1; j < r.constraints.size(); ++j)
    EXPECT_EQ(r.constraints[j].verdict, ConstraintVerdict::skipped);
}

TEST(RunAnalyze, DeterministicAcrossJobCounts) {
  RunConfig c = config_for(Mode::analyze);
  c.max_degree = 3;
  const ProblemSpec spec = spec_of(kParabola);
  const Report a = run(c, spec);
  c.jobs = 3;
  const Report b = run(c, spec);
  Report b_as_a = b;
  b_as_a.parameters.jobs = a.parameters.jobs;
  EXPECT_EQ(serialize_report(a), serialize_report(b_as_a));
  c.jobs = 1;
  EXPECT_EQ(serialize_report(a), serialize_report(run(c, spec)));
}

TEST(Run, BallChangesTheSet) {
  RunConfig c = config_for(Mode::certify);
  c.ball = 2.0;
  const Report r = run(c, spec_of(kHalf));
  EXPECT_EQ(r.problem.m(), 2u);
  EXPECT_EQ(r.constraints.size(), 2u);
  EXPECT_EQ(r.verdict, "convex");
}

TEST(Run, ArchimedeanRecord) {
  RunConfig c = config_for(Mode::certify);
  c.archimedean = 1.0;
  const Report r = run(c, spec_of(kInterval));
  ASSERT_TRUE(r.archimedean);
  EXPECT_EQ(r.archimedean->status, "certified");
}

TEST(Run, DumpsSdps) {
  const auto dir = std::filesystem::temp_directory_path() / "convexcert_dump_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  RunConfig c = config_for(Mode::analyze);
  c.dump_sdp = dir;
  run(c, spec_of(kInterval));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_GE(files, 1u);
  std::filesystem::remove_all(dir);
}
