#pragma once

// The report document: per-constraint verdicts with their certificates,
// witnesses and solver diagnostics. Schema: docs/formats.md.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convexcert/moment_refute.hpp"
#include "convexcert/problem.hpp"
#include "convexcert/sdp.hpp"
#include "convexcert/sos_certify.hpp"

namespace convexcert {

inline constexpr const char* kReportSchema = "convexcert-report/1";

struct ReportParameters {
  unsigned degree = 0;
  unsigned max_degree = 0;
  unsigned order = 0;
  unsigned max_order = 0;
  std::vector<double> epsilons;
  std::optional<double> ball;
  bool stengle = false;
  unsigned stengle_p = 1;
  std::optional<double> archimedean;
  std::uint64_t seed = 0;
  double tol_feas = 1e-6;
  double tol_residual = 1e-6;
  double tol_eigenvalue = 1e-8;
  double solver_tol = 1e-8;
  unsigned jobs = 1;

  friend bool operator==(const ReportParameters&, const ReportParameters&) = default;
};

// One SDP solved on the way to a verdict.
struct Attempt {
  std::string kind;  // quadratic_module | preordering | moment
  unsigned degree = 0;  // d for certificates, s for moment relaxations
  double epsilon = 0.0;
  unsigned p = 0;
  std::string status;
  std::string message;
  std::optional<double> rho;
  std::optional<FlatnessReport> flatness;
  SolverDiagnostics solver;
};

enum class ConstraintVerdict { certified, refuted, inconclusive, skipped };

std::string to_string(ConstraintVerdict v);

struct ConstraintReport {
  std::size_t j = 0;  // 0-based
  ConstraintVerdict verdict = ConstraintVerdict::inconclusive;
  std::string note;
  bool nonconvexity_signal = false;  // rho < 0 seen without a validated witness
  std::vector<Attempt> attempts;
  std::optional<QuadraticModuleCertificate> certificate;
  std::optional<PreorderingCertificate> stengle_certificate;
  std::optional<NonconvexityWitness> witness;
};

struct ArchimedeanRecord {
  double radius_squared = 0.0;
  unsigned degree = 0;
  std::string status;
  std::string message;
  SolverDiagnostics solver;
  std::optional<ArchimedeanCertificate> certificate;
};

struct Report {
  std::string mode = "analyze";
  ProblemSpec problem;
  ReportParameters parameters;
  std::string verdict = "inconclusive";  // convex | not convex | inconclusive
  std::string summary;
  std::vector<ConstraintReport> constraints;
  std::optional<ArchimedeanRecord> archimedean;
  int exit_code = 2;
  bool include_timings = false;
};

// "convex" iff every constraint is certified, "not convex" iff some witness
// was validated, else "inconclusive". Both at once is a contradiction and is
// returned as "contradiction".
std::string overall_verdict(const Report& report);

// Deterministic JSON. Solver wall-clock times are written only when
// include_timings is set.
std::string serialize_report(const Report& report);

// Inverse of serialize_report. Throws ParseError on malformed documents.
Report parse_report(const std::string& text);

}  // namespace convexcert
