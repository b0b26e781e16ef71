#pragma once

// Orchestration behind the command-line tool: degree/order deepening per
// constraint, verdict assembly and exit codes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "convexcert/problem.hpp"
#include "convexcert/report.hpp"

namespace convexcert {

enum ExitCode : int {
  kExitConclusive = 0,
  kExitInconclusive = 2,
  kExitUnprovenSignal = 3,
  kExitUsage = 64,
  kExitContradiction = 70,
};

enum class Mode { certify, refute, analyze };

std::string to_string(Mode mode);

struct RunConfig {
  Mode mode = Mode::analyze;
  // Unset values are derived from the problem (see resolve()).
  std::optional<unsigned> degree;
  std::optional<unsigned> max_degree;
  std::optional<unsigned> order;
  std::optional<unsigned> max_order;
  std::vector<double> epsilons;  // empty: 0, 1e-6, 1e-4, 1e-2
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
  std::optional<std::filesystem::path> dump_sdp;
  bool timings = false;
};

inline const std::vector<double> kDefaultEpsilons{0.0, 1e-6, 1e-4, 1e-2};

// Fills in defaults: d = ceil(max deg / 2) + 1, d_max = d + 3, s = v,
// s_max = v + 2. Throws StructuralError on inconsistent settings
// (d > d_max, s < v, nonpositive tolerances, ...).
ReportParameters resolve(const RunConfig& config, const ProblemSpec& spec);

// The problem passed in is the set under test; --ball is applied by these
// functions, not by the caller.
Report run_certify(const RunConfig& config, const ProblemSpec& spec);
Report run_refute(const RunConfig& config, const ProblemSpec& spec);
Report run_analyze(const RunConfig& config, const ProblemSpec& spec);
Report run(const RunConfig& config, const ProblemSpec& spec);

}  // namespace convexcert
