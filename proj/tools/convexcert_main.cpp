// convexcert: decide convexity of K = {x : g_j(x) >= 0} by SOS certificates
// or moment-relaxation witnesses. See README.md for usage.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "convexcert/analysis.hpp"
#include "convexcert/errors.hpp"
#include "convexcert/problem.hpp"
#include "convexcert/report.hpp"

using namespace convexcert;

int main(int argc, char** argv) {
  CLI::App app{"Certify or refute convexity of a basic closed semi-algebraic set"};
  app.set_version_flag("--version", "convexcert 0.1.0");

  RunConfig config;
  std::string problem_path;
  std::string out_path;
  std::string dump_dir;
  unsigned degree = 0, max_degree = 0, order = 0, max_order = 0;
  double ball = 0.0, archimedean = 0.0;

  const std::map<std::string, Mode> modes{
      {"certify", Mode::certify}, {"refute", Mode::refute}, {"analyze", Mode::analyze}};
  app.add_option("problem", problem_path, "Problem file")->required();
  std::string mode = "analyze";
  app.add_option("--mode", mode, "certify | refute | analyze")
      ->check(CLI::IsMember({"certify", "refute", "analyze"}))
      ->capture_default_str();
  auto* o_degree = app.add_option("-d,--degree", degree, "Starting SOS degree bound d");
  auto* o_max_degree = app.add_option("--max-degree", max_degree, "Largest d tried");
  auto* o_order = app.add_option("-s,--order", order, "Starting relaxation order s");
  auto* o_max_order = app.add_option("--max-order", max_order, "Largest s tried");
  app.add_option("--epsilon", config.epsilons,
                 "Epsilon schedule for quadratic-module certificates (repeatable)")
      ->check(CLI::NonNegativeNumber);
  auto* o_ball = app.add_option("--ball", ball,
                                "Add R^2 - |x|^2 >= 0 (changes the set under test)")
                     ->check(CLI::PositiveNumber);
  app.add_flag("--stengle", config.stengle, "Also try preordering certificates");
  app.add_option("--stengle-p", config.stengle_p, "Exponent p of the preordering identity")
      ->check(CLI::PositiveNumber);
  auto* o_arch = app.add_option("--archimedean", archimedean,
                                "Check M - |x|^2 is in the quadratic module")
                     ->check(CLI::PositiveNumber);
  app.add_option("--seed", config.seed, "Seed for atom extraction");
  app.add_option("--tol-feas", config.tol_feas, "Witness feasibility tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--tol-residual", config.tol_residual, "Certificate residual tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--jobs", config.jobs, "Constraints processed in parallel")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "Write the report here instead of stdout");
  app.add_option("--dump-sdp", dump_dir, "Write every SDP to this directory");
  app.add_flag("--timings", config.timings, "Include solver wall-clock times in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  config.mode = modes.at(mode);
  if (*o_degree) config.degree = degree;
  if (*o_max_degree) config.max_degree = max_degree;
  if (*o_order) config.order = order;
  if (*o_max_order) config.max_order = max_order;
  if (*o_ball) config.ball = ball;
  if (*o_arch) config.archimedean = archimedean;
  if (!dump_dir.empty()) config.dump_sdp = dump_dir;

  ProblemSpec spec;
  try {
    spec = load_problem(problem_path);
  } catch (const ParseError& e) {
    std::cerr << problem_path << ":" << e.line() << ":" << e.column() << ": " << e.detail() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << problem_path << ": " << e.what() << "\n";
    return kExitUsage;
  }

  Report report;
  try {
    report = run(config, spec);
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitContradiction;
  }

  const std::string doc = serialize_report(report);
  if (out_path.empty()) {
    std::cout << doc;
  } else {
    std::ofstream out(out_path);
    if (!out || !(out << doc)) {
      std::cerr << "cannot write " << out_path << "\n";
      return kExitUsage;
    }
  }
  std::cerr << report.verdict << ": " << report.summary << "\n";
  return report.exit_code;
}
