#include "convexcert/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <memory>
#include <mutex>
#include <thread>

#include "convexcert/errors.hpp"
#include "convexcert/moment_refute.hpp"
#include "convexcert/sos_certify.hpp"

namespace convexcert {
namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Context {
  RunConfig config;
  ReportParameters params;
  ProblemSpec spec;
};

std::function<void(const std::string&, const SdpProblem&)> dumper(const RunConfig& config,
                                                                  const std::string& suffix) {
  if (!config.dump_sdp) return {};
  const std::filesystem::path dir = *config.dump_sdp;
  return [dir, suffix](const std::string& name, const SdpProblem& p) {
    write_sdp(p, dir / (name + suffix + ".sdp"));
  };
}

CertifyOptions certify_options(const Context& ctx, const std::atomic<bool>* cancel,
                               const std::string& suffix) {
  CertifyOptions o;
  o.solver.tol = ctx.params.solver_tol;
  o.solver.cancel = cancel;
  o.verify.tol_residual = ctx.params.tol_residual;
  o.verify.tol_eigenvalue = ctx.params.tol_eigenvalue;
  o.on_problem = dumper(ctx.config, suffix);
  return o;
}

// Exact (epsilon = 0) certificates prove convexity. A certificate at
// epsilon > 0 only shows g_j((x+y)/2) >= -epsilon on K x K; it is kept and
// reported but does not certify the constraint.
void certify_constraint(const Context& ctx, std::size_t j, ConstraintReport& out,
                        const std::atomic<bool>* cancel) {
  const ProblemSpec& spec = ctx.spec;
  const unsigned hd = half_degree(spec.constraints[j]);
  const unsigned d0 = std::max(ctx.params.degree, hd);
  if (d0 > ctx.params.max_degree) {
    out.note = "degree bound below ceil(deg g" + std::to_string(j + 1) + " / 2) = " +
               std::to_string(hd) + "; certification skipped";
    return;
  }
  // Feasibility at epsilon implies feasibility at every larger epsilon, so
  // after the smallest value fails the schedule is scanned from the top and
  // stops at the first failure.
  std::vector<double> schedule = ctx.params.epsilons;
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
  std::optional<double> best_eps;
  for (unsigned d = d0; d <= ctx.params.max_degree; ++d) {
    std::vector<double> todo;
    for (double e : schedule) {
      if (!best_eps || e < *best_eps) todo.push_back(e);
    }
    if (todo.empty()) break;
    std::reverse(todo.begin() + 1, todo.end());
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const double eps = todo[i];
      if (cancel && cancel->load()) return;
      const auto index = std::find(ctx.params.epsilons.begin(), ctx.params.epsilons.end(), eps) -
                         ctx.params.epsilons.begin();
      const auto o = certify_sufficient(spec, j, d, eps,
                                        certify_options(ctx, cancel, "_e" + std::to_string(index)));
      out.attempts.push_back({"quadratic_module", d, eps, 0, to_string(o.status), o.message,
                              std::nullopt, std::nullopt, o.solver});
      if (o.status != CertifyStatus::certified) {
        if (i > 0) break;
        continue;
      }
      out.certificate = *o.certificate;
      if (eps == 0.0) {
        out.verdict = ConstraintVerdict::certified;
        out.note = "quadratic-module certificate at d = " + std::to_string(d);
        return;
      }
      best_eps = eps;
      out.note = "only an epsilon-certificate (epsilon = " + fmt(eps) + ", d = " +
                 std::to_string(d) + "): g" + std::to_string(j + 1) +
                 "((x+y)/2) >= -epsilon on K x K, which does not prove convexity";
      if (i == 0) break;
    }
  }

  if (ctx.params.stengle) {
    for (unsigned d = d0; d <= ctx.params.max_degree; ++d) {
      if (cancel && cancel->load()) return;
      const auto o = certify_stengle(spec, j, d, ctx.params.stengle_p,
                                     certify_options(ctx, cancel, ""));
      out.attempts.push_back({"preordering", d, 0.0, ctx.params.stengle_p, to_string(o.status),
                              o.message, std::nullopt, std::nullopt, o.solver});
      if (o.status == CertifyStatus::refused) break;
      if (o.status == CertifyStatus::certified) {
        out.stengle_certificate = *o.certificate;
        out.verdict = ConstraintVerdict::certified;
        out.note = "preordering certificate at d = " + std::to_string(d) +
                   ", p = " + std::to_string(ctx.params.stengle_p);
        return;
      }
    }
  }
  if (out.note.empty()) {
    out.note = "no certificate up to d = " + std::to_string(ctx.params.max_degree);
  }
}

void refute_constraint(const Context& ctx, std::size_t j, ConstraintReport& out,
                       const std::atomic<bool>* cancel) {
  const double tol_strict = 10.0 * ctx.params.tol_feas;
  RelaxationOptions ro;
  ro.solver.tol = ctx.params.solver_tol;
  ro.solver.cancel = cancel;
  ro.on_problem = dumper(ctx.config, "");
  std::string refute_note;
  double lowest_rho = 0.0;
  for (unsigned s = ctx.params.order; s <= ctx.params.max_order; ++s) {
    if (cancel && cancel->load()) return;
    const RelaxationResult r = solve_relaxation(ctx.spec, j, s, ro);
    Attempt a{"moment", s, 0.0, 0, to_string(r.status), r.message,
              std::nullopt, std::nullopt, r.solver};
    if (r.status != RelaxationStatus::solved) {
      out.attempts.push_back(std::move(a));
      refute_note = r.message;
      continue;
    }
    a.rho = r.rho;
    if (r.rho >= -tol_strict) {
      a.message = "rho >= -tol: no midpoint violation detected";
      out.attempts.push_back(std::move(a));
      // rho_js is nondecreasing in s, so deeper orders cannot go below -tol
      refute_note = "no non-convexity found (rho = " + fmt(r.rho) + " at s = " +
                    std::to_string(s) + ")";
      break;
    }
    out.nonconvexity_signal = true;
    lowest_rho = std::min(lowest_rho, r.rho);
    const FlatnessReport f = rank_flatness_check(r);
    a.flatness = f;
    if (!f.flat) {
      a.message = f.ambiguous ? "rank-ambiguous: extraction skipped"
                              : "not flat (rank " + std::to_string(f.rank_s) + " vs " +
                                    std::to_string(f.rank_sv) + ")";
      out.attempts.push_back(std::move(a));
      continue;
    }
    const ExtractionResult e = extract_atoms(r, f.t, ctx.params.seed);
    if (!e.ok) {
      a.message = e.message;
      out.attempts.push_back(std::move(a));
      continue;
    }
    const WitnessCheck w = validate_witness(e.atoms, ctx.spec, j, ctx.params.tol_feas);
    if (!w.accepted) {
      a.message = "extracted atoms failed validation";
      for (const auto& d : w.dropped) a.message += "; " + d;
      out.attempts.push_back(std::move(a));
      continue;
    }
    a.message = "witness validated (" + std::to_string(w.witness.atoms.size()) + " atoms)";
    out.attempts.push_back(std::move(a));
    out.witness = w.witness;
    out.verdict = ConstraintVerdict::refuted;
    out.note = "non-convexity witness at s = " + std::to_string(s);
    return;
  }
  if (out.nonconvexity_signal) {
    refute_note = "relaxation suggests non-convexity (unproven): rho = " + fmt(lowest_rho);
  }
  if (!refute_note.empty()) out.note = out.note.empty() ? refute_note : out.note + "; " + refute_note;
}

Report assemble(const Context& ctx, Mode mode) {
  Report report;
  report.mode = to_string(mode);
  report.problem = ctx.spec;
  report.parameters = ctx.params;
  report.include_timings = ctx.config.timings;
  const std::size_t m = ctx.spec.m();
  report.constraints.resize(m);
  for (std::size_t j = 0; j < m; ++j) report.constraints[j].j = j;

  if (ctx.config.dump_sdp) std::filesystem::create_directories(*ctx.config.dump_sdp);

  // Refutation of one constraint settles the question, so in refute and
  // analyze mode later constraints are cancelled and reported as skipped.
  const bool short_circuit = mode != Mode::certify;
  auto cancel = std::make_unique<std::atomic<bool>[]>(m);
  for (std::size_t j = 0; j < m; ++j) cancel[j] = false;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_refuted{m};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= m) return;
      ConstraintReport& c = report.constraints[j];
      try {
        if (short_circuit && j > first_refuted.load()) continue;
        if (mode != Mode::refute) certify_constraint(ctx, j, c, &cancel[j]);
        if (mode != Mode::certify && c.verdict != ConstraintVerdict::certified) {
          refute_constraint(ctx, j, c, &cancel[j]);
        }
        if (short_circuit && c.verdict == ConstraintVerdict::refuted) {
          std::size_t cur = first_refuted.load();
          while (j < cur && !first_refuted.compare_exchange_weak(cur, j)) {
          }
          for (std::size_t k = j + 1; k < m; ++k) cancel[k] = true;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned width = std::max(1u, std::min<unsigned>(ctx.params.jobs, static_cast<unsigned>(m)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  for (std::size_t j = first_refuted.load() + 1; short_circuit && j < m; ++j) {
    ConstraintReport skipped;
    skipped.j = j;
    skipped.verdict = ConstraintVerdict::skipped;
    skipped.note = "skipped: g" + std::to_string(first_refuted.load() + 1) + " already refuted";
    report.constraints[j] = std::move(skipped);
  }

  if (ctx.params.archimedean) {
    const unsigned d = std::max(1u, ctx.params.degree);
    const auto o = archimedean_check(ctx.spec, *ctx.params.archimedean, d,
                                     certify_options(ctx, nullptr, ""));
    ArchimedeanRecord a;
    a.radius_squared = *ctx.params.archimedean;
    a.degree = d;
    a.status = to_string(o.status);
    a.message = o.message;
    a.solver = o.solver;
    a.certificate = o.certificate;
    report.archimedean = std::move(a);
  }

  report.verdict = overall_verdict(report);
  bool signal = false;
  for (const auto& c : report.constraints) signal = signal || c.nonconvexity_signal;
  if (report.verdict == "contradiction") {
    report.verdict = "inconclusive";
    report.exit_code = kExitContradiction;
    report.summary = "numerical contradiction: a verified certificate and a validated witness";
  } else if (report.verdict == "convex") {
    report.exit_code = kExitConclusive;
    report.summary = "every constraint has a verified convexity certificate";
  } else if (report.verdict == "not convex") {
    report.exit_code = kExitConclusive;
    report.summary = "validated non-convexity witness";
  } else if (signal) {
    report.exit_code = kExitUnprovenSignal;
    report.summary = "relaxation suggests non-convexity (unproven)";
  } else {
    report.exit_code = kExitInconclusive;
    report.summary = mode == Mode::refute ? "no non-convexity found"
                                          : "no conclusive certificate or witness";
  }
  return report;
}

Context make_context(const RunConfig& config, const ProblemSpec& spec) {
  Context ctx{config, {}, config.ball ? with_ball(spec, *config.ball) : spec};
  ctx.params = resolve(config, ctx.spec);
  return ctx;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::certify:
      return "certify";
    case Mode::refute:
      return "refute";
    case Mode::analyze:
      return "analyze";
  }
  return "unknown";
}

ReportParameters resolve(const RunConfig& config, const ProblemSpec& spec) {
  spec.validate();
  ReportParameters p;
  unsigned maxdeg = 0;
  for (const auto& g : spec.constraints) maxdeg = std::max(maxdeg, g.degree());
  p.degree = config.degree.value_or((maxdeg + 1) / 2 + 1);
  p.max_degree = config.max_degree.value_or(p.degree + 3);
  if (p.degree > p.max_degree) throw StructuralError("--degree exceeds --max-degree");
  const unsigned v = std::max(1u, relaxation_v(spec));
  p.order = config.order.value_or(v);
  if (p.order < v) {
    throw StructuralError("--order " + std::to_string(p.order) + " is below v = " +
                          std::to_string(v));
  }
  p.max_order = config.max_order.value_or(p.order + 2);
  if (p.order > p.max_order) throw StructuralError("--order exceeds --max-order");
  p.epsilons = config.epsilons.empty() ? kDefaultEpsilons : config.epsilons;
  for (double e : p.epsilons) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw StructuralError("epsilon must be >= 0");
  }
  p.ball = config.ball;
  if (p.ball && !(*p.ball > 0.0)) throw StructuralError("--ball radius must be positive");
  p.stengle = config.stengle;
  p.stengle_p = config.stengle_p;
  if (p.stengle_p == 0) throw StructuralError("--stengle-p must be positive");
  p.archimedean = config.archimedean;
  if (p.archimedean && !(*p.archimedean > 0.0)) throw StructuralError("--archimedean M must be positive");
  p.seed = config.seed;
  p.tol_feas = config.tol_feas;
  p.tol_residual = config.tol_residual;
  p.tol_eigenvalue = config.tol_eigenvalue;
  p.solver_tol = config.solver_tol;
  for (double t : {p.tol_feas, p.tol_residual, p.tol_eigenvalue, p.solver_tol}) {
    if (!(t > 0.0)) throw StructuralError("tolerances must be positive");
  }
  if (p.solver_tol > 1e-2) throw StructuralError("solver tolerance must be <= 1e-2");
  p.jobs = std::max(1u, config.jobs);
  return p;
}

Report run_certify(const RunConfig& config, const ProblemSpec& spec) {
  return assemble(make_context(config, spec), Mode::certify);
}

Report run_refute(const RunConfig& config, const ProblemSpec& spec) {
  return assemble(make_context(config, spec), Mode::refute);
}

Report run_analyze(const RunConfig& config, const ProblemSpec& spec) {
  return assemble(make_context(config, spec), Mode::analyze);
}

Report run(const RunConfig& config, const ProblemSpec& spec) {
  switch (config.mode) {
    case Mode::certify:
      return run_certify(config, spec);
    case Mode::refute:
      return run_refute(config, spec);
    case Mode::analyze:
      return run_analyze(config, spec);
  }
  return run_analyze(config, spec);
}

}  // namespace convexcert
