#include "convexcert/report.hpp"

#include <cmath>
#include <limits>

#include "convexcert/errors.hpp"
#include "json.hpp"

namespace convexcert {
namespace {

using Json = nlohmann::ordered_json;

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double to_number(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Eigen::VectorXd vector_from(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_number(j[i]);
  return v;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const Json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != n) throw std::runtime_error("Gram matrix is not square");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = to_number(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

Json solver_json(const SolverDiagnostics& d, bool timings) {
  Json j;
  j["status"] = d.status;
  j["iterations"] = d.iterations;
  j["primal_residual"] = number(d.primal_residual);
  j["dual_residual"] = number(d.dual_residual);
  j["gap"] = number(d.gap);
  j["objective"] = number(d.objective);
  j["blocks"] = d.blocks;
  j["equalities"] = d.equalities;
  j["dropped_equalities"] = d.dropped_equalities;
  if (timings) j["seconds"] = number(d.seconds);
  return j;
}

SolverDiagnostics solver_from(const Json& j) {
  SolverDiagnostics d;
  d.status = j.at("status").get<std::string>();
  d.iterations = j.at("iterations").get<int>();
  d.primal_residual = to_number(j.at("primal_residual"));
  d.dual_residual = to_number(j.at("dual_residual"));
  d.gap = to_number(j.at("gap"));
  d.objective = to_number(j.at("objective"));
  d.blocks = j.at("blocks").get<std::size_t>();
  d.equalities = j.at("equalities").get<std::size_t>();
  d.dropped_equalities = j.at("dropped_equalities").get<std::size_t>();
  if (j.contains("seconds")) d.seconds = to_number(j["seconds"]);
  return d;
}

Json term_json(const SosTerm& t) {
  const auto names = default_variable_names(t.basis.space);
  Json j;
  j["label"] = t.label;
  j["weight"] = to_string(t.weight, names);
  Json basis = Json::array();
  for (const auto& e : t.basis.elements) basis.push_back(e);
  j["basis"] = std::move(basis);
  j["gram"] = matrix_json(t.gram);
  return j;
}

SosTerm term_from(const Json& j, const VariableSpace& space) {
  SosTerm t;
  t.label = j.at("label").get<std::string>();
  t.weight = parse_polynomial(j.at("weight").get<std::string>(), space,
                              default_variable_names(space));
  t.basis.space = space;
  for (const auto& e : j.at("basis")) {
    Exponent ex = e.get<Exponent>();
    if (ex.size() != space.arity()) throw std::runtime_error("basis exponent has the wrong arity");
    t.basis.order = std::max(t.basis.order, total_degree(ex));
    t.basis.elements.push_back(std::move(ex));
  }
  t.gram = matrix_from(j.at("gram"));
  if (static_cast<std::size_t>(t.gram.rows()) != t.basis.size()) {
    throw std::runtime_error("Gram matrix size does not match its basis");
  }
  return t;
}

Json terms_json(const std::vector<SosTerm>& terms) {
  Json a = Json::array();
  for (const auto& t : terms) a.push_back(term_json(t));
  return a;
}

std::vector<SosTerm> terms_from(const Json& j, const VariableSpace& space) {
  std::vector<SosTerm> out;
  for (const auto& t : j) out.push_back(term_from(t, space));
  return out;
}

Json qmodule_json(const QuadraticModuleCertificate& c) {
  Json j;
  j["type"] = "quadratic_module";
  j["j"] = c.j + 1;
  j["degree"] = c.degree;
  j["epsilon"] = number(c.epsilon);
  j["residual"] = number(c.residual);
  j["min_gram_eigenvalue"] = number(c.min_gram_eigenvalue);
  j["sigma0"] = term_json(c.sigma0);
  j["sigma"] = terms_json(c.sigma);
  j["psi"] = terms_json(c.psi);
  return j;
}

QuadraticModuleCertificate qmodule_from(const Json& j, const VariableSpace& pair) {
  QuadraticModuleCertificate c;
  c.j = j.at("j").get<std::size_t>() - 1;
  c.degree = j.at("degree").get<unsigned>();
  c.epsilon = to_number(j.at("epsilon"));
  c.residual = to_number(j.at("residual"));
  c.min_gram_eigenvalue = to_number(j.at("min_gram_eigenvalue"));
  c.sigma0 = term_from(j.at("sigma0"), pair);
  c.sigma = terms_from(j.at("sigma"), pair);
  c.psi = terms_from(j.at("psi"), pair);
  return c;
}

Json stengle_json(const PreorderingCertificate& c) {
  Json j;
  j["type"] = "preordering";
  j["j"] = c.j + 1;
  j["p"] = c.p;
  j["degree"] = c.degree;
  j["residual"] = number(c.residual);
  j["min_gram_eigenvalue"] = number(c.min_gram_eigenvalue);
  j["sigma_subsets"] = c.sigma_subsets;
  j["sigma_terms"] = terms_json(c.sigma_terms);
  j["h_subsets"] = c.h_subsets;
  j["h_terms"] = terms_json(c.h_terms);
  return j;
}

PreorderingCertificate stengle_from(const Json& j, const VariableSpace& pair) {
  PreorderingCertificate c;
  c.j = j.at("j").get<std::size_t>() - 1;
  c.p = j.at("p").get<unsigned>();
  c.degree = j.at("degree").get<unsigned>();
  c.residual = to_number(j.at("residual"));
  c.min_gram_eigenvalue = to_number(j.at("min_gram_eigenvalue"));
  c.sigma_subsets = j.at("sigma_subsets").get<std::vector<unsigned>>();
  c.sigma_terms = terms_from(j.at("sigma_terms"), pair);
  c.h_subsets = j.at("h_subsets").get<std::vector<unsigned>>();
  c.h_terms = terms_from(j.at("h_terms"), pair);
  return c;
}

Json archimedean_cert_json(const ArchimedeanCertificate& c) {
  Json j;
  j["type"] = "archimedean";
  j["M"] = number(c.radius_squared);
  j["degree"] = c.degree;
  j["residual"] = number(c.residual);
  j["min_gram_eigenvalue"] = number(c.min_gram_eigenvalue);
  j["sigma0"] = term_json(c.sigma0);
  j["sigma"] = terms_json(c.sigma);
  return j;
}

ArchimedeanCertificate archimedean_cert_from(const Json& j, const VariableSpace& base) {
  ArchimedeanCertificate c;
  c.radius_squared = to_number(j.at("M"));
  c.degree = j.at("degree").get<unsigned>();
  c.residual = to_number(j.at("residual"));
  c.min_gram_eigenvalue = to_number(j.at("min_gram_eigenvalue"));
  c.sigma0 = term_from(j.at("sigma0"), base);
  c.sigma = terms_from(j.at("sigma"), base);
  return c;
}

Json witness_json(const NonconvexityWitness& w) {
  Json j;
  j["j"] = w.j + 1;
  Json atoms = Json::array();
  for (const auto& a : w.atoms) {
    Json aj;
    aj["x"] = vector_json(a.x);
    aj["y"] = vector_json(a.y);
    aj["weight"] = number(a.weight);
    aj["midpoint"] = vector_json(a.midpoint);
    aj["violation"] = number(a.violation);
    aj["feasibility_x"] = number(a.feasibility_x);
    aj["feasibility_y"] = number(a.feasibility_y);
    atoms.push_back(std::move(aj));
  }
  j["atoms"] = std::move(atoms);
  return j;
}

NonconvexityWitness witness_from(const Json& j) {
  NonconvexityWitness w;
  w.j = j.at("j").get<std::size_t>() - 1;
  for (const auto& aj : j.at("atoms")) {
    WitnessAtom a;
    a.x = vector_from(aj.at("x"));
    a.y = vector_from(aj.at("y"));
    a.weight = to_number(aj.at("weight"));
    a.midpoint = vector_from(aj.at("midpoint"));
    a.violation = to_number(aj.at("violation"));
    a.feasibility_x = to_number(aj.at("feasibility_x"));
    a.feasibility_y = to_number(aj.at("feasibility_y"));
    w.atoms.push_back(std::move(a));
  }
  return w;
}

Json attempt_json(const Attempt& a, bool timings) {
  Json j;
  j["kind"] = a.kind;
  j[a.kind == "moment" ? "order" : "degree"] = a.degree;
  if (a.kind == "quadratic_module") j["epsilon"] = number(a.epsilon);
  if (a.kind == "preordering") j["p"] = a.p;
  j["status"] = a.status;
  j["message"] = a.message;
  if (a.rho) j["rho"] = number(*a.rho);
  if (a.flatness) {
    Json f;
    f["flat"] = a.flatness->flat;
    f["ambiguous"] = a.flatness->ambiguous;
    f["rank_s"] = a.flatness->rank_s;
    f["rank_s_minus_v"] = a.flatness->rank_sv;
    f["t"] = a.flatness->t;
    j["flatness"] = std::move(f);
  }
  j["solver"] = solver_json(a.solver, timings);
  return j;
}

Attempt attempt_from(const Json& j) {
  Attempt a;
  a.kind = j.at("kind").get<std::string>();
  a.degree = j.at(a.kind == "moment" ? "order" : "degree").get<unsigned>();
  if (j.contains("epsilon")) a.epsilon = to_number(j["epsilon"]);
  if (j.contains("p")) a.p = j["p"].get<unsigned>();
  a.status = j.at("status").get<std::string>();
  a.message = j.at("message").get<std::string>();
  if (j.contains("rho")) a.rho = to_number(j["rho"]);
  if (j.contains("flatness")) {
    const Json& f = j["flatness"];
    FlatnessReport fr;
    fr.flat = f.at("flat").get<bool>();
    fr.ambiguous = f.at("ambiguous").get<bool>();
    fr.rank_s = f.at("rank_s").get<std::size_t>();
    fr.rank_sv = f.at("rank_s_minus_v").get<std::size_t>();
    fr.t = f.at("t").get<std::size_t>();
    a.flatness = fr;
  }
  a.solver = solver_from(j.at("solver"));
  return a;
}

template <class T>
Json optional_number(const std::optional<T>& v) {
  return v ? number(*v) : Json(nullptr);
}

ConstraintVerdict verdict_from(const std::string& s) {
  if (s == "certified") return ConstraintVerdict::certified;
  if (s == "refuted") return ConstraintVerdict::refuted;
  if (s == "inconclusive") return ConstraintVerdict::inconclusive;
  if (s == "skipped") return ConstraintVerdict::skipped;
  throw std::runtime_error("unknown constraint verdict '" + s + "'");
}

}  // namespace

std::string to_string(ConstraintVerdict v) {
  switch (v) {
    case ConstraintVerdict::certified:
      return "certified";
    case ConstraintVerdict::refuted:
      return "refuted";
    case ConstraintVerdict::inconclusive:
      return "inconclusive";
    case ConstraintVerdict::skipped:
      return "skipped";
  }
  return "unknown";
}

std::string overall_verdict(const Report& report) {
  bool all_certified = !report.constraints.empty();
  bool any_witness = false;
  for (const auto& c : report.constraints) {
    if (c.verdict != ConstraintVerdict::certified) all_certified = false;
    if (c.witness && !c.witness->atoms.empty()) any_witness = true;
  }
  if (!report.constraints.empty() && report.constraints.size() < report.problem.m()) {
    all_certified = false;
  }
  if (all_certified && any_witness) return "contradiction";
  if (all_certified) return "convex";
  if (any_witness) return "not convex";
  return "inconclusive";
}

std::string serialize_report(const Report& r) {
  const bool timings = r.include_timings;
  Json doc;
  doc["schema"] = kReportSchema;
  doc["mode"] = r.mode;
  doc["verdict"] = r.verdict;
  doc["summary"] = r.summary;
  doc["exit_code"] = r.exit_code;

  Json problem;
  problem["n"] = r.problem.n;
  problem["vars"] = r.problem.n > 0 ? (r.problem.names.empty()
                                           ? default_variable_names(r.problem.space())
                                           : r.problem.names)
                                    : std::vector<std::string>{};
  Json cons = Json::array();
  for (const auto& g : r.problem.constraints) {
    cons.push_back(to_string(g, problem["vars"].get<std::vector<std::string>>()));
  }
  problem["constraints"] = std::move(cons);
  doc["problem"] = std::move(problem);

  const auto& p = r.parameters;
  Json params;
  params["degree"] = p.degree;
  params["max_degree"] = p.max_degree;
  params["order"] = p.order;
  params["max_order"] = p.max_order;
  Json eps = Json::array();
  for (double e : p.epsilons) eps.push_back(number(e));
  params["epsilons"] = std::move(eps);
  params["ball"] = optional_number(p.ball);
  params["stengle"] = p.stengle;
  params["stengle_p"] = p.stengle_p;
  params["archimedean"] = optional_number(p.archimedean);
  params["seed"] = p.seed;
  params["tol_feas"] = number(p.tol_feas);
  params["tol_residual"] = number(p.tol_residual);
  params["tol_eigenvalue"] = number(p.tol_eigenvalue);
  params["solver_tol"] = number(p.solver_tol);
  params["jobs"] = p.jobs;
  doc["parameters"] = std::move(params);

  Json constraints = Json::array();
  for (const auto& c : r.constraints) {
    Json cj;
    cj["j"] = c.j + 1;
    cj["verdict"] = to_string(c.verdict);
    cj["note"] = c.note;
    cj["nonconvexity_signal"] = c.nonconvexity_signal;
    Json attempts = Json::array();
    for (const auto& a : c.attempts) attempts.push_back(attempt_json(a, timings));
    cj["attempts"] = std::move(attempts);
    cj["certificate"] = c.certificate ? qmodule_json(*c.certificate) : Json(nullptr);
    cj["stengle_certificate"] =
        c.stengle_certificate ? stengle_json(*c.stengle_certificate) : Json(nullptr);
    cj["witness"] = c.witness ? witness_json(*c.witness) : Json(nullptr);
    constraints.push_back(std::move(cj));
  }
  doc["constraints"] = std::move(constraints);

  if (r.archimedean) {
    const auto& a = *r.archimedean;
    Json aj;
    aj["M"] = number(a.radius_squared);
    aj["degree"] = a.degree;
    aj["status"] = a.status;
    aj["message"] = a.message;
    aj["solver"] = solver_json(a.solver, timings);
    aj["certificate"] = a.certificate ? archimedean_cert_json(*a.certificate) : Json(nullptr);
    doc["archimedean"] = std::move(aj);
  } else {
    doc["archimedean"] = nullptr;
  }
  doc["timings"] = timings;
  return doc.dump(2) + "\n";
}

Report parse_report(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 1, e.byte);
  }
  try {
    if (doc.at("schema").get<std::string>() != kReportSchema) {
      throw std::runtime_error("unsupported schema");
    }
    Report r;
    r.mode = doc.at("mode").get<std::string>();
    r.verdict = doc.at("verdict").get<std::string>();
    r.summary = doc.at("summary").get<std::string>();
    r.exit_code = doc.at("exit_code").get<int>();
    r.include_timings = doc.value("timings", false);

    const Json& pj = doc.at("problem");
    r.problem.n = pj.at("n").get<std::size_t>();
    r.problem.names = pj.at("vars").get<std::vector<std::string>>();
    for (const auto& g : pj.at("constraints")) {
      r.problem.constraints.push_back(
          parse_polynomial(g.get<std::string>(), r.problem.space(), r.problem.names));
    }

    const Json& params = doc.at("parameters");
    auto& p = r.parameters;
    p.degree = params.at("degree").get<unsigned>();
    p.max_degree = params.at("max_degree").get<unsigned>();
    p.order = params.at("order").get<unsigned>();
    p.max_order = params.at("max_order").get<unsigned>();
    for (const auto& e : params.at("epsilons")) p.epsilons.push_back(to_number(e));
    if (!params.at("ball").is_null()) p.ball = to_number(params["ball"]);
    p.stengle = params.at("stengle").get<bool>();
    p.stengle_p = params.at("stengle_p").get<unsigned>();
    if (!params.at("archimedean").is_null()) p.archimedean = to_number(params["archimedean"]);
    p.seed = params.at("seed").get<std::uint64_t>();
    p.tol_feas = to_number(params.at("tol_feas"));
    p.tol_residual = to_number(params.at("tol_residual"));
    p.tol_eigenvalue = to_number(params.at("tol_eigenvalue"));
    p.solver_tol = to_number(params.at("solver_tol"));
    p.jobs = params.at("jobs").get<unsigned>();

    const VariableSpace pair = VariableSpace::pair(std::max<std::size_t>(1, r.problem.n));
    for (const auto& cj : doc.at("constraints")) {
      ConstraintReport c;
      c.j = cj.at("j").get<std::size_t>() - 1;
      c.verdict = verdict_from(cj.at("verdict").get<std::string>());
      c.note = cj.at("note").get<std::string>();
      c.nonconvexity_signal = cj.at("nonconvexity_signal").get<bool>();
      for (const auto& a : cj.at("attempts")) c.attempts.push_back(attempt_from(a));
      if (!cj.at("certificate").is_null()) c.certificate = qmodule_from(cj["certificate"], pair);
      if (!cj.at("stengle_certificate").is_null()) {
        c.stengle_certificate = stengle_from(cj["stengle_certificate"], pair);
      }
      if (!cj.at("witness").is_null()) c.witness = witness_from(cj["witness"]);
      r.constraints.push_back(std::move(c));
    }

    if (!doc.at("archimedean").is_null()) {
      const Json& aj = doc["archimedean"];
      ArchimedeanRecord a;
      a.radius_squared = to_number(aj.at("M"));
      a.degree = aj.at("degree").get<unsigned>();
      a.status = aj.at("status").get<std::string>();
      a.message = aj.at("message").get<std::string>();
      a.solver = solver_from(aj.at("solver"));
      if (!aj.at("certificate").is_null()) {
        a.certificate = archimedean_cert_from(aj["certificate"], r.problem.space());
      }
      r.archimedean = std::move(a);
    }
    return r;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what(), 1, 1);
  }
}

}  // namespace convexcert
