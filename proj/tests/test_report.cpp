#include <gtest/gtest.h>

#include "convexcert/errors.hpp"
#include "convexcert/report.hpp"
#include "json.hpp"

using namespace convexcert;

namespace {

void expect_same_term(const SosTerm& a, const SosTerm& b) {
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(a.weight, b.weight);
  EXPECT_EQ(a.basis.elements, b.basis.elements);
  EXPECT_EQ(a.gram, b.gram);
}

Report sample_report() {
  Report r;
  r.mode = "analyze";
  r.problem = parse_problem("vars: u v\ng: u^2 - v\ng: 1 - u^2\ng: 1 - v^2\n");
  r.parameters.degree = 2;
  r.parameters.max_degree = 5;
  r.parameters.order = 1;
  r.parameters.max_order = 3;
  r.parameters.epsilons = {0.0, 1e-6};
  r.parameters.ball = 3.5;
  r.parameters.seed = 42;

  ConstraintReport c0;
  c0.j = 0;
  c0.verdict = ConstraintVerdict::refuted;
  Attempt a;
  a.kind = "moment";
  a.degree = 2;
  a.status = "solved";
  a.rho = -0.99999999812345678;
  a.flatness = FlatnessReport{true, false, 2, 2, 2};
  a.solver.status = "optimal";
  a.solver.iterations = 17;
  a.solver.gap = 1.2345678901234567e-9;
  a.solver.seconds = 0.25;
  c0.attempts.push_back(a);
  const auto check = validate_witness(
      {{(Eigen::VectorXd(4) << 1, 1, -1, 1).finished(), 0.5},
       {(Eigen::VectorXd(4) << -1, 1, 1, 1).finished(), 0.5}},
      r.problem, 0);
  c0.witness = check.witness;
  r.constraints.push_back(c0);

  ConstraintReport c1;
  c1.j = 1;
  c1.verdict = ConstraintVerdict::certified;
  const auto out = certify_sufficient(r.problem, 1, 1, 0.0);
  c1.certificate = out.certificate;
  Attempt q;
  q.kind = "quadratic_module";
  q.degree = 1;
  q.epsilon = 0.0;
  q.status = "certified";
  q.solver = out.solver;
  c1.attempts.push_back(q);
  r.constraints.push_back(c1);

  ConstraintReport c2;
  c2.j = 2;
  c2.verdict = ConstraintVerdict::skipped;
  c2.note = "skipped after a refutation";
  r.constraints.push_back(c2);

  ArchimedeanRecord ar;
  ar.radius_squared = 2.0;
  ar.degree = 1;
  ar.status = "certified";
  ar.certificate = archimedean_check(r.problem, 2.0, 1).certificate;
  r.archimedean = ar;

  r.verdict = overall_verdict(r);
  r.summary = "witness found";
  r.exit_code = 0;
  return r;
}

}  // namespace

TEST(Report, EmptyReport) {
  const Report r;
  const auto doc = nlohmann::json::parse(serialize_report(r));
  EXPECT_EQ(doc["verdict"], "inconclusive");
  EXPECT_EQ(doc["schema"], kReportSchema);
  EXPECT_TRUE(doc["constraints"].is_array());
  EXPECT_TRUE(doc["constraints"].empty());
  EXPECT_TRUE(doc["problem"]["constraints"].empty());
  EXPECT_EQ(overall_verdict(r), "inconclusive");
}

TEST(Report, CertificateDocumentHasGramAndResidual) {
  const Report r = sample_report();
  const auto doc = nlohmann::json::parse(serialize_report(r));
  const auto& cert = doc["constraints"][1]["certificate"];
  EXPECT_EQ(cert["type"], "quadratic_module");
  EXPECT_EQ(cert["j"], 2);
  EXPECT_TRUE(cert.contains("residual"));
  EXPECT_TRUE(cert["sigma0"]["gram"].is_array());
  EXPECT_EQ(doc["problem"]["constraints"][0], "-v + u^2");
}

TEST(Report, RoundTripIsIdentityOnPayload) {
  const Report r = sample_report();
  ASSERT_TRUE(r.constraints[1].certificate);
  ASSERT_TRUE(r.archimedean->certificate);
  const std::string text = serialize_report(r);
  const Report back = parse_report(text);

  EXPECT_EQ(serialize_report(back), text);
  EXPECT_EQ(back.mode, r.mode);
  EXPECT_EQ(back.verdict, r.verdict);
  EXPECT_EQ(back.exit_code, r.exit_code);
  EXPECT_EQ(back.parameters, r.parameters);
  EXPECT_EQ(back.problem.names, r.problem.names);
  EXPECT_EQ(back.problem.constraints, r.problem.constraints);
  ASSERT_EQ(back.constraints.size(), 3u);

  const Attempt& a = back.constraints[0].attempts.at(0);
  EXPECT_EQ(a.rho, r.constraints[0].attempts[0].rho);
  EXPECT_EQ(a.solver.gap, r.constraints[0].attempts[0].solver.gap);
  EXPECT_TRUE(a.flatness && a.flatness->flat && a.flatness->t == 2);
  EXPECT_EQ(a.solver.seconds, 0.0);  // timings off

  const auto& w = *back.constraints[0].witness;
  const auto& w0 = *r.constraints[0].witness;
  ASSERT_EQ(w.atoms.size(), w0.atoms.size());
  for (std::size_t i = 0; i < w.atoms.size(); ++i) {
    EXPECT_EQ(w.atoms[i].x, w0.atoms[i].x);
    EXPECT_EQ(w.atoms[i].y, w0.atoms[i].y);
    EXPECT_EQ(w.atoms[i].weight, w0.atoms[i].weight);
    EXPECT_EQ(w.atoms[i].violation, w0.atoms[i].violation);
  }

  const auto& c = *back.constraints[1].certificate;
  const auto& c0 = *r.constraints[1].certificate;
  EXPECT_EQ(c.j, c0.j);
  EXPECT_EQ(c.residual, c0.residual);
  expect_same_term(c.sigma0, c0.sigma0);
  ASSERT_EQ(c.sigma.size(), c0.sigma.size());
  for (std::size_t k = 0; k < c.sigma.size(); ++k) {
    expect_same_term(c.sigma[k], c0.sigma[k]);
    expect_same_term(c.psi[k], c0.psi[k]);
  }
  EXPECT_TRUE(verify_certificate(c, r.problem).accepted);

  EXPECT_EQ(back.constraints[2].verdict, ConstraintVerdict::skipped);
  EXPECT_EQ(back.archimedean->certificate->sigma.size(), 3u);
}

TEST(Report, StengleRoundTrip) {
  Report r;
  r.mode = "certify";
  r.problem = parse_problem("vars: x1\ng: 1 - x1^2\n");
  ConstraintReport c;
  c.verdict = ConstraintVerdict::certified;
  c.stengle_certificate = certify_stengle(r.problem, 0, 2, 1).certificate;
  ASSERT_TRUE(c.stengle_certificate);
  r.constraints.push_back(c);
  const std::string text = serialize_report(r);
  const Report back = parse_report(text);
  EXPECT_EQ(serialize_report(back), text);
  const auto& s = *back.constraints[0].stengle_certificate;
  const auto& s0 = *c.stengle_certificate;
  EXPECT_EQ(s.sigma_subsets, s0.sigma_subsets);
  EXPECT_EQ(s.h_subsets, s0.h_subsets);
  ASSERT_EQ(s.sigma_terms.size(), s0.sigma_terms.size());
  for (std::size_t i = 0; i < s.sigma_terms.size(); ++i)
    expect_same_term(s.sigma_terms[i], s0.sigma_terms[i]);
  EXPECT_TRUE(verify_certificate(s, r.problem).accepted);
}

TEST(Report, TimingsOnlyWhenRequested) {
  Report r = sample_report();
  EXPECT_EQ(serialize_report(r).find("\"seconds\""), std::string::npos);
  r.include_timings = true;
  const std::string text = serialize_report(r);
  EXPECT_NE(text.find("\"seconds\""), std::string::npos);
  EXPECT_EQ(parse_report(text).constraints[0].attempts[0].solver.seconds, 0.25);
}

TEST(Report, OverallVerdict) {
  Report r;
  r.problem = parse_problem("vars: x1\ng: 1 - x1^2\ng: 2 - x1^2\n");
  ConstraintReport c;
  c.verdict = ConstraintVerdict::certified;
  r.constraints = {c};
  EXPECT_EQ(overall_verdict(r), "inconclusive");  // one of two constraints
  c.j = 1;
  r.constraints.push_back(c);
  EXPECT_EQ(overall_verdict(r), "convex");
  r.constraints[1].witness = NonconvexityWitness{1, {WitnessAtom{}}};
  EXPECT_EQ(overall_verdict(r), "contradiction");
  r.constraints[0].verdict = ConstraintVerdict::inconclusive;
  EXPECT_EQ(overall_verdict(r), "not convex");
}

TEST(Report, ParseErrors) {
  EXPECT_THROW(parse_report("{"), ParseError);
  EXPECT_THROW(parse_report("[]"), ParseError);
  EXPECT_THROW(parse_report("{\"schema\": \"other/1\"}"), ParseError);
  std::string text = serialize_report(sample_report());
  const auto pos = text.find("\"refuted\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "\"maybe\"");
  EXPECT_THROW(parse_report(text), ParseError);
}
