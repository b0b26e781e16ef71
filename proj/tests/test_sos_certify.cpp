#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "convexcert/errors.hpp"
#include "convexcert/sos_certify.hpp"

using namespace convexcert;

namespace {

ProblemSpec spec_of(const char* text) { return parse_problem(text); }

const char* kInterval = "vars: x1\ng: 1 - x1^2\n";
const char* kDisk = "vars: x1 x2\ng: 1 - x1^2 - x2^2\n";
const char* kHalf = "vars: x1\ng: x1\n";
const char* kParabola = "vars: x1 x2\ng: x1^2 - x2\ng: 1 - x1^2\ng: 1 - x2^2\n";
const char* kBox = "vars: x1 x2\ng: 1 - x1^2\ng: 1 - x2^2\n";

double scalar_gram(const SosTerm& t) {
  EXPECT_EQ(t.gram.rows(), 1);
  return t.gram.rows() == 1 ? t.gram(0, 0) : 0.0;
}

}  // namespace

TEST(QModuleSdp, IntervalLayout) {
  const GramSdp g = build_qmodule_sdp(spec_of(kInterval), 0, 1, 0.0);
  EXPECT_EQ(g.problem.blocks, (std::vector<std::size_t>{3, 1, 1}));
  EXPECT_EQ(g.problem.equalities.size(), 6u);
  ASSERT_EQ(g.terms.size(), 3u);
  EXPECT_EQ(g.terms[0].basis.elements, (std::vector<Exponent>{{0, 0}, {1, 0}, {0, 1}}));
}

TEST(QModuleSdp, BlockCountIsTwoMPlusOne) {
  const GramSdp g = build_qmodule_sdp(spec_of(kParabola), 0, 2, 0.0);
  EXPECT_EQ(g.problem.blocks.size(), 7u);
  // monomials of degree <= 4 in 4 variables
  EXPECT_EQ(g.problem.equalities.size(), 70u);
}

TEST(QModuleSdp, DegreeTooSmall) {
  EXPECT_THROW(build_qmodule_sdp(spec_of(kInterval), 0, 0, 0.0), StructuralError);
  EXPECT_THROW(build_qmodule_sdp(spec_of(kInterval), 1, 1, 0.0), StructuralError);
  EXPECT_THROW(build_qmodule_sdp(spec_of(kInterval), 0, 1, -1.0), StructuralError);
}

TEST(Verify, ExactIntervalIdentity) {
  const ProblemSpec spec = spec_of(kInterval);
  const VariableSpace L = VariableSpace::pair(1);
  QuadraticModuleCertificate cert;
  cert.j = 0;
  cert.degree = 1;
  cert.sigma0.basis = basis_enumerate(L, 1);
  cert.sigma0.weight = Polynomial::constant(L, 1.0);
  Eigen::Vector3d v(0.0, 0.5, -0.5);  // (x1 - y1) / 2
  cert.sigma0.gram = v * v.transpose();
  for (Side side : {Side::x, Side::y}) {
    SosTerm t;
    t.basis = basis_enumerate(L, 0);
    t.weight = lift(spec.constraints[0], side);
    t.gram = Eigen::MatrixXd::Constant(1, 1, 0.5);
    (side == Side::x ? cert.sigma : cert.psi).push_back(t);
  }
  const VerificationReport r = verify_certificate(cert, spec);
  EXPECT_TRUE(r.accepted) << r.message;
  EXPECT_LE(r.residual, 1e-12);

  QuadraticModuleCertificate bent = cert;
  bent.sigma0.gram(1, 1) += 1e-3;
  const VerificationReport rb = verify_certificate(bent, spec);
  EXPECT_FALSE(rb.accepted);
  EXPECT_GT(rb.residual, 1e-4);

  QuadraticModuleCertificate indefinite = cert;
  indefinite.sigma[0].gram(0, 0) = -0.5;
  indefinite.psi[0].gram(0, 0) = 1.5;
  const VerificationReport ri = verify_certificate(indefinite, spec);
  EXPECT_FALSE(ri.grams_psd);
  EXPECT_FALSE(ri.accepted);
}

TEST(Verify, EmptyCertificateReportsMismatch) {
  const ProblemSpec spec = spec_of(kInterval);
  QuadraticModuleCertificate empty;
  empty.epsilon = 0.25;
  VerificationReport r;
  EXPECT_NO_THROW(r = verify_certificate(empty, spec));
  EXPECT_FALSE(r.accepted);
  EXPECT_FALSE(r.message.empty());

  PreorderingCertificate pe;
  pe.j = 5;
  EXPECT_NO_THROW(r = verify_certificate(pe, spec));
  EXPECT_FALSE(r.accepted);
}

TEST(CertifySufficient, Interval) {
  const ProblemSpec spec = spec_of(kInterval);
  const auto out = certify_sufficient(spec, 0, 1, 0.0);
  ASSERT_EQ(out.status, CertifyStatus::certified) << out.message;
  ASSERT_TRUE(out.certificate);
  EXPECT_LE(out.certificate->residual, 1e-6);
  EXPECT_GE(out.certificate->min_gram_eigenvalue, -1e-8);
  EXPECT_TRUE(verify_certificate(*out.certificate, spec).accepted);
}

TEST(CertifySufficient, Disk) {
  const ProblemSpec spec = spec_of(kDisk);
  const auto out = certify_sufficient(spec, 0, 1, 0.0);
  ASSERT_EQ(out.status, CertifyStatus::certified) << out.message;
  EXPECT_LE(out.certificate->residual, 1e-6);
  EXPECT_TRUE(verify_certificate(*out.certificate, spec).accepted);
}

TEST(CertifySufficient, HalfSpace) {
  const auto out = certify_sufficient(spec_of(kHalf), 0, 1, 0.0);
  ASSERT_EQ(out.status, CertifyStatus::certified) << out.message;
  const auto& c = *out.certificate;
  EXPECT_LE(c.sigma0.sos().terms().empty() ? 0.0 : c.sigma0.gram.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(scalar_gram(c.sigma[0]), 0.5, 1e-4);
  EXPECT_NEAR(scalar_gram(c.psi[0]), 0.5, 1e-4);
}

TEST(CertifySufficient, ParabolaHasNoCertificate) {
  const ProblemSpec spec = spec_of(kParabola);
  for (unsigned d = 1; d <= 3; ++d) {
    const auto out = certify_sufficient(spec, 0, d, 0.0);
    EXPECT_NE(out.status, CertifyStatus::certified) << "d = " << d;
    EXPECT_FALSE(out.certificate.has_value());
  }
  EXPECT_EQ(certify_sufficient(spec, 0, 1, 0.0).status, CertifyStatus::no_certificate);
}

TEST(CertifySufficient, MonotoneInDegreeAndEpsilon) {
  for (const char* text : {kInterval, kDisk, kHalf}) {
    const ProblemSpec spec = spec_of(text);
    for (double eps : {0.0, 1e-4, 1e-2}) {
      EXPECT_EQ(certify_sufficient(spec, 0, 1, eps).status, CertifyStatus::certified);
      EXPECT_EQ(certify_sufficient(spec, 0, 2, eps).status, CertifyStatus::certified);
    }
  }
}

TEST(CertifySufficient, ProblemCallbackSeesSdp) {
  CertifyOptions opt;
  std::vector<std::string> names;
  opt.on_problem = [&](const std::string& name, const SdpProblem&) { names.push_back(name); };
  certify_sufficient(spec_of(kInterval), 0, 1, 0.0, opt);
  EXPECT_EQ(names, (std::vector<std::string>{"qmodule_g1_d1"}));
}

TEST(Stengle, IntervalCertified) {
  const ProblemSpec spec = spec_of(kInterval);
  const auto out = certify_stengle(spec, 0, 2, 1);
  ASSERT_EQ(out.status, CertifyStatus::certified) << out.message;
  ASSERT_TRUE(out.certificate);
  EXPECT_LE(out.certificate->residual, 1e-6);
  EXPECT_EQ(out.certificate->sigma_subsets.size(), out.certificate->sigma_terms.size());
  EXPECT_EQ(out.certificate->h_subsets.size(), out.certificate->h_terms.size());
  EXPECT_TRUE(verify_certificate(*out.certificate, spec).accepted);
}

TEST(Stengle, HandBuiltIdentity) {
  // sigma = g(mid) written in P(g^), h = 0
  const ProblemSpec spec = spec_of(kInterval);
  const VariableSpace L = VariableSpace::pair(1);
  PreorderingCertificate cert;
  cert.j = 0;
  cert.p = 1;
  cert.degree = 2;
  SosTerm s0;
  s0.basis = basis_enumerate(L, 1);
  s0.weight = midpoint_substitute(spec.constraints[0]);
  Eigen::Vector3d v(0.0, 0.5, -0.5);
  s0.gram = v * v.transpose();
  cert.sigma_terms.push_back(s0);
  cert.sigma_subsets.push_back(0);
  for (unsigned mask : {1u, 2u}) {
    SosTerm t;
    t.basis = basis_enumerate(L, 0);
    t.weight = midpoint_substitute(spec.constraints[0]) *
               lift(spec.constraints[0], mask == 1 ? Side::x : Side::y);
    t.gram = Eigen::MatrixXd::Constant(1, 1, 0.5);
    cert.sigma_terms.push_back(t);
    cert.sigma_subsets.push_back(mask);
  }
  const VerificationReport r = verify_certificate(cert, spec);
  EXPECT_TRUE(r.accepted) << r.message;
  EXPECT_LE(r.residual, 1e-12);
}

TEST(Stengle, RefusesLargeM) {
  const ProblemSpec spec = spec_of("vars: x1\ng: 1 - x1^2\ng: 2 - x1^2\ng: 3 - x1^2\ng: 4 - x1^2\n");
  const auto out = certify_stengle(spec, 0, 2, 1);
  EXPECT_EQ(out.status, CertifyStatus::refused);
  EXPECT_FALSE(out.message.empty());
}

TEST(Archimedean, DiskAndBox) {
  const ProblemSpec disk = spec_of(kDisk);
  const auto a = archimedean_check(disk, 1.0, 1);
  ASSERT_EQ(a.status, CertifyStatus::certified) << a.message;
  EXPECT_NEAR(scalar_gram(a.certificate->sigma[0]), 1.0, 1e-4);
  EXPECT_TRUE(verify_certificate(*a.certificate, disk).accepted);

  const ProblemSpec box = spec_of(kBox);
  const auto b = archimedean_check(box, 2.0, 1);
  ASSERT_EQ(b.status, CertifyStatus::certified) << b.message;
  EXPECT_NEAR(scalar_gram(b.certificate->sigma[0]), 1.0, 1e-4);
  EXPECT_NEAR(scalar_gram(b.certificate->sigma[1]), 1.0, 1e-4);
}

TEST(Archimedean, HalfSpaceFails) {
  const ProblemSpec half = spec_of(kHalf);
  // M - |x|^2 < 0 at x = M + 1, a point of K, so no representation exists.
  for (double M : {1.0, 4.0}) {
    const std::vector<double> pt{M + 1.0};
    EXPECT_LT(M - pt[0] * pt[0], 0.0);
    EXPECT_GE(evaluate(half.constraints[0], pt), 0.0);
    for (unsigned d = 1; d <= 3; ++d)
      EXPECT_NE(archimedean_check(half, M, d).status, CertifyStatus::certified);
  }
}

TEST(Archimedean, RejectsBadArguments) {
  EXPECT_THROW(build_archimedean_sdp(spec_of(kDisk), 0.0, 1), StructuralError);
  EXPECT_THROW(build_archimedean_sdp(spec_of(kDisk), 1.0, 0), StructuralError);
}

TEST(LiftedConstraints, Order) {
  const ProblemSpec spec = spec_of(kBox);
  const auto l = lifted_constraints(spec);
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], lift(spec.constraints[0], Side::x));
  EXPECT_EQ(l[1], lift(spec.constraints[1], Side::x));
  EXPECT_EQ(l[2], lift(spec.constraints[0], Side::y));
  EXPECT_EQ(l[3], lift(spec.constraints[1], Side::y));
}
