#pragma once

// Sum-of-squares certificates of convexity.
//
// K is convex iff it is closed under midpoints, i.e. iff every g_j((x+y)/2)
// is nonnegative on K x K. The certificates here make that nonnegativity
// checkable by polynomial expansion:
//
//  * quadratic module (sufficient):
//      g_j((x+y)/2) + eps = s0 + sum_k s_k(x,y) g_k(x) + t_k(x,y) g_k(y)
//  * preordering (necessary and sufficient for some degree bound):
//      sigma * g_j((x+y)/2) = g_j((x+y)/2)^(2p) + h,  sigma, h in P(g^)
//  * Archimedean check: M - |x|^2 = s0 + sum_k s_k(x) g_k(x)
//
// Each unknown SOS polynomial is a PSD Gram matrix over a monomial basis, so
// existence is an SDP feasibility problem. Certificates are rechecked by
// verify_certificate without trusting the solver.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "convexcert/moment.hpp"
#include "convexcert/polynomial.hpp"
#include "convexcert/problem.hpp"
#include "convexcert/sdp.hpp"

namespace convexcert {

// weight * (basis^T gram basis)
struct SosTerm {
  std::string label;
  Polynomial weight;
  MonomialBasis basis;
  Eigen::MatrixXd gram;

  Polynomial sos() const;
  Polynomial product() const { return mul(weight, sos()); }
};

struct QuadraticModuleCertificate {
  std::size_t j = 0;  // 0-based constraint index
  unsigned degree = 0;
  double epsilon = 0.0;
  SosTerm sigma0;
  std::vector<SosTerm> sigma;  // multiplies g_k(x)
  std::vector<SosTerm> psi;    // multiplies g_k(y)
  double residual = 0.0;
  double min_gram_eigenvalue = 0.0;  // relative to the Gram norm
};

// Subsets J of the lifted constraint list are bitmasks over the 2m
// constraints g_1(x)..g_m(x), g_1(y)..g_m(y).
struct PreorderingCertificate {
  std::size_t j = 0;
  unsigned p = 1;
  unsigned degree = 0;
  std::vector<SosTerm> sigma_terms;
  std::vector<unsigned> sigma_subsets;
  std::vector<SosTerm> h_terms;
  std::vector<unsigned> h_subsets;
  double residual = 0.0;
  double min_gram_eigenvalue = 0.0;
};

struct ArchimedeanCertificate {
  double radius_squared = 0.0;  // M
  unsigned degree = 0;
  SosTerm sigma0;
  std::vector<SosTerm> sigma;
  double residual = 0.0;
  double min_gram_eigenvalue = 0.0;
};

struct VerifyOptions {
  double tol_residual = 1e-6;
  double tol_eigenvalue = 1e-8;  // relative to the Gram spectral norm
};

struct VerificationReport {
  double residual = 0.0;
  double min_gram_eigenvalue = 0.0;  // min over terms of lambda_min / max(1e-300, ||G||)
  bool identity_holds = false;
  bool grams_psd = false;
  bool accepted = false;
  std::string message;
};

VerificationReport verify_certificate(const QuadraticModuleCertificate& cert,
                                      const ProblemSpec& spec, const VerifyOptions& options = {});
VerificationReport verify_certificate(const PreorderingCertificate& cert, const ProblemSpec& spec,
                                      const VerifyOptions& options = {});
VerificationReport verify_certificate(const ArchimedeanCertificate& cert, const ProblemSpec& spec,
                                      const VerifyOptions& options = {});

// An SDP whose blocks are the Gram matrices of an SOS identity.
struct GramSdp {
  SdpProblem problem;
  std::vector<SosTerm> terms;  // gram matrices left empty
  Polynomial target;
};

// Block layout: s0 over monomials of degree <= d, then s_1..s_m (weights
// g_k(x)) and t_1..t_m (weights g_k(y)) over degree <= d - ceil(deg g_k / 2),
// clipped at 0. One equality per monomial of the identity.
GramSdp build_qmodule_sdp(const ProblemSpec& spec, std::size_t j, unsigned degree, double epsilon);

GramSdp build_stengle_sdp(const ProblemSpec& spec, std::size_t j, unsigned degree, unsigned p);

GramSdp build_archimedean_sdp(const ProblemSpec& spec, double radius_squared, unsigned degree);

enum class CertifyStatus {
  certified,
  no_certificate,  // the SDP is infeasible at this degree
  inconclusive,    // solver stalled or the recovered identity failed verification
  refused,         // problem too large for the requested certificate
};

std::string to_string(CertifyStatus status);

template <class Certificate>
struct CertifyOutcome {
  CertifyStatus status = CertifyStatus::inconclusive;
  std::optional<Certificate> certificate;
  VerificationReport verification;
  SolverDiagnostics solver;
  std::string message;
};

struct CertifyOptions {
  SolverOptions solver;
  VerifyOptions verify;
  std::size_t stengle_max_m = 3;
  // Called with every SDP before it is solved (e.g. to dump it).
  std::function<void(const std::string& name, const SdpProblem&)> on_problem;
};

CertifyOutcome<QuadraticModuleCertificate> certify_sufficient(const ProblemSpec& spec,
                                                              std::size_t j, unsigned degree,
                                                              double epsilon,
                                                              const CertifyOptions& options = {});

CertifyOutcome<PreorderingCertificate> certify_stengle(const ProblemSpec& spec, std::size_t j,
                                                       unsigned degree, unsigned p,
                                                       const CertifyOptions& options = {});

CertifyOutcome<ArchimedeanCertificate> archimedean_check(const ProblemSpec& spec,
                                                         double radius_squared, unsigned degree,
                                                         const CertifyOptions& options = {});

// g_1(x)..g_m(x), g_1(y)..g_m(y)
std::vector<Polynomial> lifted_constraints(const ProblemSpec& spec);

}  // namespace convexcert
