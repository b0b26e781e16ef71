#include "convexcert/sos_certify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "convexcert/errors.hpp"

namespace convexcert {
namespace {

struct PendingBlock {
  SosTerm term;
  Polynomial effective;  // what multiplies basis^T G basis inside the identity
};

GramSdp assemble(std::vector<PendingBlock> blocks, Polynomial target) {
  std::set<Exponent, GradedLexLess> monomials;
  for (const auto& [e, c] : target.terms()) monomials.insert(e);
  for (const auto& blk : blocks) {
    const auto& b = blk.term.basis.elements;
    for (std::size_t a = 0; a < b.size(); ++a) {
      for (std::size_t c = a; c < b.size(); ++c) {
        const Exponent ab = exponent_sum(b[a], b[c]);
        for (const auto& [g, w] : blk.effective.terms()) monomials.insert(exponent_sum(ab, g));
      }
    }
  }

  GramSdp out{SdpProblem{}, {}, target};
  std::map<Exponent, std::size_t, GradedLexLess> row_of;
  for (const auto& e : monomials) {
    row_of.emplace(e, out.problem.add_equality(target.coefficient(e)));
  }
  for (auto& blk : blocks) {
    const auto& b = blk.term.basis.elements;
    const std::size_t k = out.problem.add_block(b.size());
    for (std::size_t a = 0; a < b.size(); ++a) {
      for (std::size_t c = a; c < b.size(); ++c) {
        const Exponent ab = exponent_sum(b[a], b[c]);
        const double mult = a == c ? 1.0 : 2.0;
        for (const auto& [g, w] : blk.effective.terms()) {
          out.problem.coefficient(row_of.at(exponent_sum(ab, g)), k).add_linear(a, c, mult * w);
        }
      }
    }
    out.terms.push_back(std::move(blk.term));
  }
  return out;
}

unsigned clipped(unsigned d, unsigned h) { return d >= h ? d - h : 0u; }

void fill_grams(GramSdp& g, const SdpSolution& sol) {
  for (std::size_t k = 0; k < g.terms.size(); ++k) {
    g.terms[k].gram = 0.5 * (sol.X[k] + sol.X[k].transpose());
  }
}

double relative_min_eigenvalue(const Eigen::MatrixXd& g) {
  if (g.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (g + g.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  return norm > 0 ? lmin / norm : 0.0;
}

// Checks Gram symmetry and PSD for each term; returns the worst relative
// eigenvalue and appends problems to `message`.
double check_grams(const std::vector<const SosTerm*>& terms, const VerifyOptions& opt,
                   bool& ok, std::string& message) {
  double worst = std::numeric_limits<double>::infinity();
  ok = true;
  for (const SosTerm* t : terms) {
    const auto n = static_cast<Eigen::Index>(t->basis.size());
    if (t->gram.rows() != n || t->gram.cols() != n) {
      ok = false;
      message += t->label + ": Gram size does not match its basis; ";
      continue;
    }
    if (n == 0) continue;
    const double scale = std::max(1e-300, t->gram.cwiseAbs().maxCoeff());
    if ((t->gram - t->gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      ok = false;
      message += t->label + ": Gram matrix is not symmetric; ";
    }
    const double rel = relative_min_eigenvalue(t->gram);
    worst = std::min(worst, rel);
    if (rel < -opt.tol_eigenvalue) {
      ok = false;
      message += t->label + ": Gram matrix is not PSD; ";
    }
  }
  return std::isinf(worst) ? 0.0 : worst;
}

// Sum of weight * sos for terms with the given weights; missing terms count as
// zero.
Polynomial weighted_sum(const VariableSpace& space, const std::vector<SosTerm>& terms,
                        const std::vector<Polynomial>& weights) {
  Polynomial sum(space);
  for (std::size_t k = 0; k < terms.size() && k < weights.size(); ++k) {
    sum = add(sum, mul(weights[k], terms[k].sos()));
  }
  return sum;
}

Polynomial subset_product(const std::vector<Polynomial>& lifted, unsigned mask,
                          const VariableSpace& space) {
  Polynomial prod = Polynomial::constant(space, 1.0);
  for (std::size_t l = 0; l < lifted.size(); ++l) {
    if (mask & (1u << l)) prod = mul(prod, lifted[l]);
  }
  return prod;
}

std::string subset_label(unsigned mask, std::size_t m) {
  if (mask == 0) return "{}";
  std::string s = "{";
  bool first = true;
  for (std::size_t l = 0; l < 2 * m; ++l) {
    if (!(mask & (1u << l))) continue;
    if (!first) s += ",";
    first = false;
    s += "g" + std::to_string(l % m + 1) + (l < m ? "(x)" : "(y)");
  }
  return s + "}";
}

// Subsets of {0..count-1} by increasing cardinality, then increasing mask.
std::vector<unsigned> ordered_subsets(std::size_t count) {
  std::vector<unsigned> masks;
  for (unsigned mask = 0; mask < (1u << count); ++mask) masks.push_back(mask);
  std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    return std::popcount(a) < std::popcount(b);
  });
  return masks;
}

void check_index(const ProblemSpec& spec, std::size_t j) {
  spec.validate();
  if (j >= spec.m()) throw StructuralError("constraint index out of range");
}

template <class Cert>
void classify(CertifyOutcome<Cert>& out, const SdpSolution& sol, unsigned degree) {
  switch (sol.status) {
    case SdpStatus::infeasible:
      out.status = CertifyStatus::no_certificate;
      out.message = "no certificate at degree " + std::to_string(degree);
      break;
    case SdpStatus::unbounded:
      out.status = CertifyStatus::inconclusive;
      out.message = "solver reported an unbounded feasibility problem";
      break;
    default:
      break;
  }
}

template <class Cert>
void finish_verification(CertifyOutcome<Cert>& out, const SdpSolution& sol) {
  if (out.verification.accepted) {
    out.status = CertifyStatus::certified;
    out.message = "certificate verified";
  } else {
    out.status = CertifyStatus::inconclusive;
    out.message = (sol.status == SdpStatus::stalled ? "solver stalled (" + sol.diagnostic + "); "
                                                    : std::string()) +
                  "recovered identity failed verification: " + out.verification.message;
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

Polynomial SosTerm::sos() const {
  Polynomial p(basis.space);
  const auto n = basis.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      const double v = gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
      if (v != 0.0) p.add_term(exponent_sum(basis.elements[a], basis.elements[c]), v);
    }
  }
  return p;
}

std::vector<Polynomial> lifted_constraints(const ProblemSpec& spec) {
  std::vector<Polynomial> out;
  for (const auto& g : spec.constraints) out.push_back(lift(g, Side::x));
  for (const auto& g : spec.constraints) out.push_back(lift(g, Side::y));
  return out;
}

std::string to_string(CertifyStatus status) {
  switch (status) {
    case CertifyStatus::certified:
      return "certified";
    case CertifyStatus::no_certificate:
      return "no_certificate";
    case CertifyStatus::inconclusive:
      return "inconclusive";
    case CertifyStatus::refused:
      return "refused";
  }
  return "unknown";
}

GramSdp build_qmodule_sdp(const ProblemSpec& spec, std::size_t j, unsigned degree, double epsilon) {
  check_index(spec, j);
  if (epsilon < 0) throw StructuralError("epsilon must be nonnegative");
  const Polynomial& gj = spec.constraints[j];
  if (degree < half_degree(gj)) {
    throw StructuralError("degree bound " + std::to_string(degree) +
                          " cannot represent g" + std::to_string(j + 1) + "((x+y)/2) of degree " +
                          std::to_string(gj.degree()));
  }
  const VariableSpace pair = spec.space().lifted_space();
  const Polynomial target = add(midpoint_substitute(gj), Polynomial::constant(pair, epsilon));
  const auto lifted = lifted_constraints(spec);
  const std::size_t m = spec.m();

  std::vector<PendingBlock> blocks;
  const Polynomial one = Polynomial::constant(pair, 1.0);
  blocks.push_back({{"sigma0", one, basis_enumerate(pair, degree), {}}, one});
  for (std::size_t l = 0; l < 2 * m; ++l) {
    const std::size_t k = l % m;
    const unsigned dk = clipped(degree, half_degree(spec.constraints[k]));
    const std::string label = (l < m ? "sigma" : "psi") + std::to_string(k + 1);
    blocks.push_back({{label, lifted[l], basis_enumerate(pair, dk), {}}, lifted[l]});
  }
  return assemble(std::move(blocks), target);
}

GramSdp build_stengle_sdp(const ProblemSpec& spec, std::size_t j, unsigned degree, unsigned p) {
  check_index(spec, j);
  if (p == 0) throw StructuralError("Stengle exponent p must be positive");
  const VariableSpace pair = spec.space().lifted_space();
  const Polynomial f = midpoint_substitute(spec.constraints[j]);
  const auto lifted = lifted_constraints(spec);
  const std::size_t m = spec.m();
  const Polynomial minus_one = Polynomial::constant(pair, -1.0);

  std::vector<PendingBlock> sigma_blocks, h_blocks;
  for (unsigned mask : ordered_subsets(2 * m)) {
    const Polynomial weight = subset_product(lifted, mask, pair);
    if (weight.degree() > 2 * degree) continue;
    const unsigned dJ = (2 * degree - weight.degree()) / 2;
    const MonomialBasis basis = basis_enumerate(pair, dJ);
    const std::string label = subset_label(mask, m);
    sigma_blocks.push_back({{"sigma" + label, weight, basis, {}}, mul(f, weight)});
    h_blocks.push_back({{"h" + label, weight, basis, {}}, mul(minus_one, weight)});
  }
  std::vector<PendingBlock> blocks = std::move(sigma_blocks);
  for (auto& b : h_blocks) blocks.push_back(std::move(b));
  return assemble(std::move(blocks), power(f, 2 * p));
}

GramSdp build_archimedean_sdp(const ProblemSpec& spec, double radius_squared, unsigned degree) {
  spec.validate();
  if (!(radius_squared > 0)) throw StructuralError("M must be positive");
  if (degree < 1) throw StructuralError("Archimedean check needs degree >= 1");
  const VariableSpace base = spec.space();
  Polynomial target = Polynomial::constant(base, radius_squared);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const Polynomial xi = Polynomial::variable(base, i);
    target = sub(target, mul(xi, xi));
  }
  const Polynomial one = Polynomial::constant(base, 1.0);
  std::vector<PendingBlock> blocks;
  blocks.push_back({{"sigma0", one, basis_enumerate(base, degree), {}}, one});
  for (std::size_t k = 0; k < spec.m(); ++k) {
    const unsigned dk = clipped(degree, half_degree(spec.constraints[k]));
    blocks.push_back({{"sigma" + std::to_string(k + 1), spec.constraints[k],
                       basis_enumerate(base, dk), {}},
                      spec.constraints[k]});
  }
  return assemble(std::move(blocks), target);
}

VerificationReport verify_certificate(const QuadraticModuleCertificate& cert,
                                      const ProblemSpec& spec, const VerifyOptions& options) {
  VerificationReport r;
  try {
    if (cert.j >= spec.m()) {
      r.message = "constraint index out of range";
      return r;
    }
    const std::size_t m = spec.m();
    const VariableSpace pair = spec.space().lifted_space();
    if (cert.sigma.size() != m || cert.psi.size() != m) {
      r.message += "certificate has " + std::to_string(cert.sigma.size()) + "/" +
                   std::to_string(cert.psi.size()) + " multiplier terms for m = " +
                   std::to_string(m) + " (missing terms count as zero); ";
    }
    std::vector<Polynomial> wx, wy;
    for (const auto& g : spec.constraints) {
      wx.push_back(lift(g, Side::x));
      wy.push_back(lift(g, Side::y));
    }
    const Polynomial lhs =
        add(midpoint_substitute(spec.constraints[cert.j]), Polynomial::constant(pair, cert.epsilon));
    Polynomial rhs(pair);
    if (cert.sigma0.basis.size() > 0) rhs = add(rhs, cert.sigma0.sos());
    rhs = add(rhs, weighted_sum(pair, cert.sigma, wx));
    rhs = add(rhs, weighted_sum(pair, cert.psi, wy));
    r.residual = coeff_linf_distance(lhs, rhs);
    r.identity_holds = r.residual <= options.tol_residual;
    if (!r.identity_holds) r.message += "identity residual exceeds tolerance; ";

    std::vector<const SosTerm*> terms{&cert.sigma0};
    for (const auto& t : cert.sigma) terms.push_back(&t);
    for (const auto& t : cert.psi) terms.push_back(&t);
    r.min_gram_eigenvalue = check_grams(terms, options, r.grams_psd, r.message);
    r.accepted = r.identity_holds && r.grams_psd;
  } catch (const std::exception& e) {
    r.accepted = false;
    r.message += std::string("malformed certificate: ") + e.what();
  }
  return r;
}

VerificationReport verify_certificate(const PreorderingCertificate& cert, const ProblemSpec& spec,
                                      const VerifyOptions& options) {
  VerificationReport r;
  try {
    if (cert.j >= spec.m()) {
      r.message = "constraint index out of range";
      return r;
    }
    if (cert.sigma_terms.size() != cert.sigma_subsets.size() ||
        cert.h_terms.size() != cert.h_subsets.size()) {
      r.message = "subset list does not match the term list";
      return r;
    }
    const VariableSpace pair = spec.space().lifted_space();
    const auto lifted = lifted_constraints(spec);
    const unsigned limit = 1u << lifted.size();
    std::vector<Polynomial> sw, hw;
    for (unsigned mask : cert.sigma_subsets) {
      if (mask >= limit) throw StructuralError("subset refers to a missing constraint");
      sw.push_back(subset_product(lifted, mask, pair));
    }
    for (unsigned mask : cert.h_subsets) {
      if (mask >= limit) throw StructuralError("subset refers to a missing constraint");
      hw.push_back(subset_product(lifted, mask, pair));
    }
    const Polynomial sigma = weighted_sum(pair, cert.sigma_terms, sw);
    const Polynomial h = weighted_sum(pair, cert.h_terms, hw);
    const Polynomial f = midpoint_substitute(spec.constraints[cert.j]);
    r.residual = coeff_linf_distance(mul(sigma, f), add(power(f, 2 * cert.p), h));
    r.identity_holds = r.residual <= options.tol_residual;
    if (!r.identity_holds) r.message += "identity residual exceeds tolerance; ";

    std::vector<const SosTerm*> terms;
    for (const auto& t : cert.sigma_terms) terms.push_back(&t);
    for (const auto& t : cert.h_terms) terms.push_back(&t);
    r.min_gram_eigenvalue = check_grams(terms, options, r.grams_psd, r.message);
    r.accepted = r.identity_holds && r.grams_psd && cert.p >= 1;
  } catch (const std::exception& e) {
    r.accepted = false;
    r.message += std::string("malformed certificate: ") + e.what();
  }
  return r;
}

VerificationReport verify_certificate(const ArchimedeanCertificate& cert, const ProblemSpec& spec,
                                      const VerifyOptions& options) {
  VerificationReport r;
  try {
    const VariableSpace base = spec.space();
    Polynomial lhs = Polynomial::constant(base, cert.radius_squared);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const Polynomial xi = Polynomial::variable(base, i);
      lhs = sub(lhs, mul(xi, xi));
    }
    Polynomial rhs(base);
    if (cert.sigma0.basis.size() > 0) rhs = add(rhs, cert.sigma0.sos());
    rhs = add(rhs, weighted_sum(base, cert.sigma, spec.constraints));
    r.residual = coeff_linf_distance(lhs, rhs);
    r.identity_holds = r.residual <= options.tol_residual;
    if (!r.identity_holds) r.message += "identity residual exceeds tolerance; ";
    std::vector<const SosTerm*> terms{&cert.sigma0};
    for (const auto& t : cert.sigma) terms.push_back(&t);
    r.min_gram_eigenvalue = check_grams(terms, options, r.grams_psd, r.message);
    r.accepted = r.identity_holds && r.grams_psd;
  } catch (const std::exception& e) {
    r.accepted = false;
    r.message += std::string("malformed certificate: ") + e.what();
  }
  return r;
}

CertifyOutcome<QuadraticModuleCertificate> certify_sufficient(const ProblemSpec& spec,
                                                              std::size_t j, unsigned degree,
                                                              double epsilon,
                                                              const CertifyOptions& options) {
  GramSdp g = build_qmodule_sdp(spec, j, degree, epsilon);
  if (options.on_problem) {
    options.on_problem("qmodule_g" + std::to_string(j + 1) + "_d" + std::to_string(degree), g.problem);
  }
  const auto start = std::chrono::steady_clock::now();
  const SdpSolution sol = feasibility(g.problem, options.solver);

  CertifyOutcome<QuadraticModuleCertificate> out;
  out.solver = summarize(g.problem, sol, seconds_since(start));
  classify(out, sol, degree);
  if (sol.status == SdpStatus::infeasible || sol.status == SdpStatus::unbounded) return out;

  fill_grams(g, sol);
  QuadraticModuleCertificate cert;
  cert.j = j;
  cert.degree = degree;
  cert.epsilon = epsilon;
  cert.sigma0 = g.terms[0];
  const std::size_t m = spec.m();
  for (std::size_t k = 0; k < m; ++k) {
    cert.sigma.push_back(g.terms[1 + k]);
    cert.psi.push_back(g.terms[1 + m + k]);
  }
  out.verification = verify_certificate(cert, spec, options.verify);
  cert.residual = out.verification.residual;
  cert.min_gram_eigenvalue = out.verification.min_gram_eigenvalue;
  finish_verification(out, sol);
  if (out.status == CertifyStatus::certified) out.certificate = std::move(cert);
  return out;
}

CertifyOutcome<PreorderingCertificate> certify_stengle(const ProblemSpec& spec, std::size_t j,
                                                       unsigned degree, unsigned p,
                                                       const CertifyOptions& options) {
  CertifyOutcome<PreorderingCertificate> out;
  check_index(spec, j);
  if (spec.m() > options.stengle_max_m) {
    out.status = CertifyStatus::refused;
    out.message = "preordering certificate needs 2^(2m+1) SOS blocks; m = " +
                  std::to_string(spec.m()) + " exceeds the limit of " +
                  std::to_string(options.stengle_max_m) +
                  " (use the quadratic-module certificate instead)";
    return out;
  }
  GramSdp g = build_stengle_sdp(spec, j, degree, p);
  if (options.on_problem) {
    options.on_problem("stengle_g" + std::to_string(j + 1) + "_d" + std::to_string(degree) + "_p" +
                           std::to_string(p),
                       g.problem);
  }
  const auto start = std::chrono::steady_clock::now();
  const SdpSolution sol = feasibility(g.problem, options.solver);
  out.solver = summarize(g.problem, sol, seconds_since(start));
  classify(out, sol, degree);
  if (sol.status == SdpStatus::infeasible || sol.status == SdpStatus::unbounded) return out;

  fill_grams(g, sol);
  PreorderingCertificate cert;
  cert.j = j;
  cert.p = p;
  cert.degree = degree;
  // assemble() keeps block order: all sigma subsets, then all h subsets
  const auto subsets = ordered_subsets(2 * spec.m());
  const Polynomial one = Polynomial::constant(spec.space().lifted_space(), 1.0);
  std::vector<unsigned> used;
  const auto lifted = lifted_constraints(spec);
  for (unsigned mask : subsets) {
    if (subset_product(lifted, mask, one.space()).degree() <= 2 * degree) used.push_back(mask);
  }
  const std::size_t half = g.terms.size() / 2;
  for (std::size_t k = 0; k < half; ++k) {
    cert.sigma_terms.push_back(g.terms[k]);
    cert.sigma_subsets.push_back(used[k]);
    cert.h_terms.push_back(g.terms[half + k]);
    cert.h_subsets.push_back(used[k]);
  }
  out.verification = verify_certificate(cert, spec, options.verify);
  cert.residual = out.verification.residual;
  cert.min_gram_eigenvalue = out.verification.min_gram_eigenvalue;
  finish_verification(out, sol);
  if (out.status == CertifyStatus::certified) out.certificate = std::move(cert);
  return out;
}

CertifyOutcome<ArchimedeanCertificate> archimedean_check(const ProblemSpec& spec,
                                                         double radius_squared, unsigned degree,
                                                         const CertifyOptions& options) {
  GramSdp g = build_archimedean_sdp(spec, radius_squared, degree);
  if (options.on_problem) options.on_problem("archimedean_d" + std::to_string(degree), g.problem);
  const auto start = std::chrono::steady_clock::now();
  const SdpSolution sol = feasibility(g.problem, options.solver);
  CertifyOutcome<ArchimedeanCertificate> out;
  out.solver = summarize(g.problem, sol, seconds_since(start));
  classify(out, sol, degree);
  if (sol.status == SdpStatus::infeasible || sol.status == SdpStatus::unbounded) return out;

  fill_grams(g, sol);
  ArchimedeanCertificate cert;
  cert.radius_squared = radius_squared;
  cert.degree = degree;
  cert.sigma0 = g.terms[0];
  for (std::size_t k = 0; k < spec.m(); ++k) cert.sigma.push_back(g.terms[1 + k]);
  out.verification = verify_certificate(cert, spec, options.verify);
  cert.residual = out.verification.residual;
  cert.min_gram_eigenvalue = out.verification.min_gram_eigenvalue;
  finish_verification(out, sol);
  if (out.status == CertifyStatus::certified) {
    out.message = "quadratic module is Archimedean: epsilon-certificates are complete for compact convex K";
    out.certificate = std::move(cert);
  }
  return out;
}

}  // namespace convexcert
