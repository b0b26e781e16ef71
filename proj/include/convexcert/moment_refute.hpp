#pragma once

// Refutation of convexity through the moment relaxation
//
//   rho_js = min L_z(g_j((x+y)/2))
//            s.t. M_s(z) PSD, M_{s-v_k}(g^_k z) PSD (k = 1..2m), z_0 = 1.
//
// rho_js is a lower bound on the minimum of g_j(mid) over K x K. When
// rho_js < 0 and the moment matrix is flat, the optimal z is the moment
// vector of an atomic measure on K x K whose atoms are explicit pairs (x, y)
// with g_j((x+y)/2) < 0. Those atoms are rechecked by plain evaluation.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "convexcert/moment.hpp"
#include "convexcert/problem.hpp"
#include "convexcert/sdp.hpp"

namespace convexcert {

// v_k = ceil(deg g^_k / 2) for the lifted list g_1(x)..g_m(x), g_1(y)..g_m(y).
std::vector<unsigned> localizing_half_degrees(const ProblemSpec& spec);
// max_k v_k
unsigned relaxation_v(const ProblemSpec& spec);

// Where each moment lives inside the SDP: block 0 is M_s(z) and moment
// moments.elements[i] is read from block 0 at canonical[i].
struct MomentLayout {
  unsigned order = 0;
  MonomialBasis basis;    // degree <= s, indexes M_s(z)
  MonomialBasis moments;  // degree <= 2s
  std::vector<std::pair<std::size_t, std::size_t>> canonical;
  std::vector<unsigned> localizing_orders;  // s - v_k per lifted constraint
};

struct MomentSdp {
  SdpProblem problem;
  MomentLayout layout;
  Polynomial objective;  // g_j((x+y)/2)
};

// Throws StructuralError if s < v or j is out of range.
MomentSdp build_moment_sdp(const ProblemSpec& spec, std::size_t j, unsigned s);

// Reads z from block 0 of a primal solution.
MomentSequence moments_from_solution(const MomentLayout& layout, const Eigen::MatrixXd& x0);

enum class RelaxationStatus {
  solved,
  unbounded,   // reported as inconclusive-unbounded
  infeasible,  // the relaxation has no feasible z
  stalled,
};

std::string to_string(RelaxationStatus status);

struct RelaxationResult {
  std::size_t j = 0;
  unsigned s = 0;
  unsigned v = 0;
  RelaxationStatus status = RelaxationStatus::stalled;
  double rho = 0.0;
  MomentSequence z{VariableSpace{}, 0};
  Eigen::VectorXd spectrum_s;   // singular values of M_s(z), descending
  Eigen::VectorXd spectrum_sv;  // singular values of M_{s-v}(z), descending
  SolverDiagnostics solver;
  std::string message;
};

struct RelaxationOptions {
  SolverOptions solver;
  std::function<void(const std::string& name, const SdpProblem&)> on_problem;
};

RelaxationResult solve_relaxation(const ProblemSpec& spec, std::size_t j, unsigned s,
                                  const RelaxationOptions& options = {});

// Singular values >= 1e-6 * max(1, sigma_max) count towards the rank; the
// rank is confident only if sigma_r / sigma_{r+1} >= 1e2 (or r is full).
inline constexpr double kRankThreshold = 1e-6;
inline constexpr double kRankGap = 1e2;

struct NumericalRank {
  std::size_t rank = 0;
  bool confident = true;
};

NumericalRank numerical_rank(const Eigen::VectorXd& singular_values);
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

struct FlatnessReport {
  bool flat = false;
  bool ambiguous = false;
  std::size_t rank_s = 0;
  std::size_t rank_sv = 0;
  std::size_t t = 0;  // common rank when flat
};

FlatnessReport rank_flatness_check(const Eigen::VectorXd& spectrum_s,
                                   const Eigen::VectorXd& spectrum_sv);
FlatnessReport rank_flatness_check(const MomentSequence& z, unsigned s, unsigned v);
FlatnessReport rank_flatness_check(const RelaxationResult& result);

struct Atom {
  Eigen::VectorXd point;  // in the space of z
  double weight = 0.0;
};

struct ExtractionResult {
  bool ok = false;
  std::vector<Atom> atoms;
  double moment_residual = 0.0;  // max |z_a - sum_i w_i atom_i^a| over degree <= 2s
  int attempts = 0;
  std::string message;
};

inline constexpr int kExtractionAttempts = 5;

// Recovers t atoms from a flat z of order s. `v` bounds the degree of the
// monomials used as a basis of the quotient (degree <= s - v, v >= 1).
ExtractionResult extract_atoms(const MomentSequence& z, unsigned s, unsigned v, std::size_t t,
                               std::uint64_t seed = 0);
ExtractionResult extract_atoms(const RelaxationResult& result, std::size_t t,
                               std::uint64_t seed = 0);

struct WitnessAtom {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double weight = 0.0;
  Eigen::VectorXd midpoint;
  double violation = 0.0;       // g_j(midpoint)
  double feasibility_x = 0.0;   // max_k -g_k(x)
  double feasibility_y = 0.0;   // max_k -g_k(y)
};

struct NonconvexityWitness {
  std::size_t j = 0;
  std::vector<WitnessAtom> atoms;
};

struct WitnessCheck {
  bool accepted = false;
  NonconvexityWitness witness;  // surviving atoms, weights renormalized
  std::vector<std::string> dropped;
};

inline constexpr double kDefaultFeasibilityTolerance = 1e-6;

// Keeps atoms with x, y in K (g_k >= -tol_feas) and g_j(mid) <= -10 tol_feas.
WitnessCheck validate_witness(const std::vector<Atom>& atoms, const ProblemSpec& spec,
                              std::size_t j, double tol_feas = kDefaultFeasibilityTolerance);

// Re-evaluates a witness from scratch; true iff every atom satisfies both
// inequalities.
bool recheck_witness(const NonconvexityWitness& witness, const ProblemSpec& spec,
                     double tol_feas = kDefaultFeasibilityTolerance);

// Smallest g_j((x+y)/2) over grid pairs in [lo, hi]^(2n) with x, y in K. The
// value bounds every rho_js from above. Empty if no grid pair is feasible.
struct GridMinimum {
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

std::optional<GridMinimum> midpoint_grid_search(const ProblemSpec& spec, std::size_t j, double lo,
                                                double hi, std::size_t points_per_axis);

}  // namespace convexcert
