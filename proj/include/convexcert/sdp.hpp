#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace convexcert {

// Symmetric matrix stored as its upper triangle. An entry (row <= col, value)
// stands for `value` at both (row, col) and (col, row).
class SymMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SymMatrix() = default;

  // Throws StructuralError if `m` is not square and symmetric (to 1e-12
  // relative).
  static SymMatrix from_dense(const Eigen::MatrixXd& m);
  static SymMatrix identity(std::size_t n, double scale = 1.0);

  // Adds v to the matrix entries (r, c) and (c, r).
  void add(std::size_t r, std::size_t c, double v);
  // Adds coeff to the coefficient of X(r, c) in the linear form <A, X> when X
  // is symmetric: coeff on the diagonal, coeff / 2 to each mirrored entry.
  void add_linear(std::size_t r, std::size_t c, double coeff);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t max_index() const;

  Eigen::MatrixXd dense(std::size_t n) const;
  // <A, X> for symmetric X.
  double inner(const Eigen::MatrixXd& x) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index_;
};

// minimize sum_b <C_b, X_b>
// subject to sum_b <A_ib, X_b> = b_i, X_b PSD.
struct SdpProblem {
  struct Equality {
    std::map<std::size_t, SymMatrix> blocks;
    double rhs = 0.0;
  };

  std::vector<std::size_t> blocks;
  std::vector<SymMatrix> objective;  // one per block, may be empty
  std::vector<Equality> equalities;

  std::size_t add_block(std::size_t dim);
  std::size_t add_equality(double rhs);
  SymMatrix& coefficient(std::size_t equality, std::size_t block);

  std::size_t total_dimension() const;

  // Throws StructuralError on index or dimension inconsistencies.
  void validate() const;
};

enum class SdpStatus { optimal, infeasible, unbounded, stalled };

std::string to_string(SdpStatus status);

struct SdpSolution {
  SdpStatus status = SdpStatus::stalled;
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> S;
  Eigen::VectorXd y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // ||A(X) - b|| / (1 + ||b||)
  double dual_residual = 0.0;    // ||C - A^T y - S|| / (1 + ||C||)
  double gap = 0.0;              // |pobj - dobj| / (1 + |pobj| + |dobj|)
  int iterations = 0;
  std::size_t dropped_equalities = 0;
  // For infeasible: b^T y > 0 with A^T y approximately NSD (y normalized so
  // b^T y = 1). For unbounded: <C, X> = -1 with A(X) approximately 0.
  std::string diagnostic;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
  // Row-elimination threshold relative to each (normalized) equality row.
  double rank_tol = 1e-10;
  const std::atomic<bool>* cancel = nullptr;
  bool verbose = false;
};

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

// Compact record of a solve for reports.
struct SolverDiagnostics {
  std::string status;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double objective = 0.0;
  std::size_t blocks = 0;
  std::size_t equalities = 0;
  std::size_t dropped_equalities = 0;
  double seconds = 0.0;
};

SolverDiagnostics summarize(const SdpProblem& problem, const SdpSolution& solution, double seconds);

// Replaces the objective with 1e-6 * trace(X) and solves.
inline constexpr double kFeasibilityRegularization = 1e-6;
SdpSolution feasibility(const SdpProblem& problem, const SolverOptions& options = {});

// Sparse text dump: see docs/formats.md.
void write_sdp(const SdpProblem& problem, std::ostream& out);
void write_sdp(const SdpProblem& problem, const std::filesystem::path& path);
SdpProblem read_sdp(std::istream& in);

}  // namespace convexcert
