// Primal-dual interior-point method for block-diagonal SDPs.
//
// The problem is embedded in the homogeneous self-dual model
//
//   A(X) - b tau            = 0
//   A^T(y) + S - C tau      = 0
//   <C, X> - b^T y + kappa  = 0,   X, S PSD, tau, kappa >= 0,
//
// started from X = S = I, y = 0, tau = kappa = 1 and followed with the HKM
// search direction and a Mehrotra predictor-corrector. tau -> 0 with
// kappa > 0 yields a certificate of infeasibility or unboundedness.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCore>
#include <Eigen/SparseQR>
#include <Eigen/OrderingMethods>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <limits>

#include "convexcert/errors.hpp"
#include "convexcert/sdp.hpp"
#include "convexcert/simd/kernels.hpp"

namespace convexcert {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Blocks = std::vector<MatrixXd>;

std::span<const double> flat(const MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> flat(MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

double inner(const Blocks& a, const Blocks& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += simd::dot(flat(a[k]), flat(b[k]));
  return sum;
}

double fro_norm(const Blocks& a) { return std::sqrt(inner(a, a)); }

Blocks combine(const Blocks& a, double alpha, const Blocks& b) {
  Blocks out = a;
  for (std::size_t k = 0; k < a.size(); ++k) simd::axpy(alpha, flat(b[k]), flat(out[k]));
  return out;
}

// Largest alpha with M + alpha dM PSD (infinity if unbounded). Returns 0 if M
// itself is numerically not positive definite.
double max_step(const MatrixXd& m, const MatrixXd& dm) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd w = llt.matrixL().solve(dm);
  w = llt.matrixL().solve(w.transpose()).transpose();
  w = 0.5 * (w + w.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(w, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

struct RowPart {
  std::size_t block;
  std::vector<SymMatrix::Entry> entries;
  bool is_dense = false;
  MatrixXd dense;
};

struct Row {
  std::vector<RowPart> parts;
  double rhs = 0.0;
};

// <A, M> for a general (not necessarily symmetric) M.
double part_inner(const RowPart& part, const MatrixXd& m) {
  if (part.is_dense) return simd::dot(flat(part.dense), flat(m));
  double sum = 0.0;
  for (const auto& e : part.entries) {
    const auto r = static_cast<Eigen::Index>(e.row);
    const auto c = static_cast<Eigen::Index>(e.col);
    sum += e.row == e.col ? e.value * m(r, r) : e.value * (m(r, c) + m(c, r));
  }
  return sum;
}

void add_part(const RowPart& part, double alpha, MatrixXd& out) {
  if (part.is_dense) {
    simd::axpy(alpha, flat(part.dense), flat(out));
    return;
  }
  for (const auto& e : part.entries) {
    const auto r = static_cast<Eigen::Index>(e.row);
    const auto c = static_cast<Eigen::Index>(e.col);
    out(r, c) += alpha * e.value;
    if (r != c) out(c, r) += alpha * e.value;
  }
}

// Columns that own a row no other remaining column touches are linearly
// independent of everything else; peel them off repeatedly so that only the
// (usually tiny) rest needs a rank-revealing factorization.
std::vector<bool> peel_independent(const Eigen::SparseMatrix<double>& a) {
  constexpr double kOwnedEntry = 1e-6;  // columns are normalized
  const auto nrows = static_cast<std::size_t>(a.rows());
  const auto ncols = static_cast<std::size_t>(a.cols());
  std::vector<int> count(nrows, 0);
  std::vector<std::vector<Eigen::Index>> row_cols(nrows);
  for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
      if (it.value() == 0.0) continue;
      ++count[static_cast<std::size_t>(it.row())];
      row_cols[static_cast<std::size_t>(it.row())].push_back(c);
    }
  }
  std::vector<bool> peeled(ncols, false);
  std::vector<std::size_t> work;
  for (std::size_t r = 0; r < nrows; ++r) {
    if (count[r] == 1) work.push_back(r);
  }
  while (!work.empty()) {
    const std::size_t r = work.back();
    work.pop_back();
    if (count[r] != 1) continue;
    Eigen::Index owner = -1;
    for (Eigen::Index c : row_cols[r]) {
      if (!peeled[static_cast<std::size_t>(c)]) owner = c;
    }
    if (owner < 0 || std::abs(a.coeff(static_cast<Eigen::Index>(r), owner)) < kOwnedEntry) continue;
    peeled[static_cast<std::size_t>(owner)] = true;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, owner); it; ++it) {
      if (it.value() == 0.0) continue;
      const auto row = static_cast<std::size_t>(it.row());
      if (--count[row] == 1) work.push_back(row);
    }
  }
  return peeled;
}

Eigen::SparseMatrix<double> select_columns(const Eigen::SparseMatrix<double>& a,
                                           const std::vector<Eigen::Index>& cols) {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, cols[k]); it; ++it) {
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(k), it.value());
    }
  }
  Eigen::SparseMatrix<double> out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

// Indices of a maximal independent set of columns, by column-pivoted QR
// (dense when small enough, sparse otherwise).
std::vector<Eigen::Index> independent_columns(const Eigen::SparseMatrix<double>& a, double tol) {
  std::vector<Eigen::Index> out;
  if (static_cast<double>(a.rows()) * static_cast<double>(a.cols()) <= 4e6) {
    const MatrixXd dense(a);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(dense);
    qr.setThreshold(tol);
    for (Eigen::Index k = 0; k < qr.rank(); ++k) out.push_back(qr.colsPermutation().indices()(k));
  } else {
    Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
    qr.setPivotThreshold(tol);
    qr.compute(a);
    for (Eigen::Index k = 0; k < qr.rank(); ++k) out.push_back(qr.colsPermutation().indices()(k));
  }
  return out;
}

struct Measures {
  double pres, dres, gap, pobj, dobj;
};

// Residuals of (X, y, S) against the untouched problem data.
Measures measure(const SdpProblem& p, const Blocks& x, const VectorXd& y, const Blocks& s) {
  const std::size_t nb = p.blocks.size();
  double bnorm2 = 0.0, rp2 = 0.0, dobj = 0.0;
  Blocks resid(nb);
  for (std::size_t k = 0; k < nb; ++k) resid[k] = p.objective[k].dense(p.blocks[k]) - s[k];
  double cnorm2 = 0.0;
  double pobj = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    const MatrixXd c = p.objective[k].dense(p.blocks[k]);
    cnorm2 += c.squaredNorm();
    pobj += p.objective[k].inner(x[k]);
  }
  for (std::size_t i = 0; i < p.equalities.size(); ++i) {
    const auto& eq = p.equalities[i];
    double ax = 0.0;
    for (const auto& [blk, a] : eq.blocks) {
      ax += a.inner(x[blk]);
      for (const auto& e : a.entries()) {
        const auto r = static_cast<Eigen::Index>(e.row);
        const auto c = static_cast<Eigen::Index>(e.col);
        resid[blk](r, c) -= y(static_cast<Eigen::Index>(i)) * e.value;
        if (r != c) resid[blk](c, r) -= y(static_cast<Eigen::Index>(i)) * e.value;
      }
    }
    rp2 += (ax - eq.rhs) * (ax - eq.rhs);
    bnorm2 += eq.rhs * eq.rhs;
    dobj += eq.rhs * y(static_cast<Eigen::Index>(i));
  }
  Measures m{};
  m.pres = std::sqrt(rp2) / (1.0 + std::sqrt(bnorm2));
  m.dres = fro_norm(resid) / (1.0 + std::sqrt(cnorm2));
  m.pobj = pobj;
  m.dobj = dobj;
  m.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  return m;
}

class HsdSolver {
 public:
  HsdSolver(const SdpProblem& problem, const SolverOptions& options)
      : problem_(problem), options_(options) {}

  SdpSolution run();

 private:
  bool preprocess(SdpSolution& out);
  VectorXd apply_a(const Blocks& x) const;
  Blocks apply_at(const VectorXd& y) const;
  Blocks sym_product(const Blocks& x, const Blocks& m, const Blocks& sinv) const;
  MatrixXd schur(const Blocks& x, const Blocks& sinv) const;
  void finish(SdpSolution& out, const Blocks& x, const VectorXd& y, const Blocks& s, double tau) const;

  const SdpProblem& problem_;
  SolverOptions options_;

  std::vector<std::size_t> dims_;
  std::vector<Row> rows_;
  std::vector<std::size_t> kept_;      // original index of each kept row
  std::vector<double> row_scale_;      // kept row = original row / scale
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> block_rows_;
  Blocks c_;
  VectorXd b_;
};

bool HsdSolver::preprocess(SdpSolution& out) {
  dims_ = problem_.blocks;
  const std::size_t nb = dims_.size();
  c_.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) c_[k] = problem_.objective[k].dense(dims_[k]);

  const std::size_t m = problem_.equalities.size();
  std::vector<std::size_t> offsets(nb + 1, 0);
  for (std::size_t k = 0; k < nb; ++k) offsets[k + 1] = offsets[k] + dims_[k] * (dims_[k] + 1) / 2;
  const std::size_t nsvec = offsets[nb];

  // columns: equalities in scaled svec coordinates, normalized
  std::vector<std::map<std::size_t, double>> cols(m);
  std::vector<double> norms(m, 0.0);
  VectorXd rhs(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& eq = problem_.equalities[i];
    for (const auto& [blk, a] : eq.blocks) {
      for (const auto& e : a.entries()) {
        const std::size_t idx = offsets[blk] + e.col * (e.col + 1) / 2 + e.row;
        cols[i][idx] += e.row == e.col ? e.value : std::sqrt(2.0) * e.value;
      }
    }
    double n2 = 0.0;
    for (const auto& [idx, v] : cols[i]) n2 += v * v;
    norms[i] = std::sqrt(n2);
    rhs(static_cast<Eigen::Index>(i)) = eq.rhs;
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < m; ++i) {
    if (norms[i] == 0.0) {
      if (std::abs(rhs(static_cast<Eigen::Index>(i))) > options_.tol) {
        out.status = SdpStatus::infeasible;
        out.diagnostic = "equality " + std::to_string(i) + " reads 0 = " +
                         std::to_string(rhs(static_cast<Eigen::Index>(i)));
        return false;
      }
      continue;
    }
    candidates.push_back(i);
  }

  const auto nc = static_cast<Eigen::Index>(candidates.size());
  VectorXd rhsc(nc);
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index k = 0; k < nc; ++k) {
    const std::size_t i = candidates[static_cast<std::size_t>(k)];
    for (const auto& [idx, v] : cols[i]) trips.emplace_back(static_cast<int>(idx), static_cast<int>(k), v / norms[i]);
    rhsc(k) = rhs(static_cast<Eigen::Index>(i)) / norms[i];
  }

  std::vector<std::size_t> kept_local;
  if (nc > 0) {
    Eigen::SparseMatrix<double> sp(static_cast<Eigen::Index>(nsvec), nc);
    sp.setFromTriplets(trips.begin(), trips.end());
    sp.makeCompressed();
    std::vector<bool> peeled = peel_independent(sp);
    std::vector<Eigen::Index> rest;
    for (Eigen::Index k = 0; k < nc; ++k) {
      if (peeled[static_cast<std::size_t>(k)]) {
        kept_local.push_back(static_cast<std::size_t>(k));
      } else {
        rest.push_back(k);
      }
    }
    if (!rest.empty()) {
      const Eigen::SparseMatrix<double> sub = select_columns(sp, rest);
      const std::vector<Eigen::Index> independent = independent_columns(sub, options_.rank_tol);
      std::vector<bool> is_kept(rest.size(), false);
      std::vector<Eigen::Index> kept_rest;
      for (Eigen::Index k : independent) {
        is_kept[static_cast<std::size_t>(k)] = true;
        kept_rest.push_back(k);
        kept_local.push_back(static_cast<std::size_t>(rest[static_cast<std::size_t>(k)]));
      }
      if (kept_rest.size() < rest.size()) {
        // dropped rows must be consistent combinations of the kept ones; by
        // construction they only depend on the columns that were not peeled
        const Eigen::SparseMatrix<double> ak = select_columns(sub, kept_rest);
        VectorXd bk(static_cast<Eigen::Index>(kept_rest.size()));
        for (std::size_t k = 0; k < kept_rest.size(); ++k) {
          bk(static_cast<Eigen::Index>(k)) = rhsc(rest[static_cast<std::size_t>(kept_rest[k])]);
        }
        Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qk;
        qk.compute(ak);
        const double scale = 1.0 + rhsc.cwiseAbs().maxCoeff();
        for (std::size_t k = 0; k < rest.size(); ++k) {
          if (is_kept[k]) continue;
          const VectorXd colk = VectorXd(sub.col(static_cast<Eigen::Index>(k)));
          const double predicted = qk.solve(colk).dot(bk);
          if (std::abs(predicted - rhsc(rest[k])) > 1e3 * options_.tol * scale) {
            out.status = SdpStatus::infeasible;
            out.diagnostic = "linearly dependent equality " +
                             std::to_string(candidates[static_cast<std::size_t>(rest[k])]) +
                             " has an inconsistent right-hand side";
            return false;
          }
        }
        out.dropped_equalities = rest.size() - kept_rest.size();
      }
    }
    std::sort(kept_local.begin(), kept_local.end());
  }

  block_rows_.assign(nb, {});
  b_.resize(static_cast<Eigen::Index>(kept_local.size()));
  for (std::size_t k = 0; k < kept_local.size(); ++k) {
    const std::size_t orig = candidates[kept_local[k]];
    const double scale = norms[orig];
    kept_.push_back(orig);
    row_scale_.push_back(scale);
    Row row;
    row.rhs = rhs(static_cast<Eigen::Index>(orig)) / scale;
    for (const auto& [blk, a] : problem_.equalities[orig].blocks) {
      if (a.empty()) continue;
      RowPart part;
      part.block = blk;
      for (auto e : a.entries()) {
        e.value /= scale;
        part.entries.push_back(e);
      }
      const std::size_t n = dims_[blk];
      if (2 * part.entries.size() > n * n / 4 && n > 4) {
        part.is_dense = true;
        part.dense = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        add_part(RowPart{blk, part.entries, false, {}}, 1.0, part.dense);
      }
      block_rows_[blk].emplace_back(k, row.parts.size());
      row.parts.push_back(std::move(part));
    }
    b_(static_cast<Eigen::Index>(k)) = row.rhs;
    rows_.push_back(std::move(row));
  }
  return true;
}

VectorXd HsdSolver::apply_a(const Blocks& x) const {
  VectorXd out(static_cast<Eigen::Index>(rows_.size()));
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double sum = 0.0;
    for (const auto& part : rows_[i].parts) sum += part_inner(part, x[part.block]);
    out(static_cast<Eigen::Index>(i)) = sum;
  }
  return out;
}

Blocks HsdSolver::apply_at(const VectorXd& y) const {
  Blocks out(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    out[k] = MatrixXd::Zero(static_cast<Eigen::Index>(dims_[k]), static_cast<Eigen::Index>(dims_[k]));
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double yi = y(static_cast<Eigen::Index>(i));
    if (yi == 0.0) continue;
    for (const auto& part : rows_[i].parts) add_part(part, yi, out[part.block]);
  }
  return out;
}

// sym(X M S^{-1}) blockwise.
Blocks HsdSolver::sym_product(const Blocks& x, const Blocks& m, const Blocks& sinv) const {
  Blocks out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const MatrixXd t = x[k] * m[k] * sinv[k];
    out[k] = 0.5 * (t + t.transpose());
  }
  return out;
}

// H_ij = sum_b tr(A_ib X_b A_jb S_b^{-1}).
MatrixXd HsdSolver::schur(const Blocks& x, const Blocks& sinv) const {
  const auto m = static_cast<Eigen::Index>(rows_.size());
  MatrixXd h = MatrixXd::Zero(m, m);
  for (std::size_t blk = 0; blk < dims_.size(); ++blk) {
    const auto n = static_cast<Eigen::Index>(dims_[blk]);
    const MatrixXd& xb = x[blk];
    const MatrixXd& sb = sinv[blk];
    MatrixXd p(n, n);
    const auto& touching = block_rows_[blk];
    for (std::size_t jj = 0; jj < touching.size(); ++jj) {
      const auto [j, jpart] = touching[jj];
      const RowPart& aj = rows_[j].parts[jpart];
      if (aj.is_dense) {
        p.noalias() = xb * aj.dense * sb;
      } else {
        // X A_j S^{-1} as a sum of rank-one terms X(:, r) S^{-1}(c, :)
        p.setZero();
        for (const auto& e : aj.entries) {
          const auto r = static_cast<Eigen::Index>(e.row);
          const auto c = static_cast<Eigen::Index>(e.col);
          for (Eigen::Index col = 0; col < n; ++col) {
            std::span<double> pc{p.col(col).data(), static_cast<std::size_t>(n)};
            simd::axpy(e.value * sb(c, col), flat(xb).subspan(static_cast<std::size_t>(r * n), static_cast<std::size_t>(n)), pc);
            if (r != c) {
              simd::axpy(e.value * sb(r, col), flat(xb).subspan(static_cast<std::size_t>(c * n), static_cast<std::size_t>(n)), pc);
            }
          }
        }
      }
      for (std::size_t ii = 0; ii <= jj; ++ii) {
        const auto [i, ipart] = touching[ii];
        const double v = part_inner(rows_[i].parts[ipart], p);
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += v;
        if (i != j) h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += v;
      }
    }
  }
  return h;
}

void HsdSolver::finish(SdpSolution& out, const Blocks& x, const VectorXd& y, const Blocks& s,
                       double tau) const {
  out.X.resize(x.size());
  out.S.resize(s.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.X[k] = x[k] / tau;
    out.S[k] = s[k] / tau;
  }
  out.y = VectorXd::Zero(static_cast<Eigen::Index>(problem_.equalities.size()));
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    out.y(static_cast<Eigen::Index>(kept_[k])) = y(static_cast<Eigen::Index>(k)) / tau / row_scale_[k];
  }
  const Measures ms = measure(problem_, out.X, out.y, out.S);
  out.primal_residual = ms.pres;
  out.dual_residual = ms.dres;
  out.gap = ms.gap;
  out.primal_objective = ms.pobj;
  out.dual_objective = ms.dobj;
}

SdpSolution HsdSolver::run() {
  SdpSolution out;
  if (!preprocess(out)) return out;

  const std::size_t nb = dims_.size();
  double nu = 0.0;
  for (auto d : dims_) nu += static_cast<double>(d);

  Blocks x(nb), s(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto n = static_cast<Eigen::Index>(dims_[k]);
    x[k] = MatrixXd::Identity(n, n);
    s[k] = MatrixXd::Identity(n, n);
  }
  const auto m = static_cast<Eigen::Index>(rows_.size());
  VectorXd y = VectorXd::Zero(m);
  double tau = 1.0, kappa = 1.0;

  const double bnorm = b_.norm();
  const double cnorm = fro_norm(c_);
  int small_steps = 0;

  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    const VectorXd ax = apply_a(x);
    const VectorXd rp = ax - b_ * tau;
    const Blocks aty = apply_at(y);
    Blocks rd(nb);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = aty[k] + s[k] - c_[k] * tau;
    const double cx = inner(c_, x);
    const double by = b_.dot(y);
    const double rg = cx - by + kappa;
    const double mu = (inner(x, s) + tau * kappa) / (nu + 1.0);

    const double pres = rp.norm() / tau / (1.0 + bnorm);
    const double dres = fro_norm(rd) / tau / (1.0 + cnorm);
    const double pobj = cx / tau, dobj = by / tau;
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (options_.verbose) {
      std::fprintf(stderr, "%3d pres %.2e dres %.2e gap %.2e mu %.2e tau %.2e kappa %.2e\n", iter,
                   pres, dres, gap, mu, tau, kappa);
    }

    if (pres <= options_.tol && dres <= options_.tol && gap <= options_.tol) {
      finish(out, x, y, s, tau);
      if (out.primal_residual <= options_.tol && out.dual_residual <= options_.tol &&
          out.gap <= options_.tol) {
        out.status = SdpStatus::optimal;
        return out;
      }
    }

    if (kappa > tau) {
      if (by > 0) {
        Blocks ray = aty;
        for (std::size_t k = 0; k < nb; ++k) ray[k] += s[k];
        if (fro_norm(ray) / by <= options_.tol) {
          finish(out, x, y, s, tau);
          out.status = SdpStatus::infeasible;
          out.y = VectorXd::Zero(static_cast<Eigen::Index>(problem_.equalities.size()));
          for (std::size_t k = 0; k < kept_.size(); ++k) {
            out.y(static_cast<Eigen::Index>(kept_[k])) =
                y(static_cast<Eigen::Index>(k)) / row_scale_[k] / by;
          }
          out.diagnostic = "dual ray: b^T y = 1 with A^T y negative semidefinite";
          return out;
        }
      }
      if (cx < 0 && ax.norm() / (-cx) <= options_.tol) {
        finish(out, x, y, s, tau);
        out.status = SdpStatus::unbounded;
        for (std::size_t k = 0; k < nb; ++k) out.X[k] = x[k] / (-cx);
        out.diagnostic = "primal ray: <C, X> = -1 with A(X) = 0";
        return out;
      }
    }

    const bool cancelled = options_.cancel && options_.cancel->load(std::memory_order_relaxed);
    if (iter >= options_.max_iter || cancelled || small_steps >= 3 || !std::isfinite(mu)) {
      finish(out, x, y, s, tau);
      out.status = SdpStatus::stalled;
      out.diagnostic = cancelled ? "cancelled"
                       : iter >= options_.max_iter ? "iteration limit reached"
                                                   : "no further progress";
      return out;
    }

    Blocks sinv(nb);
    bool ok = true;
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<MatrixXd> llt(s[k]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      sinv[k] = llt.solve(MatrixXd::Identity(s[k].rows(), s[k].cols()));
      sinv[k] = 0.5 * (sinv[k] + sinv[k].transpose());
    }
    if (!ok) {
      finish(out, x, y, s, tau);
      out.status = SdpStatus::stalled;
      out.diagnostic = "dual slack lost positive definiteness";
      return out;
    }

    MatrixXd h = schur(x, sinv);
    Eigen::LLT<MatrixXd> hfac;
    if (m > 0) {
      hfac.compute(h);
      double shift = 1e-14 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      while (hfac.info() != Eigen::Success && shift < 1e-4) {
        MatrixXd hp = h;
        hp.diagonal().array() += shift;
        hfac.compute(hp);
        shift *= 100.0;
      }
      if (hfac.info() != Eigen::Success) {
        finish(out, x, y, s, tau);
        out.status = SdpStatus::stalled;
        out.diagnostic = "Schur complement factorization failed";
        return out;
      }
    }
    auto hsolve = [&](const VectorXd& r) -> VectorXd {
      if (m == 0) return r;
      return hfac.solve(r);
    };

    const Blocks dc = sym_product(x, c_, sinv);
    const VectorXd u = apply_a(dc);
    const double cdc = inner(c_, dc);
    const Blocks drd = sym_product(x, rd, sinv);
    const VectorXd adrd = apply_a(drd);
    const double cdrd = inner(c_, drd);
    const VectorXd q = hsolve(u + b_);
    const VectorXd umb = u - b_;
    const double denom = umb.dot(q) - cdc - kappa / tau;

    struct Direction {
      Blocks dx, ds;
      VectorXd dy;
      double dtau = 0.0, dkappa = 0.0;
    };

    auto direction = [&](double eta, const Blocks& rc, double rhs_tk) {
      Direction d;
      const VectorXd r1 = -eta * rp - apply_a(rc) - eta * adrd;
      const double r2 = -eta * rg - inner(c_, rc) - eta * cdrd - rhs_tk / tau;
      const VectorXd p = hsolve(r1);
      d.dtau = (r2 - umb.dot(p)) / denom;
      d.dy = p + d.dtau * q;
      const Blocks atdy = apply_at(d.dy);
      d.ds.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) d.ds[k] = -eta * rd[k] - atdy[k] + c_[k] * d.dtau;
      const Blocks dds = sym_product(x, d.ds, sinv);
      d.dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) d.dx[k] = rc[k] - dds[k];
      d.dkappa = (rhs_tk - kappa * d.dtau) / tau;
      return d;
    };

    auto step_length = [&](const Direction& d) {
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        alpha = std::min(alpha, max_step(x[k], d.dx[k]));
        alpha = std::min(alpha, max_step(s[k], d.ds[k]));
      }
      if (d.dtau < 0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    // predictor
    Blocks rc(nb);
    for (std::size_t k = 0; k < nb; ++k) rc[k] = -x[k];
    const Direction aff = direction(1.0, rc, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const Blocks xa = combine(x, alpha_aff, aff.dx);
    const Blocks sa = combine(s, alpha_aff, aff.ds);
    const double mu_aff =
        (inner(xa, sa) + (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa)) /
        (nu + 1.0);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // corrector
    for (std::size_t k = 0; k < nb; ++k) {
      const MatrixXd second = aff.dx[k] * aff.ds[k] * sinv[k];
      rc[k] = sigma * mu * sinv[k] - x[k] - 0.5 * (second + second.transpose());
    }
    const Direction dir =
        direction(1.0 - sigma, rc, sigma * mu - tau * kappa - aff.dtau * aff.dkappa);
    const double alpha = std::min(1.0, 0.98 * step_length(dir));
    small_steps = alpha < 1e-8 ? small_steps + 1 : 0;

    for (std::size_t k = 0; k < nb; ++k) {
      x[k] += alpha * dir.dx[k];
      s[k] += alpha * dir.ds[k];
      x[k] = 0.5 * (x[k] + x[k].transpose());
      s[k] = 0.5 * (s[k] + s[k].transpose());
    }
    y += alpha * dir.dy;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
  }
}

}  // namespace

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw StructuralError("coefficient matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw StructuralError("coefficient matrix is not symmetric");
  }
  SymMatrix out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r <= c; ++r) {
      if (m(r, c) != 0.0) out.add(static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c));
    }
  }
  return out;
}

SymMatrix SymMatrix::identity(std::size_t n, double scale) {
  SymMatrix out;
  for (std::size_t i = 0; i < n; ++i) out.add(i, i, scale);
  return out;
}

void SymMatrix::add(std::size_t r, std::size_t c, double v) {
  if (r > c) std::swap(r, c);
  const auto [it, inserted] = index_.try_emplace({r, c}, entries_.size());
  if (inserted) {
    entries_.push_back({r, c, v});
  } else {
    entries_[it->second].value += v;
  }
}

void SymMatrix::add_linear(std::size_t r, std::size_t c, double coeff) {
  add(r, c, r == c ? coeff : 0.5 * coeff);
}

std::size_t SymMatrix::max_index() const {
  std::size_t mx = 0;
  for (const auto& e : entries_) mx = std::max(mx, e.col);
  return mx;
}

Eigen::MatrixXd SymMatrix::dense(std::size_t n) const {
  MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : entries_) {
    out(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) += e.value;
    if (e.row != e.col) out(static_cast<Eigen::Index>(e.col), static_cast<Eigen::Index>(e.row)) += e.value;
  }
  return out;
}

double SymMatrix::inner(const Eigen::MatrixXd& x) const {
  double sum = 0.0;
  for (const auto& e : entries_) {
    const auto r = static_cast<Eigen::Index>(e.row);
    const auto c = static_cast<Eigen::Index>(e.col);
    sum += e.row == e.col ? e.value * x(r, r) : e.value * (x(r, c) + x(c, r));
  }
  return sum;
}

std::size_t SdpProblem::add_block(std::size_t dim) {
  blocks.push_back(dim);
  objective.emplace_back();
  return blocks.size() - 1;
}

std::size_t SdpProblem::add_equality(double rhs) {
  equalities.push_back({{}, rhs});
  return equalities.size() - 1;
}

SymMatrix& SdpProblem::coefficient(std::size_t equality, std::size_t block) {
  return equalities.at(equality).blocks[block];
}

std::size_t SdpProblem::total_dimension() const {
  std::size_t n = 0;
  for (auto d : blocks) n += d;
  return n;
}

void SdpProblem::validate() const {
  if (blocks.empty()) throw StructuralError("SDP has no blocks");
  if (objective.size() != blocks.size()) throw StructuralError("one objective matrix per block required");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k] == 0) throw StructuralError("SDP block of dimension 0");
    if (!objective[k].empty() && objective[k].max_index() >= blocks[k]) {
      throw StructuralError("objective entry outside block " + std::to_string(k));
    }
  }
  for (std::size_t i = 0; i < equalities.size(); ++i) {
    for (const auto& [blk, a] : equalities[i].blocks) {
      if (blk >= blocks.size()) throw StructuralError("equality " + std::to_string(i) + " names a missing block");
      if (!a.empty() && a.max_index() >= blocks[blk]) {
        throw StructuralError("equality " + std::to_string(i) + " has an entry outside block " +
                              std::to_string(blk));
      }
    }
    if (!std::isfinite(equalities[i].rhs)) throw StructuralError("non-finite right-hand side");
  }
}

std::string to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::optimal:
      return "optimal";
    case SdpStatus::infeasible:
      return "infeasible";
    case SdpStatus::unbounded:
      return "unbounded";
    case SdpStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) {
  if (!(options.tol > 0 && options.tol <= 1e-2)) throw StructuralError("solver tolerance must lie in (0, 1e-2]");
  problem.validate();
  HsdSolver solver(problem, options);
  return solver.run();
}

SolverDiagnostics summarize(const SdpProblem& problem, const SdpSolution& solution,
                            double seconds) {
  SolverDiagnostics d;
  d.status = to_string(solution.status);
  d.iterations = solution.iterations;
  d.primal_residual = solution.primal_residual;
  d.dual_residual = solution.dual_residual;
  d.gap = solution.gap;
  d.objective = solution.primal_objective;
  d.blocks = problem.blocks.size();
  d.equalities = problem.equalities.size();
  d.dropped_equalities = solution.dropped_equalities;
  d.seconds = seconds;
  return d;
}

SdpSolution feasibility(const SdpProblem& problem, const SolverOptions& options) {
  SdpProblem regularized = problem;
  for (std::size_t k = 0; k < regularized.blocks.size(); ++k) {
    regularized.objective[k] = SymMatrix::identity(regularized.blocks[k], kFeasibilityRegularization);
  }
  return solve(regularized, options);
}

}  // namespace convexcert
