#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <random>

#include "convexcert/moment_refute.hpp"

namespace convexcert {
namespace {

double monomial_value(const Eigen::VectorXd& p, const Exponent& e) {
  double v = 1.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    for (unsigned r = 0; r < e[k]; ++r) v *= p(static_cast<Eigen::Index>(k));
  }
  return v;
}

ExtractionResult failure(std::string message) {
  ExtractionResult e;
  e.message = std::move(message);
  return e;
}

}  // namespace

ExtractionResult extract_atoms(const MomentSequence& z, unsigned s, unsigned v, std::size_t t,
                               std::uint64_t seed) {
  v = std::max(1u, v);
  if (s < v) return failure("order s is below v");
  if (t == 0) return failure("rank 0");
  const VariableSpace space = z.space();
  const std::size_t arity = space.arity();
  const MonomialBasis basis = basis_enumerate(space, s);
  const std::size_t nlow = basis_enumerate(space, s - v).size();
  if (nlow < t) return failure("rank exceeds the size of the degree s - v basis");

  // M_s(z) ~= V V^T with V of rank t
  const Eigen::MatrixXd m = moment_matrix(z, s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const auto n = m.rows();
  const auto ti = static_cast<Eigen::Index>(t);
  if (ti > n) return failure("rank exceeds the moment matrix size");
  const Eigen::VectorXd lam = eig.eigenvalues().tail(ti);
  if (lam.minCoeff() <= 0.0) return failure("moment matrix has fewer than t positive eigenvalues");
  const Eigen::MatrixXd V = eig.eigenvectors().rightCols(ti) * lam.cwiseSqrt().asDiagonal();

  // Pivot rows: t independent monomials of degree <= s - v.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V.topRows(static_cast<Eigen::Index>(nlow)).transpose());
  std::vector<std::size_t> pivots;
  for (Eigen::Index i = 0; i < ti; ++i) {
    pivots.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(i)));
  }
  Eigen::MatrixXd W(ti, ti);
  for (Eigen::Index i = 0; i < ti; ++i) W.row(i) = V.row(static_cast<Eigen::Index>(pivots[static_cast<std::size_t>(i)]));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(W);
  if (!lu.isInvertible()) return failure("pivot block is singular");
  // Row r of U expresses basis monomial r in terms of the pivot monomials.
  const Eigen::MatrixXd U = V * lu.inverse();

  std::vector<Eigen::MatrixXd> mult(arity, Eigen::MatrixXd(ti, ti));
  for (std::size_t l = 0; l < arity; ++l) {
    for (Eigen::Index i = 0; i < ti; ++i) {
      Exponent e = basis.elements[pivots[static_cast<std::size_t>(i)]];
      ++e[l];
      const auto row = basis.index_of(e);
      if (!row) return failure("shifted pivot monomial is outside the basis");
      mult[l].row(i) = U.row(static_cast<Eigen::Index>(*row));
    }
  }

  const MonomialBasis moments = basis_enumerate(space, 2 * s);
  Eigen::VectorXd zvec(static_cast<Eigen::Index>(moments.size()));
  for (std::size_t i = 0; i < moments.size(); ++i) {
    zvec(static_cast<Eigen::Index>(i)) = z.at(moments.elements[i]);
  }
  const double zscale = std::max(1.0, zvec.cwiseAbs().maxCoeff());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ExtractionResult out;
  for (int attempt = 1; attempt <= kExtractionAttempts; ++attempt) {
    out.attempts = attempt;
    Eigen::VectorXd c(static_cast<Eigen::Index>(arity));
    for (auto& ci : c) ci = unif(rng) + 1e-3;
    c /= c.sum();
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(ti, ti);
    for (std::size_t l = 0; l < arity; ++l) N += c(static_cast<Eigen::Index>(l)) * mult[l];

    Eigen::RealSchur<Eigen::MatrixXd> schur(N);
    if (schur.info() != Eigen::Success) {
      out.message = "Schur decomposition failed";
      continue;
    }
    const Eigen::MatrixXd& T = schur.matrixT();
    const Eigen::MatrixXd& Q = schur.matrixU();
    const double nscale = std::max(1.0, T.cwiseAbs().maxCoeff());
    bool degenerate = false;
    for (Eigen::Index i = 0; i + 1 < ti; ++i) {
      if (std::abs(T(i + 1, i)) > 1e-10 * nscale) degenerate = true;  // complex pair
    }
    for (Eigen::Index i = 0; i < ti && !degenerate; ++i) {
      for (Eigen::Index k = i + 1; k < ti; ++k) {
        if (std::abs(T(i, i) - T(k, k)) < 1e-9 * nscale) degenerate = true;
      }
    }
    if (degenerate) {
      out.message = "repeated or complex eigenvalues in the random combination";
      continue;
    }

    std::vector<Atom> atoms(t);
    for (Eigen::Index k = 0; k < ti; ++k) {
      Atom& a = atoms[static_cast<std::size_t>(k)];
      a.point.resize(static_cast<Eigen::Index>(arity));
      for (std::size_t l = 0; l < arity; ++l) {
        a.point(static_cast<Eigen::Index>(l)) = Q.col(k).dot(mult[l] * Q.col(k));
      }
    }

    Eigen::MatrixXd A(zvec.size(), ti);
    for (std::size_t r = 0; r < moments.size(); ++r) {
      for (Eigen::Index k = 0; k < ti; ++k) {
        A(static_cast<Eigen::Index>(r), k) =
            monomial_value(atoms[static_cast<std::size_t>(k)].point, moments.elements[r]);
      }
    }
    const Eigen::VectorXd w = A.colPivHouseholderQr().solve(zvec);
    out.moment_residual = (A * w - zvec).cwiseAbs().maxCoeff();
    if (!(w.minCoeff() > 0.0)) {
      out.message = "recovered weights are not positive";
      continue;
    }
    if (!(out.moment_residual <= 1e-6 * zscale)) {
      out.message = "atoms do not reproduce the moments";
      continue;
    }
    const double total = w.sum();
    for (Eigen::Index k = 0; k < ti; ++k) atoms[static_cast<std::size_t>(k)].weight = w(k) / total;
    out.ok = true;
    out.atoms = std::move(atoms);
    out.message.clear();
    return out;
  }
  out.message = "extraction-failed: " + out.message;
  return out;
}

}  // namespace convexcert
