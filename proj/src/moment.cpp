#include "convexcert/moment.hpp"

#include <algorithm>

#include "convexcert/errors.hpp"

namespace convexcert {
namespace {

// Exponents of exactly `degree` over coordinates [pos, arity), descending lex.
void enumerate_degree(std::size_t pos, unsigned remaining, Exponent& current,
                      std::vector<Exponent>& out) {
  if (pos + 1 == current.size()) {
    current[pos] = remaining;
    out.push_back(current);
    current[pos] = 0;
    return;
  }
  for (unsigned k = remaining + 1; k-- > 0;) {
    current[pos] = k;
    enumerate_degree(pos + 1, remaining - k, current, out);
  }
  current[pos] = 0;
}

}  // namespace

std::optional<std::size_t> MonomialBasis::index_of(const Exponent& e) const {
  // elements are sorted by GradedLexLess
  const auto it = std::lower_bound(elements.begin(), elements.end(), e, GradedLexLess{});
  if (it == elements.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - elements.begin());
}

MonomialBasis basis_enumerate(const VariableSpace& space, unsigned order) {
  MonomialBasis basis{space, order, {}};
  Exponent current(space.arity(), 0);
  for (unsigned d = 0; d <= order; ++d) enumerate_degree(0, d, current, basis.elements);
  return basis;
}

unsigned half_degree(const Polynomial& p) { return (p.degree() + 1) / 2; }

MomentSequence::MomentSequence(VariableSpace space, unsigned max_degree)
    : space_(space), max_degree_(max_degree) {}

double MomentSequence::at(const Exponent& e) const {
  const auto it = entries_.find(e);
  if (it == entries_.end()) {
    throw StructuralError("moment of degree " + std::to_string(total_degree(e)) +
                          " is not available (sequence holds degree <= " +
                          std::to_string(max_degree_) + ")");
  }
  return it->second;
}

void MomentSequence::set(const Exponent& e, double value) {
  if (e.size() != space_.arity()) throw StructuralError("moment exponent arity mismatch");
  if (total_degree(e) > max_degree_) throw StructuralError("moment exceeds sequence degree");
  entries_[e] = value;
}

MomentSequence atomic_moments(const VariableSpace& space,
                              const std::vector<Eigen::VectorXd>& points,
                              const std::vector<double>& weights, unsigned max_degree) {
  if (points.size() != weights.size()) throw StructuralError("one weight per atom required");
  MomentSequence z(space, max_degree);
  for (const Exponent& e : basis_enumerate(space, max_degree).elements) {
    double value = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (static_cast<std::size_t>(points[i].size()) != space.arity()) {
        throw StructuralError("atom arity mismatch");
      }
      double mono = weights[i];
      for (std::size_t k = 0; k < e.size(); ++k) {
        for (unsigned r = 0; r < e[k]; ++r) mono *= points[i](static_cast<Eigen::Index>(k));
      }
      value += mono;
    }
    z.set(e, value);
  }
  return z;
}

double riesz_apply(const MomentSequence& z, const Polynomial& f) {
  if (!(f.space() == z.space())) throw StructuralError("riesz_apply: space mismatch");
  double sum = 0.0;
  for (const auto& [e, c] : f.terms()) sum += c * z.at(e);
  return sum;
}

Eigen::MatrixXd moment_matrix(const MomentSequence& z, unsigned order) {
  return localizing_matrix(z, Polynomial::constant(z.space(), 1.0), order);
}

Eigen::MatrixXd localizing_matrix(const MomentSequence& z, const Polynomial& theta,
                                  unsigned order) {
  if (!(theta.space() == z.space())) throw StructuralError("localizing_matrix: space mismatch");
  const MonomialBasis basis = basis_enumerate(z.space(), order);
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const Exponent ab = exponent_sum(basis.elements[static_cast<std::size_t>(a)],
                                       basis.elements[static_cast<std::size_t>(b)]);
      double v = 0.0;
      for (const auto& [c, coeff] : theta.terms()) v += coeff * z.at(exponent_sum(ab, c));
      m(a, b) = v;
      m(b, a) = v;
    }
  }
  return m;
}

Eigen::VectorXd coefficients_in_basis(const Polynomial& p, const MonomialBasis& basis) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (const auto& [e, c] : p.terms()) {
    const auto idx = basis.index_of(e);
    if (!idx) throw StructuralError("polynomial is not supported in the basis");
    v(static_cast<Eigen::Index>(*idx)) = c;
  }
  return v;
}

Polynomial polynomial_from_coefficients(const Eigen::VectorXd& v, const MonomialBasis& basis) {
  Polynomial p(basis.space);
  for (std::size_t i = 0; i < basis.size(); ++i) p.add_term(basis.elements[i], v(static_cast<Eigen::Index>(i)));
  return p;
}

}  // namespace convexcert
