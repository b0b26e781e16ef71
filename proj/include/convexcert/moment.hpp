#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "convexcert/polynomial.hpp"

namespace convexcert {

// All exponents of total degree <= order, in graded order. The constant
// monomial comes first and |elements| = C(arity + order, order).
struct MonomialBasis {
  VariableSpace space;
  unsigned order = 0;
  std::vector<Exponent> elements;

  std::size_t size() const { return elements.size(); }
  std::optional<std::size_t> index_of(const Exponent& e) const;
};

MonomialBasis basis_enumerate(const VariableSpace& space, unsigned order);

// ceil(deg p / 2)
unsigned half_degree(const Polynomial& p);

// Sparse z = (z_e) for total degree <= max_degree.
class MomentSequence {
 public:
  MomentSequence(VariableSpace space, unsigned max_degree);

  const VariableSpace& space() const { return space_; }
  unsigned max_degree() const { return max_degree_; }
  // Largest s with 2s <= max_degree.
  unsigned order() const { return max_degree_ / 2; }

  bool contains(const Exponent& e) const { return entries_.contains(e); }
  // Throws StructuralError when the moment is not held.
  double at(const Exponent& e) const;
  void set(const Exponent& e, double value);

  const std::map<Exponent, double, GradedLexLess>& entries() const { return entries_; }

 private:
  VariableSpace space_;
  unsigned max_degree_;
  std::map<Exponent, double, GradedLexLess> entries_;
};

// Moments up to max_degree of sum_i weights[i] * delta(points[i]).
MomentSequence atomic_moments(const VariableSpace& space,
                              const std::vector<Eigen::VectorXd>& points,
                              const std::vector<double>& weights, unsigned max_degree);

// L_z(f) = sum_e f_e z_e.
double riesz_apply(const MomentSequence& z, const Polynomial& f);

// M_s(z)(a, b) = z_{a + b} over basis_enumerate(space, s).
Eigen::MatrixXd moment_matrix(const MomentSequence& z, unsigned order);

// M_s(theta z)(a, b) = sum_c theta_c z_{a + b + c}.
Eigen::MatrixXd localizing_matrix(const MomentSequence& z, const Polynomial& theta,
                                  unsigned order);

// Coefficient vector of p in the given basis (p must be supported in it).
Eigen::VectorXd coefficients_in_basis(const Polynomial& p, const MonomialBasis& basis);

// sum_i v_i b_i for the basis elements b_i.
Polynomial polynomial_from_coefficients(const Eigen::VectorXd& v, const MonomialBasis& basis);

}  // namespace convexcert
