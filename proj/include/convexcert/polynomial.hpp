#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace convexcert {

// Coefficients with magnitude below this are dropped after every operation.
inline constexpr double kDropTolerance = 1e-12;

// Either the base space R^n (x_1..x_n) or the lifted space R^{2n} holding the
// pair (x, y) ordered x_1..x_n, y_1..y_n.
struct VariableSpace {
  std::size_t n = 1;
  bool lifted = false;

  static VariableSpace base(std::size_t n) { return {n, false}; }
  static VariableSpace pair(std::size_t n) { return {n, true}; }

  std::size_t arity() const { return lifted ? 2 * n : n; }
  VariableSpace lifted_space() const { return {n, true}; }

  friend bool operator==(const VariableSpace&, const VariableSpace&) = default;
};

using Exponent = std::vector<unsigned>;

unsigned total_degree(const Exponent& e);
Exponent exponent_sum(const Exponent& a, const Exponent& b);

// Graded order: lower total degree first, ties broken by descending
// lexicographic order (x1^2 before x1*y1 before y1^2).
struct GradedLexLess {
  bool operator()(const Exponent& a, const Exponent& b) const;
};

class Polynomial {
 public:
  using TermMap = std::map<Exponent, double, GradedLexLess>;

  explicit Polynomial(VariableSpace space = {});

  static Polynomial constant(VariableSpace space, double c);
  static Polynomial variable(VariableSpace space, std::size_t index);
  static Polynomial monomial(VariableSpace space, Exponent e, double c = 1.0);

  const VariableSpace& space() const { return space_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  // Maximum total degree; 0 for the zero polynomial.
  unsigned degree() const;
  double coefficient(const Exponent& e) const;

  // Accumulates c into the coefficient of e, dropping it if it cancels.
  void add_term(const Exponent& e, double c);

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  VariableSpace space_;
  TermMap terms_;
};

Polynomial add(const Polynomial& a, const Polynomial& b);
Polynomial sub(const Polynomial& a, const Polynomial& b);
Polynomial mul(const Polynomial& a, const Polynomial& b);
Polynomial scale(const Polynomial& a, double s);
Polynomial power(const Polynomial& a, unsigned k);

inline Polynomial operator+(const Polynomial& a, const Polynomial& b) { return add(a, b); }
inline Polynomial operator-(const Polynomial& a, const Polynomial& b) { return sub(a, b); }
inline Polynomial operator*(const Polynomial& a, const Polynomial& b) { return mul(a, b); }
inline Polynomial operator*(double s, const Polynomial& a) { return scale(a, s); }
inline Polynomial operator-(const Polynomial& a) { return scale(a, -1.0); }

double evaluate(const Polynomial& p, std::span<const double> point);

// (x, y) -> g((x + y) / 2) for g over the base space.
Polynomial midpoint_substitute(const Polynomial& g);

enum class Side { x, y };

// Embeds g over R^n into R^{2n} on the x block or the y block.
Polynomial lift(const Polynomial& g, Side side);

// Max |a_e - b_e| over the union of supports.
double coeff_linf_distance(const Polynomial& a, const Polynomial& b);

// Default names are x1..xn in the base space and x1..xn, y1..yn when lifted.
std::vector<std::string> default_variable_names(const VariableSpace& space);

std::string to_string(const Polynomial& p);
std::string to_string(const Polynomial& p, const std::vector<std::string>& names);

}  // namespace convexcert
