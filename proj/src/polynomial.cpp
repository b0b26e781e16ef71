#include "convexcert/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "convexcert/errors.hpp"

namespace convexcert {
namespace {

void require_same_space(const Polynomial& a, const Polynomial& b, const char* op) {
  if (!(a.space() == b.space())) {
    throw StructuralError(std::string(op) + ": operands live in different variable spaces");
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

unsigned total_degree(const Exponent& e) {
  return std::accumulate(e.begin(), e.end(), 0u);
}

Exponent exponent_sum(const Exponent& a, const Exponent& b) {
  Exponent r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

bool GradedLexLess::operator()(const Exponent& a, const Exponent& b) const {
  const unsigned da = total_degree(a);
  const unsigned db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

Polynomial::Polynomial(VariableSpace space) : space_(space) {
  if (space.n == 0) throw StructuralError("variable space must have n >= 1");
}

Polynomial Polynomial::constant(VariableSpace space, double c) {
  Polynomial p(space);
  p.add_term(Exponent(space.arity(), 0), c);
  return p;
}

Polynomial Polynomial::variable(VariableSpace space, std::size_t index) {
  if (index >= space.arity()) throw StructuralError("variable index out of range");
  Exponent e(space.arity(), 0);
  e[index] = 1;
  return monomial(space, std::move(e));
}

Polynomial Polynomial::monomial(VariableSpace space, Exponent e, double c) {
  if (e.size() != space.arity()) throw StructuralError("exponent arity mismatch");
  Polynomial p(space);
  p.add_term(e, c);
  return p;
}

unsigned Polynomial::degree() const {
  // graded order: the last key has maximal degree
  return terms_.empty() ? 0u : total_degree(terms_.rbegin()->first);
}

double Polynomial::coefficient(const Exponent& e) const {
  const auto it = terms_.find(e);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Exponent& e, double c) {
  if (e.size() != space_.arity()) throw StructuralError("exponent arity mismatch");
  auto [it, inserted] = terms_.try_emplace(e, 0.0);
  it->second += c;
  if (std::abs(it->second) < kDropTolerance) terms_.erase(it);
}

Polynomial add(const Polynomial& a, const Polynomial& b) {
  require_same_space(a, b, "add");
  Polynomial r = a;
  for (const auto& [e, c] : b.terms()) r.add_term(e, c);
  return r;
}

Polynomial sub(const Polynomial& a, const Polynomial& b) {
  require_same_space(a, b, "sub");
  Polynomial r = a;
  for (const auto& [e, c] : b.terms()) r.add_term(e, -c);
  return r;
}

Polynomial mul(const Polynomial& a, const Polynomial& b) {
  require_same_space(a, b, "mul");
  // accumulate in an exact-key map first so intermediate cancellations are
  // not subject to the drop threshold term by term
  std::map<Exponent, double, GradedLexLess> acc;
  for (const auto& [ea, ca] : a.terms()) {
    for (const auto& [eb, cb] : b.terms()) acc[exponent_sum(ea, eb)] += ca * cb;
  }
  Polynomial r(a.space());
  for (const auto& [e, c] : acc) r.add_term(e, c);
  return r;
}

Polynomial scale(const Polynomial& a, double s) {
  Polynomial r(a.space());
  for (const auto& [e, c] : a.terms()) r.add_term(e, s * c);
  return r;
}

Polynomial power(const Polynomial& a, unsigned k) {
  Polynomial r = Polynomial::constant(a.space(), 1.0);
  Polynomial base = a;
  while (k > 0) {
    if (k & 1u) r = mul(r, base);
    k >>= 1;
    if (k > 0) base = mul(base, base);
  }
  return r;
}

double evaluate(const Polynomial& p, std::span<const double> point) {
  if (point.size() != p.space().arity()) {
    throw StructuralError("evaluate: point has " + std::to_string(point.size()) +
                          " coordinates, polynomial expects " +
                          std::to_string(p.space().arity()));
  }
  double sum = 0.0;
  for (const auto& [e, c] : p.terms()) {
    double term = c;
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (unsigned r = 0; r < e[i]; ++r) term *= point[i];
    }
    sum += term;
  }
  return sum;
}

Polynomial midpoint_substitute(const Polynomial& g) {
  if (g.space().lifted) throw StructuralError("midpoint_substitute: input is already lifted");
  const std::size_t n = g.space().n;
  const VariableSpace pair = g.space().lifted_space();

  // powers of (x_i + y_i)/2, built lazily per coordinate
  std::vector<std::vector<Polynomial>> halves(n);
  auto half_power = [&](std::size_t i, unsigned k) -> const Polynomial& {
    auto& cache = halves[i];
    if (cache.empty()) {
      cache.push_back(Polynomial::constant(pair, 1.0));
    }
    while (cache.size() <= k) {
      const Polynomial mid = scale(
          add(Polynomial::variable(pair, i), Polynomial::variable(pair, n + i)), 0.5);
      cache.push_back(mul(cache.back(), mid));
    }
    return cache[k];
  };

  Polynomial r(pair);
  for (const auto& [e, c] : g.terms()) {
    Polynomial term = Polynomial::constant(pair, c);
    for (std::size_t i = 0; i < n; ++i) {
      if (e[i] > 0) term = mul(term, half_power(i, e[i]));
    }
    r = add(r, term);
  }
  return r;
}

Polynomial lift(const Polynomial& g, Side side) {
  if (g.space().lifted) throw StructuralError("lift: input is already lifted");
  const std::size_t n = g.space().n;
  Polynomial r(g.space().lifted_space());
  for (const auto& [e, c] : g.terms()) {
    Exponent le(2 * n, 0);
    const std::size_t offset = side == Side::x ? 0 : n;
    std::copy(e.begin(), e.end(), le.begin() + static_cast<std::ptrdiff_t>(offset));
    r.add_term(le, c);
  }
  return r;
}

double coeff_linf_distance(const Polynomial& a, const Polynomial& b) {
  require_same_space(a, b, "coeff_linf_distance");
  double worst = 0.0;
  for (const auto& [e, c] : a.terms()) worst = std::max(worst, std::abs(c - b.coefficient(e)));
  for (const auto& [e, c] : b.terms()) {
    if (!a.terms().contains(e)) worst = std::max(worst, std::abs(c));
  }
  return worst;
}

std::vector<std::string> default_variable_names(const VariableSpace& space) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < space.n; ++i) names.push_back("x" + std::to_string(i + 1));
  if (space.lifted) {
    for (std::size_t i = 0; i < space.n; ++i) names.push_back("y" + std::to_string(i + 1));
  }
  return names;
}

std::string to_string(const Polynomial& p) {
  return to_string(p, default_variable_names(p.space()));
}

std::string to_string(const Polynomial& p, const std::vector<std::string>& names) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    const bool negative = c < 0;
    const double mag = std::abs(c);
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;

    std::string mono;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += names.at(i);
      if (e[i] > 1) mono += "^" + std::to_string(e[i]);
    }
    if (mono.empty()) {
      out += format_number(mag);
    } else if (mag == 1.0) {
      out += mono;
    } else {
      out += format_number(mag) + "*" + mono;
    }
  }
  return out;
}

}  // namespace convexcert
