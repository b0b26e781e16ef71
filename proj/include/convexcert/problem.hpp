#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "convexcert/polynomial.hpp"

namespace convexcert {

// K = { x in R^n : g_j(x) >= 0, j = 1..m }.
struct ProblemSpec {
  std::size_t n = 0;
  std::vector<Polynomial> constraints;
  std::vector<std::string> names;

  VariableSpace space() const { return VariableSpace::base(n); }
  std::size_t m() const { return constraints.size(); }

  // Throws StructuralError unless m >= 1 and every g_j is a non-zero
  // polynomial over the base space.
  void validate() const;
};

// Adds R^2 - ||x||^2 >= 0. This changes the set under test.
ProblemSpec with_ball(const ProblemSpec& spec, double radius);

// Grammar (whitespace-insensitive):
//   expr    := term (('+' | '-') term)*
//   term    := unary ('*' unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' integer)?
//   primary := number | identifier | '(' expr ')'
// Identifiers are the declared names or x1..xn. Juxtaposition is an error.
// `line` is only used for error positions.
Polynomial parse_polynomial(std::string_view text, const VariableSpace& space,
                            const std::vector<std::string>& names = {},
                            std::size_t line = 1, std::size_t column_offset = 0);

// Line-oriented problem file: one `vars:` line, one `g:` line per constraint,
// `#` comments, blank lines ignored.
ProblemSpec parse_problem(std::string_view text);

ProblemSpec load_problem(const std::filesystem::path& path);

// Inverse of parse_problem (up to formatting).
std::string format_problem(const ProblemSpec& spec);

}  // namespace convexcert
