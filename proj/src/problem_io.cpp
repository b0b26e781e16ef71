#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "convexcert/errors.hpp"
#include "convexcert/problem.hpp"

namespace convexcert {
namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

enum class TokenKind { number, ident, plus, minus, star, caret, lparen, rparen, end };

struct Token {
  TokenKind kind;
  std::string_view text;
  std::size_t column;  // 1-based, relative to the parsed string
  double value = 0.0;
  bool integral = false;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::size_t line, std::size_t column_offset)
      : text_(text), line_(line), offset_(column_offset) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text_.size()) {
      const char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      const std::size_t col = i + 1;
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t j = i;
        bool integral = true;
        while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        if (j < text_.size() && text_[j] == '.') {
          integral = false;
          ++j;
          while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        }
        if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
          if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
            integral = false;
            j = k;
            while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
          }
        }
        const std::string_view lit = text_.substr(i, j - i);
        double value = 0.0;
        const auto res = std::from_chars(lit.data(), lit.data() + lit.size(), value);
        if (res.ec != std::errc() || res.ptr != lit.data() + lit.size()) {
          fail("malformed number '" + std::string(lit) + "'", col);
        }
        out.push_back({TokenKind::number, lit, col, value, integral});
        i = j;
        continue;
      }
      if (is_ident_start(c)) {
        std::size_t j = i + 1;
        while (j < text_.size() && is_ident_char(text_[j])) ++j;
        out.push_back({TokenKind::ident, text_.substr(i, j - i), col});
        i = j;
        continue;
      }
      TokenKind kind;
      switch (c) {
        case '+': kind = TokenKind::plus; break;
        case '-': kind = TokenKind::minus; break;
        case '*': kind = TokenKind::star; break;
        case '^': kind = TokenKind::caret; break;
        case '(': kind = TokenKind::lparen; break;
        case ')': kind = TokenKind::rparen; break;
        default:
          fail(std::string("unexpected character '") + c + "'", col);
      }
      out.push_back({kind, text_.substr(i, 1), col});
      ++i;
    }
    out.push_back({TokenKind::end, {}, text_.size() + 1});
    return out;
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t col) const {
    throw ParseError(msg, line_, col + offset_);
  }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t offset_;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const VariableSpace& space,
         const std::vector<std::string>& names, std::size_t line, std::size_t offset)
      : tokens_(std::move(tokens)), space_(space), names_(names), line_(line), offset_(offset) {}

  Polynomial parse() {
    Polynomial p = expr();
    if (peek().kind != TokenKind::end) {
      if (peek().kind == TokenKind::rparen) fail("unbalanced ')'", peek().column);
      fail("expected an operator before '" + std::string(peek().text) +
               "' (implicit multiplication is not allowed)",
           peek().column);
    }
    return p;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg, std::size_t col) const {
    throw ParseError(msg, line_, col + offset_);
  }

  Polynomial expr() {
    Polynomial acc = term();
    while (peek().kind == TokenKind::plus || peek().kind == TokenKind::minus) {
      const bool minus = take().kind == TokenKind::minus;
      Polynomial rhs = term();
      acc = minus ? sub(acc, rhs) : add(acc, rhs);
    }
    return acc;
  }

  Polynomial term() {
    Polynomial acc = unary();
    while (peek().kind == TokenKind::star) {
      take();
      acc = mul(acc, unary());
    }
    return acc;
  }

  Polynomial unary() {
    if (peek().kind == TokenKind::minus) {
      take();
      return scale(unary(), -1.0);
    }
    if (peek().kind == TokenKind::plus) {
      take();
      return unary();
    }
    return power_expr();
  }

  Polynomial power_expr() {
    Polynomial base = primary();
    if (peek().kind != TokenKind::caret) return base;
    const Token caret = take();
    const Token& tok = peek();
    if (tok.kind == TokenKind::minus) fail("negative exponent", tok.column);
    if (tok.kind != TokenKind::number) fail("expected an integer exponent after '^'", caret.column);
    if (!tok.integral) fail("non-integer exponent '" + std::string(tok.text) + "'", tok.column);
    if (tok.value > 1000) fail("exponent too large", tok.column);
    take();
    if (peek().kind == TokenKind::caret) fail("chained '^' is ambiguous; use parentheses", peek().column);
    return power(base, static_cast<unsigned>(tok.value));
  }

  Polynomial primary() {
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::number:
        take();
        return Polynomial::constant(space_, tok.value);
      case TokenKind::ident: {
        take();
        return Polynomial::variable(space_, resolve(tok));
      }
      case TokenKind::lparen: {
        take();
        Polynomial inner = expr();
        if (peek().kind != TokenKind::rparen) fail("expected ')'", peek().column);
        take();
        return inner;
      }
      case TokenKind::end:
        fail("unexpected end of expression", tok.column);
      default:
        fail("unexpected '" + std::string(tok.text) + "'", tok.column);
    }
  }

  std::size_t resolve(const Token& tok) const {
    const std::string name(tok.text);
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    const auto defaults = default_variable_names(space_);
    for (std::size_t i = 0; i < defaults.size(); ++i) {
      if (defaults[i] == name) return i;
    }
    fail("unknown variable '" + name + "'", tok.column);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const VariableSpace& space_;
  const std::vector<std::string>& names_;
  std::size_t line_;
  std::size_t offset_;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void ProblemSpec::validate() const {
  if (n == 0) throw StructuralError("problem dimension must be at least 1");
  if (constraints.empty()) throw StructuralError("problem has no constraints");
  for (std::size_t j = 0; j < constraints.size(); ++j) {
    if (!(constraints[j].space() == space())) {
      throw StructuralError("constraint g" + std::to_string(j + 1) + " is not over the base space");
    }
    if (constraints[j].is_zero()) {
      throw StructuralError("constraint g" + std::to_string(j + 1) + " is the zero polynomial");
    }
  }
  if (!names.empty() && names.size() != n) throw StructuralError("variable name count differs from n");
}

ProblemSpec with_ball(const ProblemSpec& spec, double radius) {
  if (!(radius > 0)) throw StructuralError("ball radius must be positive");
  ProblemSpec out = spec;
  Polynomial ball = Polynomial::constant(spec.space(), radius * radius);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const Polynomial xi = Polynomial::variable(spec.space(), i);
    ball = sub(ball, mul(xi, xi));
  }
  out.constraints.push_back(std::move(ball));
  return out;
}

Polynomial parse_polynomial(std::string_view text, const VariableSpace& space,
                            const std::vector<std::string>& names, std::size_t line,
                            std::size_t column_offset) {
  Lexer lexer(text, line, column_offset);
  Parser parser(lexer.run(), space, names, line, column_offset);
  return parser.parse();
}

ProblemSpec parse_problem(std::string_view text) {
  ProblemSpec spec;
  bool have_vars = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (trim(raw).empty()) {
      if (end == text.size()) break;
      continue;
    }

    const std::size_t lead = raw.find_first_not_of(" \t");
    const auto colon = raw.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("expected 'vars:' or 'g:'", line_no, lead + 1);
    }
    const std::string_view key = trim(raw.substr(0, colon));
    const std::string_view body = raw.substr(colon + 1);

    if (key == "vars") {
      if (have_vars) throw ParseError("duplicate 'vars:' line", line_no, lead + 1);
      have_vars = true;
      std::size_t i = 0;
      while (i < body.size()) {
        const char c = body[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
          ++i;
          continue;
        }
        const std::size_t col = colon + 2 + i;
        if (!is_ident_start(c)) throw ParseError("invalid variable name", line_no, col);
        std::size_t j = i + 1;
        while (j < body.size() && is_ident_char(body[j])) ++j;
        std::string name(body.substr(i, j - i));
        for (const auto& existing : spec.names) {
          if (existing == name) {
            throw ParseError("duplicate variable name '" + name + "'", line_no, col);
          }
        }
        spec.names.push_back(std::move(name));
        i = j;
      }
      if (spec.names.empty()) throw ParseError("'vars:' declares no variables", line_no, colon + 2);
      spec.n = spec.names.size();
    } else if (key == "g") {
      if (!have_vars) throw ParseError("'g:' before the 'vars:' line", line_no, lead + 1);
      Polynomial g = parse_polynomial(body, spec.space(), spec.names, line_no, colon + 1);
      if (g.is_zero()) throw ParseError("constraint is the zero polynomial", line_no, colon + 2);
      spec.constraints.push_back(std::move(g));
    } else {
      throw ParseError("unknown key '" + std::string(key) + "'", line_no, lead + 1);
    }
    if (end == text.size()) break;
  }
  if (!have_vars) throw ParseError("missing 'vars:' line", line_no == 0 ? 1 : line_no, 1);
  if (spec.constraints.empty()) throw ParseError("no 'g:' constraints", line_no == 0 ? 1 : line_no, 1);
  return spec;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open problem file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string format_problem(const ProblemSpec& spec) {
  const auto names = spec.names.empty() ? default_variable_names(spec.space()) : spec.names;
  std::string out = "vars:";
  for (const auto& name : names) out += " " + name;
  out += "\n";
  for (const auto& g : spec.constraints) out += "g: " + to_string(g, names) + "\n";
  return out;
}

}  // namespace convexcert
