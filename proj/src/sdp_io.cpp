#include <cstdio>
#include <fstream>
#include <sstream>

#include "convexcert/errors.hpp"
#include "convexcert/sdp.hpp"

namespace convexcert {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& out, std::size_t matno, std::size_t block, const SymMatrix& a) {
  for (const auto& e : a.entries()) {
    if (e.value == 0.0) continue;
    out << matno << ' ' << block + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << num(e.value)
        << '\n';
  }
}

}  // namespace

void write_sdp(const SdpProblem& problem, std::ostream& out) {
  out << "# minimize sum <C,X> s.t. sum <A_i,X> = b_i, X PSD\n";
  out << "# entry lines: matrix(0=C, i=A_i) block row col value, 1-based, row <= col\n";
  out << "sdp " << problem.blocks.size() << ' ' << problem.equalities.size() << '\n';
  out << "blocks";
  for (auto d : problem.blocks) out << ' ' << d;
  out << '\n';
  for (std::size_t i = 0; i < problem.equalities.size(); ++i) {
    out << "rhs " << i + 1 << ' ' << num(problem.equalities[i].rhs) << '\n';
  }
  for (std::size_t k = 0; k < problem.objective.size(); ++k) write_matrix(out, 0, k, problem.objective[k]);
  for (std::size_t i = 0; i < problem.equalities.size(); ++i) {
    for (const auto& [blk, a] : problem.equalities[i].blocks) write_matrix(out, i + 1, blk, a);
  }
}

void write_sdp(const SdpProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_sdp(problem, out);
}

SdpProblem read_sdp(std::istream& in) {
  SdpProblem problem;
  std::string line;
  std::size_t nblocks = 0, neq = 0;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "sdp") {
      ls >> nblocks >> neq;
      header = true;
      for (std::size_t i = 0; i < neq; ++i) problem.add_equality(0.0);
    } else if (head == "blocks") {
      std::size_t d;
      while (ls >> d) problem.add_block(d);
      if (problem.blocks.size() != nblocks) throw ParseError("block count mismatch", line_no, 1);
    } else if (head == "rhs") {
      std::size_t i;
      double v;
      if (!(ls >> i >> v) || i == 0 || i > neq) throw ParseError("bad rhs line", line_no, 1);
      problem.equalities[i - 1].rhs = v;
    } else {
      if (!header) throw ParseError("entry before header", line_no, 1);
      std::istringstream es(line);
      std::size_t mat, blk, r, c;
      double v;
      if (!(es >> mat >> blk >> r >> c >> v) || blk == 0 || blk > problem.blocks.size() || r == 0 ||
          c == 0 || mat > neq) {
        throw ParseError("bad entry line", line_no, 1);
      }
      SymMatrix& target = mat == 0 ? problem.objective[blk - 1] : problem.coefficient(mat - 1, blk - 1);
      target.add(r - 1, c - 1, v);
    }
  }
  if (!header) throw ParseError("missing 'sdp' header", line_no, 1);
  problem.validate();
  return problem;
}

}  // namespace convexcert
