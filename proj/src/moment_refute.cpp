#include "convexcert/moment_refute.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "convexcert/errors.hpp"
#include "convexcert/simd/kernels.hpp"
#include "convexcert/sos_certify.hpp"

namespace convexcert {
namespace {

std::vector<std::pair<std::size_t, std::size_t>> canonical_positions(const MonomialBasis& basis,
                                                                     const MonomialBasis& moments) {
  std::vector<std::pair<std::size_t, std::size_t>> pos(moments.size());
  std::vector<bool> seen(moments.size(), false);
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = a; b < basis.size(); ++b) {
      const auto idx = *moments.index_of(exponent_sum(basis.elements[a], basis.elements[b]));
      if (!seen[idx]) {
        seen[idx] = true;
        pos[idx] = {a, b};
      }
    }
  }
  return pos;
}

double max_violation(const std::vector<Polynomial>& constraints, const Eigen::VectorXd& p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& g : constraints) {
    worst = std::max(worst, -evaluate(g, std::span<const double>(p.data(), p.size())));
  }
  return worst;
}

struct OwnedFlat {
  std::vector<double> coeffs;
  std::vector<unsigned> exps;
  std::size_t arity = 0;

  explicit OwnedFlat(const Polynomial& p) : arity(p.space().arity()) {
    for (const auto& [e, c] : p.terms()) {
      coeffs.push_back(c);
      exps.insert(exps.end(), e.begin(), e.end());
    }
  }
  simd::FlatPolynomial view() const { return {coeffs, exps, arity}; }
};

}  // namespace

std::vector<unsigned> localizing_half_degrees(const ProblemSpec& spec) {
  std::vector<unsigned> v;
  for (const auto& g : lifted_constraints(spec)) v.push_back(half_degree(g));
  return v;
}

unsigned relaxation_v(const ProblemSpec& spec) {
  const auto v = localizing_half_degrees(spec);
  return v.empty() ? 0u : *std::max_element(v.begin(), v.end());
}

std::string to_string(RelaxationStatus status) {
  switch (status) {
    case RelaxationStatus::solved:
      return "solved";
    case RelaxationStatus::unbounded:
      return "inconclusive-unbounded";
    case RelaxationStatus::infeasible:
      return "infeasible";
    case RelaxationStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

MomentSdp build_moment_sdp(const ProblemSpec& spec, std::size_t j, unsigned s) {
  spec.validate();
  if (j >= spec.m()) throw StructuralError("constraint index out of range");
  const unsigned v = relaxation_v(spec);
  if (s < v) {
    throw StructuralError("relaxation order " + std::to_string(s) + " is below v = " +
                          std::to_string(v));
  }
  const VariableSpace pair = spec.space().lifted_space();
  const auto lifted = lifted_constraints(spec);
  const auto vk = localizing_half_degrees(spec);

  MomentSdp out{SdpProblem{}, MomentLayout{}, midpoint_substitute(spec.constraints[j])};
  MomentLayout& lay = out.layout;
  lay.order = s;
  lay.basis = basis_enumerate(pair, s);
  lay.moments = basis_enumerate(pair, 2 * s);
  lay.canonical = canonical_positions(lay.basis, lay.moments);
  for (unsigned h : vk) lay.localizing_orders.push_back(s - h);

  SdpProblem& sdp = out.problem;
  const std::size_t b0 = sdp.add_block(lay.basis.size());
  auto canon = [&](const Exponent& e) { return lay.canonical[*lay.moments.index_of(e)]; };

  // z_0 = 1
  sdp.coefficient(sdp.add_equality(1.0), b0).add_linear(0, 0, 1.0);

  // Hankel structure of M_s(z)
  for (std::size_t a = 0; a < lay.basis.size(); ++a) {
    for (std::size_t b = a; b < lay.basis.size(); ++b) {
      const auto [ca, cb] = canon(exponent_sum(lay.basis.elements[a], lay.basis.elements[b]));
      if (ca == a && cb == b) continue;
      auto& row = sdp.coefficient(sdp.add_equality(0.0), b0);
      row.add_linear(a, b, 1.0);
      row.add_linear(ca, cb, -1.0);
    }
  }

  for (std::size_t k = 0; k < lifted.size(); ++k) {
    const MonomialBasis lb = basis_enumerate(pair, lay.localizing_orders[k]);
    const std::size_t blk = sdp.add_block(lb.size());
    for (std::size_t a = 0; a < lb.size(); ++a) {
      for (std::size_t b = a; b < lb.size(); ++b) {
        const std::size_t eq = sdp.add_equality(0.0);
        sdp.coefficient(eq, blk).add_linear(a, b, 1.0);
        auto& row0 = sdp.coefficient(eq, b0);
        const Exponent ab = exponent_sum(lb.elements[a], lb.elements[b]);
        for (const auto& [g, c] : lifted[k].terms()) {
          const auto [ca, cb] = canon(exponent_sum(ab, g));
          row0.add_linear(ca, cb, -c);
        }
      }
    }
  }

  sdp.objective.assign(sdp.blocks.size(), SymMatrix{});
  for (const auto& [e, c] : out.objective.terms()) {
    const auto [ca, cb] = canon(e);
    sdp.objective[b0].add_linear(ca, cb, c);
  }
  return out;
}

MomentSequence moments_from_solution(const MomentLayout& layout, const Eigen::MatrixXd& x0) {
  MomentSequence z(layout.basis.space, 2 * layout.order);
  for (std::size_t i = 0; i < layout.moments.size(); ++i) {
    const auto [a, b] = layout.canonical[i];
    z.set(layout.moments.elements[i],
          0.5 * (x0(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +
                 x0(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a))));
  }
  return z;
}

RelaxationResult solve_relaxation(const ProblemSpec& spec, std::size_t j, unsigned s,
                                  const RelaxationOptions& options) {
  MomentSdp m = build_moment_sdp(spec, j, s);
  if (options.on_problem) {
    options.on_problem("moment_g" + std::to_string(j + 1) + "_s" + std::to_string(s), m.problem);
  }
  const auto start = std::chrono::steady_clock::now();
  const SdpSolution sol = solve(m.problem, options.solver);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RelaxationResult r;
  r.j = j;
  r.s = s;
  r.v = relaxation_v(spec);
  r.solver = summarize(m.problem, sol, secs);
  switch (sol.status) {
    case SdpStatus::optimal:
      r.status = RelaxationStatus::solved;
      break;
    case SdpStatus::unbounded:
      r.status = RelaxationStatus::unbounded;
      r.rho = -std::numeric_limits<double>::infinity();
      r.message =
          "relaxation is unbounded below (K may be non-compact); rerun with --ball R, which "
          "adds R^2 - |x|^2 >= 0 and changes the set under test";
      return r;
    case SdpStatus::infeasible:
      r.status = RelaxationStatus::infeasible;
      r.message = "relaxation is infeasible (K appears to be empty)";
      return r;
    case SdpStatus::stalled:
      r.status = RelaxationStatus::stalled;
      r.message = "solver stalled: " + sol.diagnostic;
      return r;
  }
  r.z = moments_from_solution(m.layout, sol.X[0]);
  r.rho = riesz_apply(r.z, m.objective);
  const unsigned v = std::max(1u, r.v);
  r.spectrum_s = singular_values(moment_matrix(r.z, s));
  r.spectrum_sv = singular_values(moment_matrix(r.z, s >= v ? s - v : 0));
  return r;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();  // descending
}

NumericalRank numerical_rank(const Eigen::VectorXd& sv) {
  NumericalRank out;
  if (sv.size() == 0) return out;
  const double cut = kRankThreshold * std::max(1.0, sv(0));
  while (out.rank < static_cast<std::size_t>(sv.size()) &&
         sv(static_cast<Eigen::Index>(out.rank)) >= cut) {
    ++out.rank;
  }
  if (out.rank > 0 && out.rank < static_cast<std::size_t>(sv.size())) {
    const double next = sv(static_cast<Eigen::Index>(out.rank));
    const double last = sv(static_cast<Eigen::Index>(out.rank - 1));
    out.confident = next <= 0.0 || last / next >= kRankGap;
  }
  return out;
}

FlatnessReport rank_flatness_check(const Eigen::VectorXd& spectrum_s,
                                   const Eigen::VectorXd& spectrum_sv) {
  const NumericalRank rs = numerical_rank(spectrum_s);
  const NumericalRank rv = numerical_rank(spectrum_sv);
  FlatnessReport f;
  f.rank_s = rs.rank;
  f.rank_sv = rv.rank;
  f.ambiguous = !rs.confident || !rv.confident;
  f.flat = !f.ambiguous && rs.rank == rv.rank && rs.rank > 0;
  f.t = f.flat ? rs.rank : 0;
  return f;
}

FlatnessReport rank_flatness_check(const MomentSequence& z, unsigned s, unsigned v) {
  v = std::max(1u, v);
  if (s < v) throw StructuralError("flatness needs s >= v");
  return rank_flatness_check(singular_values(moment_matrix(z, s)),
                             singular_values(moment_matrix(z, s - v)));
}

FlatnessReport rank_flatness_check(const RelaxationResult& result) {
  if (result.status != RelaxationStatus::solved) return {};
  return rank_flatness_check(result.spectrum_s, result.spectrum_sv);
}

ExtractionResult extract_atoms(const RelaxationResult& result, std::size_t t, std::uint64_t seed) {
  if (result.status != RelaxationStatus::solved) {
    ExtractionResult e;
    e.message = "relaxation was not solved";
    return e;
  }
  return extract_atoms(result.z, result.s, result.v, t, seed);
}

WitnessCheck validate_witness(const std::vector<Atom>& atoms, const ProblemSpec& spec,
                              std::size_t j, double tol_feas) {
  WitnessCheck out;
  out.witness.j = j;
  if (j >= spec.m()) {
    out.dropped.push_back("constraint index out of range");
    return out;
  }
  const double tol_strict = 10.0 * tol_feas;
  const auto n = static_cast<Eigen::Index>(spec.n);
  double mass = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Atom& a = atoms[i];
    const std::string tag = "atom " + std::to_string(i + 1) + ": ";
    if (a.point.size() != 2 * n) {
      out.dropped.push_back(tag + "wrong dimension");
      continue;
    }
    WitnessAtom w;
    w.x = a.point.head(n);
    w.y = a.point.tail(n);
    w.weight = a.weight;
    w.midpoint = 0.5 * (w.x + w.y);
    w.feasibility_x = max_violation(spec.constraints, w.x);
    w.feasibility_y = max_violation(spec.constraints, w.y);
    w.violation = evaluate(spec.constraints[j],
                           std::span<const double>(w.midpoint.data(), w.midpoint.size()));
    if (!(w.feasibility_x <= tol_feas) || !(w.feasibility_y <= tol_feas)) {
      out.dropped.push_back(tag + "outside K");
      continue;
    }
    if (!(w.violation <= -tol_strict)) {
      out.dropped.push_back(tag + "midpoint does not violate g" + std::to_string(j + 1));
      continue;
    }
    mass += std::max(0.0, w.weight);
    out.witness.atoms.push_back(std::move(w));
  }
  for (auto& w : out.witness.atoms) {
    w.weight = mass > 0 ? std::max(0.0, w.weight) / mass
                        : 1.0 / static_cast<double>(out.witness.atoms.size());
  }
  out.accepted = !out.witness.atoms.empty();
  return out;
}

bool recheck_witness(const NonconvexityWitness& witness, const ProblemSpec& spec, double tol_feas) {
  if (witness.atoms.empty() || witness.j >= spec.m()) return false;
  const auto n = static_cast<Eigen::Index>(spec.n);
  for (const auto& a : witness.atoms) {
    if (a.x.size() != n || a.y.size() != n) return false;
    if (!(max_violation(spec.constraints, a.x) <= tol_feas)) return false;
    if (!(max_violation(spec.constraints, a.y) <= tol_feas)) return false;
    const Eigen::VectorXd mid = 0.5 * (a.x + a.y);
    if (!(evaluate(spec.constraints[witness.j], std::span<const double>(mid.data(), mid.size())) <=
          -10.0 * tol_feas)) {
      return false;
    }
  }
  return true;
}

std::optional<GridMinimum> midpoint_grid_search(const ProblemSpec& spec, std::size_t j, double lo,
                                                double hi, std::size_t points_per_axis) {
  spec.validate();
  if (j >= spec.m()) throw StructuralError("constraint index out of range");
  if (points_per_axis < 2 || !(hi > lo)) throw StructuralError("grid needs hi > lo and >= 2 points");
  const std::size_t arity = 2 * spec.n;
  std::vector<OwnedFlat> feas;
  for (const auto& g : lifted_constraints(spec)) feas.emplace_back(g);
  const OwnedFlat target(midpoint_substitute(spec.constraints[j]));

  std::size_t total = 1;
  for (std::size_t k = 0; k < arity; ++k) {
    if (total > std::numeric_limits<std::size_t>::max() / points_per_axis) {
      throw StructuralError("grid is too large");
    }
    total *= points_per_axis;
  }
  const double step = (hi - lo) / static_cast<double>(points_per_axis - 1);
  constexpr std::size_t kChunk = 4096;
  std::vector<double> coords(arity * kChunk), values(kChunk), best_here(kChunk);
  std::optional<GridMinimum> best;

  for (std::size_t begin = 0; begin < total; begin += kChunk) {
    const std::size_t count = std::min(kChunk, total - begin);
    for (std::size_t p = 0; p < count; ++p) {
      std::size_t idx = begin + p;
      for (std::size_t k = 0; k < arity; ++k) {
        coords[k * kChunk + p] = lo + step * static_cast<double>(idx % points_per_axis);
        idx /= points_per_axis;
      }
    }
    const simd::PointBatch batch{coords, arity, count, kChunk};
    std::fill(best_here.begin(), best_here.begin() + static_cast<std::ptrdiff_t>(count), 0.0);
    for (const auto& g : feas) {
      simd::evaluate_batch(g.view(), batch, values);
      for (std::size_t p = 0; p < count; ++p) best_here[p] = std::min(best_here[p], values[p]);
    }
    simd::evaluate_batch(target.view(), batch, values);
    for (std::size_t p = 0; p < count; ++p) {
      if (best_here[p] < 0.0) continue;  // (x, y) not in K x K
      if (best && values[p] >= best->value) continue;
      GridMinimum g{values[p], Eigen::VectorXd(spec.n), Eigen::VectorXd(spec.n)};
      for (std::size_t k = 0; k < spec.n; ++k) {
        g.x(static_cast<Eigen::Index>(k)) = coords[k * kChunk + p];
        g.y(static_cast<Eigen::Index>(k)) = coords[(spec.n + k) * kChunk + p];
      }
      best = std::move(g);
    }
  }
  return best;
}

}  // namespace convexcert
