#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "convexcert/errors.hpp"
#include "convexcert/moment_refute.hpp"

using namespace convexcert;

namespace {

const char* kInterval = "vars: x1\ng: 1 - x1^2\n";
const char* kParabola = "vars: x1 x2\ng: x1^2 - x2\ng: 1 - x1^2\ng: 1 - x2^2\n";
const char* kTwoInterval = "vars: x1\ng: x1^2 - 1\ng: 4 - x1^2\n";

ProblemSpec spec_of(const char* text) { return parse_problem(text); }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  std::size_t i = 0;
  for (double a : v) out(i++) = a;
  return out;
}

Atom atom(std::initializer_list<double> v, double w) { return {vec(v), w}; }

}  // namespace

TEST(MomentSdp, IntervalLayout) {
  const MomentSdp m = build_moment_sdp(spec_of(kInterval), 0, 1);
  EXPECT_EQ(m.problem.blocks, (std::vector<std::size_t>{3, 1, 1}));
  EXPECT_EQ(m.layout.moments.size(), 6u);
  EXPECT_EQ(m.layout.basis.size(), 3u);
  EXPECT_EQ(m.layout.localizing_orders, (std::vector<unsigned>{0, 0}));
  EXPECT_EQ(m.objective, midpoint_substitute(spec_of(kInterval).constraints[0]));

  // The objective reads the coefficients of g(mid) at their moment positions.
  Eigen::MatrixXd x0(3, 3);
  x0 << 1, 0.1, 0.2, 0.1, 0.3, 0.4, 0.2, 0.4, 0.5;
  const MomentSequence z = moments_from_solution(m.layout, x0);
  EXPECT_DOUBLE_EQ(z.at({1, 1}), 0.4);
  EXPECT_DOUBLE_EQ(riesz_apply(z, m.objective), 1.0 - 0.25 * 0.3 - 0.5 * 0.4 - 0.25 * 0.5);
  double obj = 0.0;
  for (std::size_t b = 0; b < m.problem.objective.size(); ++b)
    if (b == 0) obj += m.problem.objective[b].inner(x0);
  EXPECT_NEAR(obj, riesz_apply(z, m.objective), 1e-15);
}

TEST(MomentSdp, OrderBelowVRejected) {
  const ProblemSpec spec = spec_of(kParabola);
  EXPECT_EQ(relaxation_v(spec), 1u);
  EXPECT_THROW(build_moment_sdp(spec, 0, 0), StructuralError);
  EXPECT_THROW(build_moment_sdp(spec, 3, 1), StructuralError);
}

TEST(MomentSdp, HalfDegrees) {
  const ProblemSpec spec = parse_problem("vars: x1\ng: x1\ng: 1 - x1^4\n");
  EXPECT_EQ(localizing_half_degrees(spec), (std::vector<unsigned>{1, 2, 1, 2}));
  EXPECT_EQ(relaxation_v(spec), 2u);
}

TEST(Relaxation, IntervalIsNonnegative) {
  const RelaxationResult r = solve_relaxation(spec_of(kInterval), 0, 1);
  ASSERT_EQ(r.status, RelaxationStatus::solved) << r.message;
  EXPECT_GE(r.rho, -1e-6);
}

TEST(Relaxation, Parabola) {
  const ProblemSpec spec = spec_of(kParabola);
  const RelaxationResult r = solve_relaxation(spec, 0, 2);
  ASSERT_EQ(r.status, RelaxationStatus::solved) << r.message;
  EXPECT_NEAR(r.rho, -1.0, 1e-5);
  const FlatnessReport f = rank_flatness_check(r);
  ASSERT_TRUE(f.flat);
  EXPECT_EQ(f.t, 2u);
  const ExtractionResult ex = extract_atoms(r, f.t);
  ASSERT_TRUE(ex.ok) << ex.message;
  ASSERT_EQ(ex.atoms.size(), 2u);
  for (const Atom& a : ex.atoms) {
    EXPECT_NEAR(a.weight, 0.5, 1e-4);
    EXPECT_NEAR(0.5 * (a.point(0) + a.point(2)), 0.0, 1e-4);
    EXPECT_NEAR(0.5 * (a.point(1) + a.point(3)), 1.0, 1e-4);
  }
  const WitnessCheck w = validate_witness(ex.atoms, spec, 0);
  ASSERT_TRUE(w.accepted);
  EXPECT_TRUE(recheck_witness(w.witness, spec));
  for (const auto& wa : w.witness.atoms) EXPECT_LE(wa.violation, -0.9);
}

TEST(Relaxation, TwoIntervalNotFlat) {
  const RelaxationResult r = solve_relaxation(spec_of(kTwoInterval), 0, 2);
  ASSERT_EQ(r.status, RelaxationStatus::solved) << r.message;
  EXPECT_NEAR(r.rho, -1.0, 1e-4);
  EXPECT_FALSE(rank_flatness_check(r).flat);
}

TEST(Relaxation, CallbackNamesProblem) {
  RelaxationOptions opt;
  std::string seen;
  opt.on_problem = [&](const std::string& name, const SdpProblem&) { seen = name; };
  solve_relaxation(spec_of(kInterval), 0, 1, opt);
  EXPECT_FALSE(seen.empty());
}

TEST(Rank, ThresholdAndGap) {
  EXPECT_EQ(numerical_rank(vec({3.0, 1.0, 1e-9})).rank, 2u);
  EXPECT_TRUE(numerical_rank(vec({3.0, 1.0, 1e-9})).confident);
  const NumericalRank amb = numerical_rank(vec({1.0, 1e-5, 1e-6 * 0.5}));
  EXPECT_EQ(amb.rank, 2u);
  EXPECT_FALSE(amb.confident);
  EXPECT_EQ(numerical_rank(vec({1.0, 0.5})).rank, 2u);
  EXPECT_TRUE(numerical_rank(vec({1.0, 0.5})).confident);
  // threshold is relative to max(1, sigma_max)
  EXPECT_EQ(numerical_rank(vec({1e-3, 1e-7})).rank, 1u);
}

TEST(Flatness, TwoAtoms) {
  const VariableSpace L = VariableSpace::pair(1);
  const MomentSequence z =
      atomic_moments(L, {vec({1.0, 1.0}), vec({-1.0, 0.5})}, {0.5, 0.5}, 4);
  const FlatnessReport f = rank_flatness_check(z, 2, 1);
  EXPECT_TRUE(f.flat);
  EXPECT_EQ(f.rank_s, 2u);
  EXPECT_EQ(f.rank_sv, 2u);
  EXPECT_EQ(f.t, 2u);
}

TEST(Flatness, Dirac) {
  const VariableSpace L = VariableSpace::pair(1);
  const FlatnessReport f = rank_flatness_check(atomic_moments(L, {vec({2.0, 3.0})}, {1.0}, 4), 2, 1);
  EXPECT_TRUE(f.flat);
  EXPECT_EQ(f.t, 1u);
}

TEST(Flatness, EightAtomsInFourVariables) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(Eigen::Vector4d::NullaryExpr([&]() { return u(rng); }));
  const MomentSequence z =
      atomic_moments(VariableSpace::pair(2), pts, std::vector<double>(8, 0.125), 4);
  const FlatnessReport f = rank_flatness_check(z, 2, 1);
  EXPECT_FALSE(f.flat);
  EXPECT_LE(f.rank_sv, 5u);
  EXPECT_EQ(f.rank_s, 8u);
}

TEST(Extraction, Dirac) {
  const VariableSpace L = VariableSpace::pair(1);
  const ExtractionResult ex = extract_atoms(atomic_moments(L, {vec({2.0, 3.0})}, {1.0}, 2), 1, 1, 1);
  ASSERT_TRUE(ex.ok) << ex.message;
  ASSERT_EQ(ex.atoms.size(), 1u);
  EXPECT_NEAR((ex.atoms[0].point - vec({2.0, 3.0})).norm(), 0.0, 1e-10);
  EXPECT_NEAR(ex.atoms[0].weight, 1.0, 1e-12);
}

TEST(Extraction, WeightedPair) {
  const VariableSpace L = VariableSpace::pair(1);
  const MomentSequence z = atomic_moments(L, {vec({1.0, 0.0}), vec({0.0, -1.0})}, {0.3, 0.7}, 4);
  const ExtractionResult ex = extract_atoms(z, 2, 1, 2, 0);
  ASSERT_TRUE(ex.ok) << ex.message;
  ASSERT_EQ(ex.atoms.size(), 2u);
  const Atom& a = ex.atoms[0].point(0) > 0.5 ? ex.atoms[0] : ex.atoms[1];
  const Atom& b = ex.atoms[0].point(0) > 0.5 ? ex.atoms[1] : ex.atoms[0];
  EXPECT_NEAR((a.point - vec({1.0, 0.0})).norm(), 0.0, 1e-8);
  EXPECT_NEAR((b.point - vec({0.0, -1.0})).norm(), 0.0, 1e-8);
  EXPECT_NEAR(a.weight, 0.3, 1e-8);
  EXPECT_NEAR(b.weight, 0.7, 1e-8);
  EXPECT_LE(ex.moment_residual, 1e-8);
}

TEST(Extraction, WrongRankFails) {
  const VariableSpace L = VariableSpace::pair(1);
  const MomentSequence z = atomic_moments(L, {vec({1.0, 0.0}), vec({0.0, -1.0})}, {0.3, 0.7}, 4);
  const ExtractionResult ex = extract_atoms(z, 2, 1, 1, 0);
  EXPECT_FALSE(ex.ok);
  EXPECT_EQ(ex.message.rfind("extraction-failed", 0), 0u);
}

TEST(Witness, ParabolaAtomsAccepted) {
  const ProblemSpec spec = spec_of(kParabola);
  const WitnessCheck w =
      validate_witness({atom({1, 1, -1, 1}, 0.5), atom({-1, 1, 1, 1}, 0.5)}, spec, 0);
  ASSERT_TRUE(w.accepted);
  ASSERT_EQ(w.witness.atoms.size(), 2u);
  EXPECT_DOUBLE_EQ(w.witness.atoms[0].violation, -1.0);
  EXPECT_DOUBLE_EQ(w.witness.atoms[0].midpoint(1), 1.0);
  EXPECT_TRUE(w.dropped.empty());
}

TEST(Witness, InfeasibleAtomDropped) {
  const ProblemSpec spec = spec_of(kParabola);
  // x1 = sqrt(1 + 1e-3) gives g2(x) = -1e-3.
  const double s = std::sqrt(1.0 + 1e-3);
  const WitnessCheck w =
      validate_witness({atom({s, 1, -1, 1}, 0.4), atom({-1, 1, 1, 1}, 0.6)}, spec, 0);
  ASSERT_TRUE(w.accepted);
  ASSERT_EQ(w.witness.atoms.size(), 1u);
  EXPECT_DOUBLE_EQ(w.witness.atoms[0].weight, 1.0);
  ASSERT_EQ(w.dropped.size(), 1u);

  const WitnessCheck none = validate_witness({atom({s, 1, -1, 1}, 1.0)}, spec, 0);
  EXPECT_FALSE(none.accepted);
}

TEST(Witness, ConvexSpecRejectsEverything) {
  const ProblemSpec spec = spec_of(kInterval);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 200; ++i) {
    const WitnessCheck w = validate_witness({atom({u(rng), u(rng)}, 1.0)}, spec, 0);
    EXPECT_FALSE(w.accepted);
  }
}

TEST(Witness, RecheckDetectsTampering) {
  const ProblemSpec spec = spec_of(kParabola);
  WitnessCheck w = validate_witness({atom({1, 1, -1, 1}, 1.0)}, spec, 0);
  ASSERT_TRUE(w.accepted);
  EXPECT_TRUE(recheck_witness(w.witness, spec));
  w.witness.atoms[0].x(1) = 2.0;
  EXPECT_FALSE(recheck_witness(w.witness, spec));
}

TEST(GridSearch, MatchesScalarOracle) {
  const ProblemSpec spec = spec_of(kParabola);
  const auto got = midpoint_grid_search(spec, 0, -1.0, 1.0, 9);
  ASSERT_TRUE(got);
  double best = 1e300;
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b)
      for (int c = 0; c < 9; ++c)
        for (int d = 0; d < 9; ++d) {
          const double x1 = -1 + 0.25 * a, x2 = -1 + 0.25 * b;
          const double y1 = -1 + 0.25 * c, y2 = -1 + 0.25 * d;
          if (x1 * x1 - x2 < 0 || y1 * y1 - y2 < 0) continue;
          const double m1 = 0.5 * (x1 + y1), m2 = 0.5 * (x2 + y2);
          best = std::min(best, m1 * m1 - m2);
        }
  EXPECT_NEAR(got->value, best, 1e-12);
  EXPECT_NEAR(best, -1.0, 1e-12);
}

TEST(GridSearch, BoundsRelaxationFromAbove) {
  const ProblemSpec spec = spec_of(kTwoInterval);
  const auto grid = midpoint_grid_search(spec, 0, -2.0, 2.0, 41);
  ASSERT_TRUE(grid);
  for (unsigned s = 1; s <= 3; ++s) {
    const RelaxationResult r = solve_relaxation(spec, 0, s);
    ASSERT_EQ(r.status, RelaxationStatus::solved);
    EXPECT_LE(r.rho, grid->value + 1e-6);
  }
}

TEST(GridSearch, EmptyWhenNothingFeasible) {
  const ProblemSpec spec = spec_of("vars: x1\ng: x1 - 5\n");
  EXPECT_FALSE(midpoint_grid_search(spec, 0, -1.0, 1.0, 11).has_value());
}

TEST(Relaxation, NoncompactHyperbolaUnbounded) {
  const RelaxationResult r = solve_relaxation(spec_of("vars: x1 x2\ng: x1*x2 - 1\n"), 0, 1);
  EXPECT_EQ(r.status, RelaxationStatus::unbounded);
  EXPECT_EQ(to_string(r.status), "inconclusive-unbounded");
  EXPECT_NE(r.message.find("--ball"), std::string::npos);
}
