#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ripr/divergence.hpp"
#include "ripr/evalue.hpp"
#include "ripr/subprob.hpp"

using namespace ripr;

TEST(CountableExample, FourPointArithmetic) {
  EXPECT_DOUBLE_EQ(countable_q1(4), 1.0 / 3);
  EXPECT_DOUBLE_EQ(countable_qn(4), 2.0 / 3);
  EXPECT_DOUBLE_EQ(countable_q1(4) + countable_qn(4) / 4, 0.5);
  EXPECT_NEAR(countable_divergence(4), std::log(3.0), 1e-15);
  EXPECT_NEAR(countable_divergence(4), 1.0986123, 1e-7);
}

TEST(CountableExample, SequenceSatisfiesConstraintAndDivergence) {
  const auto ex = countable_example(100);
  ASSERT_EQ(ex.sequence.size(), 99u);
  for (long n : {4L, 10L, 100L}) {
    const auto& q = ex.sequence[static_cast<std::size_t>(n - 2)];
    EXPECT_TRUE(ex.constraints.contains(q, 1e-12));
    EXPECT_NEAR(kl(ex.P, q).value(), std::log((2.0 * n - 2) / (n - 2)), 1e-12);
  }
  EXPECT_DOUBLE_EQ(ex.limit.mass(), 0.5);
  EXPECT_FALSE(ex.constraints.contains(ex.limit, 1e-6));
  EXPECT_THROW(countable_example(9), std::invalid_argument);
}

TEST(CountableExample, DivergenceTendsToLogTwo) {
  const auto m = countable_minimize(1000);
  EXPECT_EQ(m.vertex, 1000);
  EXPECT_NEAR(m.divergence, 0.694148682897035, 1e-12);
  EXPECT_NEAR(m.divergence, std::log(2.0), 2e-3);
  EXPECT_NEAR(m.solver_divergence, m.divergence, 1e-6);
}

TEST(CountableExample, DualBoundOnRandomFeasible) {
  const auto ex = countable_example(200);
  const auto E = make_estat(ex.P, ex.limit);
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto Q = countable_random_feasible(ex.constraints.grid_ptr(), rng);
    ASSERT_TRUE(ex.constraints.contains(Q, 1e-12));
    const double v = expectation(E, Q).value();
    EXPECT_DOUBLE_EQ(v, 2 * Q.density()[0]);
    EXPECT_LE(v, 1.0);
  }
}

TEST(CountableExample, GeneratorFamilyLimit) {
  const auto ex = countable_example(20);
  EXPECT_EQ(ex.constraints.generator_family().size(), 19u);
  EXPECT_THROW(ex.constraints.generator_family(5), std::length_error);
  EXPECT_THROW(ex.constraints.generator(19), std::out_of_range);
}

TEST(Constraints, MustBePositive) {
  const auto g = Grid::counting(1, 3);
  EXPECT_THROW(ConstraintSet(g, {{"bad", {1, 0, 1}, ConstraintKind::eq, 1}}, 0, {}), std::invalid_argument);
  EXPECT_THROW(ConstraintSet(g, {{"short", {1, 1}, ConstraintKind::eq, 1}}, 0, {}), grid_mismatch);
}

TEST(Sparse, SequenceReachesLargeIndices) {
  const auto seq = countable_sparse_sequence();
  ASSERT_EQ(seq.size(), 8u);
  EXPECT_EQ(seq.back().max_point(), 100000000L);
  for (const auto& q : seq) {
    EXPECT_NEAR(q.mass(), 1.0, 1e-15);
    EXPECT_NEAR(q.integrate([](long i) { return 1.0 / static_cast<double>(i); }), 0.5, 1e-15);
  }
}

TEST(LimitCheck, DominatedConstraintPreserved) {
  const SparseMeasure limit{{{1, 0.5}}};
  const auto r = dominated_limit_check(
      countable_sparse_sequence(), limit, [](long) { return 1.0; },
      [](long i) { return 1.0 / static_cast<double>(i); }, 1.0, 0.5);
  EXPECT_TRUE(r.precondition_ok);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.preserved);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.limit_f1, 0.5, 1e-15);
}

TEST(LimitCheck, ConstantSequence) {
  const SparseMeasure q{{{1, 0.5}, {3, 1.5}}};
  const auto r = dominated_limit_check(
      {q, q, q}, q, [](long) { return 1.0; }, [](long i) { return 1.0 / (static_cast<double>(i) * 1e7); }, 2.0,
      q.integrate([](long i) { return 1.0 / (static_cast<double>(i) * 1e7); }));
  EXPECT_TRUE(r.passed);
}

TEST(LimitCheck, UndominatedControlRejected) {
  const SparseMeasure limit{{{1, 0.5}}};
  const auto r = dominated_limit_check(
      countable_sparse_sequence(), limit, [](long) { return 1.0; }, [](long) { return 1.0; }, 1.0, 1.0);
  EXPECT_FALSE(r.precondition_ok);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.preserved);
  EXPECT_DOUBLE_EQ(r.limit_mass, 0.5);
  ASSERT_FALSE(r.violations.empty());
  EXPECT_NE(r.violations.back().find("tail index"), std::string::npos);
}

TEST(Zeta, KnownValues) {
  const double pi = std::acos(-1.0);
  EXPECT_NEAR(zeta(2), pi * pi / 6, 1e-14);
  EXPECT_NEAR(zeta(3), 1.2020569031595942, 1e-14);
  EXPECT_NEAR(zeta(2) / zeta(3), 1.368432777620206, 1e-13);
  EXPECT_THROW(zeta(1), std::domain_error);
}

TEST(DecayConstraint, PowerLawMass) {
  const auto b = power_law_decay_constraint(100000, 0.5);
  EXPECT_NEAR(b.mass, 0.684216388810103, 1e-4);
  EXPECT_NEAR(b.mass, 0.6842, 1e-3);
  EXPECT_LT(b.mass, 1.0);
  EXPECT_FALSE(b.truncated);
  EXPECT_GE(b.c_upper, zeta(2) / zeta(3) - 1e-12);
  EXPECT_LE(b.constraint_value, b.nu * (1 + 1e-12));
}

TEST(DecayConstraint, GeneratorsAreExtremePointsPlusZero) {
  const auto b = power_law_decay_constraint(1000, 0.5);
  ASSERT_EQ(b.constraints.generator_count(), 1001u);
  EXPECT_NEAR(b.constraints.generator(4).density()[4], 0.5 * 5, 1e-15);
  EXPECT_EQ(b.constraints.generator(1000).mass(), 0.0);
  EXPECT_LE(decay_generator_error(b), 1e-14);
  for (std::size_t k = 0; k < 1000; k += 37) {
    const double v = expectation(b.E, b.constraints.generator(k)).value();
    EXPECT_NEAR(v, 1.0, 1e-14);
  }
}

TEST(DecayConstraint, GroMatchesLikelihoodRatio) {
  const auto b = power_law_decay_constraint(100000, 0.5);
  const auto& P = b.P;
  const auto lr = make_estat(P, b.qhat);
  for (std::size_t i = 0; i < lr.size(); i += 101) EXPECT_NEAR(lr.log_values()[i], b.E.log_values()[i], 1e-12);
  EXPECT_NEAR(gro_value(lr, P).value(), gro_value(b.E, P).value(), 1e-12);
}

TEST(DecayConstraint, NuOutOfRangeNamesC) {
  try {
    power_law_decay_constraint(1000, 0.9);
    FAIL() << "expected precondition_error";
  } catch (const precondition_error& e) {
    EXPECT_NE(std::string(e.what()).find("c = 1.3684"), std::string::npos);
  }
  EXPECT_THROW(power_law_decay_constraint(1000, 0.0), precondition_error);
}

TEST(DecayConstraint, NearCriticalNu) {
  const auto probe = power_law_decay_constraint(1000, 0.5);
  const auto b = power_law_decay_constraint(1000, 0.999 / probe.c_upper);
  EXPECT_LT(b.mass, 1.0);
  EXPECT_GT(b.mass, 0.99);
}

TEST(DecayConstraint, SolverAgreesOnTruncatedInstance) {
  // On {1..N} the minimizer of sum p ln(p/q) over the hull is nu p / g once
  // P is renormalized there, so the optimum is sum p ln(g / nu).
  const auto b = power_law_decay_constraint(200, 0.5);
  const auto P = b.P.scaled(1.0 / b.P.mass());
  const auto fam = b.constraints.generator_family();
  EXPECT_FALSE(fam.probability_family());
  std::vector<double> w(fam.size(), 1e-3);
  for (std::size_t k = 0; k + 1 < w.size(); ++k) w[k] = std::pow(k + 1.0, -3);
  const auto Q = mix(fam, MixtureWeights::dense(w));
  GainOptions go;
  go.tol = 1e-9;
  go.max_iter = 20000;
  go.include_mass = false;
  const auto r = gain_to_hull(P, Q, fam, go);
  const double solver = gro_value(make_estat(P, Q), P).value() - r.value.value();
  const double optimum = gro_value(b.E, P).value();
  EXPECT_NEAR(solver, optimum, 1e-6);
  EXPECT_GE(solver, optimum - 1e-12);
}

TEST(DecayConstraint, RejectsNonDecayingG) {
  const auto g = Grid::counting(1, 10);
  const auto P = GridMeasure::from_density(g, std::vector<double>(10, 0.1));
  EXPECT_THROW(build_decay_constraint(std::vector<double>(10, 1.0), P, 0.5), precondition_error);
}
