#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ripr/ratelab.hpp"

using namespace ripr;

namespace {

const std::vector<double> kEps{0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001};

// int q'/q dP - 1 with P = Ber(1/2), Q = Ber(1/2 + eps), Q' = Ber(1/4).
double bernoulli_slack(double eps) { return 0.5 * 0.75 / (0.5 - eps) + 0.5 * 0.25 / (0.5 + eps) - 1; }

ParametricFamily geometric_family(std::vector<double> params, long support = 10000) {
  FamilySpec s;
  s.kind = "geometric";
  s.params = std::move(params);
  s.grid.support = support;
  return make_family(s);
}

}  // namespace

TEST(FitSlope, ExactLine) {
  EXPECT_NEAR(fit_slope({0, 1, 2, 3}, {1, 3, 5, 7}), 2.0, 1e-15);
  EXPECT_THROW(fit_slope({1}, {1}), std::invalid_argument);
}

TEST(Bernoulli, DeltaOracle) {
  const auto ex = bernoulli_rate({0.01});
  EXPECT_NEAR(ex.rows[0].delta, -0.5 * std::log(1 - 4e-4), 1e-16);
  EXPECT_NEAR(ex.rows[0].delta, 2.00040010669868e-4, 1e-16);
}

TEST(Bernoulli, SlackOracleAndConstant) {
  const auto ex = bernoulli_rate(kEps);
  for (const auto& r : ex.rows) {
    EXPECT_NEAR(r.slack, bernoulli_slack(r.epsilon), 1e-14);
    EXPECT_EQ(r.status, BoundStatus::ok);
  }
  // slack / eps tends to 1.
  EXPECT_NEAR(ex.rows.back().slack / ex.rows.back().epsilon, 1.0, 0.01);
}

TEST(Bernoulli, SquareRootExponent) {
  const auto ex = bernoulli_rate(kEps);
  EXPECT_EQ(ex.fitted_points, kEps.size());
  EXPECT_GE(ex.fitted_slope, 0.45);
  EXPECT_LE(ex.fitted_slope, 0.55);
  for (std::size_t i = 1; i < ex.rows.size(); ++i) EXPECT_LT(ex.rows[i].delta, ex.rows[i - 1].delta);
}

TEST(Bernoulli, ZeroEpsilon) {
  const auto ex = bernoulli_rate({0.0});
  EXPECT_EQ(ex.rows[0].delta, 0.0);
  EXPECT_NEAR(ex.rows[0].slack, 0.0, 1e-15);
  EXPECT_EQ(ex.fitted_points, 0u);
}

TEST(Bernoulli, InputChecks) {
  EXPECT_THROW(bernoulli_rate({0.01, 0.05}), std::invalid_argument);
  EXPECT_THROW(bernoulli_rate({0.3}), std::invalid_argument);
}

TEST(RateBound, BetaOneFormula) {
  EXPECT_DOUBLE_EQ(rate_bound(0.01, 2.0, 1), std::sqrt(8 * 2.0 * 0.01));
  EXPECT_DOUBLE_EQ(rate_bound(1.0, 0.1, 1), 4.0);
}

TEST(RateBound, ExponentInDelta) {
  for (double beta : {0.5, 2.0}) {
    const double a = rate_bound(1e-8, 1.5, beta, 1), b = rate_bound(1e-10, 1.5, beta, 1);
    EXPECT_NEAR(std::log(a / b) / std::log(100.0), beta / (1 + beta), 0.02);
  }
}

TEST(RateBound, QueryEqualsAlternative) {
  const auto g = Grid::counting(0, 1);
  FamilySpec s;
  s.kind = "bernoulli";
  s.params = linspace(0.25, 0.75, 21);
  const auto fam = make_family(s);
  const auto P = make_member("bernoulli", 0.5, fam.grid_ptr());
  const auto Q = make_member("bernoulli", 0.6, fam.grid_ptr());
  const auto r = rate_bound_check(P, Q, Q, fam, 1.0);
  EXPECT_NEAR(r.slack, 0.0, 1e-15);
  EXPECT_EQ(r.status, BoundStatus::ok);
}

TEST(RateBound, BernoulliEpsFiveHundredths) {
  FamilySpec s;
  s.kind = "bernoulli";
  s.params = linspace(0.25, 0.75, 21);
  const auto fam = make_family(s);
  const auto P = make_member("bernoulli", 0.5, fam.grid_ptr());
  const auto Q = make_member("bernoulli", 0.55, fam.grid_ptr());
  const auto Qp = make_member("bernoulli", 0.25, fam.grid_ptr());
  const auto r = rate_bound_check(P, Q, Qp, fam, 1.0);
  const double c1 = 0.5 * std::pow(0.75 / 0.45, 2) + 0.5 * std::pow(0.25 / 0.55, 2);
  const double delta = -0.5 * std::log(1 - 4 * 0.0025);
  EXPECT_NEAR(r.c_beta.value(), c1, 1e-14);
  EXPECT_NEAR(r.slack, bernoulli_slack(0.05), 1e-14);
  EXPECT_NEAR(r.delta, delta, 1e-7);
  EXPECT_GE(r.delta, delta - 1e-12);
  EXPECT_EQ(r.status, BoundStatus::ok);
  EXPECT_LE(r.slack, std::max(std::sqrt(8 * c1 * delta), 4 * delta));
}

TEST(RateBound, GeometricChosenBeta) {
  const auto fam = geometric_family(linspace(0.05, 0.95, 19));
  const auto g = fam.grid_ptr();
  const auto P = make_member("geometric", 0.5, g);
  const auto Q = make_member("geometric", 0.45, g);
  const auto Qp = make_member("geometric", 0.6, g);
  const auto beta = choose_beta(P, Q, Qp);
  ASSERT_TRUE(beta);
  const auto r = rate_bound_check(P, Q, Qp, fam, *beta, std::nullopt, geometric_kl_half(0.45));
  EXPECT_NEAR(r.slack, geometric_ratio_closed(0.45, 0.6) - 1, 1e-9);
  EXPECT_EQ(r.status, BoundStatus::ok) << r.note;
}

TEST(RateBound, InfiniteMomentIsInapplicable) {
  const auto fam = geometric_family({0.4, 0.5, 0.9}, 2000);
  const auto g = fam.grid_ptr();
  const auto P = make_member("geometric", 0.5, g);
  const auto Qp = make_member("geometric", 0.9, g);
  const auto r = rate_bound_check(P, GridMeasure::zero(g), Qp, fam, 1.0);
  EXPECT_TRUE(r.c_beta.is_pos_inf());
  EXPECT_EQ(r.status, BoundStatus::inapplicable);
}

TEST(Geometric, RatioClosedForm) {
  EXPECT_NEAR(geometric_ratio_closed(0.5, 0.25), 1.0, 1e-15);
  EXPECT_NEAR(geometric_ratio_closed(0.4, 0.75), 10.0 / 3, 1e-15);
  EXPECT_EQ(geometric_ratio_closed(0.4, 0.8), kInf);
  EXPECT_NEAR(geometric_ratio_partial(0.4, 0.75, 1000), 10.0 / 3, 1e-9);
}

TEST(Geometric, PartialSumsMatchInConvergentRegime) {
  for (double theta : {0.4, 0.45, 0.49}) {
    for (double tp : default_thetap_grid()) {
      if (tp / (2 * theta) > 0.85) continue;
      EXPECT_NEAR(geometric_ratio_partial(theta, tp, 200), geometric_ratio_closed(theta, tp), 1e-9);
    }
  }
}

TEST(Geometric, KlMatchesGrid) {
  const auto fam = geometric_family({0.5, 0.45});
  EXPECT_NEAR(kl(fam[0], fam[1]).value(), geometric_kl_half(0.45), 1e-12);
}

TEST(Geometric, BlowupEveryRowDiverges) {
  const auto rep = geometric_blowup({0.40, 0.45, 0.49, 0.499});
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_TRUE(rep.deltas_decreasing);
  for (const auto& r : rep.rows) {
    EXPECT_TRUE(r.diverged);
    EXPECT_NEAR(r.delta, geometric_kl_half(r.theta), 1e-15);
    EXPECT_NEAR(r.delta_grid, r.delta, 1e-9);
  }
  EXPECT_LT(rep.rows.back().delta, 1e-3);
  EXPECT_NEAR(rep.rows[1].delta, 0.010050335853501, 1e-12);
  EXPECT_NEAR(rep.rows.back().delta, 4.000008000021e-6, 1e-15);
}

TEST(Geometric, BlowupInputChecks) {
  EXPECT_THROW(geometric_blowup({0.45, 0.40}), std::invalid_argument);
  EXPECT_THROW(geometric_blowup({0.3}), std::invalid_argument);
}

TEST(Epower, SingleVertex) {
  FamilySpec s;
  s.kind = "bernoulli";
  s.params = linspace(0.45, 0.55, 11);
  const auto fam = make_family(s);
  const auto r = epower_inequality({make_member("bernoulli", 0.3, fam.grid_ptr())}, fam, 50);
  EXPECT_EQ(r.log_n, 0.0);
  EXPECT_TRUE(r.passed);
}

TEST(Epower, BernoulliVertices) {
  FamilySpec s;
  s.kind = "bernoulli";
  s.params = linspace(0.45, 0.55, 11);
  s.discretized = true;
  const auto fam = make_family(s);
  const auto g = fam.grid_ptr();
  const auto r = epower_inequality({make_member("bernoulli", 0.3, g), make_member("bernoulli", 0.7, g)}, fam);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.log_n, std::log(2.0), 1e-15);
  for (const auto& row : r.rows) EXPECT_GE(row.lhs, row.rhs);
}

TEST(Epower, GaussianVertices) {
  const auto fam = make_family(named_family("gauss-std"));
  const auto g = fam.grid_ptr();
  const auto r = epower_inequality({make_member("gaussian", -2, g), make_member("gaussian", 2, g)}, fam, 20);
  EXPECT_TRUE(r.passed);
  // A single null member: D(N(+-2,1) || N(0,1)) = 2.
  for (const auto& row : r.rows) EXPECT_NEAR(row.d_lower, 2.0, 1e-9);
}
