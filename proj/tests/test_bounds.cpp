#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "temper/bounds.hpp"
#include "temper/gaussian_flow.hpp"

using namespace temper;
namespace {

RegularityBundle fig3_bundle() {
  return RegularityBundle::from(GaussianSpec::standard(2), GaussianSpec::isotropic(Vec::Zero(2), 10.0), 2.0);
}

Schedule random_table(std::mt19937_64& rng, double T) {
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> s{0}, l{0.3 * U(rng)};
  const int n = 6;
  for (int i = 1; i <= n; ++i) {
    s.push_back(T * i / n);
    l.push_back(std::min(1.0, l.back() + 0.35 * U(rng)));
  }
  return Schedule::table(s, l);
}

}  // namespace

TEST(Constants, HandComputedForIsotropicPair) {
  const auto r = fig3_bundle();
  // 2 (0.1 + 1) (2 * 2 / 0.1 + 2) and 2 (1.1) (max(2, 40) + 60)
  EXPECT_NEAR(constant_A(r), 92.4, 1e-12);
  EXPECT_NEAR(constant_A_prime(r), 220.0, 1e-12);
}

TEST(Constants, RequireLogSobolevForNonConvex) {
  EXPECT_THROW(RegularityBundle::from(GaussianSpec::scalar(0, 1), make_bimodal_target(5), 1.0), DomainError);
  EXPECT_NO_THROW(RegularityBundle::from(GaussianSpec::scalar(0, 1), make_bimodal_target(5), 1.0, 1.0, 0.01));
}

TEST(GFunctional, VanillaAndConstantClosedForms) {
  for (double t : {0.5, 3.0, 20.0}) {
    EXPECT_NEAR(g_functional(Schedule::constant(1.0), 1.0, 0.2, t), std::exp(-2 * 0.2 * t), 1e-14);
    const double c = 0.4, a = (1 - c) * 1.0 + c * 0.2;
    EXPECT_NEAR(g_functional(Schedule::constant(c), 1.0, 0.2, t), (1 - c) + c * std::exp(-2 * a * t), 1e-14);
  }
}

TEST(GFunctional, LinearClosedFormAgainstQuadratureAndSimpson) {
  for (auto [an, ap, t] : {std::tuple{1.0, 0.01, 10.0}, {2.0, 0.5, 1.0}, {1.0, 0.1, 100.0}, {5.0, 0.01, 0.3}}) {
    const double g = g_functional(Schedule::linear(t), an, ap, t);
    EXPECT_NEAR(g_linear_closed_form(an, ap, t), g, 1e-9 * g);
    // direct: int_0^t (1/t) exp(-2 int_s^t alpha) ds, with int_s^t alpha in closed form
    auto f = [&](double s) {
      const double ia = an * (t - s) - (an - ap) * (t * t - s * s) / (2 * t);
      return std::exp(-2 * ia) / t;
    };
    EXPECT_NEAR(g, oracle::simpson(f, 0, t, 200000), 1e-9 * g);
  }
  EXPECT_NEAR(g_linear_closed_form(1, 0.01, 10), 0.271836277085567, 1e-13);
}

TEST(GFunctional, AsymptoteForLinearSchedule) {
  for (double ap : {0.1, 0.5}) {
    const double t = 1000 / ap;
    EXPECT_NEAR(2 * ap * t * g_linear_closed_form(2 * ap, ap, t), 1.0, 1e-3);
  }
}

TEST(ContinuousBound, TimeZeroTerms) {
  const auto r = fig3_bundle();
  const auto rep = continuous_bound(Schedule::linear(5), r, 0.7, 0.0);
  EXPECT_DOUBLE_EQ(rep.u1, 0.7);
  EXPECT_DOUBLE_EQ(rep.u2, constant_A(r));
  EXPECT_DOUBLE_EQ(rep.u3, 0.0);
}

TEST(ContinuousBound, TermsMatchDirectIntegrals) {
  const auto r = fig3_bundle();
  const double T = 8, kl0 = 0.3;
  const auto rep = continuous_bound(Schedule::linear(T), r, kl0, 5.0);
  const double t = 5, an = 1, ap = 0.1;
  auto ia = [&](double s) { return an * (t - s) - (an - ap) * (t * t - s * s) / (2 * T); };
  EXPECT_NEAR(rep.u1, std::exp(-2 * ia(0)) * kl0, 1e-14);
  EXPECT_NEAR(rep.u2, 92.4 * (1 - t / T), 1e-12);
  EXPECT_NEAR(rep.u3, 92.4 * oracle::simpson([&](double s) { return std::exp(-2 * ia(s)) / T; }, 0, t), 1e-9);
}

TEST(ContinuousBound, CustomRateFunctionMatchesAffineDefault) {
  auto r = fig3_bundle();
  const auto sch = Schedule::optimal(1, 0.1, 30);
  const auto a = continuous_bound(sch, r, 0.2, 25);
  r.alpha_fn = [](double l) { return (1 - l) * 1.0 + l * 0.1; };
  const auto b = continuous_bound(sch, r, 0.2, 25);
  EXPECT_NEAR(a.total, b.total, 1e-9 * a.total);
}

TEST(GaussianFlow, OrnsteinUhlenbeckClosedForm) {
  // vanilla flow toward N(2, 3) from N(-1, 0.5): mean and variance relax at rates 1/3 and 2/3
  const auto nu = GaussianSpec::scalar(0, 1), pi = GaussianSpec::scalar(2, 3), p0 = GaussianSpec::scalar(-1, 0.5);
  for (double t : {0.1, 1.0, 7.0}) {
    const auto law = gaussian_moment_flow(nu, pi, Schedule::constant(1.0), p0, t);
    EXPECT_NEAR(law.mean()(0), 2 + (-1 - 2) * std::exp(-t / 3), 1e-11);
    EXPECT_NEAR(law.covariance()(0, 0), 3 + (0.5 - 3) * std::exp(-2 * t / 3), 1e-11);
  }
}

TEST(GaussianFlow, StationaryAtTarget) {
  const auto nu = GaussianSpec::standard(2);
  Mat S(2, 2);
  S << 2, 0.4, 0.4, 1;
  Vec m(2);
  m << 1, -1;
  const GaussianSpec pi(m, S);
  const auto law = gaussian_moment_flow(nu, pi, Schedule::constant(1.0), pi, 4.0);
  EXPECT_LT(kl_gaussians(law, pi), 1e-20);
}

TEST(GaussianFlow, RecursionClosedForm1D) {
  // x' = (1 - h/s2) x + h m/s2 + sqrt(2h) z
  const auto nu = GaussianSpec::scalar(0, 1), pi = GaussianSpec::scalar(1, 4);
  const TemperatureLadder L(1.0, {{1.0, 0.1, 30}});
  const auto laws = gaussian_moment_recursion(nu, pi, L, nu);
  double m = 0, v = 1;
  for (int k = 0; k < 30; ++k) {
    m = (1 - 0.1 / 4) * m + 0.1 / 4;
    v = (1 - 0.1 / 4) * (1 - 0.1 / 4) * v + 0.2;
  }
  EXPECT_NEAR(laws.back().mean()(0), m, 1e-14);
  EXPECT_NEAR(laws.back().covariance()(0, 0), v, 1e-13);
  EXPECT_EQ(laws.size(), 31u);
}

TEST(KlGaussians, MatchesScalarFormula) {
  EXPECT_NEAR(kl_gaussians(GaussianSpec::scalar(1, 2), GaussianSpec::scalar(-0.5, 3)),
              oracle::kl_gauss1(1, 2, -0.5, 3), 1e-15);
}

// Property: exact KL of the flow never exceeds the continuous bound.
TEST(ContinuousBound, DominatesExactKlOnRandomSchedules) {
  std::mt19937_64 rng(11);
  const auto nu = GaussianSpec::scalar(0, 1), pi = GaussianSpec::scalar(3, 4);
  const auto r = RegularityBundle::from(nu, pi, 1.0);
  for (int i = 0; i < 10; ++i) {
    const auto sch = random_table(rng, 20);
    const double kl0 = kl_gaussians(nu, gaussian_geometric(nu, pi, sch.value(0)));
    const std::vector<double> ts{1, 4, 9, 15, 20};
    const auto laws = gaussian_moment_flow_at(nu, pi, sch, nu, ts);
    for (std::size_t j = 0; j < ts.size(); ++j)
      EXPECT_LE(kl_gaussians(laws[j], pi), continuous_bound(sch, r, kl0, ts[j]).total);
  }
}

TEST(DiscreteBound, InitialRowAndRecurrenceByHand) {
  const auto r = fig3_bundle();
  const TemperatureLadder L(0.2, {{0.5, 0.01, 1}, {0.5, 0.02, 1}});
  const auto rows = discrete_bound_sweep(L, r, 0.4);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rows[0].v1, 0.4);
  EXPECT_DOUBLE_EQ(rows[0].v2, 220 * 0.8);
  const double a = 0.5 * 1 + 0.5 * 0.1, Lk = 0.55;
  const double e1 = std::exp(-a * 0.01), e2 = std::exp(-a * 0.02);
  EXPECT_NEAR(rows[2].v1, 0.4 * e1 * e2, 1e-15);
  EXPECT_NEAR(rows[2].v3, 220 * 0.3 * e1 * e2, 1e-12);
  EXPECT_NEAR(rows[2].v4, 6 * 2 * Lk * Lk * (0.0001 * e2 + 0.0004), 1e-15);
}

TEST(DiscreteBound, GuardLimitAndPolicies) {
  const auto r = fig3_bundle();
  EXPECT_NEAR(guard_limit(r, 1.0), std::min(0.1 / (4 * 0.01), 0.1 / (2 * 1.21)), 1e-15);
  const auto L = discretize(Schedule::linear(10), 100);  // h = 0.1, above 0.1/2.42
  const auto rows = discrete_bound_sweep(L, r, 0.0);
  EXPECT_FALSE(rows.back().guard_ok);
  EXPECT_THROW(discrete_bound_sweep(L, r, 0.0, GuardPolicy::Throw), GuardViolation);
  try {
    discrete_bound_sweep(L, r, 0.0, GuardPolicy::Throw);
  } catch (const GuardViolation& g) {
    EXPECT_EQ(g.step(), 1u);
    EXPECT_DOUBLE_EQ(g.h(), 0.1);
  }
}

// Property: exact KL of the discrete recursion never exceeds the discrete bound.
TEST(DiscreteBound, DominatesExactKlOnRandomSchedules) {
  std::mt19937_64 rng(12);
  const auto nu = GaussianSpec::standard(2), pi = GaussianSpec::isotropic(Vec::Zero(2), 10.0);
  const auto r = fig3_bundle();
  for (int i = 0; i < 10; ++i) {
    const auto L = discretize(random_table(rng, 6), 200);
    const double kl0 = kl_gaussians(nu, gaussian_geometric(nu, pi, L.initial_level()));
    const auto rows = discrete_bound_sweep(L, r, kl0, GuardPolicy::Throw);
    const auto laws = gaussian_moment_recursion(nu, pi, L, nu);
    for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_LE(kl_gaussians(laws[k], pi), rows[k].total);
  }
}

TEST(DiscreteBound, DiscretizationTermHalvesWithStep) {
  const auto r = fig3_bundle();
  const auto sch = Schedule::linear(6);
  const double a = discrete_bound(discretize(sch, 200), r, 0, 200).v4;
  const double b = discrete_bound(discretize(sch, 400), r, 0, 400).v4;
  EXPECT_NEAR(b / a, 0.5, 0.02);
}

TEST(Precision, ContinuousConditionsSuffice) {
  const auto nu = GaussianSpec::standard(2), pi = GaussianSpec::isotropic(Vec::Zero(2), 10.0);
  const auto r = fig3_bundle();
  const double eps = 1.0, kl0 = kl_gaussians(nu, pi);
  const auto c = precision_conditions_continuous(constant_A(r), r.alpha_min(), kl0, eps);
  EXPECT_NEAR(c.lambda_floor, 1 - 1 / (3 * 92.4), 1e-15);
  const double t = std::ceil(c.t_min) + 1;
  const auto van = Schedule::constant(1.0);
  ASSERT_TRUE(c.satisfied_by(van, t));
  EXPECT_LE(continuous_bound(van, r, kl0, t).total, eps);
  EXPECT_FALSE(c.satisfied_by(Schedule::linear(t), t / 2));
}

TEST(Precision, DiscreteConditionsSuffice) {
  const auto nu = GaussianSpec::standard(2), pi = GaussianSpec::isotropic(Vec::Zero(2), 10.0);
  const auto r = fig3_bundle();
  const double eps = 1.0, kl0 = kl_gaussians(nu, pi);
  for (auto which : {DiscreteConstants::Stated, DiscreteConstants::Derived}) {
    const auto p = precision_conditions_discrete(r, kl0, eps, which);
    const auto K = static_cast<std::size_t>(std::ceil(p.k_min(p.h_max)));
    const TemperatureLadder L(1.0, {{1.0, p.h_max, K}});
    const auto rows = discrete_bound_sweep(L, r, kl0, GuardPolicy::Throw);
    EXPECT_LE(rows.back().total, eps);
  }
  const auto s = precision_conditions_discrete(r, kl0, eps, DiscreteConstants::Stated);
  const auto d = precision_conditions_discrete(r, kl0, eps, DiscreteConstants::Derived);
  EXPECT_LE(s.h_max, d.h_max);
  EXPECT_NEAR(d.half_gap / s.half_gap, 3.0, 1e-12);
}
