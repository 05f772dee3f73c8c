#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracle.hpp"
#include "temper/bounds.hpp"
#include "temper/csv.hpp"
#include "temper/schedules.hpp"

using namespace temper;

TEST(Schedule, LinearAndConstantBasics) {
  const auto lin = Schedule::linear(4);
  EXPECT_DOUBLE_EQ(lin.value(1), 0.25);
  EXPECT_DOUBLE_EQ(lin.derivative(3), 0.25);
  EXPECT_DOUBLE_EQ(lin.integral(0, 4), 2.0);
  EXPECT_THROW(lin.value(4.5), DomainError);
  EXPECT_THROW(lin.value(-0.1), DomainError);
  const auto van = Schedule::constant(1.0);
  EXPECT_TRUE(van.is_vanilla());
  EXPECT_EQ(van.name(), "vanilla");
  EXPECT_DOUBLE_EQ(van.value(1e6), 1.0);
  EXPECT_THROW(Schedule::constant(1.2), DomainError);
}

TEST(Schedule, OptimalMatchesFormulaAndClamps) {
  const double an = 1.0, ap = 0.01;
  const auto s = Schedule::optimal(an, ap);
  const double k = an / (an - ap);
  EXPECT_NEAR(s.value(0), k / 2, 1e-15);
  EXPECT_NEAR(s.value(10), k * 11 / 12, 1e-15);
  EXPECT_DOUBLE_EQ(s.clamp_time(), 98.0);
  EXPECT_NEAR(s.value(98 - 1e-9), 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(s.value(98), 1.0);
  EXPECT_DOUBLE_EQ(s.value(500), 1.0);
  EXPECT_DOUBLE_EQ(s.derivative(120), 0.0);
}

TEST(Schedule, OptimalDoesNotDependOnHorizon) {
  const auto a = Schedule::optimal(2, 0.3, 5), b = Schedule::optimal(2, 0.3, 50);
  for (double s : {0.0, 1.0, 2.5, 5.0}) EXPECT_EQ(a.value(s), b.value(s));
}

TEST(Schedule, OptimalIsVanillaWhenTargetContractsFaster) {
  EXPECT_TRUE(Schedule::optimal(1, 1).is_vanilla());
  EXPECT_TRUE(Schedule::optimal(1, 3).is_vanilla());
  EXPECT_DOUBLE_EQ(Schedule::optimal(1, 0.6).value(0), 1.0);  // clamp time is zero
}

TEST(Schedule, DerivativeAndIntegralAgreeWithNumerics) {
  const Schedule cases[] = {Schedule::linear(7), Schedule::optimal(1, 0.05, 30), Schedule::optimal(3, 1, 4),
                            Schedule::table({0, 1, 2.5, 6}, {0.1, 0.2, 0.8, 0.9})};
  for (const auto& sch : cases) {
    const double T = sch.horizon();
    for (double s : {0.3 * T, 0.55 * T, 0.9 * T}) {
      EXPECT_NEAR(sch.derivative(s), oracle::central_diff([&](double x) { return sch.value(x); }, s, 1e-6), 1e-6)
          << sch.name() << " s=" << s;
    }
    std::vector<double> cuts{0.0};
    for (double k : sch.kinks())
      if (k > 0 && k < T) cuts.push_back(k);
    cuts.push_back(T);
    const double num = oracle::simpson_pieces([&](double x) { return sch.value(x); }, cuts, 2000);
    EXPECT_NEAR(sch.integral(0, T), num, 1e-10) << sch.name();
  }
}

TEST(Schedule, TableValidation) {
  EXPECT_THROW(Schedule::table({0, 1}, {0.5, 0.4}), DomainError);
  EXPECT_THROW(Schedule::table({0.1, 1}, {0.1, 0.4}), DomainError);
  EXPECT_THROW(Schedule::table({0, 1, 1}, {0, 0.5, 0.6}), DomainError);
  EXPECT_THROW(Schedule::table({0, 1}, {0, 1.5}), DomainError);
}

TEST(Schedule, CsvRoundTrip) {
  std::istringstream in("s,lambda\n0,0\n1,0.5\n3,1\n");
  const auto sch = schedule_from_csv(in);
  EXPECT_DOUBLE_EQ(sch.value(2), 0.75);
  std::istringstream bad("t,lambda\n0,0\n1,1\n");
  EXPECT_THROW(schedule_from_csv(bad), DomainError);
  std::istringstream down("s,lambda\n0,0.5\n1,0.2\n");
  EXPECT_THROW(schedule_from_csv(down), DomainError);
}

TEST(Schedule, DescribeIsCanonical) {
  EXPECT_EQ(Schedule::linear(2).describe(), Schedule::linear(2).describe());
  EXPECT_NE(Schedule::linear(2).describe(), Schedule::linear(3).describe());
  EXPECT_NE(Schedule::optimal(1, 0.1).describe(), Schedule::optimal(1, 0.2).describe());
}

TEST(Phi, ScheduleToPhiMatchesExponentOfIntegratedRate) {
  const auto sch = Schedule::linear(10);
  const auto phi = schedule_to_phi(sch, 1.0, 0.1, 10);
  for (double s : {0.0, 4.0, 10.0}) {
    const double num = oracle::simpson([&](double u) { return 1.0 - 0.9 * u / 10; }, s, 10, 2000);
    EXPECT_NEAR(phi.value(s), std::exp(-num), 1e-12);
  }
  EXPECT_DOUBLE_EQ(phi.value(10), 1.0);
}

TEST(Phi, OptimalPhiCasesAreContinuousAndEndAtOne) {
  // (1, 0.6): exponential; (1, 0.1) at t=20: linear then exponential; (1, 0.01) at t=10: linear
  for (auto [an, ap, t] : {std::tuple{1.0, 0.6, 5.0}, {1.0, 0.1, 20.0}, {1.0, 0.01, 10.0}}) {
    const auto phi = optimal_phi(an, ap, t);
    EXPECT_NEAR(phi.value(t), 1.0, 1e-14);
    for (double s = 0.01; s < t; s += t / 97)
      EXPECT_NEAR(phi.derivative(s), oracle::central_diff(phi.value, s, 1e-6), 1e-7);
  }
}

TEST(Phi, ObjectiveGivesGOfOptimalSchedule) {
  for (auto [an, ap, t] : {std::tuple{1.0, 0.6, 5.0}, {1.0, 0.1, 20.0}, {1.0, 0.01, 10.0}, {2.0, 0.1, 3.0}}) {
    const double obj = phi_objective(optimal_phi(an, ap, t), an, ap);
    const double g = g_functional(Schedule::optimal(an, ap, t), an, ap, t);
    EXPECT_NEAR(g, 1 - 2 * obj, 1e-10) << an << ' ' << ap << ' ' << t;
  }
}

TEST(Phi, RecoveredScheduleMatchesOptimal) {
  const double an = 1, ap = 0.1, t = 20;
  const auto rec = recovered_schedule(optimal_phi(an, ap, t), an, ap);
  const auto opt = Schedule::optimal(an, ap, t);
  for (double s : {0.0, 1.0, 5.0, 7.9, 8.1, 19.0}) EXPECT_NEAR(rec.value(s), opt.value(s), 1e-6) << s;
}

TEST(Phi, NonMonotonePhiIsRejected) {
  PhiCurve phi;
  phi.horizon = 1;
  phi.value = [](double s) { return std::exp(-std::sin(6 * s) - 1 + 0 * s); };
  phi.derivative = [](double s) { return -6 * std::cos(6 * s) * std::exp(-std::sin(6 * s) - 1); };
  EXPECT_THROW(recovered_schedule(phi, 1, 0.1), DomainError);
}

TEST(Ladder, FromInnerTimesAndExpand) {
  const auto L = TemperatureLadder::from_inner_times(0.0, {0.5, 1.0}, {1.0, 0.25}, 0.3);
  ASSERT_EQ(L.levels().size(), 2u);
  EXPECT_EQ(L.levels()[0].n_inner, 4u);
  EXPECT_DOUBLE_EQ(L.levels()[0].step, 0.25);
  EXPECT_EQ(L.levels()[1].n_inner, 1u);
  EXPECT_EQ(L.total_steps(), 5u);
  EXPECT_NEAR(L.total_time(), 1.25, 1e-15);
  EXPECT_EQ(L.expand().size(), 5u);
  EXPECT_THROW(TemperatureLadder(0.5, {{0.4, 0.1, 1}}), DomainError);
}

TEST(Ladder, DiscretizeUsesRightEndpoints) {
  const auto L = discretize(Schedule::linear(2), 4);
  EXPECT_DOUBLE_EQ(L.initial_level(), 0.0);
  EXPECT_DOUBLE_EQ(L.levels()[0].lambda, 0.25);
  EXPECT_DOUBLE_EQ(L.levels()[3].lambda, 1.0);
  EXPECT_DOUBLE_EQ(L.levels()[1].step, 0.5);
}

// Property: every random monotone table is accepted and stays in [0, 1].
TEST(Schedule, RandomTablesAreMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> s{0}, l{U(rng) * 0.5};
    for (int i = 0; i < 8; ++i) {
      s.push_back(s.back() + 0.1 + U(rng));
      l.push_back(std::min(1.0, l.back() + 0.2 * U(rng)));
    }
    const auto sch = Schedule::table(s, l);
    double prev = -1;
    for (double x = 0; x <= sch.horizon(); x += sch.horizon() / 333) {
      const double v = sch.value(x);
      EXPECT_GE(v, prev - 1e-15);
      EXPECT_GE(v, 0);
      EXPECT_LE(v, 1);
      prev = v;
    }
  }
}
