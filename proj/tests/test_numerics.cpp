#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "temper/format.hpp"
#include "temper/quadrature.hpp"
#include "temper/random.hpp"
#include "temper/special.hpp"

using namespace temper;

// Reference values: exp(x^2) erfc(x) at 40 digits (mpmath), rounded to double.
TEST(Erfcx, MatchesHighPrecisionReference) {
  struct Ref {
    double x, v;
  };
  const Ref refs[] = {
      {-3, 16205.988853999586625},     {-1, 5.0089800807622834663},    {-0.25, 1.3586423701047221152},
      {0, 1.0},                        {0.5, 0.61569034419292587487},  {1, 0.42758357615580700441},
      {2, 0.25539567631050574387},     {4.99, 0.11091837045388811609}, {5, 0.11070463773306862637},
      {5.01, 0.11049171315279298134},  {10, 0.056140992743822585858},  {30, 0.018795888861416751497},
      {1e3, 0.0005641893014533876542}, {1e8, 5.6418958354775625874e-9},
  };
  for (const auto& r : refs) EXPECT_NEAR(erfcx(r.x), r.v, 2e-15 * std::abs(r.v)) << "x=" << r.x;
}

TEST(Erfcx, ContinuousAcrossBranchSwitch) {
  const double below = erfcx(std::nextafter(5.0, 0.0)), above = erfcx(5.0);
  EXPECT_NEAR(below, above, 1e-15);
}

TEST(Erfcx, LargeArgumentAsymptote) {
  for (double x : {50.0, 200.0, 1e4}) {
    // 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - ...); next term is 15/(8x^6)
    const double x2 = x * x;
    const double asym = 1 / (x * std::sqrt(std::numbers::pi)) * (1 - 1 / (2 * x2) + 3 / (4 * x2 * x2));
    EXPECT_NEAR(erfcx(x), asym, 2.0 * asym / (x2 * x2 * x2) + 4e-16 * asym);
  }
}

TEST(Erfcx, DecreasingOnGrid) {
  double prev = erfcx(-5);
  for (double x = -4.9; x < 40; x += 0.1) {
    const double v = erfcx(x);
    EXPECT_LT(v, prev) << x;
    prev = v;
  }
}

// Known-answer vectors published with the Random123 distribution.
TEST(Philox, KnownAnswerVectors) {
  using P = Philox4x32;
  EXPECT_EQ(P::generate({0, 0, 0, 0}, {0, 0}), (P::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(P::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (P::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(P::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (P::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NoiseStream, SameAddressSameDraws) {
  const NoiseStream a(42), b(42), c(43);
  std::vector<double> x(5), y(5), z(5);
  a.gaussians(17, 3, x);
  b.gaussians(17, 3, y);
  c.gaussians(17, 3, z);
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
  a.gaussians(18, 3, z);
  EXPECT_NE(x, z);
  a.gaussians(17, 4, z);
  EXPECT_NE(x, z);
}

TEST(NoiseStream, PrefixStableAcrossLengths) {
  const NoiseStream s(9);
  std::vector<double> three(3), six(6);
  s.gaussians(0, 0, three);
  s.gaussians(0, 0, six);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(three[i], six[i]);
}

TEST(NoiseStream, MomentsAreStandardNormal) {
  const NoiseStream s(2024);
  const std::size_t n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  std::vector<double> z(2);
  for (std::size_t i = 0; i < n / 2; ++i) {
    s.gaussians(i, 7, z);
    for (double v : z) m1 += v, m2 += v * v, m4 += v * v * v * v;
  }
  m1 /= n, m2 /= n, m4 /= n;
  EXPECT_NEAR(m1, 0.0, 5 * std::sqrt(1.0 / n));
  EXPECT_NEAR(m2, 1.0, 5 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 5 * std::sqrt(96.0 / n));
}

TEST(NoiseStream, UnitIntervalIsOpen) {
  EXPECT_GT(NoiseStream::to_unit(0, 0), 0.0);
  EXPECT_LT(NoiseStream::to_unit(0xffffffff, 0xffffffff), 1.0);
}

TEST(Quadrature, ExactForLowDegreePolynomials) {
  // 20-point Gauss-Legendre integrates degree 39 exactly on each panel
  const double v = quad::integrate([](double x) { return std::pow(x, 9) - 3 * x * x + 1; }, -1.0, 2.0);
  EXPECT_NEAR(v, (std::pow(2.0, 10) - 1) / 10 - (8 + 1) + 3, 1e-12);
}

TEST(Quadrature, SmoothIntegrals) {
  EXPECT_NEAR(quad::integrate([](double x) { return std::exp(x); }, 0.0, 3.0), std::expm1(3.0), 1e-12);
  EXPECT_NEAR(quad::integrate([](double x) { return std::exp(-x * x / 2); }, -40.0, 40.0),
              std::sqrt(2 * std::numbers::pi), 1e-12);
}

TEST(Quadrature, BreakpointsHandleKinks) {
  const std::vector<double> br{0.3};
  const double v = quad::integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, br);
  EXPECT_NEAR(v, 0.5 * (0.09 + 0.49), 1e-14);
}

TEST(Quadrature, LogSpaceMatchesDirect) {
  // log of int exp(-x^2/2 + 700) dx overflows directly but not in log space
  const double lv = quad::log_integrate_exp([](double x) { return -x * x / 2 + 700; }, -40.0, 40.0);
  EXPECT_NEAR(lv, 700 + 0.5 * std::log(2 * std::numbers::pi), 1e-12);
}

TEST(Quadrature, CumulativeTableMatchesPrimitive) {
  quad::CumulativeIntegral c([](double x) { return std::cos(x); }, 0.0, 10.0);
  for (double s : {0.0, 0.7, 3.3, 9.99, 10.0}) EXPECT_NEAR(c(s), std::sin(s), 1e-12) << s;
  EXPECT_NEAR(c.total(), std::sin(10.0), 1e-12);
}

TEST(Format, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cull), "af63dc4c8601ec8c");
}

TEST(Format, Fmt17RoundTrips) {
  for (double v : {0.1, 1.0 / 3, 1e-300, -2.5e17, std::numbers::pi}) EXPECT_EQ(std::stod(fmt17(v)), v);
}
