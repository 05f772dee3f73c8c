#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracle.hpp"
#include "temper/metrics.hpp"

using namespace temper;
namespace {

double tv_shift(double delta) { return std::erf(delta / (2 * std::numbers::sqrt2)); }  // TV of N(0,1), N(delta,1)

}  // namespace

TEST(TvHist, SameLawIsNearZero) {
  const auto g = GaussianSpec::scalar(0, 1);
  const auto e = ParticleEnsemble::from_gaussian(g, 200000, 1);
  const auto m = tv_hist(e, law_of(g), 128);
  EXPECT_LT(m.value, 3 * m.noise_proxy);
  EXPECT_LT(m.value, 0.03);
  EXPECT_FALSE(m.few_samples);
}

TEST(TvHist, ShiftedGaussianMatchesErf) {
  const auto e = ParticleEnsemble::from_gaussian(GaussianSpec::scalar(0, 1), 200000, 2);
  const auto m = tv_hist(e, law_of(GaussianSpec::scalar(1, 1)), 128);
  EXPECT_NEAR(m.value, tv_shift(1), 0.02);
  EXPECT_TRUE(m.resolution_ok);
}

TEST(TvHist, TwoDimensionalShift) {
  const auto e = ParticleEnsemble::from_gaussian(GaussianSpec::standard(2), 200000, 3);
  Vec mu(2);
  mu << 1, 0;
  const auto m = tv_hist(e, law_of(GaussianSpec::isotropic(mu, 1.0)), 64);
  EXPECT_NEAR(m.value, tv_shift(1), 0.03);
}

TEST(TvHist, MixtureReferenceWithKinks) {
  const PotentialSpec mix = MixtureSpec({{0.5, GaussianSpec::scalar(0, 1)}, {0.5, SmoothedUniformSpec(2)}});
  const auto law = law_of(mix);
  // reference mass sums to one (inside plus outside)
  const auto e = ParticleEnsemble::from_gaussian(GaussianSpec::scalar(0, 1), 1000, 4);
  const auto h = build_histogram(e, law, 100);
  double s = h.outside_mass;
  for (double v : h.ref_mass) s += v;
  EXPECT_NEAR(s, 1.0, 1e-10);
}

TEST(TvHist, FewSamplesFlagged) {
  const auto g = GaussianSpec::scalar(0, 1);
  const auto m = tv_hist(ParticleEnsemble::from_gaussian(g, 50, 1), law_of(g));
  EXPECT_TRUE(m.few_samples);
  EXPECT_NE(m.meta().find("few_samples"), std::string::npos);
}

TEST(KlHist, ShiftedGaussianBelowTrueKl) {
  const auto e = ParticleEnsemble::from_gaussian(GaussianSpec::scalar(0, 1), 400000, 5);
  const auto m = kl_hist(e, law_of(GaussianSpec::scalar(1, 1)), 128);
  EXPECT_NEAR(m.value, 0.5, 0.03);
}

TEST(GaussianFit, SmallForExactSamples) {
  const auto pi = GaussianSpec::isotropic(Vec::Zero(2), 10.0);
  const auto e = ParticleEnsemble::from_gaussian(pi, 100000, 6);
  // the plug-in estimate has mean about d(d+3)/(4N)
  EXPECT_LT(gaussian_fit_kl(e, pi), 1e-3);
}

TEST(Quadrature, ChiSquareKlFisherForGaussians) {
  const PotentialSpec p = GaussianSpec::scalar(0, 1), q = GaussianSpec::scalar(0.5, 2);
  // int p^2/q = exp(1/12) / sqrt(3/4) after completing the square
  const double chi = std::exp(1.0 / 12) / std::sqrt(0.75) - 1;
  const double chi_simpson =
      oracle::simpson(
          [&](double x) {
            const double lp = p.log_density(std::span<const double>(&x, 1)), lq = q.log_density(std::span<const double>(&x, 1));
            return std::exp(2 * lp - lq);
          },
          -30, 30, 60000) -
      1;
  EXPECT_NEAR(chi2_quadrature(as_density(p), as_density(q)), chi_simpson, 1e-10);
  EXPECT_NEAR(chi, chi_simpson, 1e-9);
  EXPECT_NEAR(kl_quadrature(as_density(p), as_density(q)), oracle::kl_gauss1(0, 1, 0.5, 2), 1e-11);
  // E_p (-x + (x - 0.5)/2)^2 = E (x/2 + 1/4)^2 = 1/4 + 1/16
  EXPECT_NEAR(fisher_divergence(p, q), 0.3125, 1e-12);
}

TEST(Quadrature, ChiSquareDivergesForHeavierP) {
  const PotentialSpec p = GaussianSpec::scalar(0, 4), q = GaussianSpec::scalar(0, 1);
  EXPECT_THROW(chi2_quadrature(as_density(p), as_density(q)), DomainError);
}

TEST(MetricCsv, Schema) {
  std::ostringstream os;
  write_metric_csv(os, {{1.5, "tv_target", 0.25, "bins=8"}});
  EXPECT_EQ(os.str(), "time_or_level,metric,value,estimator_meta\n1.5,tv_target,0.25,bins=8\n");
}
