#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "temper/distributions.hpp"
#include "temper/errors.hpp"
#include "temper/format.hpp"
#include "temper/gaussian_flow.hpp"
#include "temper/quadrature.hpp"
#include "temper/sampler.hpp"

namespace temper {

/// A 1D or 2D law with a normalized log density, used as the reference in
/// histogram estimators.
struct ClosedFormLaw {
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> log_density;
  std::vector<double> mean, sd;     // per coordinate, used for binning ranges
  std::vector<double> breakpoints;  // 1D kinks
};

inline ClosedFormLaw law_of(const GaussianSpec& g) {
  ClosedFormLaw l;
  l.dim = g.dim();
  l.log_density = [g](std::span<const double> x) { return g.log_density(x); };
  for (std::size_t k = 0; k < g.dim(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    l.mean.push_back(g.mean()(i));
    l.sd.push_back(std::sqrt(g.covariance()(i, i)));
  }
  return l;
}

inline ClosedFormLaw law_of(const Density1D& d) {
  ClosedFormLaw l;
  l.dim = 1;
  l.log_density = [f = d.log_density](std::span<const double> x) { return f(x[0]); };
  const auto mo = moments(d);
  l.mean = {mo.mean};
  l.sd = {std::sqrt(mo.variance)};
  l.breakpoints = d.breakpoints;
  return l;
}

inline ClosedFormLaw law_of(const PotentialSpec& p) {
  if (p.is_gaussian()) return law_of(p.gaussian());
  return law_of(as_density(p));
}

/// mu_lambda of a path as a reference law.
inline ClosedFormLaw law_of(const GeometricPath& path, double lambda) {
  if (path.gaussian_pair())
    return law_of(gaussian_geometric(path.proposal().gaussian(), path.target().gaussian(), lambda));
  return law_of(path.density(lambda));
}

/// Binned comparison of an ensemble with a reference law.
struct HistogramEstimate {
  std::vector<std::vector<double>> edges;  // per dimension, strictly increasing
  std::vector<double> counts;              // row-major over bins
  std::vector<double> ref_mass;            // reference mass per bin
  double outside_mass = 0.0;               // reference mass outside the binned box
  std::size_t n = 0;

  /// Sum over bins of the binomial standard error of each empirical mass.
  double noise_proxy() const {
    double s = 0.0;
    for (double c : counts) {
      const double p = c / static_cast<double>(n);
      s += std::sqrt(p * (1 - p) / static_cast<double>(n));
    }
    return s;
  }
};

namespace detail {

inline std::vector<double> bin_edges(double lo, double hi, std::size_t bins) {
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  e.back() = hi;
  return e;
}

inline std::size_t locate(const std::vector<double>& edges, double x) {
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  std::size_t i = (it == edges.begin()) ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
  return std::min(i, edges.size() - 2);
}

}  // namespace detail

inline HistogramEstimate build_histogram(const ParticleEnsemble& e, const ClosedFormLaw& law, std::size_t bins) {
  if (e.dim != law.dim) throw DomainError("histogram: dimension mismatch");
  if (e.dim > 2) throw UnsupportedConfiguration("histogram: only 1D and 2D are supported");
  if (bins < 2) throw DomainError("histogram: need at least two bins");
  HistogramEstimate h;
  h.n = e.n;
  for (std::size_t k = 0; k < e.dim; ++k) {
    double lo = law.mean[k] - 4 * law.sd[k], hi = law.mean[k] + 4 * law.sd[k];
    for (std::size_t i = 0; i < e.n; ++i) {
      lo = std::min(lo, e.x[i * e.dim + k]);
      hi = std::max(hi, e.x[i * e.dim + k]);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw NumericalError("histogram: non-finite samples");
    h.edges.push_back(detail::bin_edges(lo, hi, bins));
  }
  std::size_t total = 1;
  for (const auto& ed : h.edges) total *= ed.size() - 1;
  h.counts.assign(total, 0.0);
  for (std::size_t i = 0; i < e.n; ++i) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < e.dim; ++k) idx = idx * (h.edges[k].size() - 1) + detail::locate(h.edges[k], e.x[i * e.dim + k]);
    h.counts[idx] += 1.0;
  }
  // Reference mass per bin by Gauss-Legendre on each bin (split at kinks in 1D).
  h.ref_mass.assign(total, 0.0);
  double inside = 0.0;
  if (e.dim == 1) {
    const auto& ed = h.edges[0];
    for (std::size_t b = 0; b + 1 < ed.size(); ++b) {
      const auto cuts = quad::cut_points(ed[b], ed[b + 1], law.breakpoints);
      double m = 0.0;
      const auto& r = quad::Rule<10>::get();
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double mid = 0.5 * (cuts[c] + cuts[c + 1]), half = 0.5 * (cuts[c + 1] - cuts[c]);
        for (unsigned q = 0; q < 10; ++q) {
          const double x = mid + half * r.x[q];
          m += half * r.w[q] * std::exp(law.log_density(std::span<const double>(&x, 1)));
        }
      }
      h.ref_mass[b] = m;
      inside += m;
    }
  } else {
    const auto& ex = h.edges[0];
    const auto& ey = h.edges[1];
    const auto& r = quad::Rule<10>::get();
    const std::size_t ny = ey.size() - 1;
    for (std::size_t bx = 0; bx + 1 < ex.size(); ++bx)
      for (std::size_t by = 0; by < ny; ++by) {
        const double mx = 0.5 * (ex[bx] + ex[bx + 1]), hx = 0.5 * (ex[bx + 1] - ex[bx]);
        const double my = 0.5 * (ey[by] + ey[by + 1]), hy = 0.5 * (ey[by + 1] - ey[by]);
        double m = 0.0;
        for (unsigned i = 0; i < 10; ++i)
          for (unsigned j = 0; j < 10; ++j) {
            const double pt[2] = {mx + hx * r.x[i], my + hy * r.x[j]};
            m += hx * hy * r.w[i] * r.w[j] * std::exp(law.log_density(pt));
          }
        h.ref_mass[bx * ny + by] = m;
        inside += m;
      }
  }
  h.outside_mass = std::max(0.0, 1.0 - inside);
  return h;
}

/// Result of a histogram divergence estimate plus its resolution check.
struct HistogramMetric {
  double value = 0.0;
  double value_refined = 0.0;  // same estimate at twice the bins
  std::size_t bins = 0;
  bool resolution_ok = true;   // |value - value_refined| < 0.02
  double noise_proxy = 0.0;
  bool few_samples = false;    // fewer than 1000 samples

  std::string meta() const {
    return "bins=" + std::to_string(bins) + ";refined=" + fmt17(value_refined) +
           ";resolution_ok=" + (resolution_ok ? "1" : "0") + ";noise=" + fmt17(noise_proxy) +
           (few_samples ? ";warning=few_samples" : "");
  }
};

namespace detail {

inline double tv_of(const HistogramEstimate& h) {
  double s = 0.0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) s += std::abs(h.counts[b] / static_cast<double>(h.n) - h.ref_mass[b]);
  return 0.5 * (s + h.outside_mass);
}

inline double kl_of(const HistogramEstimate& h) {
  double s = 0.0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    if (h.counts[b] == 0) continue;
    if (!(h.ref_mass[b] >= 1e-300)) throw DomainError("kl_hist: reference mass vanishes on an occupied bin");
    const double p = h.counts[b] / static_cast<double>(h.n);
    s += p * std::log(p / h.ref_mass[b]);
  }
  return s;
}

template <class F>
HistogramMetric histogram_metric(const ParticleEnsemble& e, const ClosedFormLaw& law, std::size_t bins, F&& f) {
  const auto h = build_histogram(e, law, bins);
  HistogramMetric m;
  m.bins = bins;
  m.value = f(h);
  m.noise_proxy = h.noise_proxy();
  m.value_refined = f(build_histogram(e, law, 2 * bins));
  m.resolution_ok = std::abs(m.value - m.value_refined) < 0.02;
  m.few_samples = e.n < 1000;
  return m;
}

}  // namespace detail

/// Histogram estimate of TV(ensemble, law); reference mass outside the
/// binned box counts as misplaced.
inline HistogramMetric tv_hist(const ParticleEnsemble& e, const ClosedFormLaw& law, std::size_t bins = 256) {
  return detail::histogram_metric(e, law, bins, detail::tv_of);
}

/// Histogram estimate of KL(ensemble || law).  Binning can only lose
/// information, so for large N this sits below the true KL.
inline HistogramMetric kl_hist(const ParticleEnsemble& e, const ClosedFormLaw& law, std::size_t bins = 256) {
  return detail::histogram_metric(e, law, bins, detail::kl_of);
}

/// KL(N(sample mean, sample cov) || target) for a Gaussian target.
inline double gaussian_fit_kl(const ParticleEnsemble& e, const GaussianSpec& target) {
  return kl_gaussians(GaussianSpec(ensemble_mean(e), ensemble_covariance(e)), target);
}

// ---------------------------------------------------------------------------

namespace detail {
inline Interval union_support(const Density1D& p, const Density1D& q) {
  return {std::min(p.support.lo, q.support.lo), std::max(p.support.hi, q.support.hi)};
}
inline std::vector<double> union_breaks(const Density1D& p, const Density1D& q) {
  auto b = p.breakpoints;
  b.insert(b.end(), q.breakpoints.begin(), q.breakpoints.end());
  return b;
}
}  // namespace detail

/// chi^2(p || q) = int p^2/q - 1 by quadrature.
inline double chi2_quadrature(const Density1D& p, const Density1D& q, const quad::Options& opt = quad::Options{1e-13}) {
  const auto iv = detail::union_support(p, q);
  const auto br = detail::union_breaks(p, q);
  auto g = [&](double x) { return 2 * p.log_density(x) - q.log_density(x); };
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 2000; ++i) peak = std::max(peak, g(iv.lo + (iv.hi - iv.lo) * i / 2000.0));
  if (!std::isfinite(peak)) throw DomainError("chi2_quadrature: q does not dominate p");
  if (g(iv.lo) > peak - 30 || g(iv.hi) > peak - 30) throw DomainError("chi2_quadrature: p^2/q does not decay in the tails");
  const double v = quad::integrate([&](double x) { return std::exp(g(x)); }, iv.lo, iv.hi, br, opt);
  return std::max(0.0, v - 1.0);
}

/// KL(p || q) by quadrature.
inline double kl_quadrature(const Density1D& p, const Density1D& q) {
  const auto br = detail::union_breaks(p, q);
  const double v = quad::integrate(
      [&](double x) {
        const double lp = p.log_density(x);
        return lp == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(lp) * (lp - q.log_density(x));
      },
      p.support.lo, p.support.hi, br);
  return std::max(0.0, v);
}

/// E_p |score_p - score_q|^2 for 1D potentials.
inline double fisher_divergence(const PotentialSpec& p, const PotentialSpec& q) {
  const auto dp = as_density(p);
  const auto br = detail::union_breaks(dp, as_density(q));
  return quad::integrate(
      [&](double x) {
        const double s = p.score1(x) - q.score1(x);
        return s * s * std::exp(dp.log_density(x));
      },
      dp.support.lo, dp.support.hi, br);
}

// ---------------------------------------------------------------------------

struct MetricRow {
  double time_or_level = 0.0;
  std::string metric;
  double value = 0.0;
  std::string estimator_meta;
};

inline void write_metric_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << "time_or_level,metric,value,estimator_meta\n";
  for (const auto& r : rows) os << fmt17(r.time_or_level) << ',' << r.metric << ',' << fmt17(r.value) << ',' << r.estimator_meta << '\n';
}

}  // namespace temper
