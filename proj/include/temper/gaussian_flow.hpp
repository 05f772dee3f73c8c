#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "temper/distributions.hpp"
#include "temper/errors.hpp"
#include "temper/schedules.hpp"

namespace temper {

/// A Gaussian law of the process; same type as a Gaussian potential.
using GaussianLaw = GaussianSpec;

/// KL(p || q) between Gaussians.
inline double kl_gaussians(const GaussianSpec& p, const GaussianSpec& q) {
  if (p.dim() != q.dim()) throw DomainError("kl_gaussians: dimension mismatch");
  const double d = static_cast<double>(p.dim());
  const Vec diff = q.mean() - p.mean();
  const double tr = (q.precision() * p.covariance()).trace();
  const double maha = diff.dot(q.precision() * diff);
  const double v = 0.5 * (tr + maha - d + q.log_det_cov() - p.log_det_cov());
  return std::max(0.0, v);
}

namespace detail {

struct Moments {
  Vec m;
  Mat S;
};

// Drift of the tempered Langevin flow is -A x + b.
inline void tempered_drift(const GaussianSpec& nu, const GaussianSpec& pi, double lambda, Mat& A, Vec& b) {
  A = (1 - lambda) * nu.precision() + lambda * pi.precision();
  b = (1 - lambda) * nu.precision() * nu.mean() + lambda * pi.precision() * pi.mean();
}

inline Moments moment_rhs(const GaussianSpec& nu, const GaussianSpec& pi, double lambda, const Moments& y) {
  Mat A;
  Vec b;
  tempered_drift(nu, pi, lambda, A, b);
  const auto d = y.m.size();
  Moments dy{-A * y.m + b, -A * y.S - y.S * A.transpose() + 2.0 * Mat::Identity(d, d)};
  return dy;
}

inline Moments rk4(const GaussianSpec& nu, const GaussianSpec& pi, const Schedule& sch, Moments y, double s0,
                   double s1, int n) {
  const double h = (s1 - s0) / n;
  auto axpy = [](const Moments& a, double c, const Moments& k) { return Moments{a.m + c * k.m, a.S + c * k.S}; };
  for (int i = 0; i < n; ++i) {
    const double s = s0 + h * i;
    const double se = (i + 1 == n) ? s1 : s + h;
    const double sm = 0.5 * (s + se);
    const auto k1 = moment_rhs(nu, pi, sch.value(s), y);
    const auto k2 = moment_rhs(nu, pi, sch.value(sm), axpy(y, 0.5 * h, k1));
    const auto k3 = moment_rhs(nu, pi, sch.value(sm), axpy(y, 0.5 * h, k2));
    const auto k4 = moment_rhs(nu, pi, sch.value(se), axpy(y, h, k3));
    y.m += (h / 6.0) * (k1.m + 2 * k2.m + 2 * k3.m + k4.m);
    y.S += (h / 6.0) * (k1.S + 2 * k2.S + 2 * k3.S + k4.S);
  }
  y.S = 0.5 * (y.S + y.S.transpose());
  return y;
}

inline Moments integrate_piece(const GaussianSpec& nu, const GaussianSpec& pi, const Schedule& sch,
                               const Moments& y0, double s0, double s1) {
  if (s1 <= s0) return y0;
  const double rate = std::max(nu.lipschitz(), pi.lipschitz());
  int n = std::max(8, static_cast<int>(std::ceil((s1 - s0) * rate * 2)));
  Moments coarse = rk4(nu, pi, sch, y0, s0, s1, n);
  for (int iter = 0; iter < 20; ++iter) {
    n *= 2;
    Moments fine = rk4(nu, pi, sch, y0, s0, s1, n);
    const double scale = std::max({1.0, fine.m.cwiseAbs().maxCoeff(), fine.S.cwiseAbs().maxCoeff()});
    const double err = std::max((fine.m - coarse.m).cwiseAbs().maxCoeff(), (fine.S - coarse.S).cwiseAbs().maxCoeff());
    if (err <= 1e-12 * scale) return fine;
    coarse = std::move(fine);
  }
  throw NumericalError("gaussian_moment_flow: ODE did not converge");
}

}  // namespace detail

/// Laws of the continuous tempered flow started from p0, at increasing times.
inline std::vector<GaussianLaw> gaussian_moment_flow_at(const GaussianSpec& nu, const GaussianSpec& pi,
                                                        const Schedule& sch, const GaussianLaw& p0,
                                                        const std::vector<double>& times) {
  if (nu.dim() != pi.dim() || nu.dim() != p0.dim()) throw DomainError("gaussian_moment_flow: dimension mismatch");
  if (!std::is_sorted(times.begin(), times.end())) throw DomainError("gaussian_moment_flow: times must be sorted");
  detail::Moments y{p0.mean(), p0.covariance()};
  std::vector<GaussianLaw> out;
  double now = 0.0;
  const auto kinks = sch.kinks();
  for (double t : times) {
    if (t < 0) throw DomainError("gaussian_moment_flow: negative time");
    std::vector<double> cuts{now};
    for (double k : kinks)
      if (k > now && k < t) cuts.push_back(k);
    cuts.push_back(t);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) y = detail::integrate_piece(nu, pi, sch, y, cuts[i], cuts[i + 1]);
    now = t;
    out.emplace_back(y.m, y.S);
  }
  return out;
}

inline GaussianLaw gaussian_moment_flow(const GaussianSpec& nu, const GaussianSpec& pi, const Schedule& sch,
                                        const GaussianLaw& p0, double t) {
  return gaussian_moment_flow_at(nu, pi, sch, p0, {t}).front();
}

/// Exact laws of the discrete tempered iteration; entry 0 is p0, entry k the
/// law after k steps.
inline std::vector<GaussianLaw> gaussian_moment_recursion(const GaussianSpec& nu, const GaussianSpec& pi,
                                                          const TemperatureLadder& ladder, const GaussianLaw& p0) {
  if (nu.dim() != pi.dim() || nu.dim() != p0.dim()) throw DomainError("gaussian_moment_recursion: dimension mismatch");
  const auto d = static_cast<Eigen::Index>(p0.dim());
  Vec m = p0.mean();
  Mat S = p0.covariance();
  std::vector<GaussianLaw> out;
  out.reserve(ladder.total_steps() + 1);
  out.push_back(p0);
  Mat A;
  Vec b;
  for (const auto& lv : ladder.levels()) {
    detail::tempered_drift(nu, pi, lv.lambda, A, b);
    const Mat M = Mat::Identity(d, d) - lv.step * A;
    for (std::size_t j = 0; j < lv.n_inner; ++j) {
      m = M * m + lv.step * b;
      S = M * S * M.transpose() + 2 * lv.step * Mat::Identity(d, d);
      S = 0.5 * (S + S.transpose());
      out.emplace_back(m, S);
    }
  }
  return out;
}

}  // namespace temper
