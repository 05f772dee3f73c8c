#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "temper/distributions.hpp"
#include "temper/errors.hpp"
#include "temper/quadrature.hpp"
#include "temper/schedules.hpp"
#include "temper/special.hpp"

namespace temper {

/// Smoothness, dissipativity and log-Sobolev data of a path, plus the second
/// moment of the initial law.
struct RegularityBundle {
  double L_nu = 0, L_pi = 0;
  double a_nu = 0, a_pi = 0;
  double b_nu = 0, b_pi = 0;
  std::size_t dim = 1;
  double m2_p0 = 0;  // E_{p0} |x|^2
  double alpha_nu = 0, alpha_pi = 0;
  /// Optional log-Sobolev constant of mu_lambda; affine interpolation otherwise.
  std::function<double(double)> alpha_fn;

  static RegularityBundle from(const PotentialSpec& nu, const PotentialSpec& pi, double m2_p0,
                               std::optional<double> alpha_nu = {}, std::optional<double> alpha_pi = {}) {
    RegularityBundle r;
    r.L_nu = nu.lipschitz();
    r.L_pi = pi.lipschitz();
    const auto dn = nu.dissipativity(), dp = pi.dissipativity();
    r.a_nu = dn.a;
    r.b_nu = dn.b;
    r.a_pi = dp.a;
    r.b_pi = dp.b;
    r.dim = nu.dim();
    r.m2_p0 = m2_p0;
    auto an = alpha_nu ? alpha_nu : nu.strong_convexity();
    auto ap = alpha_pi ? alpha_pi : pi.strong_convexity();
    if (!an || !ap || !(*an > 0) || !(*ap > 0))
      throw DomainError("RegularityBundle: log-Sobolev constants must be given for non-strongly-convex potentials");
    r.alpha_nu = *an;
    r.alpha_pi = *ap;
    r.validate();
    return r;
  }

  void validate() const {
    if (!(L_nu > 0) || !(L_pi > 0)) throw DomainError("RegularityBundle: smoothness constants must be positive");
    if (!(a_nu > 0) || !(a_pi > 0)) throw DomainError("RegularityBundle: dissipativity a must be positive");
    if (b_nu < 0 || b_pi < 0) throw DomainError("RegularityBundle: dissipativity b must be nonnegative");
    if (!(alpha_nu > 0) || !(alpha_pi > 0)) throw DomainError("RegularityBundle: log-Sobolev constants must be positive");
    if (m2_p0 < 0 || dim == 0) throw DomainError("RegularityBundle: bad moment or dimension");
  }

  double alpha(double lambda) const {
    return alpha_fn ? alpha_fn(lambda) : (1 - lambda) * alpha_nu + lambda * alpha_pi;
  }
  double L(double lambda) const { return (1 - lambda) * L_nu + lambda * L_pi; }
  double L_max() const { return std::max(L_nu, L_pi); }
  double a_min() const { return std::min(a_nu, a_pi); }
  double alpha_min() const {
    if (!alpha_fn) return std::min(alpha_nu, alpha_pi);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i) best = std::min(best, alpha_fn(i / 1000.0));
    return best;
  }
};

/// Prefactor of the continuous-time bound.
inline double constant_A(const RegularityBundle& r) {
  r.validate();
  const double d = static_cast<double>(r.dim);
  return 2 * (r.L_pi + r.L_nu) * (2 * (d + r.b_nu + r.b_pi) / r.a_min() + r.m2_p0);
}

/// Prefactor of the discrete-time bound.
inline double constant_A_prime(const RegularityBundle& r) {
  r.validate();
  const double d = static_cast<double>(r.dim);
  const double moment = std::max(r.m2_p0, 2 * (1.5 * (r.b_pi + r.b_nu) + d) / std::min(r.a_min(), 1.0));
  return 2 * (r.L_pi + r.L_nu) * (moment + 3 * (d + r.b_nu + r.b_pi) / r.a_min());
}

// ---------------------------------------------------------------------------

namespace detail {

// int_s^t alpha(lambda_r) dr: exact for the affine model, tabulated otherwise.
class RateIntegral {
 public:
  RateIntegral(const Schedule& sch, const RegularityBundle& r, double t) : sch_(sch), r_(r), t_(t) {
    if (r.alpha_fn) {
      const auto k = sch.kinks();
      table_ = quad::CumulativeIntegral([&](double s) { return r_.alpha(sch_.value(s)); }, 0.0, t, k);
    }
  }
  double to_end(double s) const {
    if (!r_.alpha_fn) return alpha_integral(sch_, r_.alpha_nu, r_.alpha_pi, s, t_);
    return table_.total() - table_(s);
  }

 private:
  const Schedule& sch_;
  const RegularityBundle& r_;
  double t_;
  quad::CumulativeIntegral table_;
};

inline void check_kl0(double kl0) {
  if (!(kl0 >= 0) || !std::isfinite(kl0)) throw DomainError("initial KL must be finite and nonnegative");
}

inline double lambda_dot_integral(const Schedule& sch, const RateIntegral& rate, double t, double factor) {
  const auto k = sch.kinks();
  return quad::integrate([&](double s) { return sch.derivative(s) * std::exp(-factor * rate.to_end(s)); }, 0.0, t, k,
                         quad::Options{1e-12});
}

}  // namespace detail

struct ContinuousBoundReport {
  double t = 0, A = 0;
  double u1 = 0, u2 = 0, u3 = 0;
  double total = 0;
};

/// Continuous-time upper bound on KL(p_t || pi) and its three terms.
inline ContinuousBoundReport continuous_bound(const Schedule& sch, const RegularityBundle& r, double kl0, double t) {
  detail::check_kl0(kl0);
  if (!(t >= 0)) throw DomainError("continuous_bound: negative time");
  if (t > sch.horizon() * (1 + 1e-12)) throw DomainError("continuous_bound: time beyond schedule horizon");
  ContinuousBoundReport rep;
  rep.t = t;
  rep.A = constant_A(r);
  if (t == 0) {
    rep.u1 = kl0;
    rep.u2 = rep.A * (1 - sch.value(0));
  } else {
    detail::RateIntegral rate(sch, r, t);
    rep.u1 = std::exp(-2 * rate.to_end(0)) * kl0;
    rep.u2 = rep.A * (1 - sch.value(t));
    rep.u3 = rep.A * detail::lambda_dot_integral(sch, rate, t, 2.0);
  }
  rep.total = rep.u1 + rep.u2 + rep.u3;
  return rep;
}

/// Schedule-dependent factor G_t of the continuous bound.  Evaluated in the
/// integrated-by-parts form, whose terms are all nonnegative.
inline double g_functional(const Schedule& sch, double alpha_nu, double alpha_pi, double t) {
  if (!(t > 0)) throw DomainError("g_functional: horizon must be positive");
  if (!(alpha_nu > 0) || !(alpha_pi > 0)) throw DomainError("g_functional: rates must be positive");
  if (t > sch.horizon() * (1 + 1e-12)) throw DomainError("g_functional: schedule shorter than horizon");
  RegularityBundle r;
  r.alpha_nu = alpha_nu;
  r.alpha_pi = alpha_pi;
  detail::RateIntegral rate(sch, r, t);
  const double boundary = (1 - sch.value(t)) + sch.value(0) * std::exp(-2 * rate.to_end(0));
  return boundary + detail::lambda_dot_integral(sch, rate, t, 2.0);
}

/// G_t for the linear schedule in closed form.
inline double g_linear_closed_form(double alpha_nu, double alpha_pi, double t) {
  if (!(alpha_nu > alpha_pi) || !(alpha_pi > 0) || !(t > 0))
    throw DomainError("g_linear_closed_form: need alpha_nu > alpha_pi > 0 and t > 0");
  const double D = alpha_nu - alpha_pi;
  const double r = std::sqrt(t / D);
  return std::sqrt(std::numbers::pi / (4 * t * D)) *
         (erfcx(alpha_pi * r) - std::exp(-(alpha_nu + alpha_pi) * t) * erfcx(alpha_nu * r));
}

// ---------------------------------------------------------------------------

struct DiscreteBoundReport {
  std::size_t k = 0;
  double lambda = 0, h = 0;
  double v1 = 0, v2 = 0, v3 = 0, v4 = 0;
  double total = 0;
  double guard_limit = 0;
  bool guard_ok = true;
};

enum class GuardPolicy { Report, Throw };

/// Step-size limit for step k of the discrete bound.
inline double guard_limit(const RegularityBundle& r, double lambda) {
  const double Lk = r.L(lambda);
  const double Ls = r.L_pi + r.L_nu;
  return std::min({r.alpha(lambda) / (4 * Lk * Lk), r.a_min() / (2 * Ls * Ls), 1.0});
}

/// Discrete-time bound after every step k = 0..K of the expanded ladder.
inline std::vector<DiscreteBoundReport> discrete_bound_sweep(const TemperatureLadder& ladder,
                                                             const RegularityBundle& r, double kl0,
                                                             GuardPolicy policy = GuardPolicy::Report) {
  detail::check_kl0(kl0);
  const double Ap = constant_A_prime(r);
  const double d = static_cast<double>(r.dim);
  const auto steps = ladder.expand();
  std::vector<DiscreteBoundReport> out;
  out.reserve(steps.size() + 1);
  double contraction = 0.0;  // sum_{j<=k} alpha_j h_j
  double s3 = 0.0, s4 = 0.0;
  double prev_lambda = ladder.initial_level();
  DiscreteBoundReport r0;
  r0.lambda = prev_lambda;
  r0.v1 = kl0;
  r0.v2 = Ap * (1 - prev_lambda);
  r0.total = r0.v1 + r0.v2;
  out.push_back(r0);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& st = steps[i];
    const double decay = r.alpha(st.lambda) * st.h;
    const double Lk = r.L(st.lambda);
    contraction += decay;
    const double e = std::exp(-decay);
    s3 = (s3 + (st.lambda - prev_lambda)) * e;
    s4 = s4 * e + 6 * st.h * st.h * d * Lk * Lk;
    prev_lambda = st.lambda;
    DiscreteBoundReport rep;
    rep.k = i + 1;
    rep.lambda = st.lambda;
    rep.h = st.h;
    rep.v1 = std::exp(-contraction) * kl0;
    rep.v2 = Ap * (1 - st.lambda);
    rep.v3 = Ap * s3;
    rep.v4 = s4;
    rep.total = rep.v1 + rep.v2 + rep.v3 + rep.v4;
    rep.guard_limit = guard_limit(r, st.lambda);
    rep.guard_ok = st.h <= rep.guard_limit;
    if (!rep.guard_ok && policy == GuardPolicy::Throw) throw GuardViolation(rep.k, st.h, rep.guard_limit);
    out.push_back(rep);
  }
  return out;
}

inline DiscreteBoundReport discrete_bound(const TemperatureLadder& ladder, const RegularityBundle& r, double kl0,
                                          std::size_t k, GuardPolicy policy = GuardPolicy::Report) {
  if (k > ladder.total_steps()) throw DomainError("discrete_bound: k beyond the ladder");
  return discrete_bound_sweep(ladder, r, kl0, policy)[k];
}

// ---------------------------------------------------------------------------

/// Sufficient conditions for KL <= eps in continuous time.
struct ContinuousPrecision {
  double eps = 0;
  double t_min = 0;         // horizon must exceed this
  double lambda_floor = 0;  // lambda_t must exceed this
  double half_gap = 0;      // lambda_t - lambda_{t/2} must stay below this

  bool satisfied_by(const Schedule& sch, double t) const {
    return t > t_min && sch.value(t) > lambda_floor && sch.value(t) - sch.value(t / 2) < half_gap;
  }
};

inline ContinuousPrecision precision_conditions_continuous(double A, double alpha_min, double kl0, double eps) {
  if (!(eps > 0) || !(A > 0) || !(alpha_min > 0)) throw DomainError("precision conditions: need eps, A, alpha > 0");
  detail::check_kl0(kl0);
  ContinuousPrecision c;
  c.eps = eps;
  c.t_min = std::max({0.0, std::log(3 * kl0 / eps) / (2 * alpha_min), std::log(6 * A / eps) / alpha_min});
  c.lambda_floor = 1 - eps / (3 * A);
  c.half_gap = eps / 6;
  return c;
}

/// Which constants to use in the discrete conditions: the ones stated with
/// the result, or the slightly looser ones its derivation actually yields.
enum class DiscreteConstants { Stated, Derived };

struct DiscretePrecision {
  double eps = 0;
  double h_max = 0;
  double lambda_floor = 0;
  double half_gap = 0;  // lambda_k - lambda_{floor(k/2)} must stay below this
  double alpha_min = 0, kl0 = 0, A_prime = 0;

  /// Iteration count needed at step size h.
  double k_min(double h) const {
    if (!(h > 0)) throw DomainError("k_min: h must be positive");
    return std::max({0.0, std::log(4 * kl0 / eps) / (h * alpha_min), 2 * std::log(8 * A_prime / eps) / (h * alpha_min)});
  }
};

inline DiscretePrecision precision_conditions_discrete(const RegularityBundle& r, double kl0, double eps,
                                                       DiscreteConstants constants = DiscreteConstants::Stated) {
  if (!(eps > 0)) throw DomainError("precision conditions: eps must be positive");
  detail::check_kl0(kl0);
  const double am = r.alpha_min();
  const double Lm = r.L_max();
  const double Ls = r.L_pi + r.L_nu;
  const double d = static_cast<double>(r.dim);
  const double c_step = constants == DiscreteConstants::Stated ? 96.0 : 32.0;
  const double c_gap = constants == DiscreteConstants::Stated ? 24.0 : 8.0;
  DiscretePrecision p;
  p.eps = eps;
  p.alpha_min = am;
  p.kl0 = kl0;
  p.A_prime = constant_A_prime(r);
  p.h_max = std::min({1 / (4 * am), am * eps / (c_step * Lm * Lm * d), am / (4 * Ls * Ls), r.a_min() / (2 * Ls * Ls), 1.0});
  p.lambda_floor = 1 - eps / (4 * p.A_prime);
  p.half_gap = eps / (c_gap * p.A_prime);
  return p;
}

}  // namespace temper
