#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "temper/distributions.hpp"
#include "temper/errors.hpp"
#include "temper/metrics.hpp"
#include "temper/quadrature.hpp"

namespace temper {

/// Bounded piecewise-linear function, constant outside its knots.
class TestFunction {
 public:
  TestFunction(std::vector<double> xs, std::vector<double> vs, std::string kind = "custom")
      : xs_(std::move(xs)), vs_(std::move(vs)), kind_(std::move(kind)) {
    if (xs_.size() != vs_.size() || xs_.size() < 2) throw DomainError("TestFunction: need two or more knots");
    for (std::size_t i = 1; i < xs_.size(); ++i)
      if (!(xs_[i] > xs_[i - 1])) throw DomainError("TestFunction: knots must increase");
    for (double v : vs_)
      if (!std::isfinite(v)) throw DomainError("TestFunction: values must be finite");
  }

  /// 1 left of lo, 0 right of hi, linear in between.
  static TestFunction tent(double lo, double hi) { return TestFunction({lo, hi}, {1.0, 0.0}, "tent"); }

  /// x clamped to [-r, r].
  static TestFunction clamped_identity(double r) { return TestFunction({-r, r}, {-r, r}, "custom"); }

  double operator()(double x) const {
    if (x <= xs_.front()) return vs_.front();
    if (x >= xs_.back()) return vs_.back();
    const std::size_t i = segment(x);
    return vs_[i] + (x - xs_[i]) * slope(i);
  }
  double derivative(double x) const {
    if (x < xs_.front() || x >= xs_.back()) return 0.0;
    return slope(segment(x));
  }
  const std::vector<double>& knots() const { return xs_; }
  const std::vector<double>& values() const { return vs_; }
  const std::string& kind() const { return kind_; }
  std::size_t segments() const { return xs_.size() - 1; }
  double slope(std::size_t i) const { return (vs_[i + 1] - vs_[i]) / (xs_[i + 1] - xs_[i]); }

 private:
  std::size_t segment(double x) const {
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    return std::min(static_cast<std::size_t>(it - xs_.begin()) - 1, xs_.size() - 2);
  }
  std::vector<double> xs_, vs_;
  std::string kind_;
};

/// Var_q(psi) / E_q[psi'^2]: any psi certifies this as a lower bound on the
/// Poincare constant of q.
inline double rayleigh_poincare_lower(const Density1D& q, const TestFunction& psi) {
  std::vector<double> br = q.breakpoints;
  br.insert(br.end(), psi.knots().begin(), psi.knots().end());
  const quad::Options opt{1e-12};
  auto dens = [&](double x) { return std::exp(q.log_density(x)); };
  const double lo = q.support.lo, hi = q.support.hi;
  const double z = quad::integrate(dens, lo, hi, br, opt);
  const double mean = quad::integrate([&](double x) { return psi(x) * dens(x); }, lo, hi, br, opt) / z;
  const double var =
      quad::integrate([&](double x) { const double c = psi(x) - mean; return c * c * dens(x); }, lo, hi, br, opt) / z;
  double energy = 0.0;
  for (std::size_t i = 0; i < psi.segments(); ++i) {
    const double s = psi.slope(i);
    if (s == 0.0) continue;
    const double a = std::max(lo, psi.knots()[i]), b = std::min(hi, psi.knots()[i + 1]);
    if (a < b) energy += s * s * quad::integrate(dens, a, b, q.breakpoints, opt);
  }
  energy /= z;
  if (!(energy > 0)) throw DomainError("rayleigh_poincare_lower: test function has zero Dirichlet energy");
  return var / energy;
}

inline double rayleigh_poincare_lower(const PotentialSpec& q, const TestFunction& psi) {
  return rayleigh_poincare_lower(as_density(q), psi);
}

/// mu_lambda between N(0,1) and N(m,1) contaminated with weight exp(-a^2 m^2/2).
inline GeometricPath contaminated_path(double m, double a) {
  return GeometricPath(GaussianSpec::scalar(0.0, 1.0), make_contaminated_target(m, a));
}

/// Rayleigh quotient of the ramp from m(1-a)/2 to m(1-a) under mu_lambda of
/// the contaminated path with a = 1/sqrt(2).
inline double unimodal_rayleigh_probe(double m, double lambda) {
  const double a = 1 / std::numbers::sqrt2;
  const auto path = contaminated_path(m, a);
  return rayleigh_poincare_lower(path.density(lambda, false),
                                 TestFunction::tent(m * (1 - a) / 2, m * (1 - a)));
}

/// Closed-form Poincare lower bound along the contaminated path; negative
/// values are vacuous.
inline double thm3_poincare_bound(double m, double lambda) {
  if (!(m >= 10)) throw DomainError("thm3_poincare_bound: m must be at least 10");
  if (!(lambda >= 0.5 && lambda <= 1)) throw DomainError("thm3_poincare_bound: lambda must lie in [1/2, 1]");
  return std::exp(m * m * (1 - lambda) / 100) / (4e4 * m) - m * m;
}

// ---------------------------------------------------------------------------

/// (log p - log(1-p)) / (2p - 1), with the removable singularity at 1/2 filled.
inline double mixture_lsi_factor(double p) {
  if (!(p > 0 && p < 1)) throw DomainError("mixture weight must lie in (0, 1)");
  const double u = 2 * p - 1;
  if (std::abs(u) < 1e-4) {
    const double u2 = u * u;
    return 2 * (1 + u2 / 3 + u2 * u2 / 5);
  }
  return 2 * std::atanh(u) / u;
}

/// Log-Sobolev upper bound for p mu_0 + (1-p) mu_1 from the component constants.
inline double lsi_mixture_upper(double p, double C0, double C1, double chi2_01) {
  if (C0 < 0 || C1 < 0 || chi2_01 < 0) throw DomainError("lsi_mixture_upper: constants must be nonnegative");
  const double lp = mixture_lsi_factor(p);
  return std::max((1 + (1 - p) * lp) * C0, (1 + p * lp * (1 + chi2_01)) * C1);
}

/// Holley-Stroock perturbation bound for the smoothed uniform at r = 1/m;
/// checked against 16 m^2.
inline double lsi_um_upper(double m) {
  if (!(m >= 1)) throw DomainError("lsi_um_upper: m must be at least 1");
  const double r = 1 / m;
  const double ar = r / (2 * r + 3 * m);
  const double v = std::exp(ar * (1.5 * m + r) * (1.5 * m + r) + 0.5 * r * r) / ar;
  if (!(v <= 16 * m * m))
    throw InvariantViolation("lsi_um_upper: " + std::to_string(v) + " exceeds 16 m^2 at m=" + std::to_string(m));
  return v;
}

/// chi^2(N(m,1) || u_m) by quadrature; checked against chi^2 + 1 <= 5m.
inline double chi2_gauss_um(double m) {
  if (!(m >= 4)) throw DomainError("chi2_gauss_um: m must be at least 4");
  const SmoothedUniformSpec u(m);
  const double lz = u.log_partition();
  const double lg = 0.5 * std::log(2 * std::numbers::pi);
  // p^2/q = exp(-(x-m)^2 - 2 lg + d(x)^2/2 + log Z_u)
  auto f = [&](double x) {
    const double dx = x - m;
    return std::exp(-dx * dx - 2 * lg + u.potential1(x) + lz);
  };
  const double v = quad::integrate(f, m - 40, m + 40, u.breakpoints(), quad::Options{1e-13}) - 1.0;
  if (!(v + 1 <= 5 * m)) throw InvariantViolation("chi2_gauss_um: chi^2 + 1 exceeds 5m");
  return std::max(0.0, v);
}

/// Log-Sobolev upper bound for the contaminated target.
inline double lsi_pi_upper(double m, double a) {
  if (!(m >= 10)) throw DomainError("lsi_pi_upper: m must be at least 10");
  const double e = 0.5 * a * a * m * m;
  if (std::abs(e - std::numbers::ln2) <= 1e-12) return 324 * m * m * m;
  if (!(e > std::numbers::ln2)) throw DomainError("lsi_pi_upper: need a^2 m^2 > 2 log 2");
  return 81 * a * a * std::pow(m, 5) / (1 - 2 * std::exp(-e));
}

/// chi^2 between ladder iterates and the path when nu <= C pi pointwise.
inline double chi2_ladder_bound(double C, double lambda) {
  if (!(C >= 1)) throw DomainError("chi2_ladder_bound: C must be at least 1");
  if (!(lambda >= 0 && lambda <= 1)) throw DomainError("chi2_ladder_bound: lambda must lie in [0, 1]");
  return std::pow(C, lambda) - 1;
}

// ---------------------------------------------------------------------------

/// Ingredients of the generic total-variation lower bound along a ladder.
struct TVLowerInput {
  double a = 0, b = 0;          // interval I = [a, b]
  double B = 0;                 // score bound on I
  std::vector<double> delta;    // mass bound per level (one entry is broadcast)
  std::vector<double> lambdas;  // ladder levels
  std::vector<double> inner_times;
  double pi_right = 0, pi_I = 0, nu_right = 0;  // pi[b, inf), pi(I), nu[b, inf)
};

struct TVLowerRow {
  std::size_t k = 0;
  double lambda = 0, sum_T = 0, lower_bound = 0;
};

/// Lower bound on TV(iterate_k, pi) at every level k = 1..K.
inline std::vector<TVLowerRow> general_tv_lower(const TVLowerInput& in, const std::vector<double>& chi2_per_level) {
  const std::size_t K = in.inner_times.size();
  if (in.lambdas.size() != K || chi2_per_level.size() != K) throw DomainError("general_tv_lower: length mismatch");
  if (!(in.b > in.a) || in.B < 0) throw DomainError("general_tv_lower: need a < b and B >= 0");
  if (!(in.delta.size() == 1 || in.delta.size() == K)) throw DomainError("general_tv_lower: delta length mismatch");
  for (std::size_t k = 1; k < K; ++k)
    if (in.lambdas[k] < in.lambdas[k - 1]) throw DomainError("general_tv_lower: levels must be monotone");
  std::vector<TVLowerRow> out;
  double weighted = 0.0, sum_T = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (in.inner_times[k] < 0 || chi2_per_level[k] < 0) throw DomainError("general_tv_lower: negative input");
    weighted += in.inner_times[k] * std::sqrt(chi2_per_level[k] + 1);
    sum_T += in.inner_times[k];
    const double d = in.delta.size() == 1 ? in.delta[0] : in.delta[k];
    if (d < 0) throw DomainError("general_tv_lower: delta must be nonnegative");
    const double v = in.pi_right - in.pi_I - in.nu_right - d - in.B / (in.b - in.a) * std::sqrt(d) * weighted;
    out.push_back({k + 1, in.lambdas[k], sum_T, v});
  }
  return out;
}

/// Bimodal-target specialization: 1/20 - 16 exp(-m^2/64) * total time.
inline double thm5_tv_lower(double m, double sum_T) {
  if (!(m > 0) || sum_T < 0) throw DomainError("thm5_tv_lower: need m > 0 and nonnegative time");
  return 0.05 - 16 * std::exp(-m * m / 64) * sum_T;
}

/// Unimodal-target specialization at level lambda_k with delta_k = 6 m^3 exp(-(1-lambda_k) m^2/10).
inline double thm6_tv_lower(double m, double lambda_k, double sum_T) {
  if (!(m > 0) || sum_T < 0 || !(lambda_k >= 0 && lambda_k <= 1)) throw DomainError("thm6_tv_lower: bad input");
  const double dk = 6 * m * m * m * std::exp(-(1 - lambda_k) * m * m / 10);
  return 0.2 - dk - 10 * m * std::sqrt(dk) * sum_T;
}

// ---------------------------------------------------------------------------

struct FactCheck {
  std::string name;
  double log_value = 0;  // log of the quadrature quantity
  double log_bound = 0;  // log of the stated bound
  bool upper = true;     // value <= bound when true, value >= bound otherwise
  bool applicable = true;
  bool holds = true;
};

struct UnimodalFactsReport {
  double m = 0, a = 0, lambda = 0;
  double log_c = 0;
  std::vector<FactCheck> facts;
  bool all_hold() const {
    return std::all_of(facts.begin(), facts.end(), [](const FactCheck& f) { return !f.applicable || f.holds; });
  }
};

/// Mass facts for mu_lambda on the contaminated path, computed in log space.
inline UnimodalFactsReport verify_unimodal_facts(double m, double a, double lambda) {
  if (!(lambda >= 0 && lambda <= 1)) throw DomainError("verify_unimodal_facts: lambda must lie in [0, 1]");
  const auto path = contaminated_path(m, a);
  const auto q = path.density(lambda, false);
  UnimodalFactsReport r;
  r.m = m;
  r.a = a;
  r.lambda = lambda;
  r.log_c = path.log_partition(lambda);
  const double lo = m * (1 - a) / 2, hi = m * (1 - a);
  const double ea = lambda * a * a * m * m / 2;
  const double eb = lambda * (1 - lambda) * m * m / 2;
  const bool regime = m >= 10;
  const quad::Options opt{1e-12};
  auto check = [&](std::string name, double lv, double lb, bool upper, bool applicable) {
    const double slack = 1e-9 * std::max(1.0, std::abs(lb));
    const bool ok = upper ? lv <= lb + slack : lv >= lb - slack;
    r.facts.push_back({std::move(name), lv, lb, upper, applicable, ok});
  };
  check("interval_mass", log_mass(q, lo, hi, opt),
        std::log(5 * a * m * m) + r.log_c - ea - (1 - lambda) * (1 - a) * (1 - a) * m * m / 8, true, regime);
  check("left_mass", log_mass(q, q.support.lo, lo, opt), r.log_c - ea - std::log(10 * m), false,
        regime && 1 >= a + 2 / m);
  check("right_mass", log_mass(q, lo, q.support.hi, opt), r.log_c - std::log(2.0) - eb, false,
        regime && 1 <= a + 2 * lambda - 2 / m);
  check("partition_lower", r.log_c, -std::log(4.0) - detail::log_sum_exp(-ea, -eb), false, regime);
  check("partition_upper", r.log_c, std::log(10 * m) + ea, true, regime);
  return r;
}

}  // namespace temper
