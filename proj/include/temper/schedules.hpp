#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "temper/errors.hpp"
#include "temper/format.hpp"
#include "temper/quadrature.hpp"

namespace temper {

enum class ScheduleKind { Constant, Linear, Optimal, Table };

/// Nondecreasing map s -> lambda(s) in [0, 1] on [0, horizon].
class Schedule {
 public:
  static constexpr double kUnbounded = std::numeric_limits<double>::infinity();

  static Schedule constant(double value, double horizon = kUnbounded) {
    if (!(value >= 0 && value <= 1)) throw DomainError("constant schedule: value must lie in [0, 1]");
    Schedule s(ScheduleKind::Constant, horizon);
    s.c_ = value;
    return s;
  }

  static Schedule linear(double horizon) {
    if (!(horizon > 0) || !std::isfinite(horizon)) throw DomainError("linear schedule: horizon must be positive");
    return Schedule(ScheduleKind::Linear, horizon);
  }

  /// Minimizer of G for the rates (alpha_nu, alpha_pi); identically one once
  /// alpha_pi >= alpha_nu / 2.
  static Schedule optimal(double alpha_nu, double alpha_pi, double horizon = kUnbounded) {
    if (!(alpha_nu > 0) || !(alpha_pi > 0)) throw DomainError("optimal schedule: rates must be positive");
    Schedule s(ScheduleKind::Optimal, horizon);
    s.an_ = alpha_nu;
    s.ap_ = alpha_pi;
    if (alpha_pi >= alpha_nu) {
      s.vanilla_ = true;
      s.clamp_ = 0.0;
    } else {
      s.k_ = alpha_nu / (alpha_nu - alpha_pi);
      s.clamp_ = std::max(0.0, 1.0 / alpha_pi - 2.0 / alpha_nu);
    }
    return s;
  }

  /// Piecewise-linear table through (s_i, lambda_i); s_0 must be 0.
  static Schedule table(std::vector<double> s, std::vector<double> lambda) {
    if (s.size() != lambda.size() || s.size() < 2) throw DomainError("table schedule: need two or more matching points");
    if (s.front() != 0.0) throw DomainError("table schedule: first time must be 0");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!std::isfinite(s[i]) || !(lambda[i] >= 0 && lambda[i] <= 1))
        throw DomainError("table schedule: lambda must lie in [0, 1]");
      if (i > 0 && !(s[i] > s[i - 1])) throw DomainError("table schedule: times must increase strictly");
      if (i > 0 && lambda[i] < lambda[i - 1])
        throw DomainError("table schedule: lambda decreases at row " + std::to_string(i));
    }
    Schedule out(ScheduleKind::Table, s.back());
    out.cum_.assign(1, 0.0);
    for (std::size_t i = 1; i < s.size(); ++i)
      out.cum_.push_back(out.cum_.back() + 0.5 * (lambda[i] + lambda[i - 1]) * (s[i] - s[i - 1]));
    out.ts_ = std::move(s);
    out.ls_ = std::move(lambda);
    return out;
  }

  ScheduleKind kind() const { return kind_; }
  bool is_vanilla() const { return vanilla_ || (kind_ == ScheduleKind::Constant && c_ == 1.0); }
  double horizon() const { return horizon_; }

  std::string name() const {
    switch (kind_) {
      case ScheduleKind::Constant: return c_ == 1.0 ? "vanilla" : "constant";
      case ScheduleKind::Linear: return "linear";
      case ScheduleKind::Optimal: return vanilla_ ? "vanilla" : "optimal";
      case ScheduleKind::Table: return "table";
    }
    return "";
  }

  /// Same schedule restricted or extended to a new horizon.
  Schedule with_horizon(double t) const {
    if (!(t > 0)) throw DomainError("with_horizon: horizon must be positive");
    switch (kind_) {
      case ScheduleKind::Linear: return linear(t);
      case ScheduleKind::Table:
        if (t > horizon_ * (1 + 1e-12)) throw DomainError("with_horizon: table does not cover the horizon");
        [[fallthrough]];
      default: {
        Schedule s = *this;
        s.horizon_ = t;
        return s;
      }
    }
  }

  double value(double s) const {
    s = check(s);
    switch (kind_) {
      case ScheduleKind::Constant: return c_;
      case ScheduleKind::Linear: return s / horizon_;
      case ScheduleKind::Optimal:
        if (vanilla_ || s >= clamp_) return 1.0;
        return std::min(1.0, k_ * (1 + an_ * s) / (2 + an_ * s));
      case ScheduleKind::Table: {
        const std::size_t i = segment(s);
        const double w = (s - ts_[i]) / (ts_[i + 1] - ts_[i]);
        return ls_[i] + w * (ls_[i + 1] - ls_[i]);
      }
    }
    return 0.0;
  }

  /// Right derivative; zero on flat stretches, including after the clamp.
  double derivative(double s) const {
    s = check(s);
    switch (kind_) {
      case ScheduleKind::Constant: return 0.0;
      case ScheduleKind::Linear: return 1.0 / horizon_;
      case ScheduleKind::Optimal: {
        if (vanilla_ || s >= clamp_) return 0.0;
        const double q = 2 + an_ * s;
        return k_ * an_ / (q * q);
      }
      case ScheduleKind::Table: {
        const std::size_t i = segment(s);
        return (ls_[i + 1] - ls_[i]) / (ts_[i + 1] - ts_[i]);
      }
    }
    return 0.0;
  }

  /// Exact integral of lambda over [s0, s1].
  double integral(double s0, double s1) const {
    if (s1 < s0) return -integral(s1, s0);
    return primitive(check(s1)) - primitive(check(s0));
  }

  /// Interior points where the derivative jumps.
  std::vector<double> kinks() const {
    std::vector<double> k;
    if (kind_ == ScheduleKind::Optimal && !vanilla_ && clamp_ > 0 && clamp_ < horizon_) k.push_back(clamp_);
    if (kind_ == ScheduleKind::Table)
      for (std::size_t i = 1; i + 1 < ts_.size(); ++i) k.push_back(ts_[i]);
    return k;
  }

  /// Time after which the optimal schedule sits at one.
  double clamp_time() const { return clamp_; }
  const std::vector<double>& table_times() const { return ts_; }
  const std::vector<double>& table_values() const { return ls_; }

  /// Canonical text used for hashing and manifests.
  std::string describe() const {
    std::string d = name() + ";horizon=" + fmt17(horizon_);
    switch (kind_) {
      case ScheduleKind::Constant: d += ";value=" + fmt17(c_); break;
      case ScheduleKind::Optimal: d += ";alpha_nu=" + fmt17(an_) + ";alpha_pi=" + fmt17(ap_); break;
      case ScheduleKind::Table:
        for (std::size_t i = 0; i < ts_.size(); ++i) d += ";" + fmt17(ts_[i]) + ":" + fmt17(ls_[i]);
        break;
      default: break;
    }
    return d;
  }

 private:
  Schedule(ScheduleKind k, double horizon) : kind_(k), horizon_(horizon) {
    if (!(horizon > 0)) throw DomainError("schedule horizon must be positive");
  }

  double check(double s) const {
    const double tol = 1e-12 * std::max(1.0, std::isfinite(horizon_) ? horizon_ : 1.0);
    if (!(s >= -tol) || s > horizon_ + tol) throw DomainError("schedule evaluated outside [0, horizon]");
    return std::clamp(s, 0.0, horizon_);
  }

  std::size_t segment(double s) const {
    auto it = std::upper_bound(ts_.begin(), ts_.end(), s);
    std::size_t i = (it == ts_.begin()) ? 0 : static_cast<std::size_t>(it - ts_.begin()) - 1;
    return std::min(i, ts_.size() - 2);
  }

  double primitive(double s) const {
    switch (kind_) {
      case ScheduleKind::Constant: return c_ * s;
      case ScheduleKind::Linear: return 0.5 * s * s / horizon_;
      case ScheduleKind::Optimal: {
        if (vanilla_) return s;
        const double sc = std::min(s, clamp_);
        // d/ds [s - log((2 + a s)/2)/a] = (1 + a s)/(2 + a s)
        const double ramp = k_ * (sc - std::log1p(0.5 * an_ * sc) / an_);
        return ramp + (s - sc);
      }
      case ScheduleKind::Table: {
        const std::size_t i = segment(s);
        const double w = s - ts_[i];
        const double slope = (ls_[i + 1] - ls_[i]) / (ts_[i + 1] - ts_[i]);
        return cum_[i] + ls_[i] * w + 0.5 * slope * w * w;
      }
    }
    return 0.0;
  }

  ScheduleKind kind_;
  double horizon_;
  double c_ = 0.0;
  double an_ = 0.0, ap_ = 0.0, k_ = 0.0, clamp_ = 0.0;
  bool vanilla_ = false;
  std::vector<double> ts_, ls_, cum_;
};

/// Interpolated contraction rate alpha_s = (1 - lambda_s) alpha_nu + lambda_s alpha_pi.
inline double alpha_along(const Schedule& sch, double alpha_nu, double alpha_pi, double s) {
  const double l = sch.value(s);
  return (1 - l) * alpha_nu + l * alpha_pi;
}

/// int_s^t alpha, exact for the affine rate model.
inline double alpha_integral(const Schedule& sch, double alpha_nu, double alpha_pi, double s, double t) {
  return alpha_nu * (t - s) - (alpha_nu - alpha_pi) * sch.integral(s, t);
}

// ---------------------------------------------------------------------------

/// Phi_s = exp(-int_s^t alpha) together with its derivative on [0, t].
struct PhiCurve {
  double horizon = 0.0;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::vector<double> breakpoints;
};

inline PhiCurve schedule_to_phi(const Schedule& sch, double alpha_nu, double alpha_pi, double t) {
  if (!(t > 0)) throw DomainError("schedule_to_phi: horizon must be positive");
  if (t > sch.horizon() * (1 + 1e-12)) throw DomainError("schedule_to_phi: schedule shorter than horizon");
  PhiCurve c;
  c.horizon = t;
  c.value = [=](double s) { return std::exp(-alpha_integral(sch, alpha_nu, alpha_pi, s, t)); };
  c.derivative = [=](double s) {
    return alpha_along(sch, alpha_nu, alpha_pi, s) * std::exp(-alpha_integral(sch, alpha_nu, alpha_pi, s, t));
  };
  for (double k : sch.kinks())
    if (k < t) c.breakpoints.push_back(k);
  return c;
}

/// Closed-form minimizing Phi over [0, t].
inline PhiCurve optimal_phi(double alpha_nu, double alpha_pi, double t) {
  if (!(alpha_nu > alpha_pi) || !(alpha_pi > 0) || !(t > 0)) throw DomainError("optimal_phi: need alpha_nu > alpha_pi > 0");
  PhiCurve c;
  c.horizon = t;
  const double an = alpha_nu, ap = alpha_pi;
  if (ap > an / 2) {
    c.value = [=](double s) { return std::exp(ap * (s - t)); };
    c.derivative = [=](double s) { return ap * std::exp(ap * (s - t)); };
  } else if (ap > an / (t * an + 2)) {
    const double sc = 1 / ap - 2 / an;
    const double anchor = std::exp(ap * (sc - t));
    c.value = [=](double s) { return s >= sc ? std::exp(ap * (s - t)) : anchor * (1 + ap * (s - sc)); };
    c.derivative = [=](double s) { return s >= sc ? ap * std::exp(ap * (s - t)) : anchor * ap; };
    c.breakpoints.push_back(sc);
  } else {
    const double slope = an / (2 + t * an);
    c.value = [=](double s) { return slope * s + 1 - t * slope; };
    c.derivative = [=](double) { return slope; };
  }
  return c;
}

/// (alpha_nu/2 - int Phi'^2 - alpha_nu Phi_0^2 / 2) / (alpha_nu - alpha_pi); G = 1 - 2 * objective.
inline double phi_objective(const PhiCurve& phi, double alpha_nu, double alpha_pi) {
  if (!(alpha_nu > alpha_pi)) throw DomainError("phi_objective: need alpha_nu > alpha_pi");
  const double energy = quad::integrate(
      [&](double s) {
        const double d = phi.derivative(s);
        return d * d;
      },
      0.0, phi.horizon, phi.breakpoints, quad::Options{1e-13});
  const double p0 = phi.value(0.0);
  return (0.5 * alpha_nu - energy - 0.5 * alpha_nu * p0 * p0) / (alpha_nu - alpha_pi);
}

/// lambda_s recovered from Phi through alpha_s = Phi'_s / Phi_s.
inline double phi_implied_lambda(const PhiCurve& phi, double alpha_nu, double alpha_pi, double s) {
  return (alpha_nu - phi.derivative(s) / phi.value(s)) / (alpha_nu - alpha_pi);
}

/// Samples the implied schedule into a piecewise-linear table.
inline Schedule recovered_schedule(const PhiCurve& phi, double alpha_nu, double alpha_pi, std::size_t n = 4096) {
  std::vector<double> s, l;
  std::vector<double> grid;
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(phi.horizon * static_cast<double>(i) / n);
  for (double b : phi.breakpoints) grid.push_back(b);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double x : grid) {
    double v = phi_implied_lambda(phi, alpha_nu, alpha_pi, x);
    if (v < -1e-9 || v > 1 + 1e-9 || (!l.empty() && v < l.back() - 1e-9))
      throw DomainError("recovered_schedule: Phi does not correspond to a monotone schedule");
    v = std::clamp(v, l.empty() ? 0.0 : l.back(), 1.0);
    s.push_back(x);
    l.push_back(v);
  }
  return Schedule::table(std::move(s), std::move(l));
}

// ---------------------------------------------------------------------------

struct LadderLevel {
  double lambda = 0.0;
  double step = 0.0;          // inner step size h_k
  std::size_t n_inner = 1;    // inner iterations at this level
};

struct DiscreteStep {
  double lambda = 0.0;
  double h = 0.0;
};

/// Piecewise-constant sequence of tempering levels, each run for a fixed
/// number of inner steps.
class TemperatureLadder {
 public:
  TemperatureLadder(double initial_level, std::vector<LadderLevel> levels)
      : initial_(initial_level), levels_(std::move(levels)) {
    if (!(initial_ >= 0 && initial_ <= 1)) throw DomainError("ladder: initial level must lie in [0, 1]");
    double prev = initial_;
    for (const auto& l : levels_) {
      if (!(l.lambda >= 0 && l.lambda <= 1)) throw DomainError("ladder: level outside [0, 1]");
      if (l.lambda < prev) throw DomainError("ladder: levels must be nondecreasing");
      if (!(l.step > 0) || !std::isfinite(l.step)) throw DomainError("ladder: step must be positive");
      if (l.n_inner == 0) throw DomainError("ladder: n_inner must be at least one");
      prev = l.lambda;
    }
  }

  /// Levels held for inner times T_k, split into steps no longer than h.
  static TemperatureLadder from_inner_times(double initial, const std::vector<double>& levels,
                                            const std::vector<double>& inner_times, double h) {
    if (levels.size() != inner_times.size()) throw DomainError("ladder: levels and inner times differ in length");
    if (!(h > 0)) throw DomainError("ladder: h must be positive");
    std::vector<LadderLevel> out;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (!(inner_times[k] > 0)) throw DomainError("ladder: inner times must be positive");
      const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(inner_times[k] / h - 1e-9)));
      out.push_back({levels[k], inner_times[k] / static_cast<double>(n), n});
    }
    return TemperatureLadder(initial, std::move(out));
  }

  double initial_level() const { return initial_; }
  const std::vector<LadderLevel>& levels() const { return levels_; }

  std::size_t total_steps() const {
    std::size_t n = 0;
    for (const auto& l : levels_) n += l.n_inner;
    return n;
  }
  double total_time() const {
    double t = 0.0;
    for (const auto& l : levels_) t += l.step * static_cast<double>(l.n_inner);
    return t;
  }

  std::vector<DiscreteStep> expand() const {
    std::vector<DiscreteStep> out;
    out.reserve(total_steps());
    for (const auto& l : levels_)
      for (std::size_t j = 0; j < l.n_inner; ++j) out.push_back({l.lambda, l.step});
    return out;
  }

 private:
  double initial_;
  std::vector<LadderLevel> levels_;
};

/// Euler grid of `n_steps` equal steps over the schedule's horizon, using the
/// right endpoint of each step.
inline TemperatureLadder discretize(const Schedule& sch, std::size_t n_steps) {
  if (n_steps == 0) throw DomainError("discretize: need at least one step");
  if (!std::isfinite(sch.horizon())) throw DomainError("discretize: schedule needs a finite horizon");
  const double h = sch.horizon() / static_cast<double>(n_steps);
  std::vector<LadderLevel> lv;
  lv.reserve(n_steps);
  for (std::size_t k = 1; k <= n_steps; ++k) lv.push_back({sch.value(h * static_cast<double>(k)), h, 1});
  return TemperatureLadder(sch.value(0.0), std::move(lv));
}

}  // namespace temper
