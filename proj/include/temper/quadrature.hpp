#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "temper/errors.hpp"

namespace temper::quad {

struct Options {
  double rel_tol = 1e-11;
  double abs_tol = 0.0;
  int initial_panels = 4;  // per piece between cut points
  int max_doublings = 14;
};

/// Full symmetric Gauss-Legendre rule on [-1, 1].
template <unsigned N>
struct Rule {
  std::array<double, N> x{};
  std::array<double, N> w{};

  static const Rule& get() {
    static const Rule rule = [] {
      Rule r;
      using G = boost::math::quadrature::gauss<double, N>;
      const auto& ax = G::abscissa();
      const auto& wt = G::weights();
      unsigned k = 0;
      for (unsigned i = 0; i < ax.size(); ++i) {
        if (ax[i] == 0.0) {
          r.x[k] = 0.0;
          r.w[k++] = wt[i];
        } else {
          r.x[k] = ax[i];
          r.w[k++] = wt[i];
          r.x[k] = -ax[i];
          r.w[k++] = wt[i];
        }
      }
      return r;
    }();
    return rule;
  }
};

using Rule20 = Rule<20>;

/// Sorted cut points of [a, b]: the endpoints plus every break strictly inside.
inline std::vector<double> cut_points(double a, double b, std::span<const double> breaks) {
  std::vector<double> c{a, b};
  for (double x : breaks)
    if (x > a && x < b) c.push_back(x);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

namespace detail {

// Applies `visit(node, weight)` over `panels` equal panels of every piece.
template <class Visit>
void for_each_node(const std::vector<double>& cuts, int panels, Visit&& visit) {
  const auto& r = Rule20::get();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double c0 = cuts[i], c1 = cuts[i + 1];
    const double width = (c1 - c0) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = c0 + p * width;
      const double hi = (p + 1 == panels) ? c1 : lo + width;
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (unsigned k = 0; k < r.x.size(); ++k) visit(mid + half * r.x[k], half * r.w[k]);
    }
  }
}

}  // namespace detail

/// Composite Gauss-Legendre integral of f over [a, b], split at `breaks`.
/// Panels are doubled until two successive estimates agree.
template <class F>
double integrate(F&& f, double a, double b, std::span<const double> breaks = {},
                 const Options& opt = {}) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, breaks, opt);
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DomainError("integrate: endpoints must be finite");
  const auto cuts = cut_points(a, b, breaks);
  auto estimate = [&](int panels, double& mag) {
    double sum = 0.0;
    mag = 0.0;
    detail::for_each_node(cuts, panels, [&](double x, double w) {
      const double v = f(x);
      sum += w * v;
      mag += w * std::abs(v);
    });
    return sum;
  };
  int n = opt.initial_panels;
  double mag = 0.0;
  double prev = estimate(n, mag);
  for (int i = 0; i < opt.max_doublings; ++i) {
    n *= 2;
    const double cur = estimate(n, mag);
    if (!std::isfinite(cur)) throw NumericalError("integrate: non-finite integrand");
    const double tol = std::max({opt.abs_tol, opt.rel_tol * std::abs(cur), 64 * 2.2e-16 * mag});
    if (std::abs(cur - prev) <= tol) return cur;
    prev = cur;
  }
  throw NumericalError("integrate: no convergence on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]");
}

/// log of the integral of exp(g) over [a, b], computed with a max shift so that
/// masses far below the double range stay representable.
template <class G>
double log_integrate_exp(G&& g, double a, double b, std::span<const double> breaks = {},
                         const Options& opt = {}) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  if (a == b) return ninf;
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("log_integrate_exp: need finite a < b");
  const auto cuts = cut_points(a, b, breaks);
  std::vector<double> gv, wv;
  auto estimate = [&](int panels) {
    gv.clear();
    wv.clear();
    detail::for_each_node(cuts, panels, [&](double x, double w) {
      gv.push_back(g(x));
      wv.push_back(w);
    });
    const double shift = *std::max_element(gv.begin(), gv.end());
    if (shift == ninf) return ninf;
    if (!std::isfinite(shift)) throw NumericalError("log_integrate_exp: non-finite log integrand");
    double s = 0.0;
    for (std::size_t i = 0; i < gv.size(); ++i) s += wv[i] * std::exp(gv[i] - shift);
    return shift + std::log(s);
  };
  int n = opt.initial_panels;
  double prev = estimate(n);
  for (int i = 0; i < opt.max_doublings; ++i) {
    n *= 2;
    const double cur = estimate(n);
    if (cur == ninf && prev == ninf) return ninf;
    if (std::abs(cur - prev) <= opt.rel_tol) return cur;
    prev = cur;
  }
  throw NumericalError("log_integrate_exp: no convergence");
}

/// Running integral s -> int_a^s f for repeated queries.  Breaks split the
/// panel layout so that kinks of f fall on panel edges.
class CumulativeIntegral {
 public:
  CumulativeIntegral() = default;
  CumulativeIntegral(std::function<double(double)> f, double a, double b,
                     std::span<const double> breaks = {}, int panels_per_piece = 32)
      : f_(std::move(f)), a_(a), b_(b) {
    if (!(a <= b)) throw DomainError("CumulativeIntegral: need a <= b");
    const auto cuts = cut_points(a, b, breaks);
    for (int attempt = 0; attempt < 8; ++attempt, panels_per_piece *= 2) {
      build(cuts, panels_per_piece);
      const double coarse = cum_.back();
      std::vector<double> edges = edges_, cum = cum_;
      build(cuts, panels_per_piece * 2);
      if (std::abs(cum_.back() - coarse) <= 1e-13 * std::max(1.0, std::abs(coarse))) {
        edges_ = std::move(edges);
        cum_ = std::move(cum);
        return;
      }
    }
    throw NumericalError("CumulativeIntegral: no convergence");
  }

  double operator()(double s) const {
    if (s < a_ - 1e-12 * std::max(1.0, std::abs(a_)) || s > b_ + 1e-12 * std::max(1.0, std::abs(b_)))
      throw DomainError("CumulativeIntegral: query outside range");
    s = std::clamp(s, a_, b_);
    auto it = std::upper_bound(edges_.begin(), edges_.end(), s);
    std::size_t i = (it == edges_.begin()) ? 0 : static_cast<std::size_t>(it - edges_.begin()) - 1;
    if (i + 1 >= edges_.size()) return cum_.back();
    return cum_[i] + panel(edges_[i], s);
  }

  double total() const { return cum_.empty() ? 0.0 : cum_.back(); }
  double lower() const { return a_; }
  double upper() const { return b_; }

 private:
  double panel(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    const auto& r = Rule20::get();
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (unsigned k = 0; k < r.x.size(); ++k) s += r.w[k] * f_(mid + half * r.x[k]);
    return half * s;
  }

  void build(const std::vector<double>& cuts, int panels) {
    edges_.assign(1, cuts.front());
    cum_.assign(1, 0.0);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double width = (cuts[i + 1] - cuts[i]) / panels;
      for (int p = 0; p < panels; ++p) {
        const double lo = edges_.back();
        const double hi = (p + 1 == panels) ? cuts[i + 1] : cuts[i] + (p + 1) * width;
        cum_.push_back(cum_.back() + panel(lo, hi));
        edges_.push_back(hi);
      }
    }
  }

  std::function<double(double)> f_;
  double a_ = 0.0, b_ = 0.0;
  std::vector<double> edges_, cum_;
};

}  // namespace temper::quad
