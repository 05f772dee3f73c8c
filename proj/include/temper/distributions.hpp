#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "temper/errors.hpp"
#include "temper/format.hpp"
#include "temper/quadrature.hpp"

namespace temper {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Constants (a, b) with <grad V(x), x> >= a|x|^2 - b.
struct Dissipativity {
  double a = 0.0;
  double b = 0.0;
};

/// Interval holding all but a negligible part of a 1D density.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {
inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}
}  // namespace detail

// ---------------------------------------------------------------------------

/// N(mean, covariance) with potential 0.5 (x-mu)' P (x-mu).
class GaussianSpec {
 public:
  GaussianSpec(Vec mean, Mat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto d = mean_.size();
    if (d == 0) throw DomainError("GaussianSpec: empty mean");
    if (cov_.rows() != d || cov_.cols() != d) throw DomainError("GaussianSpec: covariance shape");
    if (!mean_.allFinite() || !cov_.allFinite()) throw DomainError("GaussianSpec: non-finite entry");
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw DomainError("GaussianSpec: covariance not symmetric");
    cov_ = 0.5 * (cov_ + cov_.transpose());
    Eigen::LLT<Mat> llt(cov_);
    if (llt.info() != Eigen::Success) throw DomainError("GaussianSpec: covariance not positive definite");
    prec_ = llt.solve(Mat::Identity(d, d));
    prec_ = 0.5 * (prec_ + prec_.transpose());
    log_det_cov_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    Eigen::SelfAdjointEigenSolver<Mat> es(prec_);
    prec_min_ = es.eigenvalues().minCoeff();
    prec_max_ = es.eigenvalues().maxCoeff();
    if (!(prec_min_ > 0)) throw DomainError("GaussianSpec: covariance not positive definite");
    mu_.assign(mean_.data(), mean_.data() + d);
    p_.resize(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) p_[i * d + j] = prec_(i, j);
  }

  static GaussianSpec scalar(double mean, double variance) {
    if (!(variance > 0)) throw DomainError("GaussianSpec: variance must be positive");
    return GaussianSpec(Vec::Constant(1, mean), Mat::Constant(1, 1, variance));
  }
  static GaussianSpec isotropic(Vec mean, double variance) {
    if (!(variance > 0)) throw DomainError("GaussianSpec: variance must be positive");
    const auto d = mean.size();
    return GaussianSpec(std::move(mean), variance * Mat::Identity(d, d));
  }
  static GaussianSpec standard(std::size_t d) { return isotropic(Vec::Zero(d), 1.0); }

  std::size_t dim() const { return mu_.size(); }
  const Vec& mean() const { return mean_; }
  const Mat& covariance() const { return cov_; }
  const Mat& precision() const { return prec_; }
  double log_det_cov() const { return log_det_cov_; }

  double potential(std::span<const double> x) const {
    const std::size_t d = dim();
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < d; ++j) row += p_[i * d + j] * (x[j] - mu_[j]);
      q += (x[i] - mu_[i]) * row;
    }
    return 0.5 * q;
  }

  void score(std::span<const double> x, std::span<double> out) const {
    const std::size_t d = dim();
    for (std::size_t i = 0; i < d; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < d; ++j) row += p_[i * d + j] * (x[j] - mu_[j]);
      out[i] = -row;
    }
  }

  double score1(double x) const { return -p_[0] * (x - mu_[0]); }
  double curvature1() const { return p_[0]; }

  /// log Z for the density exp(-V)/Z.
  double log_partition() const {
    return 0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) + log_det_cov_);
  }
  double log_density(std::span<const double> x) const { return -potential(x) - log_partition(); }

  double lipschitz() const { return prec_max_; }
  double strong_convexity() const { return prec_min_; }

  Dissipativity dissipativity() const {
    if (mean_.cwiseAbs().maxCoeff() == 0.0) return {prec_min_, 0.0};
    const double pm = (prec_ * mean_).squaredNorm();
    return {0.5 * prec_min_, pm / (2.0 * prec_min_)};
  }

  Interval support1() const {
    const double sd = std::sqrt(cov_(0, 0));
    return {mu_[0] - 14.0 * sd, mu_[0] + 14.0 * sd};
  }

 private:
  Vec mean_;
  Mat cov_, prec_;
  std::vector<double> mu_, p_;
  double log_det_cov_ = 0.0, prec_min_ = 0.0, prec_max_ = 0.0;
};

// ---------------------------------------------------------------------------

/// Density proportional to exp(-dist(x, [-m, 2m])^2 / 2): flat on the
/// interval with Gaussian shoulders.
class SmoothedUniformSpec {
 public:
  explicit SmoothedUniformSpec(double m) : m_(m) {
    if (!(m > 0) || !std::isfinite(m)) throw DomainError("SmoothedUniformSpec: m must be positive");
  }
  double m() const { return m_; }
  std::size_t dim() const { return 1; }

  double distance(double x) const {
    if (x < -m_) return -m_ - x;
    if (x > 2 * m_) return x - 2 * m_;
    return 0.0;
  }
  double potential1(double x) const {
    const double r = distance(x);
    return 0.5 * r * r;
  }
  double score1(double x) const {
    if (x < -m_) return -(x + m_);
    if (x > 2 * m_) return -(x - 2 * m_);
    return 0.0;
  }
  double curvature1(double x) const { return (x < -m_ || x > 2 * m_) ? 1.0 : 0.0; }
  double log_partition() const { return std::log(3 * m_ + std::sqrt(2 * std::numbers::pi)); }
  double log_density1(double x) const { return -potential1(x) - log_partition(); }
  double lipschitz() const { return 1.0; }
  double strong_convexity() const { return 0.0; }
  Dissipativity dissipativity() const { return {0.5, 2 * m_ * m_}; }
  Interval support1() const { return {-m_ - 14.0, 2 * m_ + 14.0}; }
  std::vector<double> breakpoints() const { return {-m_, 2 * m_}; }

 private:
  double m_;
};

// ---------------------------------------------------------------------------

/// One-dimensional finite mixture of Gaussians and smoothed uniforms.
class MixtureSpec {
 public:
  using Component = std::variant<GaussianSpec, SmoothedUniformSpec>;
  struct Weighted {
    double weight;
    Component dist;
  };

  explicit MixtureSpec(std::vector<Weighted> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw DomainError("MixtureSpec: no components");
    double total = 0.0;
    for (const auto& c : comps_) {
      if (!(c.weight > 0) || !std::isfinite(c.weight)) throw DomainError("MixtureSpec: weights must be positive");
      if (component_dim(c.dist) != 1) throw UnsupportedConfiguration("MixtureSpec: components must be 1D");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("MixtureSpec: weights must sum to one");
    for (auto& c : comps_) {
      c.weight /= total;
      log_w_.push_back(std::log(c.weight));
    }
    support_ = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    diss_ = {std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& c : comps_) {
      std::visit(
          [&](const auto& s) {
            const auto iv = s.support1();
            support_.lo = std::min(support_.lo, iv.lo);
            support_.hi = std::max(support_.hi, iv.hi);
            const auto dd = s.dissipativity();
            diss_.a = std::min(diss_.a, dd.a);
            diss_.b = std::max(diss_.b, dd.b);
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, SmoothedUniformSpec>)
              for (double b : s.breakpoints()) breaks_.push_back(b);
          },
          c.dist);
    }
    std::sort(breaks_.begin(), breaks_.end());
    lipschitz_ = estimate_lipschitz();
  }

  std::size_t dim() const { return 1; }
  const std::vector<Weighted>& components() const { return comps_; }

  double log_density1(double x) const {
    double acc = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < comps_.size(); ++i)
      acc = detail::log_sum_exp(acc, log_w_[i] + comp_log_density(comps_[i].dist, x));
    return acc;
  }
  double potential1(double x) const { return -log_density1(x); }

  double score1(double x) const {
    double s = 0.0;
    for_responsibilities(x, [&](double r, const Component& c) { s += r * comp_score(c, x); });
    return s;
  }

  /// Second derivative of the potential.
  double curvature1(double x) const {
    double mean_curv = 0.0, m1 = 0.0, m2 = 0.0;
    for_responsibilities(x, [&](double r, const Component& c) {
      const double s = comp_score(c, x);
      mean_curv += r * comp_curvature(c, x);
      m1 += r * s;
      m2 += r * s * s;
    });
    return mean_curv - (m2 - m1 * m1);
  }

  double log_partition() const { return 0.0; }
  double lipschitz() const { return lipschitz_; }
  Dissipativity dissipativity() const { return diss_; }
  Interval support1() const { return support_; }
  const std::vector<double>& breakpoints() const { return breaks_; }

 private:
  static std::size_t component_dim(const Component& c) {
    return std::visit([](const auto& s) { return s.dim(); }, c);
  }
  static double comp_log_density(const Component& c, double x) {
    if (auto g = std::get_if<GaussianSpec>(&c)) return g->log_density(std::span<const double>(&x, 1));
    return std::get<SmoothedUniformSpec>(c).log_density1(x);
  }
  static double comp_score(const Component& c, double x) {
    if (auto g = std::get_if<GaussianSpec>(&c)) return g->score1(x);
    return std::get<SmoothedUniformSpec>(c).score1(x);
  }
  static double comp_curvature(const Component& c, double x) {
    if (auto g = std::get_if<GaussianSpec>(&c)) return g->curvature1();
    return std::get<SmoothedUniformSpec>(c).curvature1(x);
  }

  template <class F>
  void for_responsibilities(double x, F&& f) const {
    // Small fixed-size buffer; mixtures here have a handful of components.
    double lp[16];
    std::vector<double> heap;
    double* buf = lp;
    if (comps_.size() > 16) {
      heap.resize(comps_.size());
      buf = heap.data();
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      buf[i] = log_w_[i] + comp_log_density(comps_[i].dist, x);
      mx = std::max(mx, buf[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < comps_.size(); ++i) z += (buf[i] = std::exp(buf[i] - mx));
    for (std::size_t i = 0; i < comps_.size(); ++i) f(buf[i] / z, comps_[i].dist);
  }

  double estimate_lipschitz() const {
    // |V''| on a fine grid over the bulk plus a margin; far tails inherit the
    // curvature of a single component, which the grid already sees.
    const double lo = support_.lo, hi = support_.hi;
    const int n = 20000;
    double best = 0.0;
    for (int i = 0; i <= n; ++i) best = std::max(best, std::abs(curvature1(lo + (hi - lo) * i / n)));
    for (double b : breaks_) {
      best = std::max(best, std::abs(curvature1(b - 1e-9)));
      best = std::max(best, std::abs(curvature1(b + 1e-9)));
    }
    return best * 1.01;
  }

  std::vector<Weighted> comps_;
  std::vector<double> log_w_, breaks_;
  Interval support_;
  Dissipativity diss_;
  double lipschitz_ = 0.0;
};

// ---------------------------------------------------------------------------

/// User-supplied potential.  1D custom specs without a known partition get
/// one by quadrature at construction.
struct CustomSpec {
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> potential;
  std::function<void(std::span<const double>, std::span<double>)> score;
  double lipschitz = 0.0;
  Dissipativity dissipativity;
  std::optional<double> strong_convexity;
  std::optional<double> log_partition;
  std::optional<Interval> support;
  std::vector<double> breakpoints;
};

// ---------------------------------------------------------------------------

/// Immutable potential V with density exp(-V)/Z.
class PotentialSpec {
 public:
  using Variant = std::variant<GaussianSpec, SmoothedUniformSpec, MixtureSpec, CustomSpec>;

  PotentialSpec(GaussianSpec g) : v_(std::move(g)) {}
  PotentialSpec(SmoothedUniformSpec u) : v_(std::move(u)) {}
  PotentialSpec(MixtureSpec m) : v_(std::move(m)) {}
  PotentialSpec(CustomSpec c) : v_(std::move(c)) {
    auto& s = std::get<CustomSpec>(v_);
    if (s.dim == 0 || !s.potential || !s.score) throw DomainError("CustomSpec: incomplete");
    if (!(s.lipschitz > 0)) throw DomainError("CustomSpec: lipschitz must be positive");
    if (!(s.dissipativity.a > 0) || s.dissipativity.b < 0) throw DomainError("CustomSpec: bad dissipativity");
    if (s.dim == 1) {
      if (!s.support) {
        const double a = s.dissipativity.a;
        const double r = std::sqrt(s.dissipativity.b / a) + 14.0 / std::sqrt(a);
        s.support = Interval{-r, r};
      }
      if (!s.log_partition) {
        auto V = s.potential;
        const auto iv = *s.support;
        s.log_partition = quad::log_integrate_exp(
            [&](double x) { return -V(std::span<const double>(&x, 1)); }, iv.lo, iv.hi, s.breakpoints);
      }
    }
  }

  const Variant& variant() const { return v_; }
  bool is_gaussian() const { return std::holds_alternative<GaussianSpec>(v_); }
  const GaussianSpec& gaussian() const {
    if (!is_gaussian()) throw UnsupportedConfiguration("potential is not Gaussian");
    return std::get<GaussianSpec>(v_);
  }

  std::size_t dim() const {
    return std::visit([](const auto& s) -> std::size_t {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CustomSpec>) return s.dim;
      else return s.dim();
    }, v_);
  }

  double potential(std::span<const double> x) const {
    check_dim(x.size());
    return std::visit([&](const auto& s) -> double {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, GaussianSpec>) return s.potential(x);
      else if constexpr (std::is_same_v<T, CustomSpec>) return s.potential(x);
      else return s.potential1(x[0]);
    }, v_);
  }

  void score(std::span<const double> x, std::span<double> out) const {
    check_dim(x.size());
    std::visit([&](const auto& s) {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, GaussianSpec> || std::is_same_v<T, CustomSpec>) s.score(x, out);
      else out[0] = s.score1(x[0]);
    }, v_);
  }

  /// Fast path for one-dimensional specs.
  double score1(double x) const {
    return std::visit([&](const auto& s) -> double {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, CustomSpec>) {
        double out;
        s.score(std::span<const double>(&x, 1), std::span<double>(&out, 1));
        return out;
      } else {
        return s.score1(x);
      }
    }, v_);
  }

  /// log Z, when known in closed form or computed at construction.
  std::optional<double> log_partition() const {
    return std::visit([](const auto& s) -> std::optional<double> {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, CustomSpec>) return s.log_partition;
      else return s.log_partition();
    }, v_);
  }

  double log_density(std::span<const double> x) const {
    const auto lz = log_partition();
    if (!lz) throw UnsupportedConfiguration("log density needs a known partition function");
    return -potential(x) - *lz;
  }
  double log_density1(double x) const { return log_density(std::span<const double>(&x, 1)); }

  double lipschitz() const {
    return std::visit([](const auto& s) -> double {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CustomSpec>) return s.lipschitz;
      else return s.lipschitz();
    }, v_);
  }

  Dissipativity dissipativity() const {
    return std::visit([](const auto& s) -> Dissipativity {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CustomSpec>) return s.dissipativity;
      else return s.dissipativity();
    }, v_);
  }

  std::optional<double> strong_convexity() const {
    return std::visit([](const auto& s) -> std::optional<double> {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, CustomSpec>) return s.strong_convexity;
      else if constexpr (std::is_same_v<T, MixtureSpec>) return std::nullopt;
      else return s.strong_convexity();
    }, v_);
  }

  /// Bulk interval for 1D quadrature.
  Interval support1() const {
    require_1d();
    return std::visit([](const auto& s) -> Interval {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CustomSpec>) return *s.support;
      else return s.support1();
    }, v_);
  }

  /// Points where the 1D potential is not smooth.
  std::vector<double> breakpoints() const {
    return std::visit([](const auto& s) -> std::vector<double> {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, GaussianSpec>) return {};
      else if constexpr (std::is_same_v<T, CustomSpec>) return s.breakpoints;
      else return s.breakpoints();
    }, v_);
  }

  void require_1d() const {
    if (dim() != 1) throw UnsupportedConfiguration("operation needs a one-dimensional potential");
  }

 private:
  void check_dim(std::size_t n) const {
    if (n != dim()) throw DomainError("point dimension does not match potential");
  }
  Variant v_;
};

// ---------------------------------------------------------------------------

/// Normalized 1D density with the pieces quadrature needs.
struct Density1D {
  std::function<double(double)> log_density;
  Interval support;
  std::vector<double> breakpoints;
};

/// Shrinks [lo, hi] to where the log density is within `drop` of its maximum.
template <class G>
Interval trim_support(G&& g, Interval iv, std::span<const double> breaks, double drop = 80.0) {
  const int n = 4000;
  const double step = (iv.hi - iv.lo) / n;
  std::vector<double> xs;
  xs.reserve(n + 1 + breaks.size());
  for (int i = 0; i <= n; ++i) xs.push_back(iv.lo + step * i);
  for (double b : breaks)
    if (b > iv.lo && b < iv.hi) xs.push_back(b);
  std::sort(xs.begin(), xs.end());
  std::vector<double> gv(xs.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) mx = std::max(mx, gv[i] = g(xs[i]));
  if (!std::isfinite(mx)) throw NumericalError("trim_support: density vanishes on its support");
  std::size_t first = 0, last = xs.size() - 1;
  while (first < last && gv[first] < mx - drop) ++first;
  while (last > first && gv[last] < mx - drop) --last;
  return {std::max(iv.lo, xs[first] - 2 * step), std::min(iv.hi, xs[last] + 2 * step)};
}

inline Density1D as_density(const PotentialSpec& p) {
  p.require_1d();
  auto lz = p.log_partition();
  if (!lz) throw UnsupportedConfiguration("density needs a partition function");
  Density1D d;
  d.log_density = [p, z = *lz](double x) { return -p.potential(std::span<const double>(&x, 1)) - z; };
  d.support = p.support1();
  d.breakpoints = p.breakpoints();
  return d;
}

inline double mass(const Density1D& d, double a, double b, const quad::Options& opt = {}) {
  a = std::max(a, d.support.lo);
  b = std::min(b, d.support.hi);
  if (!(a < b)) return 0.0;
  return quad::integrate([&](double x) { return std::exp(d.log_density(x)); }, a, b, d.breakpoints, opt);
}

/// log of the mass of [a, b]; stays finite when the mass underflows.
inline double log_mass(const Density1D& d, double a, double b, const quad::Options& opt = {}) {
  a = std::max(a, d.support.lo);
  b = std::min(b, d.support.hi);
  if (!(a < b)) return -std::numeric_limits<double>::infinity();
  return quad::log_integrate_exp(d.log_density, a, b, d.breakpoints, opt);
}

struct Moments1D {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments1D moments(const Density1D& d) {
  auto f = [&](double x) { return std::exp(d.log_density(x)); };
  const double z = quad::integrate(f, d.support.lo, d.support.hi, d.breakpoints);
  const double m = quad::integrate([&](double x) { return x * f(x); }, d.support.lo, d.support.hi, d.breakpoints) / z;
  const double v = quad::integrate([&](double x) { return (x - m) * (x - m) * f(x); }, d.support.lo,
                                   d.support.hi, d.breakpoints) / z;
  return {m, v};
}

// ---------------------------------------------------------------------------

/// Geometric interpolation mu_lambda proportional to nu^(1-lambda) pi^lambda.
class GeometricPath {
 public:
  GeometricPath(PotentialSpec proposal, PotentialSpec target)
      : nu_(std::move(proposal)), pi_(std::move(target)) {
    if (nu_.dim() != pi_.dim()) throw DomainError("GeometricPath: dimension mismatch");
  }

  const PotentialSpec& proposal() const { return nu_; }
  const PotentialSpec& target() const { return pi_; }
  std::size_t dim() const { return nu_.dim(); }
  bool gaussian_pair() const { return nu_.is_gaussian() && pi_.is_gaussian(); }

  /// (1-lambda) score_nu + lambda score_pi, written into `out`.
  void score(double lambda, std::span<const double> x, std::span<double> out, std::span<double> scratch) const {
    nu_.score(x, out);
    pi_.score(x, scratch);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1 - lambda) * out[i] + lambda * scratch[i];
  }
  double score1(double lambda, double x) const {
    return (1 - lambda) * nu_.score1(x) + lambda * pi_.score1(x);
  }

  /// Unnormalized log density of mu_lambda built from the normalized endpoints.
  double log_unnormalized(double lambda, std::span<const double> x) const {
    check_lambda(lambda);
    if (lambda == 0.0) return nu_.log_density(x);
    if (lambda == 1.0) return pi_.log_density(x);
    return (1 - lambda) * nu_.log_density(x) + lambda * pi_.log_density(x);
  }

  /// log c_lambda = -log int nu^(1-lambda) pi^lambda.
  double log_partition(double lambda) const {
    check_lambda(lambda);
    if (lambda == 0.0 || lambda == 1.0) return 0.0;
    if (gaussian_pair()) return gaussian_log_partition(lambda);
    if (dim() != 1) throw UnsupportedConfiguration("log_partition: needs 1D or a Gaussian pair");
    const auto iv = support1(lambda);
    return -quad::log_integrate_exp([&](double x) { return log_unnormalized(lambda, std::span<const double>(&x, 1)); },
                                    iv.lo, iv.hi, breakpoints(), quad::Options{1e-13});
  }

  double log_density(double lambda, std::span<const double> x) const {
    return log_unnormalized(lambda, x) + log_partition(lambda);
  }

  std::vector<double> breakpoints() const {
    auto b = nu_.breakpoints();
    const auto c = pi_.breakpoints();
    b.insert(b.end(), c.begin(), c.end());
    std::sort(b.begin(), b.end());
    return b;
  }

  /// Bulk of mu_lambda: the union of the endpoint bulks, trimmed.
  Interval support1(double lambda) const {
    nu_.require_1d();
    const auto a = nu_.support1(), b = pi_.support1();
    const Interval u{std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
    const auto br = breakpoints();
    return trim_support([&](double x) { return log_unnormalized(lambda, std::span<const double>(&x, 1)); }, u, br);
  }

  /// Normalized mu_lambda; `trim` drops the region more than e^80 below the peak.
  Density1D density(double lambda, bool trim = true) const {
    nu_.require_1d();
    Density1D d;
    const double lc = log_partition(lambda);
    d.log_density = [self = *this, lambda, lc](double x) {
      return self.log_unnormalized(lambda, std::span<const double>(&x, 1)) + lc;
    };
    if (trim) {
      d.support = support1(lambda);
    } else {
      const auto a = nu_.support1(), b = pi_.support1();
      d.support = {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
    }
    d.breakpoints = breakpoints();
    return d;
  }

 private:
  static void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  }

  double gaussian_log_partition(double lambda) const {
    const auto& n = nu_.gaussian();
    const auto& p = pi_.gaussian();
    const Mat A = (1 - lambda) * n.precision() + lambda * p.precision();
    const Vec b = (1 - lambda) * n.precision() * n.mean() + lambda * p.precision() * p.mean();
    const double c = (1 - lambda) * n.mean().dot(n.precision() * n.mean()) +
                     lambda * p.mean().dot(p.precision() * p.mean());
    Eigen::LLT<Mat> llt(A);
    const double logdetA = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double quad = b.dot(llt.solve(b));
    // log int exp(-x'Ax/2 + b'x - c/2) dx minus the weighted endpoint normalizers
    const double log_int = 0.5 * static_cast<double>(dim()) * std::log(2 * std::numbers::pi) -
                           0.5 * logdetA + 0.5 * quad - 0.5 * c -
                           (1 - lambda) * n.log_partition() - lambda * p.log_partition();
    return -log_int;
  }

  PotentialSpec nu_, pi_;
};

/// The Gaussian mu_lambda for a Gaussian pair.
inline GaussianSpec gaussian_geometric(const GaussianSpec& nu, const GaussianSpec& pi, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  if (nu.dim() != pi.dim()) throw DomainError("gaussian_geometric: dimension mismatch");
  const Mat A = (1 - lambda) * nu.precision() + lambda * pi.precision();
  const Vec b = (1 - lambda) * nu.precision() * nu.mean() + lambda * pi.precision() * pi.mean();
  const Mat cov = A.llt().solve(Mat::Identity(A.rows(), A.cols()));
  return GaussianSpec(cov * b, cov);
}

// ---------------------------------------------------------------------------

/// Equal mixture of N(0,1) and N(m,1).
inline MixtureSpec make_bimodal_target(double m) {
  if (!(m > 0)) throw DomainError("make_bimodal_target: m must be positive");
  return MixtureSpec({{0.5, GaussianSpec::scalar(0.0, 1.0)}, {0.5, GaussianSpec::scalar(m, 1.0)}});
}

/// N(m,1) contaminated by the smoothed uniform with weight exp(-a^2 m^2 / 2).
inline MixtureSpec make_contaminated_target(double m, double a) {
  if (!(m > 0) || !(a > 0) || a > 1) throw DomainError("make_contaminated_target: need m > 0 and a in (0, 1]");
  const double e = 0.5 * a * a * m * m;
  const double ln2 = std::numbers::ln2;
  if (e < ln2 - 1e-12) throw DomainError("make_contaminated_target: need a >= sqrt(2 log 2)/m");
  const double w = (std::abs(e - ln2) <= 1e-12) ? 0.5 : std::exp(-e);
  return MixtureSpec({{1.0 - w, GaussianSpec::scalar(m, 1.0)}, {w, SmoothedUniformSpec(m)}});
}

// ---------------------------------------------------------------------------

struct DensityGrid {
  std::vector<double> xs, lambdas;
  std::vector<double> values;     // lambda-major: values[i * xs.size() + j]
  std::vector<double> tail_mass;  // per lambda: mass outside [xs.front(), xs.back()]
  bool tail_warning = false;

  double at(std::size_t lambda_index, std::size_t x_index) const { return values[lambda_index * xs.size() + x_index]; }
};

/// Normalized densities of mu_lambda on a 1D grid.
inline DensityGrid density_grid(const GeometricPath& path, std::vector<double> lambdas, std::vector<double> xs,
                                double tail_tolerance = 1e-6) {
  path.proposal().require_1d();
  if (xs.size() < 2 || !std::is_sorted(xs.begin(), xs.end())) throw DomainError("density_grid: xs must be sorted");
  DensityGrid g;
  g.xs = std::move(xs);
  g.lambdas = std::move(lambdas);
  for (double lam : g.lambdas) {
    const auto d = path.density(lam);
    for (double x : g.xs) g.values.push_back(std::exp(d.log_density(x)));
    const double inside = mass(d, g.xs.front(), g.xs.back());
    const double tail = std::max(0.0, 1.0 - inside);
    g.tail_mass.push_back(tail);
    if (tail > tail_tolerance) g.tail_warning = true;
  }
  return g;
}

inline void write_density_grid_csv(std::ostream& os, const DensityGrid& g) {
  os << "x,lambda,density\n";
  for (std::size_t i = 0; i < g.lambdas.size(); ++i)
    for (std::size_t j = 0; j < g.xs.size(); ++j)
      os << fmt17(g.xs[j]) << ',' << fmt17(g.lambdas[i]) << ',' << fmt17(g.at(i, j)) << '\n';
}

}  // namespace temper
