#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "temper/bounds.hpp"
#include "temper/distributions.hpp"
#include "temper/errors.hpp"
#include "temper/format.hpp"
#include "temper/random.hpp"
#include "temper/schedules.hpp"

namespace temper {

/// N particles in R^d stored row-major, plus the clock of the chain.
struct ParticleEnsemble {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> x;
  std::uint64_t seed = 0;
  std::uint64_t step_count = 0;
  double clock = 0.0;
  double lambda = 0.0;  // level used by the most recent step

  std::span<const double> particle(std::size_t i) const { return {x.data() + i * dim, dim}; }
  std::span<double> particle(std::size_t i) { return {x.data() + i * dim, dim}; }

  /// Draws n particles from a Gaussian using the reserved initial counter.
  static ParticleEnsemble from_gaussian(const GaussianSpec& law, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("ensemble needs at least one particle");
    ParticleEnsemble e;
    e.n = n;
    e.dim = law.dim();
    e.seed = seed;
    e.x.resize(n * e.dim);
    const Mat L = law.covariance().llt().matrixL();
    const NoiseStream noise(seed);
    std::vector<double> z(e.dim);
    for (std::size_t i = 0; i < n; ++i) {
      noise.gaussians(i, NoiseStream::kInitialStep, z);
      for (std::size_t r = 0; r < e.dim; ++r) {
        double v = law.mean()(static_cast<Eigen::Index>(r));
        for (std::size_t c = 0; c <= r; ++c) v += L(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * z[c];
        e.x[i * e.dim + r] = v;
      }
    }
    return e;
  }

  static ParticleEnsemble from_points(std::vector<double> x, std::size_t dim, std::uint64_t seed) {
    if (dim == 0 || x.empty() || x.size() % dim != 0) throw DomainError("from_points: bad shape");
    ParticleEnsemble e;
    e.n = x.size() / dim;
    e.dim = dim;
    e.x = std::move(x);
    e.seed = seed;
    return e;
  }
};

/// Worker count from TEMPER_LAB_THREADS; 1 when unset or invalid.
inline std::size_t thread_count_from_env() {
  const char* v = std::getenv("TEMPER_LAB_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<std::size_t>(std::min<long>(n, 256));
}

namespace detail {

template <class F>
void parallel_chunks(std::size_t n, std::size_t threads, F&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// One tempered Langevin step at level lambda with step size h, drawing
/// noise from `noise.gaussians(particle, step, out)`.  h = 0 is the identity.
template <class Noise>
void step_tempered_with(ParticleEnsemble& e, const GeometricPath& path, double lambda, double h, const Noise& noise,
                        std::size_t threads = 1) {
  if (!(h >= 0) || !std::isfinite(h)) throw DomainError("step_tempered: h must be nonnegative");
  if (!(lambda >= 0 && lambda <= 1)) throw DomainError("step_tempered: lambda must lie in [0, 1]");
  if (path.dim() != e.dim) throw DomainError("step_tempered: dimension mismatch");
  const std::uint64_t step = e.step_count;
  const double amp = std::sqrt(2 * h);
  const std::size_t d = e.dim;
  std::vector<std::size_t> first_bad(std::max<std::size_t>(1, threads), std::numeric_limits<std::size_t>::max());
  std::size_t slot_chunk = (e.n + std::max<std::size_t>(1, threads) - 1) / std::max<std::size_t>(1, threads);
  detail::parallel_chunks(e.n, threads, [&](std::size_t lo, std::size_t hi) {
    std::size_t& bad = first_bad[lo / std::max<std::size_t>(1, slot_chunk)];
    std::vector<double> z(d), s(d), scratch(d);
    for (std::size_t i = lo; i < hi; ++i) {
      auto xi = e.particle(i);
      noise.gaussians(i, step, z);
      if (d == 1) {
        xi[0] += h * path.score1(lambda, xi[0]) + amp * z[0];
      } else {
        path.score(lambda, xi, s, scratch);
        for (std::size_t k = 0; k < d; ++k) xi[k] += h * s[k] + amp * z[k];
      }
      if (bad == std::numeric_limits<std::size_t>::max())
        for (std::size_t k = 0; k < d; ++k)
          if (!std::isfinite(xi[k])) {
            bad = i;
            break;
          }
    }
  });
  e.step_count += 1;
  e.clock += h;
  e.lambda = lambda;
  const std::size_t worst = *std::min_element(first_bad.begin(), first_bad.end());
  if (worst != std::numeric_limits<std::size_t>::max()) throw ExplosionError(worst, e.step_count, e.clock);
}

/// One tempered Langevin step using the ensemble's own noise stream.
inline void step_tempered(ParticleEnsemble& e, const GeometricPath& path, double lambda, double h,
                          std::size_t threads = 1) {
  step_tempered_with(e, path, lambda, h, NoiseStream(e.seed), threads);
}

struct Snapshot {
  double time = 0.0;
  std::size_t level = 0;  // ladder level index, or step index for schedule runs
  double lambda = 0.0;
  ParticleEnsemble ensemble;
};

struct ScheduleRunOptions {
  double h = 0.01;
  std::vector<double> snapshot_times;  // in [0, horizon]; the final time is always recorded
  std::size_t threads = 1;
  std::optional<RegularityBundle> guard;  // enforce the step-size guard when set
};

/// Runs the schedule over its horizon with equal steps no longer than h,
/// using the right endpoint of each step for lambda.
inline std::vector<Snapshot> run_schedule(ParticleEnsemble e, const GeometricPath& path, const Schedule& sch,
                                          const ScheduleRunOptions& opt) {
  if (!std::isfinite(sch.horizon())) throw DomainError("run_schedule: schedule needs a finite horizon");
  if (!(opt.h > 0)) throw DomainError("run_schedule: h must be positive");
  const double T = sch.horizon();
  const auto n = static_cast<std::uint64_t>(std::max(1.0, std::ceil(T / opt.h - 1e-9)));
  const double h = T / static_cast<double>(n);
  std::vector<std::uint64_t> at;
  for (double t : opt.snapshot_times) {
    if (t < 0 || t > T * (1 + 1e-12)) throw DomainError("run_schedule: snapshot time outside [0, horizon]");
    at.push_back(static_cast<std::uint64_t>(std::llround(t / h)));
  }
  at.push_back(n);
  std::sort(at.begin(), at.end());
  at.erase(std::unique(at.begin(), at.end()), at.end());
  std::vector<Snapshot> out;
  std::size_t next = 0;
  e.lambda = sch.value(0.0);
  if (at[next] == 0) out.push_back({0.0, 0, e.lambda, e}), ++next;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double s = (k == n) ? T : h * static_cast<double>(k);
    const double lam = sch.value(s);
    if (opt.guard) {
      const double lim = guard_limit(*opt.guard, lam);
      if (h > lim) throw GuardViolation(k, h, lim);
    }
    step_tempered(e, path, lam, h, opt.threads);
    if (next < at.size() && at[next] == k) {
      out.push_back({s, static_cast<std::size_t>(k), lam, e});
      ++next;
    }
  }
  return out;
}

struct LadderRunOptions {
  std::vector<std::size_t> snapshot_levels;  // empty: every level, including 0
  std::size_t threads = 1;
  std::optional<RegularityBundle> guard;
};

/// Runs each ladder level for its inner steps.  Level 0 is the initial state.
inline std::vector<Snapshot> run_ladder(ParticleEnsemble e, const GeometricPath& path, const TemperatureLadder& ladder,
                                        const LadderRunOptions& opt) {
  auto wanted = [&](std::size_t k) {
    return opt.snapshot_levels.empty() ||
           std::find(opt.snapshot_levels.begin(), opt.snapshot_levels.end(), k) != opt.snapshot_levels.end();
  };
  std::vector<Snapshot> out;
  const double t0 = e.clock;
  e.lambda = ladder.initial_level();
  if (wanted(0)) out.push_back({0.0, 0, e.lambda, e});
  std::size_t global = 0;
  for (std::size_t k = 0; k < ladder.levels().size(); ++k) {
    const auto& lv = ladder.levels()[k];
    for (std::size_t j = 0; j < lv.n_inner; ++j) {
      ++global;
      if (opt.guard) {
        const double lim = guard_limit(*opt.guard, lv.lambda);
        if (lv.step > lim) throw GuardViolation(global, lv.step, lim);
      }
      step_tempered(e, path, lv.lambda, lv.step, opt.threads);
    }
    if (wanted(k + 1)) out.push_back({e.clock - t0, k + 1, lv.lambda, e});
  }
  return out;
}

// ---------------------------------------------------------------------------

inline Vec ensemble_mean(const ParticleEnsemble& e) {
  Vec m = Vec::Zero(static_cast<Eigen::Index>(e.dim));
  for (std::size_t i = 0; i < e.n; ++i)
    for (std::size_t k = 0; k < e.dim; ++k) m(static_cast<Eigen::Index>(k)) += e.x[i * e.dim + k];
  return m / static_cast<double>(e.n);
}

/// Unbiased sample covariance, accumulated in particle order.
inline Mat ensemble_covariance(const ParticleEnsemble& e) {
  if (e.n < 2) throw DomainError("ensemble_covariance: need two or more particles");
  const Vec m = ensemble_mean(e);
  const auto d = static_cast<Eigen::Index>(e.dim);
  Mat S = Mat::Zero(d, d);
  for (std::size_t i = 0; i < e.n; ++i)
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c <= r; ++c)
        S(r, c) += (e.x[i * e.dim + r] - m(r)) * (e.x[i * e.dim + c] - m(c));
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < r; ++c) S(c, r) = S(r, c);
  return S / static_cast<double>(e.n - 1);
}

inline void write_snapshot_csv(std::ostream& os, const ParticleEnsemble& e) {
  os << "particle_id";
  for (std::size_t k = 0; k < e.dim; ++k) os << ",dim_" << k;
  os << '\n';
  for (std::size_t i = 0; i < e.n; ++i) {
    os << i;
    for (std::size_t k = 0; k < e.dim; ++k) os << ',' << fmt17(e.x[i * e.dim + k]);
    os << '\n';
  }
}

}  // namespace temper
