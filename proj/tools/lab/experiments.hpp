#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lab/config.hpp"
#include "temper/bounds.hpp"
#include "temper/csv.hpp"
#include "temper/distributions.hpp"
#include "temper/format.hpp"
#include "temper/gaussian_flow.hpp"
#include "temper/inequalities.hpp"
#include "temper/metrics.hpp"
#include "temper/sampler.hpp"
#include "temper/schedules.hpp"
#include "temper/svg.hpp"

namespace lab {

namespace fs = std::filesystem;
using temper::fmt17;

struct RunContext {
  fs::path out_dir;
  fs::path config_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::size_t threads = 1;
  bool svg = false;
};

/// Writes files into the output directory and remembers their hashes.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    files_[name] = {content.size(), temper::hex64(temper::fnv1a64(content))};
  }

  json manifest_files() const {
    json arr = json::array();
    for (const auto& [name, info] : files_) arr.push_back({{"path", name}, {"bytes", info.first}, {"fnv1a64", info.second}});
    return arr;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::map<std::string, std::pair<std::size_t, std::string>> files_;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw ConfigError("$", "log grid needs 0 < t_min < t_max and n_points >= 2");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline void maybe_svg(const RunContext& ctx, Outputs& out, const std::string& csv_name, const std::string& csv,
                      const temper::PlotSpec& spec) {
  if (!ctx.svg) return;
  std::istringstream in(csv);
  const auto table = temper::read_csv(in);
  const auto stem = csv_name.substr(0, csv_name.rfind('.'));
  out.write(stem + ".svg", temper::svg_lineplot(table, spec));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  // splitmix64 finalizer over a simple combination
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (a + 1) + 0xBF58476D1CE4E5B9ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline const temper::GaussianSpec& require_gaussian(const temper::PotentialSpec& p, const std::string& where) {
  if (!p.is_gaussian()) throw ConfigError(where, "this experiment needs a Gaussian here");
  return p.gaussian();
}

inline double second_moment(const temper::GaussianSpec& g) { return g.covariance().trace() + g.mean().squaredNorm(); }

}  // namespace detail

using Runner = std::function<void(Node&, const RunContext&, Outputs&, json&)>;

// ---------------------------------------------------------------------------

inline void run_sample(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const auto nu = parse_distribution(root.child("proposal"));
  const auto pi = parse_distribution(root.child("target"));
  const auto sch = parse_schedule(root.child("schedule"), ctx.config_dir);
  const std::size_t n = root.count("n_particles", 10000);
  const double h = root.positive("h", 0.01);
  const std::uint64_t seed = root.seed("seed", ctx.seed);
  const auto snaps = root.numbers("snapshot_times", std::vector<double>{sch.horizon()});
  const bool export_snapshots = root.flag("export_snapshots", false);
  const bool guarded = root.flag("guarded", false);
  const std::size_t bins = root.count("bins", 256);
  root.finish();
  if (n == 0) throw ConfigError("$.n_particles", "must be at least 1");

  const temper::GeometricPath path(nu, pi);
  const auto& p0 = detail::require_gaussian(nu, "$.proposal");
  temper::ScheduleRunOptions opt;
  opt.h = h;
  opt.snapshot_times = snaps;
  opt.threads = ctx.threads;
  if (guarded) opt.guard = temper::RegularityBundle::from(nu, pi, detail::second_moment(p0));
  const auto run = temper::run_schedule(temper::ParticleEnsemble::from_gaussian(p0, n, seed), path, sch, opt);

  std::ostringstream mom;
  mom << "time,lambda,coordinate,mean,variance\n";
  std::vector<temper::MetricRow> metrics;
  std::optional<temper::ClosedFormLaw> target_law;
  if (path.dim() <= 2) target_law = temper::law_of(pi);
  const std::string schedule_hash = temper::hex64(temper::fnv1a64(sch.describe()));
  for (std::size_t i = 0; i < run.size(); ++i) {
    const auto& s = run[i];
    const auto m = temper::ensemble_mean(s.ensemble);
    const auto S = s.ensemble.n > 1 ? temper::ensemble_covariance(s.ensemble) : temper::Mat::Zero(m.size(), m.size());
    for (Eigen::Index k = 0; k < m.size(); ++k)
      mom << fmt17(s.time) << ',' << fmt17(s.lambda) << ',' << k << ',' << fmt17(m(k)) << ',' << fmt17(S(k, k)) << '\n';
    if (target_law) {
      const auto tv = temper::tv_hist(s.ensemble, *target_law, bins);
      metrics.push_back({s.time, "tv_target", tv.value, tv.meta()});
    }
    if (pi.is_gaussian() && s.ensemble.n > path.dim() + 1)
      metrics.push_back({s.time, "kl_gaussian_fit_target", temper::gaussian_fit_kl(s.ensemble, pi.gaussian()),
                         "n=" + std::to_string(s.ensemble.n)});
    if (export_snapshots) {
      std::ostringstream csv;
      temper::write_snapshot_csv(csv, s.ensemble);
      out.write("snapshot_" + std::to_string(i) + ".csv", csv.str());
      json side = {{"seed", s.ensemble.seed},
                   {"schedule_hash", schedule_hash},
                   {"clock", s.ensemble.clock},
                   {"step_count", s.ensemble.step_count},
                   {"lambda", s.lambda}};
      out.write("snapshot_" + std::to_string(i) + ".json", side.dump(2) + "\n");
    }
  }
  out.write("moments.csv", mom.str());
  std::ostringstream mcsv;
  temper::write_metric_csv(mcsv, metrics);
  out.write("metrics.csv", mcsv.str());
  summary["snapshots"] = run.size();
  summary["steps"] = run.back().ensemble.step_count;
}

// ---------------------------------------------------------------------------

inline void run_bounds_sweep(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const auto nu = parse_distribution(root.child("proposal"));
  const auto pi = parse_distribution(root.child("target"));
  const auto sch = parse_schedule(root.child("schedule"), ctx.config_dir);
  if (!std::isfinite(sch.horizon())) throw ConfigError("$.schedule", "needs a finite horizon");
  std::vector<double> default_times;
  for (int i = 1; i <= 10; ++i) default_times.push_back(sch.horizon() * i / 10.0);
  const auto times = root.numbers("times", default_times);
  const std::size_t n_steps = root.count("n_steps", 200);
  const bool guarded = root.flag("guarded", false);
  std::optional<double> an, ap, kl0_cfg;
  if (root.has("alpha_nu")) an = root.positive("alpha_nu");
  if (root.has("alpha_pi")) ap = root.positive("alpha_pi");
  if (root.has("kl0")) kl0_cfg = root.number("kl0");
  root.finish();
  if (n_steps == 0) throw ConfigError("$.n_steps", "must be at least 1");

  const auto& p0 = detail::require_gaussian(nu, "$.proposal");
  const auto bundle = temper::RegularityBundle::from(nu, pi, detail::second_moment(p0), an, ap);
  const bool exact = nu.is_gaussian() && pi.is_gaussian();
  double kl0;
  if (kl0_cfg) {
    kl0 = *kl0_cfg;
  } else if (exact) {
    kl0 = temper::kl_gaussians(p0, temper::gaussian_geometric(nu.gaussian(), pi.gaussian(), sch.value(0)));
  } else {
    throw ConfigError("$.kl0", "required when the endpoints are not both Gaussian");
  }

  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  std::vector<temper::GaussianLaw> laws;
  if (exact) laws = temper::gaussian_moment_flow_at(nu.gaussian(), pi.gaussian(), sch, p0, sorted);
  std::ostringstream c;
  c << "t,u1,u2,u3,total,kl_exact\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto r = temper::continuous_bound(sch, bundle, kl0, sorted[i]);
    c << fmt17(r.t) << ',' << fmt17(r.u1) << ',' << fmt17(r.u2) << ',' << fmt17(r.u3) << ',' << fmt17(r.total) << ','
      << (exact ? fmt17(temper::kl_gaussians(laws[i], pi.gaussian())) : std::string()) << '\n';
  }
  out.write("bounds_continuous.csv", c.str());

  const auto ladder = temper::discretize(sch, n_steps);
  const auto rows = temper::discrete_bound_sweep(ladder, bundle, kl0,
                                                 guarded ? temper::GuardPolicy::Throw : temper::GuardPolicy::Report);
  std::vector<temper::GaussianLaw> dlaws;
  if (exact) dlaws = temper::gaussian_moment_recursion(nu.gaussian(), pi.gaussian(), ladder, p0);
  std::ostringstream d;
  d << "k,v1,v2,v3,v4,total,kl_exact,guard_ok\n";
  std::size_t violations = 0;
  for (const auto& r : rows) {
    violations += r.guard_ok ? 0 : 1;
    d << r.k << ',' << fmt17(r.v1) << ',' << fmt17(r.v2) << ',' << fmt17(r.v3) << ',' << fmt17(r.v4) << ','
      << fmt17(r.total) << ',' << (exact ? fmt17(temper::kl_gaussians(dlaws[r.k], pi.gaussian())) : std::string()) << ','
      << (r.guard_ok ? 1 : 0) << '\n';
  }
  out.write("bounds_discrete.csv", d.str());
  detail::maybe_svg(ctx, out, "bounds_continuous.csv", c.str(),
                    {"t", exact ? std::vector<std::string>{"total", "kl_exact"} : std::vector<std::string>{"total"}, "",
                     false, true, "continuous-time bound"});
  summary["A"] = temper::constant_A(bundle);
  summary["A_prime"] = temper::constant_A_prime(bundle);
  summary["kl0"] = kl0;
  summary["guard_violations"] = violations;
}

// ---------------------------------------------------------------------------

inline double g_for(const std::string& name, double an, double ap, double t) {
  if (name == "optimal") return temper::g_functional(temper::Schedule::optimal(an, ap, t), an, ap, t);
  if (name == "linear") return temper::g_functional(temper::Schedule::linear(t), an, ap, t);
  if (name == "vanilla") return temper::g_functional(temper::Schedule::constant(1.0, t), an, ap, t);
  throw ConfigError("$.schedules", "unknown schedule '" + name + "'");
}

inline void run_schedule_compare(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const double an = root.positive("alpha_nu", 1.0);
  const double ap = root.positive("alpha_pi", 0.01);
  const double t_min = root.positive("t_min", 0.1);
  const double t_max = root.positive("t_max", 1000.0);
  const std::size_t n = root.count("n_points", 41);
  const auto names = root.texts("schedules", {"optimal", "linear", "vanilla"});
  root.finish();
  const auto grid = detail::log_grid(t_min, t_max, n);
  std::ostringstream csv;
  csv << "t,schedule,G\n";
  for (double t : grid)
    for (const auto& s : names) csv << fmt17(t) << ',' << s << ',' << fmt17(g_for(s, an, ap, t)) << '\n';
  out.write("schedule_compare.csv", csv.str());
  std::vector<double> sgrid;
  for (int i = 0; i <= 200; ++i) sgrid.push_back(t_max * i / 200.0);
  std::ostringstream tab;
  temper::write_schedule_csv(tab, temper::Schedule::optimal(an, ap, t_max), sgrid);
  out.write("schedule_optimal.csv", tab.str());
  detail::maybe_svg(ctx, out, "schedule_compare.csv", csv.str(), {"t", {"G"}, "schedule", true, true, "G by schedule"});
  summary["clamp_time"] = temper::Schedule::optimal(an, ap).clamp_time();
}

// ---------------------------------------------------------------------------

inline void run_probe(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const auto ms = root.numbers("m_values", std::vector<double>{10, 12, 14, 16});
  const auto ls = root.numbers("lambda_values", std::vector<double>{0.5, 0.6, 0.75, 0.9});
  const bool facts = root.flag("facts", true);
  root.finish();
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (!(ms[i] >= 10)) throw ConfigError("$.m_values[" + std::to_string(i) + "]", "must be at least 10");
  for (std::size_t i = 0; i < ls.size(); ++i)
    if (!(ls[i] >= 0.5 && ls[i] <= 1)) throw ConfigError("$.lambda_values[" + std::to_string(i) + "]", "must lie in [0.5, 1]");
  std::ostringstream csv, fcsv;
  csv << "m,lambda,rayleigh_lower,thm3_bound\n";
  fcsv << "m,a,lambda,fact,log_value,log_bound,applicable,holds\n";
  bool sound = true, all_facts = true;
  const double a = 1 / std::numbers::sqrt2;
  for (double m : ms)
    for (double l : ls) {
      const double r = temper::unimodal_rayleigh_probe(m, l);
      const double b = temper::thm3_poincare_bound(m, l);
      sound = sound && r >= b;
      csv << fmt17(m) << ',' << fmt17(l) << ',' << fmt17(r) << ',' << fmt17(b) << '\n';
      if (facts) {
        const auto rep = temper::verify_unimodal_facts(m, a, l);
        all_facts = all_facts && rep.all_hold();
        for (const auto& f : rep.facts)
          fcsv << fmt17(m) << ',' << fmt17(a) << ',' << fmt17(l) << ',' << f.name << ',' << fmt17(f.log_value) << ','
               << fmt17(f.log_bound) << ',' << (f.applicable ? 1 : 0) << ',' << (f.holds ? 1 : 0) << '\n';
      }
    }
  out.write("probe.csv", csv.str());
  if (facts) out.write("facts.csv", fcsv.str());
  detail::maybe_svg(ctx, out, "probe.csv", csv.str(), {"m", {"rayleigh_lower"}, "lambda", false, true, "Rayleigh probe"});
  summary["probe_dominates_bound"] = sound;
  if (facts) summary["facts_hold"] = all_facts;
}

// ---------------------------------------------------------------------------

inline void run_fig2(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const double an = root.positive("alpha_nu", 1.0);
  const double ap = root.positive("alpha_pi", 0.01);
  const double t_min = root.positive("t_min", 0.1);
  const double t_max = root.positive("t_max", 1000.0);
  const std::size_t n = root.count("n_points", 41);
  root.finish();
  const auto grid = detail::log_grid(t_min, t_max, n);
  std::ostringstream csv;
  csv << "t,G_optimal,G_linear,G_vanilla" << (an > ap ? ",G_linear_closed_form" : "") << '\n';
  bool ordered = true;
  for (double t : grid) {
    const double go = g_for("optimal", an, ap, t), gl = g_for("linear", an, ap, t), gv = g_for("vanilla", an, ap, t);
    ordered = ordered && go <= gl + 1e-12 && go <= gv + 1e-12;
    csv << fmt17(t) << ',' << fmt17(go) << ',' << fmt17(gl) << ',' << fmt17(gv);
    if (an > ap) csv << ',' << fmt17(temper::g_linear_closed_form(an, ap, t));
    csv << '\n';
  }
  out.write("fig2.csv", csv.str());
  detail::maybe_svg(ctx, out, "fig2.csv", csv.str(),
                    {"t", {"G_optimal", "G_linear", "G_vanilla"}, "", true, true, "G(t) by schedule"});
  summary["optimal_is_smallest"] = ordered;
}

// ---------------------------------------------------------------------------

inline void run_fig3(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const std::size_t n = root.count("n_particles", 10000);
  const std::size_t d = root.count("dim", 2);
  const double vn = root.positive("variance_proposal", 1.0);
  const double vp = root.positive("variance_target", 10.0);
  const auto horizons = root.numbers("horizons", std::vector<double>{0.5, 1, 2, 3, 5, 8, 13, 20, 30, 50});
  const double h = root.positive("h", 0.01);
  const std::size_t B = root.count("bootstrap", 200);
  const std::uint64_t seed = root.seed("seed", ctx.seed);
  root.finish();
  if (d == 0 || n < d + 2) throw ConfigError("$.n_particles", "need more particles than dimensions");
  for (std::size_t i = 0; i < horizons.size(); ++i)
    if (!(horizons[i] > 0)) throw ConfigError("$.horizons[" + std::to_string(i) + "]", "must be positive");

  const auto di = static_cast<Eigen::Index>(d);
  const auto nu = temper::GaussianSpec::isotropic(temper::Vec::Zero(di), vn);
  const auto pi = temper::GaussianSpec::isotropic(temper::Vec::Zero(di), vp);
  const temper::GeometricPath path(nu, pi);
  const auto bundle = temper::RegularityBundle::from(nu, pi, detail::second_moment(nu));
  const double A = temper::constant_A(bundle);

  std::ostringstream csv;
  csv << "t,kl_empirical,kl_exact,kl_exact_discrete,kl_se,G_linear,A_G,bound_discrete\n";
  std::size_t within = 0, below = 0;
  for (std::size_t j = 0; j < horizons.size(); ++j) {
    const double T = horizons[j];
    const auto sch = temper::Schedule::linear(T);
    temper::ScheduleRunOptions opt;
    opt.h = h;
    opt.threads = ctx.threads;
    const auto run = temper::run_schedule(temper::ParticleEnsemble::from_gaussian(nu, n, detail::mix_seed(seed, j)),
                                          path, sch, opt);
    const auto& fin = run.back().ensemble;
    const double kl_emp = temper::gaussian_fit_kl(fin, pi);
    const auto law = temper::gaussian_moment_flow(nu, pi, sch, nu, T);
    const double kl_exact = temper::kl_gaussians(law, pi);
    const auto ladder = temper::discretize(sch, fin.step_count);
    const auto dlaw = temper::gaussian_moment_recursion(nu, pi, ladder, nu).back();
    const double kl_disc = temper::kl_gaussians(dlaw, pi);
    // Spread of the plug-in estimator around the exact value, by parametric bootstrap.
    double mse = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const auto draw = temper::ParticleEnsemble::from_gaussian(law, n, detail::mix_seed(seed, j, b + 1));
      const double e = temper::gaussian_fit_kl(draw, pi) - kl_exact;
      mse += e * e;
    }
    const double se = B ? std::sqrt(mse / static_cast<double>(B)) : 0.0;
    const double G = temper::g_functional(sch, bundle.alpha_nu, bundle.alpha_pi, T);
    const auto disc = temper::discrete_bound(ladder, bundle, 0.0, ladder.total_steps());
    within += std::abs(kl_emp - kl_exact) <= 4 * se ? 1 : 0;
    below += kl_exact <= A * G ? 1 : 0;
    csv << fmt17(T) << ',' << fmt17(kl_emp) << ',' << fmt17(kl_exact) << ',' << fmt17(kl_disc) << ',' << fmt17(se) << ','
        << fmt17(G) << ',' << fmt17(A * G) << ',' << fmt17(disc.total) << '\n';
  }
  out.write("fig3.csv", csv.str());
  detail::maybe_svg(ctx, out, "fig3.csv", csv.str(),
                    {"t", {"kl_empirical", "kl_exact", "A_G", "bound_discrete"}, "", true, true, "KL along the linear schedule"});
  summary["A"] = A;
  summary["checkpoints_within_4se"] = within;
  summary["checkpoints_below_bound"] = below;
}

// ---------------------------------------------------------------------------

inline json default_pathviz_target() {
  return {{"type", "mixture"},
          {"components",
           {{{"weight", 0.3}, {"mean", -6.0}, {"variance", 0.25}},
            {{"weight", 0.3}, {"mean", 3.0}, {"variance", 0.25}},
            {{"weight", 0.4}, {"mean", 8.0}, {"variance", 0.25}}}}};
}

inline void run_pathviz(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const auto nu = parse_distribution(root.child("proposal"));
  const auto pi = parse_distribution(root.child("target"));
  const auto lambdas = root.numbers("lambdas", std::vector<double>{0, 0.1, 0.25, 0.5, 0.75, 0.9, 1});
  const double x_min = root.number("x_min", -12.0);
  const double x_max = root.number("x_max", 12.0);
  const std::size_t nx = root.count("n_x", 481);
  root.finish();
  if (!(x_max > x_min) || nx < 2) throw ConfigError("$", "need x_min < x_max and n_x >= 2");
  if (nu.dim() != 1 || pi.dim() != 1) throw ConfigError("$", "path visualization is one-dimensional");
  std::vector<double> xs(nx);
  for (std::size_t i = 0; i < nx; ++i) xs[i] = x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1);
  const auto g = temper::density_grid(temper::GeometricPath(nu, pi), lambdas, xs);
  std::ostringstream csv;
  temper::write_density_grid_csv(csv, g);
  out.write("pathviz.csv", csv.str());
  detail::maybe_svg(ctx, out, "pathviz.csv", csv.str(), {"x", {"density"}, "lambda", false, false, "geometric path"});
  summary["tail_warning"] = g.tail_warning;
  summary["max_tail_mass"] = *std::max_element(g.tail_mass.begin(), g.tail_mass.end());
}

// ---------------------------------------------------------------------------

struct LowerRun {
  temper::TemperatureLadder ladder;
  std::vector<temper::Snapshot> snaps;
};

inline LowerRun run_lower_ladder(Node& root, const RunContext& ctx, const temper::GeometricPath& path,
                                 std::size_t& n_out, std::uint64_t& seed_out) {
  Node ln = root.child("ladder", false);
  const double h = ln.positive("h", 0.005);
  const std::size_t K = ln.count("n_levels", 20);
  const double total = ln.positive("total_time", 10.0);
  ln.finish();
  if (K == 0) throw ConfigError("$.ladder.n_levels", "must be at least 1");
  std::vector<double> levels, times(K, total / static_cast<double>(K));
  for (std::size_t k = 1; k <= K; ++k) levels.push_back(static_cast<double>(k) / static_cast<double>(K));
  auto ladder = temper::TemperatureLadder::from_inner_times(0.0, levels, times, h);
  n_out = root.count("n_particles", 100000);
  seed_out = root.seed("seed", ctx.seed);
  if (n_out == 0) throw ConfigError("$.n_particles", "must be at least 1");
  temper::LadderRunOptions opt;
  opt.threads = ctx.threads;
  auto snaps = temper::run_ladder(
      temper::ParticleEnsemble::from_gaussian(path.proposal().gaussian(), n_out, seed_out), path, ladder, opt);
  return {std::move(ladder), std::move(snaps)};
}

inline void run_lower_bimodal(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const double m = root.positive("m", 24.0);
  const std::size_t bins = root.count("bins", 256);
  const temper::GeometricPath path(temper::GaussianSpec::scalar(0, 1), temper::make_bimodal_target(m));
  std::size_t n;
  std::uint64_t seed;
  auto run = run_lower_ladder(root, ctx, path, n, seed);
  root.finish();
  const auto law = temper::law_of(path.target());
  std::ostringstream tv, mcsv;
  tv << "k,lambda_k,sum_T,lower_bound\n";
  std::vector<temper::MetricRow> rows;
  double sum_T = 0.0, final_tv = 0.0, final_bound = 0.0;
  for (const auto& s : run.snaps) {
    if (s.level > 0) {
      const auto& lv = run.ladder.levels()[s.level - 1];
      sum_T += lv.step * static_cast<double>(lv.n_inner);
    }
    const double bound = temper::thm5_tv_lower(m, sum_T);
    const auto est = temper::tv_hist(s.ensemble, law, bins);
    std::size_t right = 0;
    for (double x : s.ensemble.x) right += x > m / 2 ? 1 : 0;
    tv << s.level << ',' << fmt17(s.lambda) << ',' << fmt17(sum_T) << ',' << fmt17(bound) << '\n';
    rows.push_back({static_cast<double>(s.level), "tv_target", est.value, est.meta()});
    rows.push_back({static_cast<double>(s.level), "right_mode_mass", static_cast<double>(right) / static_cast<double>(n),
                    "threshold=" + fmt17(m / 2)});
    final_tv = est.value;
    final_bound = bound;
  }
  out.write("tv_lower.csv", tv.str());
  temper::write_metric_csv(mcsv, rows);
  out.write("metrics.csv", mcsv.str());
  detail::maybe_svg(ctx, out, "tv_lower.csv", tv.str(), {"k", {"lower_bound"}, "", false, false, "TV lower bound"});
  summary["final_tv"] = final_tv;
  summary["final_lower_bound"] = final_bound;
  summary["bound_formula_applicable"] = m >= 11;
  summary["tv_dominates_bound"] = final_tv >= final_bound;
}

inline void run_lower_unimodal(Node& root, const RunContext& ctx, Outputs& out, json& summary) {
  const double m = root.positive("m", 30.0);
  const double a = root.positive("a", std::sqrt(2 * std::numbers::ln2) / m);
  const double checkpoint = root.number("checkpoint_lambda", 0.5);
  const std::size_t bins = root.count("bins", 256);
  const temper::GeometricPath path(temper::GaussianSpec::scalar(0, 1), temper::make_contaminated_target(m, a));
  std::size_t n;
  std::uint64_t seed;
  auto run = run_lower_ladder(root, ctx, path, n, seed);
  root.finish();
  const auto law = temper::law_of(path.target());
  std::ostringstream tv, mcsv;
  tv << "k,lambda_k,sum_T,lower_bound\n";
  std::vector<temper::MetricRow> rows;
  double sum_T = 0.0;
  bool found = false;
  for (const auto& s : run.snaps) {
    if (s.level > 0) {
      const auto& lv = run.ladder.levels()[s.level - 1];
      sum_T += lv.step * static_cast<double>(lv.n_inner);
    }
    const double bound = temper::thm6_tv_lower(m, s.lambda, sum_T);
    const auto est = temper::tv_hist(s.ensemble, law, bins);
    tv << s.level << ',' << fmt17(s.lambda) << ',' << fmt17(sum_T) << ',' << fmt17(bound) << '\n';
    rows.push_back({static_cast<double>(s.level), "tv_target", est.value, est.meta()});
    if (!found && std::abs(s.lambda - checkpoint) < 1e-9) {
      found = true;
      summary["checkpoint_level"] = s.level;
      summary["checkpoint_tv"] = est.value;
      summary["checkpoint_lower_bound"] = bound;
      summary["tv_dominates_bound"] = est.value >= bound;
    }
  }
  if (!found) throw ConfigError("$.checkpoint_lambda", "no ladder level equals the checkpoint");
  out.write("tv_lower.csv", tv.str());
  temper::write_metric_csv(mcsv, rows);
  out.write("metrics.csv", mcsv.str());
  detail::maybe_svg(ctx, out, "tv_lower.csv", tv.str(), {"k", {"lower_bound"}, "", false, false, "TV lower bound"});
  summary["bound_formula_applicable"] = m >= 4;
}

// ---------------------------------------------------------------------------

inline const std::map<std::string, Runner>& registry() {
  static const std::map<std::string, Runner> r = {
      {"sample", run_sample},
      {"bounds-sweep", run_bounds_sweep},
      {"schedule-compare", run_schedule_compare},
      {"probe", run_probe},
      {"reproduce-fig2", run_fig2},
      {"reproduce-fig3", run_fig3},
      {"reproduce-pathviz", run_pathviz},
      {"lower-bimodal", run_lower_bimodal},
      {"lower-unimodal", run_lower_unimodal},
  };
  return r;
}

/// Defaults for whole sub-objects that some kinds allow to be omitted.
inline void apply_object_defaults(const std::string& kind, json& cfg) {
  if (kind == "reproduce-pathviz") {
    if (!cfg.contains("proposal")) cfg["proposal"] = {{"type", "gaussian"}, {"mean", 0.0}, {"variance", 1.0}};
    if (!cfg.contains("target")) cfg["target"] = default_pathviz_target();
  }
}

/// Validates the config, runs the experiment, writes outputs plus
/// manifest.json, and returns the manifest.
inline json run_experiment(const std::string& kind, json config, const RunContext& ctx) {
  const auto& reg = registry();
  auto it = reg.find(kind);
  if (it == reg.end()) throw ConfigError("$", "unknown experiment kind '" + kind + "'");
  if (!config.is_object()) throw ConfigError("$", "config must be a JSON object");
  apply_object_defaults(kind, config);
  json params;
  Node root(config, "$", params);
  const double version = root.number("schema_version");
  if (version != kSchemaVersion) throw ConfigError("$.schema_version", "unsupported version (expected 1)");
  if (root.has("kind")) {
    const auto k = root.text("kind");
    if (k != kind) throw ConfigError("$.kind", "config is for '" + k + "', not '" + kind + "'");
  }
  Outputs out(ctx.out_dir);
  json summary = json::object();
  try {
    it->second(root, ctx, out, summary);
  } catch (const ConfigError&) {
    throw;
  } catch (const temper::GuardViolation&) {
    throw;
  } catch (const temper::ExplosionError& e) {
    throw temper::NumericalError(kind + ": " + e.what());
  }
  json manifest = {{"schema_version", kSchemaVersion},
                   {"kind", kind},
                   {"parameters", params},
                   {"files", out.manifest_files()},
                   {"summary", summary}};
  out.write("manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace lab
