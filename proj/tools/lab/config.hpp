#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "temper/csv.hpp"
#include "temper/distributions.hpp"
#include "temper/errors.hpp"
#include "temper/schedules.hpp"

namespace lab {

using json = nlohmann::json;
using temper::ConfigError;

inline constexpr int kSchemaVersion = 1;

/// Read-only view of one JSON object that remembers which keys were used and
/// echoes every value it hands out (defaults included) into `echo`.
class Node {
 public:
  Node(const json& j, std::string path, json& echo) : j_(j), path_(std::move(path)), echo_(echo) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    echo_ = json::object();
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = {}) {
    const json* v = get(key, fallback.has_value());
    const double out = v ? as_number(*v, at(key)) : *fallback;
    echo_[key] = out;
    return out;
  }

  double positive(const std::string& key, std::optional<double> fallback = {}) {
    const double v = number(key, fallback);
    if (!(v > 0)) throw ConfigError(at(key), "must be positive");
    return v;
  }

  std::size_t count(const std::string& key, std::optional<std::size_t> fallback = {}) {
    const json* v = get(key, fallback.has_value());
    std::size_t out;
    if (v) {
      if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError(at(key), "expected a nonnegative integer");
      out = v->get<std::size_t>();
    } else {
      out = *fallback;
    }
    echo_[key] = out;
    return out;
  }

  std::uint64_t seed(const std::string& key, std::optional<std::uint64_t> override_value) {
    std::uint64_t out;
    if (override_value) {
      used_.insert(key);
      out = *override_value;
    } else {
      const json* v = get(key, false);
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
        throw ConfigError(at(key), "expected a nonnegative integer seed");
      out = v->get<std::uint64_t>();
    }
    echo_[key] = out;
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = get(key, true);
    bool out = fallback;
    if (v) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
      out = v->get<bool>();
    }
    echo_[key] = out;
    return out;
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = {}) {
    const json* v = get(key, fallback.has_value());
    std::string out;
    if (v) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    } else {
      out = *fallback;
    }
    echo_[key] = out;
    return out;
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = {}) {
    const json* v = get(key, fallback.has_value());
    std::vector<double> out;
    if (v) {
      if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_number((*v)[i], at(key) + "[" + std::to_string(i) + "]"));
    } else {
      out = *fallback;
    }
    echo_[key] = out;
    return out;
  }

  std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback) {
    const json* v = get(key, true);
    std::vector<std::string> out = std::move(fallback);
    if (v) {
      if (!v->is_array()) throw ConfigError(at(key), "expected an array of strings");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back((*v)[i].get<std::string>());
      }
    }
    echo_[key] = out;
    return out;
  }

  /// Nested object; absent optional children read as `{}` so defaults apply.
  Node child(const std::string& key, bool required = true) {
    const json* v = get(key, !required);
    static const json empty = json::object();
    return Node(v ? *v : empty, at(key), echo_[key]);
  }

  /// Array of objects.
  std::vector<Node> children(const std::string& key) {
    const json* v = get(key, false);
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of objects");
    echo_[key] = json::array();
    auto& arr = echo_[key];
    for (std::size_t i = 0; i < v->size(); ++i) arr.push_back(json::object());
    std::vector<Node> out;
    for (std::size_t i = 0; i < v->size(); ++i) out.emplace_back((*v)[i], at(key) + "[" + std::to_string(i) + "]", arr[i]);
    return out;
  }

  /// Raw JSON value (used for matrices).
  const json& raw(const std::string& key) {
    const json* v = get(key, false);
    echo_[key] = *v;
    return *v;
  }

  /// Marks a key as understood without reading it.
  void accept(const std::string& key) { used_.insert(key); }

  /// Every key must have been consumed.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }

 private:
  const json* get(const std::string& key, bool optional) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) {
      if (!optional) throw ConfigError(at(key), "required");
      return nullptr;
    }
    return &*it;
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where, "must be finite");
    return d;
  }

  const json& j_;
  std::string path_;
  json& echo_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------

inline temper::GaussianSpec parse_gaussian(Node& n) {
  const json& mean = n.raw("mean");
  temper::Vec mu;
  if (mean.is_number()) {
    const std::size_t d = n.count("dim", 1);
    if (d == 0) throw ConfigError(n.at("dim"), "must be at least 1");
    mu = temper::Vec::Constant(static_cast<Eigen::Index>(d), mean.get<double>());
  } else if (mean.is_array() && !mean.empty()) {
    mu.resize(static_cast<Eigen::Index>(mean.size()));
    for (std::size_t i = 0; i < mean.size(); ++i) {
      if (!mean[i].is_number()) throw ConfigError(n.at("mean"), "expected numbers");
      mu(static_cast<Eigen::Index>(i)) = mean[i].get<double>();
    }
  } else {
    throw ConfigError(n.at("mean"), "expected a number or a nonempty array");
  }
  const auto d = mu.size();
  try {
    if (n.has("covariance")) {
      if (n.has("variance")) throw ConfigError(n.path(), "give either variance or covariance, not both");
      const json& c = n.raw("covariance");
      if (!c.is_array() || c.size() != static_cast<std::size_t>(d)) throw ConfigError(n.at("covariance"), "expected a d x d matrix");
      temper::Mat S(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto& row = c[static_cast<std::size_t>(i)];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(d)) throw ConfigError(n.at("covariance"), "expected a d x d matrix");
        for (Eigen::Index j = 0; j < d; ++j) {
          if (!row[static_cast<std::size_t>(j)].is_number()) throw ConfigError(n.at("covariance"), "expected numbers");
          S(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
      }
      return temper::GaussianSpec(mu, S);
    }
    return temper::GaussianSpec::isotropic(mu, n.positive("variance", 1.0));
  } catch (const temper::DomainError& e) {
    throw ConfigError(n.path(), e.what());
  }
}

/// {"type": "gaussian" | "smoothed_uniform" | "bimodal" | "contaminated" | "mixture", ...}
inline temper::PotentialSpec parse_distribution(Node n) {
  const std::string type = n.text("type");
  try {
    if (type == "gaussian") {
      auto g = parse_gaussian(n);
      n.finish();
      return g;
    }
    if (type == "smoothed_uniform") {
      temper::SmoothedUniformSpec u(n.positive("m"));
      n.finish();
      return u;
    }
    if (type == "bimodal") {
      auto b = temper::make_bimodal_target(n.positive("m"));
      n.finish();
      return b;
    }
    if (type == "contaminated") {
      const double m = n.positive("m");
      auto c = temper::make_contaminated_target(m, n.positive("a"));
      n.finish();
      return c;
    }
    if (type == "mixture") {
      std::vector<temper::MixtureSpec::Weighted> comps;
      for (auto& c : n.children("components")) {
        const double w = c.positive("weight");
        const std::string ct = c.text("type", "gaussian");
        if (ct == "gaussian") {
          const double mean = c.number("mean");
          comps.push_back({w, temper::GaussianSpec::scalar(mean, c.positive("variance", 1.0))});
        } else if (ct == "smoothed_uniform") {
          comps.push_back({w, temper::SmoothedUniformSpec(c.positive("m"))});
        } else {
          throw ConfigError(c.at("type"), "unknown component type '" + ct + "'");
        }
        c.finish();
      }
      n.finish();
      return temper::MixtureSpec(std::move(comps));
    }
  } catch (const temper::DomainError& e) {
    throw ConfigError(n.path(), e.what());
  } catch (const temper::UnsupportedConfiguration& e) {
    throw ConfigError(n.path(), e.what());
  }
  throw ConfigError(n.at("type"), "unknown distribution type '" + type + "'");
}

/// {"type": "linear" | "constant" | "optimal" | "table" | "csv", ...}
inline temper::Schedule parse_schedule(Node n, const std::filesystem::path& base_dir) {
  const std::string type = n.text("type");
  try {
    temper::Schedule s = [&] {
      if (type == "linear") return temper::Schedule::linear(n.positive("horizon"));
      if (type == "constant") {
        const double v = n.number("value", 1.0);
        return temper::Schedule::constant(v, n.positive("horizon"));
      }
      if (type == "optimal") {
        const double an = n.positive("alpha_nu");
        const double ap = n.positive("alpha_pi");
        return temper::Schedule::optimal(an, ap, n.positive("horizon"));
      }
      if (type == "table") {
        auto s = n.numbers("s");
        return temper::Schedule::table(std::move(s), n.numbers("lambda"));
      }
      if (type == "csv") {
        const auto rel = n.text("path");
        const auto p = base_dir / rel;
        std::ifstream in(p);
        if (!in) throw ConfigError(n.at("path"), "cannot open " + p.string());
        try {
          return temper::schedule_from_csv(in);
        } catch (const temper::DomainError& e) {
          throw ConfigError(n.at("path"), p.string() + ": " + e.what());
        }
      }
      throw ConfigError(n.at("type"), "unknown schedule type '" + type + "'");
    }();
    n.finish();
    return s;
  } catch (const temper::DomainError& e) {
    throw ConfigError(n.path(), e.what());
  }
}

/// Ladder of `n_levels` equally spaced levels ending at `final_level`, each
/// held for total_time / n_levels, or explicit `levels` / `inner_times`.
inline temper::TemperatureLadder parse_ladder(Node n) {
  try {
    const double h = n.positive("h");
    const double initial = n.number("initial_level", 0.0);
    std::vector<double> levels, times;
    if (n.has("levels")) {
      levels = n.numbers("levels");
    } else {
      const std::size_t K = n.count("n_levels", 20);
      if (K == 0) throw ConfigError(n.at("n_levels"), "must be at least 1");
      const double last = n.number("final_level", 1.0);
      for (std::size_t k = 1; k <= K; ++k) levels.push_back(initial + (last - initial) * static_cast<double>(k) / static_cast<double>(K));
    }
    if (n.has("inner_times")) {
      times = n.numbers("inner_times");
    } else {
      const double total = n.positive("total_time");
      times.assign(levels.size(), total / static_cast<double>(levels.size()));
    }
    auto ladder = temper::TemperatureLadder::from_inner_times(initial, levels, times, h);
    n.finish();
    return ladder;
  } catch (const temper::DomainError& e) {
    throw ConfigError(n.path(), e.what());
  }
}

}  // namespace lab
