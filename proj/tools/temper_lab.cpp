// temper-lab: config-driven experiment runner.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lab/experiments.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kGuard = 4 };

int run(const std::string& kind, const std::string& config_path, const std::string& out_dir,
        std::optional<std::uint64_t> seed, bool svg) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "temper-lab: cannot open config '" << config_path << "'\n";
    return kConfig;
  }
  lab::json cfg;
  try {
    cfg = lab::json::parse(in);
  } catch (const lab::json::parse_error& e) {
    std::cerr << "temper-lab: " << config_path << ": invalid JSON: " << e.what() << '\n';
    return kConfig;
  }
  lab::RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.config_dir = std::filesystem::path(config_path).parent_path();
  if (ctx.config_dir.empty()) ctx.config_dir = ".";
  ctx.seed = seed;
  ctx.svg = svg;
  ctx.threads = temper::thread_count_from_env();
  try {
    const auto manifest = lab::run_experiment(kind, std::move(cfg), ctx);
    std::cout << manifest["summary"].dump() << '\n';
    return kOk;
  } catch (const lab::ConfigError& e) {
    std::cerr << "temper-lab " << kind << ": config error: " << e.what() << '\n';
    return kConfig;
  } catch (const temper::GuardViolation& e) {
    std::cerr << "temper-lab " << kind << ": " << e.what() << '\n';
    return kGuard;
  } catch (const temper::DomainError& e) {
    std::cerr << "temper-lab " << kind << ": invalid parameters: " << e.what() << '\n';
    return kConfig;
  } catch (const temper::UnsupportedConfiguration& e) {
    std::cerr << "temper-lab " << kind << ": unsupported: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "temper-lab " << kind << ": " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temper-lab: tempered Langevin experiments"};
  std::string kind, config, out;
  std::optional<std::uint64_t> seed;
  bool svg = false;
  std::string kinds;
  for (const auto& [k, _] : lab::registry()) kinds += (kinds.empty() ? "" : ", ") + k;
  app.add_option("kind", kind, "experiment kind: " + kinds)->required();
  app.add_option("--config", config, "JSON config file")->required();
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_flag("--svg", svg, "also write SVG plots");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  return run(kind, config, out, seed, svg);
}
