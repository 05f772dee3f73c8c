#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lab/experiments.hpp"

namespace fs = std::filesystem;
using lab::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("temper_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

lab::RunContext ctx_for(const fs::path& out, std::size_t threads = 1) {
  lab::RunContext c;
  c.out_dir = out;
  c.threads = threads;
  return c;
}

std::string config_error_path(const std::string& kind, const json& cfg) {
  try {
    lab::run_experiment(kind, cfg, ctx_for(scratch("err")));
  } catch (const temper::ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

json sample_config() {
  return json::parse(R"({
    "schema_version": 1,
    "proposal": {"type": "gaussian", "mean": 0, "variance": 1},
    "target": {"type": "bimodal", "m": 5},
    "schedule": {"type": "linear", "horizon": 1},
    "n_particles": 3000, "h": 0.05, "seed": 5,
    "snapshot_times": [0.5, 1], "export_snapshots": true
  })");
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(TEMPER_LAB_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Config, UnknownKeysReportFieldPath) {
  auto cfg = sample_config();
  cfg["schedule"]["horizn"] = 3;
  EXPECT_EQ(config_error_path("sample", cfg), "$.schedule.horizn");
  cfg = sample_config();
  cfg["n_particle"] = 3;
  EXPECT_EQ(config_error_path("sample", cfg), "$.n_particle");
}

TEST(Config, SeedIsMandatoryForStochasticKinds) {
  auto cfg = sample_config();
  cfg.erase("seed");
  EXPECT_EQ(config_error_path("sample", cfg), "$.seed");
  auto ctx = ctx_for(scratch("seed_override"));
  ctx.seed = 9;
  const auto man = lab::run_experiment("sample", cfg, ctx);
  EXPECT_EQ(man["parameters"]["seed"], 9);
}

TEST(Config, SchemaVersionAndTypes) {
  auto cfg = sample_config();
  cfg["schema_version"] = 2;
  EXPECT_EQ(config_error_path("sample", cfg), "$.schema_version");
  cfg = sample_config();
  cfg["h"] = "small";
  EXPECT_EQ(config_error_path("sample", cfg), "$.h");
  cfg = sample_config();
  cfg["target"]["type"] = "cauchy";
  EXPECT_EQ(config_error_path("sample", cfg), "$.target.type");
  EXPECT_EQ(config_error_path("no-such-kind", sample_config()), "$");
}

TEST(Config, ScheduleFromCsvRelativeToConfig) {
  const auto dir = scratch("csv_schedule");
  std::ofstream(dir / "sched.csv") << "s,lambda\n0,0\n0.5,0.9\n1,1\n";
  auto cfg = sample_config();
  cfg["schedule"] = {{"type", "csv"}, {"path", "sched.csv"}};
  auto ctx = ctx_for(dir / "out");
  ctx.config_dir = dir;
  EXPECT_NO_THROW(lab::run_experiment("sample", cfg, ctx));
  std::ofstream(dir / "bad.csv") << "s,lambda\n0,0.5\n1,0.2\n";
  cfg["schedule"]["path"] = "bad.csv";
  try {
    lab::run_experiment("sample", cfg, ctx);
    FAIL();
  } catch (const temper::ConfigError& e) {
    EXPECT_EQ(e.path(), "$.schedule.path");
  }
}

TEST(Manifest, EchoesDefaultsAndHashesFiles) {
  const auto out = scratch("fig2");
  const auto man = lab::run_experiment("reproduce-fig2", json{{"schema_version", 1}}, ctx_for(out));
  EXPECT_EQ(man["schema_version"], 1);
  EXPECT_EQ(man["parameters"]["n_points"], 41);
  EXPECT_EQ(man["parameters"]["alpha_pi"], 0.01);
  EXPECT_EQ(man["parameters"]["t_max"], 1000.0);
  for (const auto& f : man["files"]) {
    const auto bytes = slurp(out / f["path"].get<std::string>());
    EXPECT_EQ(f["bytes"], bytes.size());
    EXPECT_EQ(f["fnv1a64"], temper::hex64(temper::fnv1a64(bytes)));
  }
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(GCurves, OrderingAndCrossover) {
  const auto out = scratch("fig2_order");
  lab::run_experiment("reproduce-fig2", json{{"schema_version", 1}}, ctx_for(out));
  std::ifstream in(out / "fig2.csv");
  const auto t = temper::read_csv(in);
  const auto ts = t.numeric("t"), go = t.numeric("G_optimal"), gl = t.numeric("G_linear"), gv = t.numeric("G_vanilla");
  ASSERT_EQ(ts.size(), 41u);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_LE(go[i], gl[i] + 1e-12);
    EXPECT_LE(go[i], gv[i] + 1e-12);
  }
  EXPECT_LT(gl.front(), gv.front());
  EXPECT_LT(gv.back(), gl.back());
}

TEST(Determinism, SampleBytesIdenticalAcrossThreadCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ma = lab::run_experiment("sample", sample_config(), ctx_for(a, 1));
  const auto mb = lab::run_experiment("sample", sample_config(), ctx_for(b, 3));
  EXPECT_EQ(ma["files"], mb["files"]);
  for (const auto& f : ma["files"]) {
    const auto name = f["path"].get<std::string>();
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  EXPECT_TRUE(fs::exists(a / "snapshot_1.json"));
  const auto side = json::parse(slurp(a / "snapshot_1.json"));
  EXPECT_EQ(side["seed"], 5);
  EXPECT_EQ(side["step_count"], 20);
}

TEST(Svg, ByteStableAndLabelled) {
  std::istringstream in("t,G_optimal,G_linear,G_vanilla\n0.1,0.5,0.6,0.8\n1,0.3,0.4,0.9\n10,0.1,0.3,0.8\n");
  const auto tab = temper::read_csv(in);
  const temper::PlotSpec spec{"t", {"G_optimal", "G_linear", "G_vanilla"}, "", true, true, "G"};
  const auto a = temper::svg_lineplot(tab, spec), b = temper::svg_lineplot(tab, spec);
  EXPECT_EQ(a, b);
  std::size_t lines = 0;
  for (std::size_t p = a.find("<polyline"); p != std::string::npos; p = a.find("<polyline", p + 1)) ++lines;
  EXPECT_EQ(lines, 3u);
  for (const char* name : {"G_optimal", "G_linear", "G_vanilla"}) EXPECT_NE(a.find(name), std::string::npos);
  const fs::path golden = fs::path(TEMPER_SOURCE_DIR) / "tests" / "golden" / "fig2_small.svg";
  if (std::getenv("TEMPER_UPDATE_GOLDEN")) std::ofstream(golden, std::ios::binary) << a;
  EXPECT_EQ(a, slurp(golden));
}

TEST(Svg, SingleSeriesAndErrors) {
  std::istringstream in("x,y\n0,1\n1,2\n");
  const auto tab = temper::read_csv(in);
  const auto s = temper::svg_lineplot(tab, {"x", {"y"}, "", false, false, ""});
  EXPECT_NE(s.find("<polyline"), std::string::npos);
  EXPECT_THROW(temper::svg_lineplot(tab, {"x", {"z"}, "", false, false, ""}), temper::DomainError);
  std::istringstream empty("x,y\n");
  EXPECT_THROW(temper::svg_lineplot(temper::read_csv(empty), {"x", {"y"}, "", false, false, ""}), temper::DomainError);
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch("bin");
  const auto ok = write_config(dir, "ok.json", R"({"schema_version": 1, "n_points": 5})");
  EXPECT_EQ(run_binary("reproduce-fig2 --config " + ok.string() + " --out " + (dir / "o1").string() + " --svg"), 0);
  EXPECT_TRUE(fs::exists(dir / "o1" / "fig2.svg"));
  const auto typo = write_config(dir, "typo.json", R"({"schema_version": 1, "n_pionts": 5})");
  EXPECT_EQ(run_binary("reproduce-fig2 --config " + typo.string() + " --out " + (dir / "o2").string()), 2);
  const auto broken = write_config(dir, "broken.json", "{\"schema_version\": ");
  EXPECT_EQ(run_binary("reproduce-fig2 --config " + broken.string() + " --out " + (dir / "o3").string()), 2);
  EXPECT_EQ(run_binary("reproduce-fig2 --out " + (dir / "o4").string()), 2);
  const auto guarded = write_config(dir, "guard.json", R"({
    "schema_version": 1,
    "proposal": {"type": "gaussian", "mean": [0, 0], "variance": 1},
    "target": {"type": "gaussian", "mean": [0, 0], "variance": 10},
    "schedule": {"type": "linear", "horizon": 20}, "n_steps": 50, "guarded": true})");
  EXPECT_EQ(run_binary("bounds-sweep --config " + guarded.string() + " --out " + (dir / "o5").string()), 4);
  const auto blowup = write_config(dir, "blowup.json", R"({
    "schema_version": 1,
    "proposal": {"type": "gaussian", "mean": 0, "variance": 0.001},
    "target": {"type": "gaussian", "mean": 0, "variance": 0.001},
    "schedule": {"type": "constant", "value": 1, "horizon": 300}, "h": 1, "n_particles": 4, "seed": 1})");
  EXPECT_EQ(run_binary("sample --config " + blowup.string() + " --out " + (dir / "o6").string()), 3);
}
