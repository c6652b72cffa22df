#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "efftemp/errors.hpp"
#include "efftemp/experiment.hpp"
#include "efftemp/io.hpp"

using namespace efftemp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("efftemp-exp-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

config::ExperimentConfig small(const fs::path& out, const std::string& extra = "{}") {
  auto doc = json::parse(R"({"model": {"Lx": 6}, "ansatz": {"variant": "vec"},
    "optimizer": {"lr0": 2e-3}, "run": {"steps": 60, "record_every": 20}})");
  config::merge(doc, json::parse(extra));
  doc["run"]["out"] = out.string();
  return config::from_json(doc);
}

int run_cli(const std::string& args, const fs::path& cache) {
  const std::string cmd = "EFFTEMP_CACHE_DIR='" + cache.string() + "' '" EFFTEMP_CLI_PATH "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Ed, CachesAndHits) {
  const auto dir = scratch("ed");
  auto cfg = small(dir / "run", R"({"model": {"Lx": 8, "hz": 0.0}})");
  const auto a = experiment::cmd_ed(cfg, dir / "cache", dir / "ed");
  EXPECT_FALSE(a.cache_hit);
  EXPECT_EQ(a.eigenpairs, 256U);
  EXPECT_EQ(a.sectors, 9U);
  const auto hash = io::sha256_file(a.cache_file);
  const auto b = experiment::cmd_ed(cfg, dir / "cache");
  EXPECT_TRUE(b.cache_hit);
  EXPECT_EQ(io::sha256_file(b.cache_file), hash);
  EXPECT_TRUE(fs::exists(dir / "ed" / "manifest.json"));
  experiment::verify_manifest(dir / "ed");
}

TEST(Ed, SquareSectorCount) {
  const auto dir = scratch("ed-square");
  auto cfg = small(dir / "run", R"({"model": {"lattice": "square", "Lx": 2, "Ly": 3}})");
  const auto r = experiment::cmd_ed(cfg, dir / "cache");
  EXPECT_EQ(r.eigenpairs, 64U);
  EXPECT_EQ(r.sectors, 7U);
}

TEST(Train, ZeroStepsWritesInitialRecordOnly) {
  const auto dir = scratch("train0");
  auto cfg = small(dir / "run", R"({"run": {"steps": 0}})");
  const auto r = experiment::cmd_train(cfg, dir / "cache");
  ASSERT_EQ(r.records.size(), 1U);
  for (const char* f : {"config.snapshot", "manifest.json", "trajectory.csv", "scatter_step_0.csv",
                        "checkpoint_step_0.bin", "final.summary.json"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  EXPECT_EQ(io::read_trajectory(dir / "run" / "trajectory.csv").size(), 1U);
}

TEST(Train, DeterministicOutputsAndCheckpoints) {
  const auto dir = scratch("det");
  const std::string extra = R"({"run": {"checkpoint_every": 20, "scatter_every": 20}})";
  experiment::cmd_train(small(dir / "a", extra), dir / "cache");
  experiment::cmd_train(small(dir / "b", extra), dir / "cache");
  for (const char* f : {"trajectory.csv", "scatter_step_40.csv", "checkpoint_step_20.bin", "final.summary.json"})
    EXPECT_EQ(io::sha256_file(dir / "a" / f), io::sha256_file(dir / "b" / f)) << f;
  const auto ck = io::read_checkpoint(dir / "a" / "checkpoint_step_60.bin");
  EXPECT_EQ(ck.step, 60);
  const auto manifest = json::parse(io::read_text(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest.at("code_version"), experiment::kCodeVersion);
  EXPECT_EQ(manifest.at("config").at("optimizer").at("lr0"), 2e-3);
  experiment::verify_manifest(dir / "a");
}

TEST(Sweep, SingleAndMultiPointWithReport) {
  const auto dir = scratch("sweep");
  auto one = small(dir / "one", R"({"objective": {"beta_grid": [0.4]}})");
  const auto r1 = experiment::cmd_ites_sweep(one, dir / "cache", 1);
  ASSERT_EQ(r1.points.size(), 1U);
  EXPECT_TRUE(r1.points[0].ok);
  EXPECT_TRUE(r1.points[0].fit.has_value());

  auto grid = small(dir / "grid", R"({"objective": {"beta_grid": [0.2, 0.5, 0.9]}, "run": {"steps": 300}})");
  const auto r2 = experiment::cmd_ites_sweep(grid, dir / "cache", 2);
  ASSERT_EQ(r2.points.size(), 3U);
  EXPECT_TRUE(fs::exists(dir / "grid" / "sweep.csv"));

  // Parallel scheduling gives the same per-run bytes as a serial sweep.
  auto serial = small(dir / "serial", R"({"objective": {"beta_grid": [0.2, 0.5, 0.9]}, "run": {"steps": 300}})");
  experiment::cmd_ites_sweep(serial, dir / "cache", 1);
  for (const char* b : {"beta_0.2", "beta_0.5", "beta_0.9"})
    EXPECT_EQ(io::sha256_file(dir / "grid" / b / "trajectory.csv"),
              io::sha256_file(dir / "serial" / b / "trajectory.csv"));

  const auto rep = experiment::cmd_report({dir / "grid", dir / "one"}, dir / "report");
  EXPECT_EQ(rep.at("runs").size(), 4U);
  EXPECT_TRUE(rep.at("entropy_non_increasing").get<bool>());
  const auto first = io::read_text(dir / "report" / "report.json");
  experiment::cmd_report({dir / "grid", dir / "one"}, dir / "report");
  EXPECT_EQ(io::read_text(dir / "report" / "report.json"), first);
  for (const char* f : {"report_runs.csv", "report_series.csv", "report_lambda.csv", "report_entropy.csv"})
    EXPECT_TRUE(fs::exists(dir / "report" / f)) << f;

  EXPECT_THROW(experiment::cmd_report({}, dir / "r2"), ValidationError);
  io::write_text(dir / "one" / "beta_0.4" / "trajectory.csv", "step\n");
  EXPECT_THROW(experiment::cmd_report({dir / "one"}, dir / "r3"), IntegrityError);
}

TEST(Gradcheck, PassesOnSmallChain) {
  const auto dir = scratch("gradcheck");
  auto cfg = small(dir / "run", R"({"ansatz": {"variant": "mps", "bond_dim": 3}})");
  const auto rows = experiment::cmd_gradcheck(cfg, dir / "cache", dir / "gc");
  ASSERT_EQ(rows.size(), 3U);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.objective << " " << r.max_rel_error;
  EXPECT_TRUE(fs::exists(dir / "gc" / "gradcheck.json"));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const auto cache = dir / "cache";
  io::write_text(dir / "ok.json", R"({"model": {"Lx": 6}, "ansatz": {"variant": "vec"}, "run": {"steps": 10}})");
  io::write_text(dir / "bad.json", R"({"model": {"Lx": 6, "colour": 1}})");
  EXPECT_EQ(run_cli("ed --config '" + (dir / "ok.json").string() + "'", cache), 0);
  EXPECT_EQ(run_cli("train --config '" + (dir / "ok.json").string() + "' --out '" + (dir / "run").string() + "'", cache), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "trajectory.csv"));
  EXPECT_EQ(run_cli("train --config '" + (dir / "bad.json").string() + "'", cache), 2);
  EXPECT_EQ(run_cli("train --preset no-such-preset", cache), 2);
  EXPECT_EQ(run_cli("frobnicate", cache), 2);
  EXPECT_EQ(run_cli("report --out '" + (dir / "rep").string() + "' '" + (dir / "run").string() + "'", cache), 0);
  io::write_text(dir / "run" / "final.summary.json", "{}");
  EXPECT_EQ(run_cli("report --out '" + (dir / "rep").string() + "' '" + (dir / "run").string() + "'", cache), 4);
  EXPECT_EQ(run_cli("gradcheck --config '" + (dir / "ok.json").string() + "'", cache), 0);
}
