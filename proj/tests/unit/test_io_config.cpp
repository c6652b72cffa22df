#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "efftemp/config.hpp"
#include "efftemp/errors.hpp"
#include "efftemp/io.hpp"
#include "oracles.hpp"

using namespace efftemp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("efftemp-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(io::sha256_hex(std::string("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(io::sha256_hex(std::string()), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.0}) EXPECT_EQ(std::stod(io::format_double(v)), v);
  EXPECT_EQ(io::format_double(0.5), "0.5");
}

TEST(CacheKey, SensitiveToEveryInput) {
  const auto lat = model::build_lattice(model::LatticeKind::Chain, 6, 1, true);
  const auto p = model::XXZParams::uniform(6, 1, 1, 0.8, 0.02);
  const auto k = io::spectrum_cache_key(lat, p, true);
  EXPECT_EQ(k, io::spectrum_cache_key(lat, p, true));
  EXPECT_NE(k, io::spectrum_cache_key(lat, p, false));
  auto q = p;
  q.jz = std::nextafter(0.8, 1.0);
  EXPECT_NE(k, io::spectrum_cache_key(lat, q, true));
  q = p;
  q.h[3] = 0.0;
  EXPECT_NE(k, io::spectrum_cache_key(lat, q, true));
  EXPECT_NE(k, io::spectrum_cache_key(model::build_lattice(model::LatticeKind::Chain, 6, 1, false), p, true));
  EXPECT_EQ(k.size(), 64U);
}

TEST(SpectrumFile, RoundTripAndIntegrity) {
  const auto dir = scratch("spectrum");
  for (bool sectored : {true, false}) {
    const auto lat = model::build_lattice(model::LatticeKind::Chain, 6, 1, true);
    const auto p = model::XXZParams::uniform(6, 1, 1, 0.8, 0.02);
    const auto s = model::full_spectrum(model::build_hamiltonian(lat, p), lat, p, sectored);
    const auto path = dir / (sectored ? "a.bin" : "b.bin");
    io::write_spectrum(path, s, lat, p);
    const auto key = io::spectrum_cache_key(lat, p, sectored);
    const auto r = io::read_spectrum(path, key);
    ASSERT_EQ(r.size(), s.size());
    EXPECT_EQ(r.sectored(), sectored);
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(r.energy(i), s.energy(i));
      EXPECT_EQ(r.label(i), s.label(i));
      EXPECT_EQ(r.eigenvector(i), s.eigenvector(i));
    }
    EXPECT_EQ(io::read_spectrum_header(path).at("L"), 6);
    EXPECT_THROW(io::read_spectrum(path, std::string(64, '0')), IntegrityError);

    auto bytes = bytes_of(path);
    std::ofstream(dir / "trunc.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 9);
    EXPECT_THROW(io::read_spectrum(dir / "trunc.bin"), IntegrityError);
    bytes[0] = 'X';
    std::ofstream(dir / "magic.bin", std::ios::binary) << bytes;
    EXPECT_THROW(io::read_spectrum(dir / "magic.bin"), IntegrityError);
  }
}

TEST(Checkpoint, RoundTripBitExact) {
  const auto dir = scratch("checkpoint");
  io::Checkpoint c;
  c.spec.variant = ansatz::Variant::NQS;
  c.spec.lattice = model::build_lattice(model::LatticeKind::Chain, 4, 1, true);
  c.spec.width = 3;
  c.spec.depth = 1;
  c.seed = 99;
  c.step = 1234;
  c.params = oracle::random_vector(ansatz::param_count(c.spec), 2);
  c.params[0] = -0.0;
  io::write_checkpoint(dir / "c.bin", c);
  const auto r = io::read_checkpoint(dir / "c.bin");
  EXPECT_EQ(r.seed, 99U);
  EXPECT_EQ(r.step, 1234);
  EXPECT_EQ(r.spec.variant, ansatz::Variant::NQS);
  EXPECT_EQ(r.spec.width, 3);
  ASSERT_EQ(r.params.size(), c.params.size());
  for (std::size_t i = 0; i < c.params.size(); ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(r.params[i]), std::bit_cast<std::uint64_t>(c.params[i]));
  auto bytes = bytes_of(dir / "c.bin");
  std::ofstream(dir / "t.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 1);
  EXPECT_THROW(io::read_checkpoint(dir / "t.bin"), IntegrityError);
}

TEST(Trajectory, RoundTripAndEmptyFitFields) {
  const auto dir = scratch("trajectory");
  std::vector<optimize::TrainRecord> recs(2);
  recs[0] = {0, 0.9, -1.5, 0.9, std::nullopt, 0.0};
  spectral::FitResult f;
  f.beta_tilde = 0.31;
  f.lambda = 1e-3;
  f.delta_beta_tilde = 0.01;
  f.r_squared = 0.97;
  f.mse = 0.25;
  f.points_used = 10;
  recs[1] = {25, 0.1, -2.0, 0.1, f, 0.0};
  io::write_trajectory(dir / "t.csv", recs);
  const auto text = io::read_text(dir / "t.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), io::kTrajectoryHeader);
  EXPECT_NE(text.find("0,0.9,-1.5,0.9,,,,,,0\n"), std::string::npos);
  const auto back = io::read_trajectory(dir / "t.csv");
  ASSERT_EQ(back.size(), 2U);
  EXPECT_FALSE(back[0].fit.has_value());
  EXPECT_EQ(back[1].fit->beta_tilde, 0.31);
  EXPECT_EQ(*back[1].fit->mse, 0.25);
}

TEST(Scatter, Columns) {
  const auto dir = scratch("scatter");
  spectral::Decomposition d;
  d.entries = {{-1.0, 0.75, 0, 0, 1}, {0.5, 0.25, model::kUnlabeled, 1, 1}};
  const std::vector<std::size_t> used{1};
  io::write_scatter(dir / "s.csv", d, used);
  EXPECT_EQ(io::read_text(dir / "s.csv"), "epsilon,weight,sector,used_in_fit\n-1,0.75,0,0\n0.5,0.25,,1\n");
}

TEST(Config, DefaultsPresetsAndCanonicalForm) {
  const auto d = config::from_json(json::object());
  EXPECT_EQ(d.model.lx, 10);
  EXPECT_DOUBLE_EQ(d.model.jz, 0.8);
  EXPECT_DOUBLE_EQ(d.model.hz, 0.02);
  EXPECT_EQ(d.run.record_every, 25);

  const auto mps = config::resolve("mps-sm-table", std::nullopt);
  EXPECT_EQ(mps.ansatz.variant, ansatz::Variant::MPS);
  EXPECT_DOUBLE_EQ(mps.optimizer.adam.schedule.lr0, 3e-3);
  EXPECT_EQ(mps.optimizer.adam.schedule.kind, optimize::ScheduleKind::ExpHalving);
  EXPECT_EQ(mps.optimizer.adam.schedule.period, 1000);
  EXPECT_EQ(mps.run.steps, 400);
  const auto peps = config::resolve("peps-sm-table", std::nullopt);
  EXPECT_DOUBLE_EQ(peps.optimizer.adam.schedule.lr0, 8e-3);
  EXPECT_EQ(peps.optimizer.adam.schedule.kind, optimize::ScheduleKind::Constant);
  EXPECT_EQ(peps.run.steps, 600);
  const auto nqs = config::resolve("nqs-sm-table", std::nullopt);
  EXPECT_DOUBLE_EQ(nqs.optimizer.adam.schedule.lr0, 1e-3);
  EXPECT_EQ(nqs.optimizer.adam.schedule.period, 200);
  EXPECT_EQ(nqs.optimizer.adam.schedule.warm_steps, 800);
  EXPECT_EQ(nqs.ansatz.width, 40);
  EXPECT_EQ(nqs.run.steps, 3500);
  const auto vqe = config::resolve("vqe-sm-table", std::nullopt);
  EXPECT_DOUBLE_EQ(vqe.optimizer.adam.schedule.lr0, 1e-2);
  EXPECT_EQ(vqe.optimizer.adam.schedule.period, 2000);
  EXPECT_EQ(vqe.run.steps, 2000);
  const auto vec = config::resolve("vec-sm-table", std::nullopt);
  EXPECT_DOUBLE_EQ(vec.optimizer.adam.schedule.lr0, 2e-3);
  EXPECT_EQ(vec.run.steps, 600);
  EXPECT_EQ(config::preset_names().size(), 5U);
  EXPECT_THROW(config::preset("nope"), ValidationError);

  // Canonical JSON is a fixed point of the parser.
  const auto j = mps.to_json();
  EXPECT_EQ(config::from_json(j).to_json().dump(), j.dump());
}

TEST(Config, ClosedSchemaAndValidation) {
  EXPECT_THROW(config::from_json(json::parse(R"({"modle": {}})")), ValidationError);
  EXPECT_THROW(config::from_json(json::parse(R"({"model": {"Jzz": 1}})")), ValidationError);
  EXPECT_THROW(config::from_json(json::parse(R"({"model": {"Lx": "ten"}})")), ValidationError);
  EXPECT_THROW(config::from_json(json::parse(R"({"model": {"Jx": 1, "Jy": 0.5, "sectors": "on"}})")), ValidationError);
  EXPECT_THROW(config::from_json(json::parse(R"({"objective": {"beta_grid": [0.2, 0.1]}})")), ValidationError);
  EXPECT_THROW(config::from_json(json::parse(R"({"optimizer": {"kind": "sgd"}})")), ValidationError);
  EXPECT_THROW(config::from_json(json::parse(R"({"run": {"record_every": 0}})")), ValidationError);
  EXPECT_THROW(config::from_json(json::parse(R"({"ansatz": {"variant": "peps"}})")), ValidationError);

  const auto g = config::from_json(json::parse(R"({"objective": {"beta_grid": {"start": 0.1, "stop": 1.2, "step": 0.1}}})"));
  ASSERT_EQ(g.objective.beta_grid.size(), 12U);
  EXPECT_DOUBLE_EQ(g.objective.beta_grid[2], 0.3);
  EXPECT_DOUBLE_EQ(g.objective.beta_grid.back(), 1.2);
}

TEST(Config, MergeOrder) {
  const auto dir = scratch("config");
  io::write_text(dir / "c.json", R"({"ansatz": {"bond_dim": 16}, "run": {"steps": 50}})");
  const auto c = config::resolve("mps-sm-table", dir / "c.json", json::parse(R"({"run": {"seed": 5}})"));
  EXPECT_EQ(c.ansatz.bond_dim, 16);
  EXPECT_EQ(c.run.steps, 50);
  EXPECT_EQ(c.run.seed, 5U);
  EXPECT_DOUBLE_EQ(c.optimizer.adam.schedule.lr0, 3e-3);
  io::write_text(dir / "bad.json", "{not json");
  EXPECT_THROW(config::load(dir / "bad.json"), ValidationError);
}
