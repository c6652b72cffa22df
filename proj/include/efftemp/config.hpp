#pragma once

// Experiment configuration: a JSON document with a closed schema. Presets are
// partial documents that a user file is merged over.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "efftemp/ansatz.hpp"
#include "efftemp/model.hpp"
#include "efftemp/objectives.hpp"
#include "efftemp/optimize.hpp"
#include "efftemp/spectral.hpp"

namespace efftemp::config {

enum class SectorMode { Auto, On, Off };

struct ModelConfig {
  model::LatticeKind lattice = model::LatticeKind::Chain;
  int lx = 10;
  int ly = 1;
  bool pbc = true;
  double jx = 1.0;
  double jy = 1.0;
  double jz = 0.8;
  double hz = 0.0;                       // uniform field, used when `h` is absent
  std::optional<std::vector<double>> h;  // per-site fields
  SectorMode sectors = SectorMode::Auto;
  std::size_t dimension_cap = std::size_t{1} << 13;

  model::Lattice build_lattice() const;
  model::XXZParams params() const;
  bool use_sectors() const;
};

struct ObjectiveConfig {
  objectives::ObjectiveKind kind = objectives::ObjectiveKind::Infidelity;
  objectives::TargetKind target = objectives::TargetKind::ITES;
  double beta = 0.5;
  std::vector<double> beta_grid;
  std::optional<std::uint64_t> phase_seed;
};

struct RunConfig {
  std::int64_t steps = 400;
  std::int64_t record_every = 25;
  std::uint64_t seed = 1;
  std::string out = "runs/run";
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::int64_t scatter_every = 0;     // 0: final scatter only
  bool record_wall_time = false;
};

struct AnalysisConfig {
  spectral::FitOptions fit;
  spectral::DecomposeOptions decompose;
  double beta_star_rel_dev = 0.05;
  std::optional<int> entropy_cut;  // default: L/2
  double steps_threshold = 1e-7;
};

struct ExperimentConfig {
  ModelConfig model;
  ansatz::AnsatzSpec ansatz;  // lattice filled from `model`
  ObjectiveConfig objective;
  optimize::OptimizerConfig optimizer;
  RunConfig run;
  AnalysisConfig analysis;

  // Canonical form: every field present, stable key order.
  nlohmann::json to_json() const;
  void validate() const;
};

// Parses a complete or partial document over the built-in defaults. Unknown
// keys and ill-typed values raise ValidationError.
ExperimentConfig from_json(const nlohmann::json& doc);
ExperimentConfig load(const std::filesystem::path& path);

std::vector<std::string> preset_names();
nlohmann::json preset(const std::string& name);

// RFC 7386 style merge of `patch` into `base`.
void merge(nlohmann::json& base, const nlohmann::json& patch);

// preset (optional) <- file (optional) <- explicit overrides.
ExperimentConfig resolve(const std::optional<std::string>& preset_name,
                         const std::optional<std::filesystem::path>& file, const nlohmann::json& overrides = {});

}  // namespace efftemp::config
