#pragma once

// Command implementations behind the CLI. Each writes its outputs under the
// configured directory and returns a summary; failures surface as
// ValidationError, NumericalError or IntegrityError.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "efftemp/config.hpp"
#include "efftemp/model.hpp"
#include "efftemp/objectives.hpp"
#include "efftemp/optimize.hpp"

namespace efftemp::experiment {

inline constexpr const char* kCodeVersion = "efftemp 1.0.0";
inline constexpr const char* kCacheEnv = "EFFTEMP_CACHE_DIR";

// $EFFTEMP_CACHE_DIR, else $XDG_CACHE_HOME/efftemp, else ~/.cache/efftemp,
// else ./.efftemp-cache.
std::filesystem::path default_cache_dir();

struct Problem {
  model::Lattice lattice;
  model::XXZParams params;
  numerics::SparseRealMatrix hamiltonian;
  model::Spectrum spectrum;
  std::string cache_key;
  std::filesystem::path cache_file;
  bool cache_hit = false;
};

// Builds the Hamiltonian and loads the spectrum from the cache, computing and
// storing it on a miss.
std::shared_ptr<const Problem> prepare(const config::ExperimentConfig& cfg, const std::filesystem::path& cache_dir);

objectives::TargetState make_target(const config::ExperimentConfig& cfg, const Problem& problem, double beta);

struct EdResult {
  std::filesystem::path cache_file;
  std::string cache_key;
  bool cache_hit = false;
  std::size_t eigenpairs = 0;
  std::size_t sectors = 0;
  double ground_energy = 0.0;
};

EdResult cmd_ed(const config::ExperimentConfig& cfg, const std::filesystem::path& cache_dir,
                const std::optional<std::filesystem::path>& out_dir = {});

struct RunResult {
  std::filesystem::path dir;
  optimize::TrainStatus status = optimize::TrainStatus::Completed;
  std::string message;
  std::vector<optimize::TrainRecord> records;
  double ground_energy = 0.0;
  double target_entropy = 0.0;
};

// One training run into `out_dir`.
RunResult run_training(const config::ExperimentConfig& cfg, const Problem& problem, double beta,
                       const std::filesystem::path& out_dir);

RunResult cmd_train(const config::ExperimentConfig& cfg, const std::filesystem::path& cache_dir);

struct SweepPoint {
  double beta = 0.0;
  std::filesystem::path dir;
  bool ok = false;
  std::string message;
  std::optional<spectral::FitResult> fit;
  double infidelity = 1.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::optional<double> beta_star;
};

SweepResult cmd_ites_sweep(const config::ExperimentConfig& cfg, const std::filesystem::path& cache_dir, int jobs);

// Consolidates run or sweep directories into `out_dir`. Throws IntegrityError
// when a manifest does not match the files on disk.
nlohmann::json cmd_report(const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& out_dir);

struct GradcheckEntry {
  std::string objective;
  double value = 0.0;
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  bool pass = false;
};

inline constexpr double kGradcheckTolerance = 1e-5;

std::vector<GradcheckEntry> cmd_gradcheck(const config::ExperimentConfig& cfg, const std::filesystem::path& cache_dir,
                                          const std::optional<std::filesystem::path>& out_dir = {});

// Verifies every file listed in a run manifest.
void verify_manifest(const std::filesystem::path& run_dir);

}  // namespace efftemp::experiment
