#pragma once

// Learning-rate schedules, Adam, L-BFGS and the instrumented training loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efftemp/ansatz.hpp"
#include "efftemp/objectives.hpp"
#include "efftemp/spectral.hpp"

namespace efftemp::optimize {

enum class ScheduleKind { Constant, ExpHalving, WarmThenConstant };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

struct Schedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double lr0 = 1e-3;
  std::int64_t period = 1;      // halving period in steps
  std::int64_t warm_steps = 0;  // WarmThenConstant: halving stops here

  void validate() const;
};

double lr_at(const Schedule& schedule, std::int64_t step);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Schedule schedule;

  void validate() const;
};

class Adam {
 public:
  Adam(AdamConfig config, std::size_t size);

  // One bias-corrected update at zero-based step `step`.
  void step(std::span<double> theta, std::span<const double> gradient, std::int64_t step);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct LbfgsConfig {
  int memory = 10;
  double value_tol = 1e-22;
  double grad_tol = 1e-22;
  int max_iter = 4000;

  void validate() const;
};

enum class LbfgsStatus { ValueTolerance, GradientTolerance, MaxIterations, LineSearchFailed };

std::string to_string(LbfgsStatus status);

// Returns f(θ) and writes ∇f(θ) into `gradient`.
using ValueAndGradient = std::function<double(std::span<const double> theta, std::span<double> gradient)>;
// Called with the iteration count and the accepted iterate (0 = starting point).
using LbfgsObserver = std::function<void(int iteration, std::span<const double> theta, double value,
                                         std::span<const double> gradient)>;

struct LbfgsResult {
  std::vector<double> theta;
  double value = 0.0;
  int iterations = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  std::vector<double> values;  // f at each accepted iterate, starting point first
};

LbfgsResult lbfgs_minimize(const ValueAndGradient& fg, std::vector<double> theta0, const LbfgsConfig& config,
                           const LbfgsObserver& observer = {});

enum class OptimizerKind { Adam, Lbfgs };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  AdamConfig adam;
  LbfgsConfig lbfgs;
};

struct TrainRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double energy = 0.0;
  double infidelity = 0.0;
  std::optional<spectral::FitResult> fit;
  double wall_ms = 0.0;
};

struct AnalysisOptions {
  spectral::DecomposeOptions decompose;
  spectral::FitOptions fit;
};

// Everything a run reads. Pointers are non-owning and must outlive train().
struct TrainProblem {
  ansatz::AnsatzSpec spec;
  objectives::ObjectiveKind objective = objectives::ObjectiveKind::Energy;
  const numerics::SparseRealMatrix* hamiltonian = nullptr;  // required
  const objectives::TargetState* target = nullptr;          // required
  const model::Spectrum* spectrum = nullptr;                // enables fit snapshots
  AnalysisOptions analysis;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  std::int64_t total_steps = 0;
  std::int64_t record_every = 25;
  std::uint64_t seed = 0;
  bool record_wall_time = false;
  std::optional<std::vector<double>> initial_params;  // overrides init_params(seed)
  // Invoked after each record with the parameters it describes.
  std::function<void(const TrainRecord&, std::span<const double>)> on_record;
};

enum class TrainStatus { Completed, NonFinite, LineSearchFailed };

std::string to_string(TrainStatus status);

struct TrainResult {
  std::vector<TrainRecord> records;
  std::vector<double> theta;  // parameters of the last record
  std::int64_t final_step = 0;
  TrainStatus status = TrainStatus::Completed;
  std::string message;
};

TrainResult train(const TrainProblem& problem, const TrainConfig& config);

// First recorded step whose infidelity is at or below the threshold.
std::optional<std::int64_t> steps_to_threshold(std::span<const TrainRecord> records, double threshold);

}  // namespace efftemp::optimize
