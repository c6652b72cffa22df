#pragma once

// Decomposition of states in the exact eigenbasis and the effective
// temperature fitted to it.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "efftemp/model.hpp"
#include "efftemp/numerics.hpp"
#include "efftemp/objectives.hpp"

namespace efftemp::spectral {

struct Entry {
  double energy = 0.0;
  double weight = 0.0;  // |c_i|², summed over the group after aggregation
  int sector = model::kUnlabeled;
  std::size_t index = 0;  // position in the spectrum (first member after aggregation)
  std::size_t multiplicity = 1;
};

struct Decomposition {
  std::vector<Entry> entries;  // ascending energy
  double source_norm = 0.0;
  std::optional<int> sector_filter;
  bool renormalized_within_sector = false;
  bool aggregated = false;
};

struct DecomposeOptions {
  std::optional<int> sector_filter;  // keep only this magnetization
  bool renormalize_within_sector = false;
};

// Weights |<e_i|ψ>|²/<ψ|ψ>.
Decomposition decompose(std::span<const Complex> psi, const model::Spectrum& spectrum,
                        const DecomposeOptions& options = {});
// Uses the target's construction coefficients directly, with no projection.
Decomposition decompose(const objectives::TargetState& target, const model::Spectrum& spectrum,
                        const DecomposeOptions& options = {});
// From eigenbasis coefficients c_i (need not be normalized).
Decomposition decompose_coefficients(std::span<const Complex> coefficients, const model::Spectrum& spectrum,
                                     const DecomposeOptions& options = {});

// Merges runs of consecutive entries whose energies lie within
// rel_tol·(ε_max - ε_min) of the first member of the run.
Decomposition aggregate_degenerate(const Decomposition& decomp, double rel_tol = 1e-10);

struct FitOptions {
  bool exclude_ground = true;
  double weight_floor = 0.0;
  bool aggregate = true;
  double degeneracy_rel_tol = 1e-10;
};

struct FitResult {
  double beta_tilde = 0.0;
  double lambda = 0.0;
  double delta_beta_tilde = 0.0;
  double r_squared = 0.0;
  std::optional<double> mse;
  std::size_t points_used = 0;
  // Spectrum indices that entered the fit (every member of a merged group).
  std::vector<std::size_t> used_indices;
};

// Least squares of ln(weight / multiplicity) against energy. Throws
// ValidationError with fewer than 3 usable points.
FitResult fit_efftemp(const Decomposition& decomp, const FitOptions& options = {});

struct MseResult {
  double value = 0.0;
  std::size_t clamped = 0;
};

inline constexpr double kMseWeightFloor = 1e-300;

// Mean squared difference of log weights over matching entries.
MseResult mse_vs_target(const Decomposition& decomp, const Decomposition& target);

// Smallest grid β from which |β̃ - β|/β > rel_dev holds at every later grid
// point. β = 0 points never count as deviating; missing fits are skipped.
std::optional<double> detect_beta_star(std::span<const double> betas,
                                       std::span<const std::optional<double>> beta_tildes, double rel_dev = 0.05);

// Von Neumann entropy of the first `left_sites` sites (low bits).
double entanglement_entropy(std::span<const Complex> psi, int left_sites);

}  // namespace efftemp::spectral
