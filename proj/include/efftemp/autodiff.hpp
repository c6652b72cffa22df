#pragma once

// Gradients of objectives with respect to ansatz parameters, composed as
// ψ = forward(θ), L = objective(ψ), dL/dθ = pullback(θ, ∂L/∂ψ̄).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "efftemp/ansatz.hpp"
#include "efftemp/objectives.hpp"

namespace efftemp::autodiff {

struct GradReport {
  double value = 0.0;
  std::vector<double> gradient;
  std::optional<double> max_fd_rel_error;
};

double objective_value(const ansatz::AnsatzSpec& spec, std::span<const double> theta,
                       const objectives::Objective& objective);

// Throws NumericalError if the value or any gradient entry is not finite.
GradReport grad_objective(const ansatz::AnsatzSpec& spec, std::span<const double> theta,
                          const objectives::Objective& objective);

struct FdCoordinate {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct FdCheck {
  double value = 0.0;
  double max_rel_error = 0.0;
  std::vector<FdCoordinate> coordinates;
};

// Relative error used by the check: |a - n| / max(|a|, |n|, 1e-4·max(1, |L|)).
double fd_relative_error(double analytic, double numeric, double value);

// Central differences on `count` distinct coordinates chosen by `seed` (all of
// them when the vector is shorter).
FdCheck finite_difference_check(const ansatz::AnsatzSpec& spec, std::span<const double> theta,
                                const objectives::Objective& objective, std::uint64_t seed, std::size_t count = 32,
                                double step = 1e-5);

}  // namespace efftemp::autodiff
