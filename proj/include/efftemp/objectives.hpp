#pragma once

// Loss functions on unnormalized wavefunctions and the target states they
// compare against.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "efftemp/model.hpp"
#include "efftemp/numerics.hpp"

namespace efftemp::objectives {

double norm_squared(std::span<const Complex> psi);
Complex inner(std::span<const Complex> a, std::span<const Complex> b);  // <a|b>

// Rayleigh quotient <ψ|H|ψ>/<ψ|ψ>.
double energy(std::span<const Complex> psi, const numerics::SparseRealMatrix& h);

enum class TargetKind { GroundState, ITES };

std::string to_string(TargetKind kind);
TargetKind target_kind_from_string(const std::string& name);

struct TargetState {
  TargetKind kind = TargetKind::GroundState;
  double beta = 0.0;
  std::optional<std::uint64_t> phase_seed;
  ComplexVector state;         // unit norm, full 2^L space
  ComplexVector coefficients;  // <e_i|state> in ascending-energy order, exact by construction
};

TargetState ground_target(const model::Spectrum& spectrum);

// c_i ∝ e^{-β(ε_i - ε_0)/2}, optionally times e^{iω_i} with ω_i uniform on
// [0, 2π) drawn from `phase_seed`.
TargetState build_ites(const model::Spectrum& spectrum, double beta, std::optional<std::uint64_t> phase_seed = {});

// 1 - |<t|ψ>|²/(<t|t><ψ|ψ>), clamped to [0, 1].
double infidelity(std::span<const Complex> psi, std::span<const Complex> target);
double infidelity(std::span<const Complex> psi, const TargetState& target);

enum class ObjectiveKind { Energy, Infidelity, SquaredNorm };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& name);

// A loss over ψ assembled from the supported primitives. The referenced
// operands must outlive the objective.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::Energy;
  const numerics::SparseRealMatrix* hamiltonian = nullptr;
  const ComplexVector* target = nullptr;

  static Objective make_energy(const numerics::SparseRealMatrix& h);
  static Objective make_infidelity(const ComplexVector& target);
  static Objective make_squared_norm();

  // Throws ValidationError if an operand the kind needs is missing or has the
  // wrong dimension.
  void check(std::size_t dimension) const;
};

double evaluate(const Objective& objective, std::span<const Complex> psi);

struct ValueAndCotangent {
  double value = 0.0;
  ComplexVector cotangent;  // ∂L/∂Re ψ + i ∂L/∂Im ψ
};

ValueAndCotangent evaluate_with_cotangent(const Objective& objective, std::span<const Complex> psi);

}  // namespace efftemp::objectives
