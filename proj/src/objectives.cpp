#include "efftemp/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "efftemp/errors.hpp"
#include "efftemp/rng.hpp"

namespace efftemp::objectives {

double norm_squared(std::span<const Complex> psi) {
  double s = 0.0;
  for (const auto& z : psi) s += std::norm(z);
  return s;
}

Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw ValidationError("inner: dimension mismatch");
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

namespace {

double checked_norm(std::span<const Complex> psi, const char* who) {
  const double n = norm_squared(psi);
  if (!(n > 0.0)) throw ValidationError(std::string(who) + ": wavefunction has zero norm");
  if (!std::isfinite(n)) throw NumericalError(std::string(who) + ": wavefunction is not finite");
  return n;
}

}  // namespace

double energy(std::span<const Complex> psi, const numerics::SparseRealMatrix& h) {
  const double n = checked_norm(psi, "energy");
  const auto hpsi = numerics::spmv(h, psi);
  const Complex e = inner(psi, hpsi) / n;
  const double scale = std::max(1.0, std::abs(e.real()));
  if (std::abs(e.imag()) > 1e-10 * scale) throw NumericalError("energy: quadratic form has an imaginary part");
  return e.real();
}

std::string to_string(TargetKind kind) { return kind == TargetKind::GroundState ? "ground" : "ites"; }

TargetKind target_kind_from_string(const std::string& name) {
  if (name == "ground") return TargetKind::GroundState;
  if (name == "ites") return TargetKind::ITES;
  throw ValidationError("unknown target kind '" + name + "' (expected ground or ites)");
}

TargetState ground_target(const model::Spectrum& spectrum) {
  if (spectrum.size() == 0) throw ValidationError("ground_target: empty spectrum");
  TargetState t;
  t.kind = TargetKind::GroundState;
  t.coefficients.assign(spectrum.size(), Complex{});
  t.coefficients[spectrum.ground_index()] = 1.0;
  t.state = spectrum.eigenvector(spectrum.ground_index());
  return t;
}

TargetState build_ites(const model::Spectrum& spectrum, double beta, std::optional<std::uint64_t> phase_seed) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("build_ites: beta must be finite and >= 0");
  if (spectrum.size() == 0) throw ValidationError("build_ites: empty spectrum");
  const auto eps = spectrum.energies();
  const double e0 = eps[0];
  std::vector<double> w(eps.size());
  double z2 = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    w[i] = std::exp(-0.5 * beta * (eps[i] - e0));
    z2 += w[i] * w[i];
  }
  const double z = std::sqrt(z2);

  TargetState t;
  t.kind = TargetKind::ITES;
  t.beta = beta;
  t.phase_seed = phase_seed;
  t.coefficients.resize(eps.size());
  std::optional<CounterRng> rng;
  if (phase_seed) rng.emplace(*phase_seed, "ites-phases");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double mag = w[i] / z;
    if (rng) {
      const double omega = 2.0 * std::numbers::pi * (1.0 - rng->uniform(i));
      t.coefficients[i] = std::polar(mag, omega);
    } else {
      t.coefficients[i] = mag;
    }
  }
  t.state = spectrum.combine(t.coefficients);
  const double n = std::sqrt(norm_squared(t.state));
  for (auto& v : t.state) v /= n;
  return t;
}

double infidelity(std::span<const Complex> psi, std::span<const Complex> target) {
  if (psi.size() != target.size()) throw ValidationError("infidelity: dimension mismatch");
  const double n = checked_norm(psi, "infidelity");
  const double nt = checked_norm(target, "infidelity");
  const double f = std::norm(inner(target, psi)) / (n * nt);
  return std::clamp(1.0 - f, 0.0, 1.0);
}

double infidelity(std::span<const Complex> psi, const TargetState& target) { return infidelity(psi, target.state); }

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Energy: return "energy";
    case ObjectiveKind::Infidelity: return "fidelity";
    case ObjectiveKind::SquaredNorm: return "squared_norm";
  }
  return "?";
}

ObjectiveKind objective_kind_from_string(const std::string& name) {
  if (name == "energy") return ObjectiveKind::Energy;
  if (name == "fidelity" || name == "infidelity") return ObjectiveKind::Infidelity;
  if (name == "squared_norm") return ObjectiveKind::SquaredNorm;
  throw ValidationError("unknown objective '" + name + "' (expected energy, fidelity or squared_norm)");
}

Objective Objective::make_energy(const numerics::SparseRealMatrix& h) {
  return {ObjectiveKind::Energy, &h, nullptr};
}

Objective Objective::make_infidelity(const ComplexVector& target) {
  return {ObjectiveKind::Infidelity, nullptr, &target};
}

Objective Objective::make_squared_norm() { return {ObjectiveKind::SquaredNorm, nullptr, nullptr}; }

void Objective::check(std::size_t dimension) const {
  switch (kind) {
    case ObjectiveKind::Energy:
      if (hamiltonian == nullptr) throw ValidationError("energy objective requires a Hamiltonian");
      if (hamiltonian->size() != dimension) throw ValidationError("energy objective: Hamiltonian dimension mismatch");
      return;
    case ObjectiveKind::Infidelity:
      if (target == nullptr) throw ValidationError("infidelity objective requires a target state");
      if (target->size() != dimension) throw ValidationError("infidelity objective: target dimension mismatch");
      return;
    case ObjectiveKind::SquaredNorm:
      return;
  }
  throw ValidationError("unsupported objective kind");
}

double evaluate(const Objective& objective, std::span<const Complex> psi) {
  objective.check(psi.size());
  switch (objective.kind) {
    case ObjectiveKind::Energy: return energy(psi, *objective.hamiltonian);
    case ObjectiveKind::Infidelity: return infidelity(psi, *objective.target);
    case ObjectiveKind::SquaredNorm: return norm_squared(psi);
  }
  throw ValidationError("unsupported objective kind");
}

ValueAndCotangent evaluate_with_cotangent(const Objective& objective, std::span<const Complex> psi) {
  objective.check(psi.size());
  ValueAndCotangent out;
  out.cotangent.resize(psi.size());
  switch (objective.kind) {
    case ObjectiveKind::Energy: {
      const double n = checked_norm(psi, "energy");
      const auto hpsi = numerics::spmv(*objective.hamiltonian, psi);
      const double e = inner(psi, hpsi).real() / n;
      out.value = e;
      for (std::size_t b = 0; b < psi.size(); ++b) out.cotangent[b] = 2.0 * (hpsi[b] - e * psi[b]) / n;
      break;
    }
    case ObjectiveKind::Infidelity: {
      const auto& t = *objective.target;
      const double n = checked_norm(psi, "infidelity");
      const double nt = checked_norm(t, "infidelity");
      const Complex o = inner(t, psi);
      const double o2 = std::norm(o);
      out.value = std::clamp(1.0 - o2 / (n * nt), 0.0, 1.0);
      for (std::size_t b = 0; b < psi.size(); ++b) {
        out.cotangent[b] = -(2.0 * o * t[b] / n - o2 * 2.0 * psi[b] / (n * n)) / nt;
      }
      break;
    }
    case ObjectiveKind::SquaredNorm:
      out.value = norm_squared(psi);
      for (std::size_t b = 0; b < psi.size(); ++b) out.cotangent[b] = 2.0 * psi[b];
      break;
  }
  return out;
}

}  // namespace efftemp::objectives
