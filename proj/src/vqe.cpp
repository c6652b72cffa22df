// Hardware-efficient circuit on a statevector. The reference state is a
// product of singlets on pairs (0,1), (2,3), ...; each block applies
// e^{-iθZ} and then e^{-iθY} on every qubit, then e^{-iθ SWAP} on every bond.

#include <cmath>

#include "ansatz_internal.hpp"
#include "efftemp/errors.hpp"

namespace efftemp::ansatz {
namespace {

enum class GateKind { Rz, Ry, Swap };

struct Gate {
  GateKind kind;
  int a = 0;
  int b = 0;
  std::size_t param = 0;
};

std::vector<Gate> circuit(const AnsatzSpec& spec) {
  const int L = spec.sites();
  const auto bonds = vqe_bonds(spec.lattice);
  std::vector<Gate> gates;
  std::size_t p = 0;
  for (int k = 0; k < spec.depth; ++k) {
    for (int q = 0; q < L; ++q) gates.push_back({GateKind::Rz, q, q, p++});
    for (int q = 0; q < L; ++q) gates.push_back({GateKind::Ry, q, q, p++});
    for (const auto& [i, j] : bonds) gates.push_back({GateKind::Swap, i, j, p++});
  }
  return gates;
}

ComplexVector singlet_product(int sites) {
  const std::size_t dim = std::size_t{1} << sites;
  const double amp = std::pow(0.5, sites / 4.0);
  ComplexVector psi(dim, Complex{});
  for (std::size_t s = 0; s < dim; ++s) {
    double sign = 1.0;
    bool ok = true;
    for (int k = 0; k + 1 < sites; k += 2) {
      const auto lo = (s >> k) & 1U;
      const auto hi = (s >> (k + 1)) & 1U;
      if (lo == hi) {
        ok = false;
        break;
      }
      if (lo == 1U) sign = -sign;
    }
    if (ok) psi[s] = sign * amp;
  }
  return psi;
}

// Applies the gate at angle θ; pass -θ for the inverse.
void apply(const Gate& g, double theta, ComplexVector& psi) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const std::size_t dim = psi.size();
  switch (g.kind) {
    case GateKind::Rz: {
      const std::size_t mask = std::size_t{1} << g.a;
      const Complex up(c, -s), down(c, s);
      for (std::size_t i = 0; i < dim; ++i) psi[i] *= (i & mask) ? down : up;
      break;
    }
    case GateKind::Ry: {
      const std::size_t mask = std::size_t{1} << g.a;
      for (std::size_t i = 0; i < dim; ++i) {
        if (i & mask) continue;
        const Complex x0 = psi[i];
        const Complex x1 = psi[i | mask];
        psi[i] = c * x0 - s * x1;
        psi[i | mask] = s * x0 + c * x1;
      }
      break;
    }
    case GateKind::Swap: {
      const std::size_t ma = std::size_t{1} << g.a;
      const std::size_t mb = std::size_t{1} << g.b;
      const Complex mis(0.0, -s);
      for (std::size_t i = 0; i < dim; ++i) {
        const bool ba = (i & ma) != 0;
        const bool bb = (i & mb) != 0;
        if (ba == bb) {
          psi[i] *= Complex(c, -s);
        } else if (ba) {
          const std::size_t j = (i & ~ma) | mb;
          const Complex x = psi[i];
          const Complex y = psi[j];
          psi[i] = c * x + mis * y;
          psi[j] = c * y + mis * x;
        }
      }
      break;
    }
  }
}

// Re⟨λ, -iGψ⟩ for the gate's Hermitian generator G.
double generator_overlap(const Gate& g, const ComplexVector& lambda, const ComplexVector& psi) {
  const std::size_t dim = psi.size();
  const Complex minus_i(0.0, -1.0);
  double acc = 0.0;
  switch (g.kind) {
    case GateKind::Rz: {
      const std::size_t mask = std::size_t{1} << g.a;
      for (std::size_t i = 0; i < dim; ++i) {
        const double z = (i & mask) ? -1.0 : 1.0;
        acc += (std::conj(lambda[i]) * (minus_i * z * psi[i])).real();
      }
      break;
    }
    case GateKind::Ry: {
      // -iY = [[0, -1], [1, 0]]
      const std::size_t mask = std::size_t{1} << g.a;
      for (std::size_t i = 0; i < dim; ++i) {
        const Complex v = (i & mask) ? psi[i & ~mask] : -psi[i | mask];
        acc += (std::conj(lambda[i]) * v).real();
      }
      break;
    }
    case GateKind::Swap: {
      const std::size_t ma = std::size_t{1} << g.a;
      const std::size_t mb = std::size_t{1} << g.b;
      for (std::size_t i = 0; i < dim; ++i) {
        std::size_t j = i;
        if (((i & ma) != 0) != ((i & mb) != 0)) j = i ^ ma ^ mb;
        acc += (std::conj(lambda[i]) * (minus_i * psi[j])).real();
      }
      break;
    }
  }
  return acc;
}

}  // namespace

ComplexVector forward_vqe(const AnsatzSpec& spec, std::span<const double> theta) {
  check_params(spec, Variant::VQE, theta);
  auto psi = singlet_product(spec.sites());
  for (const auto& g : circuit(spec)) apply(g, theta[g.param], psi);
  return psi;
}

std::vector<double> pullback_vqe(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g) {
  check_params(spec, Variant::VQE, theta);
  auto psi = forward_vqe(spec, theta);
  if (g.size() != psi.size()) throw ValidationError("pullback_vqe: cotangent size mismatch");
  ComplexVector lambda(g.begin(), g.end());
  std::vector<double> grad(theta.size(), 0.0);
  const auto gates = circuit(spec);
  for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
    grad[it->param] = generator_overlap(*it, lambda, psi);
    apply(*it, -theta[it->param], psi);
    apply(*it, -theta[it->param], lambda);
  }
  return grad;
}

}  // namespace efftemp::ansatz
