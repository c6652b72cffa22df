#pragma once

// Parameterized wavefunction families. Every forward maps a flat real
// parameter vector to the full 2^L amplitude vector in the basis convention of
// model.hpp. Only VQE outputs are normalized.
//
// Parameter layouts (version kLayoutVersion), all row-major:
//   MPS  site-major; site j is a (χ, χ, 2) tensor indexed (left, right, phys).
//   PEPS site-major; site j is a (χ, χ, χ, χ, 2) tensor indexed
//        (up, down, left, right, phys).
//   NQS  amplitude head then phase head. Each head: for every ResBlock
//        W1 (W×L), b1 (W), W2 (L×W), b2 (L); then out_w, out_b.
//   VQE  block-major; each block is Rz angles (L), Ry angles (L), then one
//        SWAP angle per entangling bond in gate order.
//   VEC  interleaved (re, im) per basis index.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "efftemp/model.hpp"
#include "efftemp/numerics.hpp"

namespace efftemp::ansatz {

inline constexpr int kLayoutVersion = 1;

enum class Variant { MPS, PEPS, NQS, VQE, VEC };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct AnsatzSpec {
  Variant variant = Variant::VEC;
  model::Lattice lattice;
  int bond_dim = 1;  // χ for MPS and PEPS
  int width = 1;     // NQS hidden width W
  int depth = 1;     // NQS ResBlock count D, or VQE block count d

  int sites() const { return lattice.sites; }
};

// Throws ValidationError when the hyperparameters or geometry are invalid.
void validate(const AnsatzSpec& spec);

using ParamVector = std::vector<double>;

struct ParamSlice {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> shape;

  std::size_t size() const;
};

struct ParamLayout {
  int version = kLayoutVersion;
  std::vector<ParamSlice> slices;
  std::size_t total = 0;
};

ParamLayout param_layout(const AnsatzSpec& spec);
std::size_t param_count(const AnsatzSpec& spec);

// i.i.d. N(0, 0.1²) entries from the counter-based generator.
ParamVector init_params(const AnsatzSpec& spec, std::uint64_t seed);

// Entangling bonds of one VQE block, in application order.
std::vector<std::pair<int, int>> vqe_bonds(const model::Lattice& lattice);

ComplexVector forward_mps(const AnsatzSpec& spec, std::span<const double> theta);
ComplexVector forward_peps(const AnsatzSpec& spec, std::span<const double> theta);
ComplexVector forward_nqs(const AnsatzSpec& spec, std::span<const double> theta);
ComplexVector forward_vqe(const AnsatzSpec& spec, std::span<const double> theta);
ComplexVector forward_vec(const AnsatzSpec& spec, std::span<const double> theta);
ComplexVector forward(const AnsatzSpec& spec, std::span<const double> theta);

// Vector-Jacobian products. Given the cotangent g = ∂L/∂Re ψ + i ∂L/∂Im ψ of a
// real scalar L, return dL/dθ_k = Re Σ_b conj(g_b) ∂ψ_b/∂θ_k.
std::vector<double> pullback_mps(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g);
std::vector<double> pullback_peps(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g);
std::vector<double> pullback_nqs(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g);
std::vector<double> pullback_vqe(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g);
std::vector<double> pullback_vec(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g);
std::vector<double> pullback(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g);

}  // namespace efftemp::ansatz
