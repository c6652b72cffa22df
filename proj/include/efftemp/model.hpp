#pragma once

// Lattices, the XXZ Hamiltonian and its exact spectrum.
//
// Basis convention (bit-exact, shared by every persisted artifact): a basis
// index b in [0, 2^L) stores site j (0-based) in bit j, least significant bit
// first. Bit value 0 is spin up with Z|up> = +|up>. Square lattices number
// sites row-major, site = row * Lx + col.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "efftemp/numerics.hpp"

namespace efftemp::model {

inline constexpr std::uint32_t kBitConventionTag = 0x4C534230;  // "LSB0"

enum class LatticeKind { Chain, Square };

std::string to_string(LatticeKind kind);
LatticeKind lattice_kind_from_string(const std::string& name);

struct Lattice {
  LatticeKind kind = LatticeKind::Chain;
  int lx = 0;
  int ly = 1;
  bool pbc = true;
  int sites = 0;
  // Unordered nearest-neighbour pairs (site, neighbour), 0-based, in canonical
  // order: row bonds in site order, then column bonds.
  std::vector<std::pair<int, int>> bonds;

  int site(int row, int col) const { return row * lx + col; }
};

Lattice build_lattice(LatticeKind kind, int lx, int ly, bool pbc);

struct XXZParams {
  double jx = 1.0;
  double jy = 1.0;
  double jz = 1.0;
  std::vector<double> h;  // per-site Z field, length L

  static XXZParams uniform(int sites, double jx, double jy, double jz, double hz);
};

// H = Σ_<ij> (Jx XX + Jy YY + Jz ZZ) + Σ_i h_i Z_i in the computational basis.
numerics::SparseRealMatrix build_hamiltonian(const Lattice& lattice, const XXZParams& params);

struct Sector {
  int magnetization = 0;  // m = (#up - #down), i.e. twice the total Sz
  std::vector<std::uint64_t> states;  // ascending basis indices
};

// Sectors ordered by ascending magnetization, from -L to +L.
std::vector<Sector> sz_sectors(int sites);
int magnetization_of(std::uint64_t basis_index, int sites);

inline constexpr int kUnlabeled = -9999;

// One dense diagonalization block. `vectors` is column-major over `basis`.
struct SpectrumBlock {
  int magnetization = kUnlabeled;
  std::vector<std::uint64_t> basis;
  std::vector<double> energies;
  std::vector<double> vectors;

  std::size_t size() const { return basis.size(); }
};

/// Full exact spectrum. Eigenvectors are real and are stored per diagonalized
/// block; `eigenvector(i)` embeds one into the full 2^L space. Each eigenvector
/// carries a fixed sign: its largest-magnitude component (the first one within
/// 1e-12 of the maximum) is positive.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(int sites, bool sectored, std::vector<SpectrumBlock> blocks, std::vector<int> labels_for_full_block = {});

  int sites() const { return sites_; }
  std::size_t dimension() const { return std::size_t{1} << sites_; }
  std::size_t size() const { return energies_.size(); }
  bool sectored() const { return sectored_; }

  std::span<const double> energies() const { return energies_; }
  double energy(std::size_t i) const { return energies_[i]; }
  std::span<const int> labels() const { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }
  std::size_t ground_index() const { return 0; }
  const std::vector<SpectrumBlock>& blocks() const { return blocks_; }

  ComplexVector eigenvector(std::size_t i) const;
  // c_i = <e_i|psi> for every eigenpair, in ascending-energy order.
  ComplexVector project(std::span<const Complex> psi) const;
  // Σ_i c_i |e_i>.
  ComplexVector combine(std::span<const Complex> coefficients) const;

 private:
  int sites_ = 0;
  bool sectored_ = false;
  std::vector<SpectrumBlock> blocks_;
  std::vector<double> energies_;
  std::vector<int> labels_;
  std::vector<std::uint32_t> block_of_;
  std::vector<std::uint32_t> column_of_;
};

struct SpectrumOptions {
  std::size_t dimension_cap = std::size_t{1} << 13;
  int threads = 1;
};

Spectrum full_spectrum(const numerics::SparseRealMatrix& h, const Lattice& lattice, const XXZParams& params,
                       bool use_sectors, const SpectrumOptions& options = {});

struct GroundState {
  double energy = 0.0;
  ComplexVector state;
  double gap = 0.0;
  bool quasi_degenerate = false;
  std::string warning;
};

GroundState ground_state(const Spectrum& spectrum, double degeneracy_tol = 1e-8);

}  // namespace efftemp::model
