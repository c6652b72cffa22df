#include "efftemp/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "efftemp/errors.hpp"

namespace efftemp::model {

std::string to_string(LatticeKind kind) { return kind == LatticeKind::Chain ? "chain" : "square"; }

LatticeKind lattice_kind_from_string(const std::string& name) {
  if (name == "chain") return LatticeKind::Chain;
  if (name == "square") return LatticeKind::Square;
  throw ValidationError("unknown lattice kind '" + name + "' (expected chain or square)");
}

Lattice build_lattice(LatticeKind kind, int lx, int ly, bool pbc) {
  Lattice lat;
  lat.kind = kind;
  lat.lx = lx;
  lat.ly = ly;
  lat.pbc = pbc;
  if (lx < 1 || ly < 1 || lx * ly < 2) throw ValidationError("build_lattice: need at least 2 sites");
  if (lx * ly > 30) throw ValidationError("build_lattice: more than 30 sites is not supported");
  lat.sites = lx * ly;

  std::set<std::pair<int, int>> seen;
  auto add = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    if (seen.insert(key).second) lat.bonds.emplace_back(a, b);
  };

  if (kind == LatticeKind::Chain) {
    if (ly != 1) throw ValidationError("build_lattice: chains require Ly = 1");
    if (pbc && lx == 2) {
      throw ValidationError("build_lattice: periodic chain of 2 sites duplicates its only bond");
    }
    for (int i = 0; i + 1 < lx; ++i) add(i, i + 1);
    if (pbc) add(lx - 1, 0);
    return lat;
  }

  if (lx < 2 || ly < 2) throw ValidationError("build_lattice: square lattices require Lx >= 2 and Ly >= 2");
  for (int r = 0; r < ly; ++r) {
    for (int c = 0; c < lx; ++c) {
      if (c + 1 < lx) add(lat.site(r, c), lat.site(r, c + 1));
      else if (pbc) add(lat.site(r, c), lat.site(r, 0));
    }
  }
  for (int r = 0; r < ly; ++r) {
    for (int c = 0; c < lx; ++c) {
      if (r + 1 < ly) add(lat.site(r, c), lat.site(r + 1, c));
      else if (pbc) add(lat.site(r, c), lat.site(0, c));
    }
  }
  return lat;
}

XXZParams XXZParams::uniform(int sites, double jx, double jy, double jz, double hz) {
  return XXZParams{jx, jy, jz, std::vector<double>(static_cast<std::size_t>(sites), hz)};
}

numerics::SparseRealMatrix build_hamiltonian(const Lattice& lattice, const XXZParams& params) {
  const int L = lattice.sites;
  if (static_cast<int>(params.h.size()) != L) {
    throw ValidationError("build_hamiltonian: field has " + std::to_string(params.h.size()) + " entries, lattice has " +
                          std::to_string(L) + " sites");
  }
  for (double v : {params.jx, params.jy, params.jz}) {
    if (!std::isfinite(v)) throw ValidationError("build_hamiltonian: non-finite coupling");
  }
  if (!numerics::all_finite(params.h)) throw ValidationError("build_hamiltonian: non-finite field");

  const std::uint64_t dim = std::uint64_t{1} << L;
  const double same = params.jx - params.jy;  // XX + YY on |00>, |11>
  const double diff = params.jx + params.jy;  // XX + YY on |01>, |10>
  std::vector<numerics::Triplet> triplets;
  triplets.reserve(dim * (lattice.bonds.size() + 1));

  auto z = [](std::uint64_t b, int site) { return ((b >> site) & 1U) ? -1.0 : 1.0; };
  for (std::uint64_t b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (const auto& [i, j] : lattice.bonds) {
      diag += params.jz * z(b, i) * z(b, j);
      const bool equal = ((b >> i) & 1U) == ((b >> j) & 1U);
      const double coeff = equal ? same : diff;
      if (coeff != 0.0) {
        const std::uint64_t flipped = b ^ ((std::uint64_t{1} << i) | (std::uint64_t{1} << j));
        triplets.push_back({flipped, b, coeff});
      }
    }
    for (int i = 0; i < L; ++i) diag += params.h[static_cast<std::size_t>(i)] * z(b, i);
    if (diag != 0.0) triplets.push_back({b, b, diag});
  }
  return numerics::SparseRealMatrix::from_triplets(dim, std::move(triplets));
}

int magnetization_of(std::uint64_t basis_index, int sites) {
  return sites - 2 * std::popcount(basis_index);
}

std::vector<Sector> sz_sectors(int sites) {
  if (sites < 1) throw ValidationError("sz_sectors: L must be >= 1");
  std::vector<Sector> sectors(static_cast<std::size_t>(sites) + 1);
  for (int down = 0; down <= sites; ++down) {
    sectors[static_cast<std::size_t>(sites - down)].magnetization = sites - 2 * down;
  }
  const std::uint64_t dim = std::uint64_t{1} << sites;
  for (std::uint64_t b = 0; b < dim; ++b) {
    // m ascending means #down descending.
    sectors[static_cast<std::size_t>(sites - std::popcount(b))].states.push_back(b);
  }
  return sectors;
}

// ---------------------------------------------------------------------------
// Spectrum

Spectrum::Spectrum(int sites, bool sectored, std::vector<SpectrumBlock> blocks, std::vector<int> labels_for_full_block)
    : sites_(sites), sectored_(sectored), blocks_(std::move(blocks)) {
  struct Entry {
    double energy;
    std::uint32_t block;
    std::uint32_t column;
  };
  std::vector<Entry> entries;
  for (std::uint32_t bi = 0; bi < blocks_.size(); ++bi) {
    const auto& blk = blocks_[bi];
    if (blk.energies.size() != blk.size() || blk.vectors.size() != blk.size() * blk.size()) {
      throw ValidationError("Spectrum: inconsistent block dimensions");
    }
    for (std::uint32_t k = 0; k < blk.size(); ++k) entries.push_back({blk.energies[k], bi, k});
  }
  if (entries.size() != dimension()) {
    throw ValidationError("Spectrum: blocks cover " + std::to_string(entries.size()) + " states, expected " +
                          std::to_string(dimension()));
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.energy < b.energy; });

  const bool full_labels = !labels_for_full_block.empty();
  if (full_labels && (blocks_.size() != 1 || labels_for_full_block.size() != entries.size())) {
    throw ValidationError("Spectrum: explicit labels require a single full block");
  }
  energies_.reserve(entries.size());
  for (const auto& e : entries) {
    energies_.push_back(e.energy);
    block_of_.push_back(e.block);
    column_of_.push_back(e.column);
    labels_.push_back(full_labels ? labels_for_full_block[e.column] : blocks_[e.block].magnetization);
  }
}

ComplexVector Spectrum::eigenvector(std::size_t i) const {
  ComplexVector v(dimension(), Complex{0.0, 0.0});
  const auto& blk = blocks_[block_of_[i]];
  const double* col = &blk.vectors[column_of_[i] * blk.size()];
  for (std::size_t t = 0; t < blk.size(); ++t) v[blk.basis[t]] = col[t];
  return v;
}

ComplexVector Spectrum::project(std::span<const Complex> psi) const {
  if (psi.size() != dimension()) throw ValidationError("Spectrum::project: dimension mismatch");
  // Per-block coefficients first, then scatter to the global order.
  std::vector<ComplexVector> per_block(blocks_.size());
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const auto& blk = blocks_[bi];
    const std::size_t d = blk.size();
    ComplexVector local(d);
    for (std::size_t t = 0; t < d; ++t) local[t] = psi[blk.basis[t]];
    auto& out = per_block[bi];
    out.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double* col = &blk.vectors[k * d];
      double re = 0.0, im = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        re += col[t] * local[t].real();
        im += col[t] * local[t].imag();
      }
      out[k] = {re, im};
    }
  }
  ComplexVector c(size());
  for (std::size_t i = 0; i < size(); ++i) c[i] = per_block[block_of_[i]][column_of_[i]];
  return c;
}

ComplexVector Spectrum::combine(std::span<const Complex> coefficients) const {
  if (coefficients.size() != size()) throw ValidationError("Spectrum::combine: coefficient count mismatch");
  std::vector<ComplexVector> per_block(blocks_.size());
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) per_block[bi].assign(blocks_[bi].size(), Complex{});
  for (std::size_t i = 0; i < size(); ++i) per_block[block_of_[i]][column_of_[i]] = coefficients[i];

  ComplexVector psi(dimension(), Complex{0.0, 0.0});
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const auto& blk = blocks_[bi];
    const std::size_t d = blk.size();
    std::vector<double> re(d, 0.0), im(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      const Complex ck = per_block[bi][k];
      if (ck == Complex{}) continue;
      const double* col = &blk.vectors[k * d];
      for (std::size_t t = 0; t < d; ++t) {
        re[t] += col[t] * ck.real();
        im[t] += col[t] * ck.imag();
      }
    }
    for (std::size_t t = 0; t < d; ++t) psi[blk.basis[t]] = {re[t], im[t]};
  }
  return psi;
}

namespace {

void fix_signs(SpectrumBlock& blk) {
  const std::size_t d = blk.size();
  for (std::size_t k = 0; k < d; ++k) {
    double* col = &blk.vectors[k * d];
    double top = 0.0;
    for (std::size_t t = 0; t < d; ++t) top = std::max(top, std::abs(col[t]));
    // Components tied with the maximum up to round-off count as ties.
    std::size_t arg = 0;
    while (std::abs(col[arg]) < top - 1e-12) ++arg;
    if (col[arg] < 0.0) {
      for (std::size_t t = 0; t < d; ++t) col[t] = -col[t];
    }
  }
}

SpectrumBlock diagonalize_block(const numerics::SparseRealMatrix& h, std::vector<std::uint64_t> basis,
                                int magnetization) {
  const std::size_t d = basis.size();
  std::vector<double> dense(d * d, 0.0);
  // basis is ascending, so positions are found by binary search.
  const auto offsets = h.row_offsets();
  const auto cols = h.col_indices();
  const auto vals = h.values();
  for (std::size_t r = 0; r < d; ++r) {
    const std::uint64_t row = basis[r];
    for (std::size_t k = offsets[row]; k < offsets[row + 1]; ++k) {
      const auto it = std::lower_bound(basis.begin(), basis.end(), static_cast<std::uint64_t>(cols[k]));
      if (it == basis.end() || *it != cols[k]) {
        throw ValidationError("full_spectrum: Hamiltonian couples different Sz sectors");
      }
      dense[r * d + static_cast<std::size_t>(it - basis.begin())] = vals[k];
    }
  }
  auto eig = numerics::sym_eig(numerics::RealSymMatrix(d, std::move(dense)));
  SpectrumBlock blk;
  blk.magnetization = magnetization;
  blk.basis = std::move(basis);
  blk.energies = std::move(eig.values);
  blk.vectors = std::move(eig.vectors);
  fix_signs(blk);
  return blk;
}

std::string sector_dims_summary(int sites) {
  std::ostringstream os;
  for (const auto& s : sz_sectors(sites)) os << (os.tellp() > 0 ? ", " : "") << "m=" << s.magnetization << ":" << s.states.size();
  return os.str();
}

}  // namespace

Spectrum full_spectrum(const numerics::SparseRealMatrix& h, const Lattice& lattice, const XXZParams& params,
                       bool use_sectors, const SpectrumOptions& options) {
  const int L = lattice.sites;
  const std::size_t dim = std::size_t{1} << L;
  if (h.size() != dim) throw ValidationError("full_spectrum: Hamiltonian dimension does not match lattice");
  if (use_sectors && params.jx != params.jy) {
    throw ValidationError("full_spectrum: Sz sectors require Jx == Jy (got Jx=" + std::to_string(params.jx) +
                          ", Jy=" + std::to_string(params.jy) + ")");
  }
  if (dim > options.dimension_cap) {
    throw ValidationError("full_spectrum: Hilbert space dimension 2^" + std::to_string(L) + " = " + std::to_string(dim) +
                          " exceeds the cap " + std::to_string(options.dimension_cap) +
                          "; sector dimensions are {" + sector_dims_summary(L) +
                          "}. Use a smaller lattice or raise the cap.");
  }

  if (!use_sectors) {
    std::vector<std::uint64_t> all(dim);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    SpectrumBlock blk = diagonalize_block(h, std::move(all), kUnlabeled);
    // Label by maximum sector weight; ties go to smaller |m|, then smaller m.
    std::vector<int> labels(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      std::vector<double> weight(static_cast<std::size_t>(L) + 1, 0.0);
      const double* col = &blk.vectors[k * dim];
      for (std::size_t b = 0; b < dim; ++b) weight[static_cast<std::size_t>(std::popcount(b))] += col[b] * col[b];
      int best_m = 0;
      double best_w = -1.0;
      for (int down = 0; down <= L; ++down) {
        const int m = L - 2 * down;
        const double w = weight[static_cast<std::size_t>(down)];
        const bool better = w > best_w || (w == best_w && (std::abs(m) < std::abs(best_m) ||
                                                           (std::abs(m) == std::abs(best_m) && m < best_m)));
        if (better) {
          best_w = w;
          best_m = m;
        }
      }
      labels[k] = best_m;
    }
    std::vector<SpectrumBlock> blocks;
    blocks.push_back(std::move(blk));
    return Spectrum(L, false, std::move(blocks), std::move(labels));
  }

  auto sectors = sz_sectors(L);
  std::vector<SpectrumBlock> blocks(sectors.size());
  if (options.threads <= 1) {
    for (std::size_t s = 0; s < sectors.size(); ++s) {
      blocks[s] = diagonalize_block(h, std::move(sectors[s].states), sectors[s].magnetization);
    }
  } else {
    // Blocks are independent and each solve is deterministic, so completion
    // order does not affect the merged result.
    std::size_t next = 0;
    while (next < sectors.size()) {
      std::vector<std::future<SpectrumBlock>> running;
      const std::size_t batch_end = std::min(sectors.size(), next + static_cast<std::size_t>(options.threads));
      for (std::size_t s = next; s < batch_end; ++s) {
        running.push_back(std::async(std::launch::async, diagonalize_block, std::cref(h), std::move(sectors[s].states),
                                     sectors[s].magnetization));
      }
      for (std::size_t s = next; s < batch_end; ++s) blocks[s] = running[s - next].get();
      next = batch_end;
    }
  }
  return Spectrum(L, true, std::move(blocks));
}

GroundState ground_state(const Spectrum& spectrum, double degeneracy_tol) {
  if (spectrum.size() == 0) throw ValidationError("ground_state: empty spectrum");
  GroundState gs;
  gs.energy = spectrum.energy(0);
  gs.state = spectrum.eigenvector(0);
  gs.gap = spectrum.size() > 1 ? spectrum.energy(1) - spectrum.energy(0) : 0.0;
  gs.quasi_degenerate = spectrum.size() > 1 && gs.gap < degeneracy_tol;
  if (gs.quasi_degenerate) {
    std::ostringstream os;
    os << "ground state is quasi-degenerate (gap " << gs.gap << " < " << degeneracy_tol
       << "); fidelity targets depend on the eigensolver's choice of basis";
    gs.warning = os.str();
  }
  return gs;
}

}  // namespace efftemp::model
