#include "efftemp/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "efftemp/errors.hpp"

namespace efftemp::spectral {

Decomposition decompose_coefficients(std::span<const Complex> coefficients, const model::Spectrum& spectrum,
                                     const DecomposeOptions& options) {
  if (coefficients.size() != spectrum.size()) throw ValidationError("decompose: coefficient count mismatch");
  double total = 0.0;
  for (const auto& c : coefficients) total += std::norm(c);
  if (!(total > 0.0)) throw ValidationError("decompose: zero state");
  if (!std::isfinite(total)) throw NumericalError("decompose: non-finite coefficients");

  Decomposition d;
  d.source_norm = std::sqrt(total);
  d.sector_filter = options.sector_filter;
  d.renormalized_within_sector = options.sector_filter.has_value() && options.renormalize_within_sector;
  double kept = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    const int sector = spectrum.label(i);
    if (options.sector_filter && sector != *options.sector_filter) continue;
    Entry e;
    e.energy = spectrum.energy(i);
    e.weight = std::norm(coefficients[i]) / total;
    e.sector = sector;
    e.index = i;
    kept += e.weight;
    d.entries.push_back(e);
  }
  if (d.renormalized_within_sector) {
    if (!(kept > 0.0)) throw ValidationError("decompose: state has no weight in the selected sector");
    for (auto& e : d.entries) e.weight /= kept;
  }
  return d;
}

Decomposition decompose(std::span<const Complex> psi, const model::Spectrum& spectrum,
                        const DecomposeOptions& options) {
  if (psi.size() != spectrum.dimension()) throw ValidationError("decompose: dimension mismatch");
  const auto c = spectrum.project(psi);
  return decompose_coefficients(c, spectrum, options);
}

Decomposition decompose(const objectives::TargetState& target, const model::Spectrum& spectrum,
                        const DecomposeOptions& options) {
  return decompose_coefficients(target.coefficients, spectrum, options);
}

Decomposition aggregate_degenerate(const Decomposition& decomp, double rel_tol) {
  Decomposition out = decomp;
  out.entries.clear();
  out.aggregated = true;
  const auto& in = decomp.entries;
  if (in.empty()) return out;
  const double width = in.back().energy - in.front().energy;
  const double tol = rel_tol * width;

  std::size_t start = 0;
  while (start < in.size()) {
    std::size_t end = start + 1;
    while (end < in.size() && std::abs(in[end].energy - in[start].energy) <= tol) ++end;
    Entry merged = in[start];
    merged.multiplicity = 0;
    merged.weight = 0.0;
    double weighted_energy = 0.0;
    double plain_energy = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      merged.multiplicity += in[k].multiplicity;
      merged.weight += in[k].weight;
      weighted_energy += in[k].weight * in[k].energy;
      plain_energy += in[k].energy;
      if (in[k].sector != in[start].sector) merged.sector = model::kUnlabeled;
    }
    merged.energy = merged.weight > 0.0 ? weighted_energy / merged.weight
                                        : plain_energy / static_cast<double>(end - start);
    out.entries.push_back(merged);
    start = end;
  }
  return out;
}

FitResult fit_efftemp(const Decomposition& decomp, const FitOptions& options) {
  const Decomposition grouped =
      options.aggregate && !decomp.aggregated ? aggregate_degenerate(decomp, options.degeneracy_rel_tol) : decomp;

  // Group membership back to spectrum indices, for the scatter export.
  std::vector<std::vector<std::size_t>> members(grouped.entries.size());
  if (&grouped != &decomp && options.aggregate && !decomp.aggregated) {
    std::size_t g = 0;
    std::size_t seen = 0;
    for (const auto& e : decomp.entries) {
      while (seen == grouped.entries[g].multiplicity) {
        ++g;
        seen = 0;
      }
      members[g].push_back(e.index);
      seen += e.multiplicity;
    }
  } else {
    for (std::size_t g = 0; g < grouped.entries.size(); ++g) members[g].push_back(grouped.entries[g].index);
  }

  std::vector<double> x, y;
  FitResult r;
  const std::size_t first = options.exclude_ground ? 1 : 0;
  for (std::size_t g = first; g < grouped.entries.size(); ++g) {
    const auto& e = grouped.entries[g];
    const double per_state = e.weight / static_cast<double>(e.multiplicity);
    if (!(per_state > 0.0) || !(per_state > options.weight_floor)) continue;
    x.push_back(e.energy);
    y.push_back(std::log(per_state));
    r.used_indices.insert(r.used_indices.end(), members[g].begin(), members[g].end());
  }
  if (x.size() < 3) {
    throw ValidationError("fit_efftemp: need at least 3 usable points, have " + std::to_string(x.size()));
  }
  std::sort(r.used_indices.begin(), r.used_indices.end());

  const auto line = numerics::ols_line(x, y);
  r.beta_tilde = -line.slope;
  r.lambda = std::exp(line.intercept);
  r.delta_beta_tilde = line.slope_stderr;
  r.r_squared = line.r_squared;
  r.points_used = x.size();

  // Log-weights that agree to rounding are a perfect constant fit.
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*lo))) {
    r.r_squared = 1.0;
    r.delta_beta_tilde = 0.0;
  }
  return r;
}

MseResult mse_vs_target(const Decomposition& decomp, const Decomposition& target) {
  if (decomp.entries.size() != target.entries.size()) {
    throw ValidationError("mse_vs_target: decompositions have different entry sets");
  }
  if (decomp.entries.empty()) throw ValidationError("mse_vs_target: empty decomposition");
  MseResult out;
  double acc = 0.0;
  for (std::size_t i = 0; i < decomp.entries.size(); ++i) {
    const auto& a = decomp.entries[i];
    const auto& b = target.entries[i];
    if (a.index != b.index || a.multiplicity != b.multiplicity) {
      throw ValidationError("mse_vs_target: decompositions have different entry sets");
    }
    double wa = a.weight;
    double wb = b.weight;
    if (wa < kMseWeightFloor) {
      wa = kMseWeightFloor;
      ++out.clamped;
    }
    if (wb < kMseWeightFloor) {
      wb = kMseWeightFloor;
      ++out.clamped;
    }
    const double d = std::log(wa) - std::log(wb);
    acc += d * d;
  }
  out.value = acc / static_cast<double>(decomp.entries.size());
  return out;
}

std::optional<double> detect_beta_star(std::span<const double> betas,
                                       std::span<const std::optional<double>> beta_tildes, double rel_dev) {
  if (betas.size() != beta_tildes.size()) throw ValidationError("detect_beta_star: grid and fits differ in length");
  for (std::size_t i = 1; i < betas.size(); ++i) {
    if (!(betas[i] > betas[i - 1])) throw ValidationError("detect_beta_star: grid must be strictly increasing");
  }
  std::optional<double> star;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!beta_tildes[i]) continue;
    const double b = betas[i];
    const bool deviates = b > 0.0 && std::abs(*beta_tildes[i] - b) / b > rel_dev;
    if (!deviates) {
      star.reset();
    } else if (!star) {
      star = b;
    }
  }
  return star;
}

double entanglement_entropy(std::span<const Complex> psi, int left_sites) {
  std::size_t dim = psi.size();
  int sites = 0;
  while ((std::size_t{1} << sites) < dim) ++sites;
  if ((std::size_t{1} << sites) != dim) throw ValidationError("entanglement_entropy: length is not a power of two");
  if (left_sites < 1 || left_sites >= sites) {
    throw ValidationError("entanglement_entropy: cut must leave both blocks nonempty");
  }
  const double n = objectives::norm_squared(psi);
  if (!(n > 0.0)) throw ValidationError("entanglement_entropy: zero state");

  const std::size_t da = std::size_t{1} << left_sites;
  const std::size_t db = dim / da;
  // Jacobi works on columns, so put the larger block on the rows.
  const bool left_rows = da >= db;
  numerics::ComplexMatrix m(left_rows ? da : db, left_rows ? db : da);
  for (std::size_t b = 0; b < db; ++b) {
    for (std::size_t a = 0; a < da; ++a) {
      const Complex v = psi[a + da * b];
      if (left_rows) {
        m(a, b) = v;
      } else {
        m(b, a) = v;
      }
    }
  }
  const auto s = numerics::singular_values(m);
  double total = 0.0;
  for (double v : s) total += v * v;
  double entropy = 0.0;
  for (double v : s) {
    const double p = v * v / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy;
}

}  // namespace efftemp::spectral
