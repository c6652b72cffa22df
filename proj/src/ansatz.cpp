#include "efftemp/ansatz.hpp"

#include "efftemp/errors.hpp"
#include "efftemp/rng.hpp"

namespace efftemp::ansatz {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::MPS: return "mps";
    case Variant::PEPS: return "peps";
    case Variant::NQS: return "nqs";
    case Variant::VQE: return "vqe";
    case Variant::VEC: return "vec";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  if (name == "mps") return Variant::MPS;
  if (name == "peps") return Variant::PEPS;
  if (name == "nqs") return Variant::NQS;
  if (name == "vqe") return Variant::VQE;
  if (name == "vec") return Variant::VEC;
  throw ValidationError("unknown ansatz variant '" + name + "' (expected mps, peps, nqs, vqe or vec)");
}

void validate(const AnsatzSpec& spec) {
  const int L = spec.sites();
  if (L < 2 || L > 20) throw ValidationError("ansatz: L must be in [2, 20], got " + std::to_string(L));
  switch (spec.variant) {
    case Variant::MPS:
      if (spec.bond_dim < 1) throw ValidationError("mps: bond dimension must be >= 1");
      break;
    case Variant::PEPS:
      if (spec.bond_dim < 1) throw ValidationError("peps: bond dimension must be >= 1");
      if (spec.lattice.kind != model::LatticeKind::Square) throw ValidationError("peps: requires a square lattice");
      break;
    case Variant::NQS:
      if (spec.width < 1) throw ValidationError("nqs: width must be >= 1");
      if (spec.depth < 0) throw ValidationError("nqs: depth must be >= 0");
      break;
    case Variant::VQE:
      if (spec.depth < 1) throw ValidationError("vqe: depth must be >= 1");
      if (L % 2 != 0) throw ValidationError("vqe: singlet initialization requires an even number of sites");
      break;
    case Variant::VEC:
      break;
  }
}

std::size_t ParamSlice::size() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<std::pair<int, int>> vqe_bonds(const model::Lattice& lattice) {
  std::vector<std::pair<int, int>> bonds;
  if (lattice.kind == model::LatticeKind::Chain) {
    const int L = lattice.sites;
    for (int i = 0; i + 1 < L; ++i) bonds.emplace_back(i, i + 1);
    if (lattice.pbc && L >= 3) bonds.emplace_back(L - 1, 0);
    return bonds;
  }
  // Rows then columns, never across the periodic boundary.
  for (int r = 0; r < lattice.ly; ++r)
    for (int c = 0; c + 1 < lattice.lx; ++c) bonds.emplace_back(lattice.site(r, c), lattice.site(r, c + 1));
  for (int r = 0; r + 1 < lattice.ly; ++r)
    for (int c = 0; c < lattice.lx; ++c) bonds.emplace_back(lattice.site(r, c), lattice.site(r + 1, c));
  return bonds;
}

ParamLayout param_layout(const AnsatzSpec& spec) {
  validate(spec);
  ParamLayout layout;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    ParamSlice s{std::move(name), layout.total, std::move(shape)};
    layout.total += s.size();
    layout.slices.push_back(std::move(s));
  };
  const auto L = static_cast<std::size_t>(spec.sites());
  const auto chi = static_cast<std::size_t>(spec.bond_dim);
  switch (spec.variant) {
    case Variant::MPS:
      for (std::size_t j = 0; j < L; ++j) add("A" + std::to_string(j), {chi, chi, 2});
      break;
    case Variant::PEPS:
      for (std::size_t j = 0; j < L; ++j) add("T" + std::to_string(j), {chi, chi, chi, chi, 2});
      break;
    case Variant::NQS: {
      const auto W = static_cast<std::size_t>(spec.width);
      for (const char* head : {"amp", "phase"}) {
        const std::string h(head);
        for (int k = 0; k < spec.depth; ++k) {
          const std::string b = h + ".block" + std::to_string(k);
          add(b + ".W1", {W, L});
          add(b + ".b1", {W});
          add(b + ".W2", {L, W});
          add(b + ".b2", {L});
        }
        add(h + ".out_w", {1});
        add(h + ".out_b", {1});
      }
      break;
    }
    case Variant::VQE: {
      const auto nb = vqe_bonds(spec.lattice).size();
      for (int k = 0; k < spec.depth; ++k) {
        const std::string b = "block" + std::to_string(k);
        add(b + ".rz", {L});
        add(b + ".ry", {L});
        if (nb > 0) add(b + ".swap", {nb});
      }
      break;
    }
    case Variant::VEC:
      add("psi", {std::size_t{1} << L, 2});
      break;
  }
  return layout;
}

std::size_t param_count(const AnsatzSpec& spec) { return param_layout(spec).total; }

ParamVector init_params(const AnsatzSpec& spec, std::uint64_t seed) {
  const std::size_t n = param_count(spec);
  const CounterRng rng(seed, "ansatz-params");
  ParamVector theta(n);
  for (std::size_t k = 0; k < n; ++k) theta[k] = 0.1 * rng.normal(k);
  return theta;
}

namespace {

void check_theta(const AnsatzSpec& spec, std::span<const double> theta) {
  validate(spec);
  const std::size_t expected = param_count(spec);
  if (theta.size() != expected) {
    throw ValidationError(to_string(spec.variant) + ": expected " + std::to_string(expected) + " parameters, got " +
                          std::to_string(theta.size()));
  }
}

}  // namespace

ComplexVector forward_vec(const AnsatzSpec& spec, std::span<const double> theta) {
  if (spec.variant != Variant::VEC) throw ValidationError("forward_vec: spec is not VEC");
  check_theta(spec, theta);
  ComplexVector psi(theta.size() / 2);
  for (std::size_t b = 0; b < psi.size(); ++b) psi[b] = {theta[2 * b], theta[2 * b + 1]};
  return psi;
}

std::vector<double> pullback_vec(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g) {
  check_theta(spec, theta);
  if (g.size() * 2 != theta.size()) throw ValidationError("pullback_vec: cotangent size mismatch");
  std::vector<double> grad(theta.size());
  for (std::size_t b = 0; b < g.size(); ++b) {
    grad[2 * b] = g[b].real();
    grad[2 * b + 1] = g[b].imag();
  }
  return grad;
}

ComplexVector forward(const AnsatzSpec& spec, std::span<const double> theta) {
  switch (spec.variant) {
    case Variant::MPS: return forward_mps(spec, theta);
    case Variant::PEPS: return forward_peps(spec, theta);
    case Variant::NQS: return forward_nqs(spec, theta);
    case Variant::VQE: return forward_vqe(spec, theta);
    case Variant::VEC: return forward_vec(spec, theta);
  }
  throw ValidationError("forward: unknown variant");
}

std::vector<double> pullback(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g) {
  switch (spec.variant) {
    case Variant::MPS: return pullback_mps(spec, theta, g);
    case Variant::PEPS: return pullback_peps(spec, theta, g);
    case Variant::NQS: return pullback_nqs(spec, theta, g);
    case Variant::VQE: return pullback_vqe(spec, theta, g);
    case Variant::VEC: return pullback_vec(spec, theta, g);
  }
  throw ValidationError("pullback: unknown variant");
}

// Shared by the per-variant translation units.
void check_params(const AnsatzSpec& spec, Variant expected, std::span<const double> theta) {
  if (spec.variant != expected) {
    throw ValidationError("ansatz: expected a " + to_string(expected) + " spec, got " + to_string(spec.variant));
  }
  check_theta(spec, theta);
}

}  // namespace efftemp::ansatz
