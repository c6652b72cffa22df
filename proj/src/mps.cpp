// Periodic MPS: ψ(s) = Tr(A_0[s_0] A_1[s_1] ... A_{L-1}[s_{L-1}]).
//
// All 2^L amplitudes are evaluated by splitting the chain into a left block
// (sites 0..m-1) and a right block (sites m..L-1). Products of every prefix and
// every suffix are built as binary tries, and the amplitudes come from one
// dense product  ψ[a + 2^m b] = Σ_{αβ} P_a[α,β] R_b[β,α].

#include <algorithm>
#include <array>

#include "ansatz_internal.hpp"
#include "efftemp/errors.hpp"

namespace efftemp::ansatz {
namespace {

using detail::gemm_nn;
using detail::gemm_nt;
using detail::gemm_tn;

struct MpsTries {
  std::size_t chi = 0;
  int sites = 0;
  int left_sites = 0;
  int right_sites = 0;
  // mats[j][p] is the χ×χ matrix A_j[p], row-major.
  std::vector<std::array<std::vector<double>, 2>> mats;
  // left[k] holds 2^k matrices: products over sites 0..k-1.
  std::vector<std::vector<double>> left;
  // right[k] holds 2^k matrices: products over sites L-k..L-1.
  std::vector<std::vector<double>> right;
};

MpsTries build_tries(const AnsatzSpec& spec, std::span<const double> theta) {
  MpsTries t;
  t.chi = static_cast<std::size_t>(spec.bond_dim);
  t.sites = spec.sites();
  t.left_sites = t.sites / 2;
  t.right_sites = t.sites - t.left_sites;
  const std::size_t chi = t.chi;
  const std::size_t cc = chi * chi;

  t.mats.resize(static_cast<std::size_t>(t.sites));
  for (std::size_t j = 0; j < t.mats.size(); ++j) {
    const double* site = theta.data() + j * cc * 2;
    for (int p = 0; p < 2; ++p) {
      auto& m = t.mats[j][static_cast<std::size_t>(p)];
      m.resize(cc);
      for (std::size_t e = 0; e < cc; ++e) m[e] = site[e * 2 + static_cast<std::size_t>(p)];
    }
  }

  std::vector<double> identity(cc, 0.0);
  for (std::size_t a = 0; a < chi; ++a) identity[a * chi + a] = 1.0;

  t.left.assign(static_cast<std::size_t>(t.left_sites) + 1, {});
  t.left[0] = identity;
  for (int k = 0; k < t.left_sites; ++k) {
    const std::size_t count = std::size_t{1} << k;
    auto& next = t.left[static_cast<std::size_t>(k) + 1];
    next.assign(2 * count * cc, 0.0);
    for (std::size_t q = 0; q < count; ++q) {
      for (std::size_t p = 0; p < 2; ++p) {
        gemm_nn(chi, chi, chi, &t.left[static_cast<std::size_t>(k)][q * cc], t.mats[static_cast<std::size_t>(k)][p].data(),
                &next[(q + count * p) * cc]);
      }
    }
  }

  t.right.assign(static_cast<std::size_t>(t.right_sites) + 1, {});
  t.right[0] = identity;
  for (int k = 0; k < t.right_sites; ++k) {
    const std::size_t count = std::size_t{1} << k;
    const auto site = static_cast<std::size_t>(t.sites - k - 1);
    auto& next = t.right[static_cast<std::size_t>(k) + 1];
    next.assign(2 * count * cc, 0.0);
    for (std::size_t r = 0; r < count; ++r) {
      for (std::size_t p = 0; p < 2; ++p) {
        gemm_nn(chi, chi, chi, t.mats[site][p].data(), &t.right[static_cast<std::size_t>(k)][r * cc],
                &next[(p + 2 * r) * cc]);
      }
    }
  }
  return t;
}

// Transposes each χ×χ matrix of a stacked array.
std::vector<double> transpose_each(const std::vector<double>& stacked, std::size_t chi) {
  const std::size_t cc = chi * chi;
  std::vector<double> out(stacked.size());
  for (std::size_t m = 0; m < stacked.size() / cc; ++m)
    for (std::size_t a = 0; a < chi; ++a)
      for (std::size_t b = 0; b < chi; ++b) out[m * cc + a * chi + b] = stacked[m * cc + b * chi + a];
  return out;
}

}  // namespace

ComplexVector forward_mps(const AnsatzSpec& spec, std::span<const double> theta) {
  check_params(spec, Variant::MPS, theta);
  const auto t = build_tries(spec, theta);
  const std::size_t cc = t.chi * t.chi;
  const std::size_t na = std::size_t{1} << t.left_sites;
  const std::size_t nb = std::size_t{1} << t.right_sites;
  const auto& p = t.left.back();
  const auto rt = transpose_each(t.right.back(), t.chi);

  // C[b][a] = Σ_x RT[b][x] P[a][x]
  std::vector<double> c(nb * na, 0.0);
  gemm_nt(nb, na, cc, rt.data(), p.data(), c.data());
  ComplexVector psi(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) psi[i] = {c[i], 0.0};
  return psi;
}

std::vector<double> pullback_mps(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g) {
  check_params(spec, Variant::MPS, theta);
  const auto t = build_tries(spec, theta);
  const std::size_t chi = t.chi;
  const std::size_t cc = chi * chi;
  const std::size_t na = std::size_t{1} << t.left_sites;
  const std::size_t nb = std::size_t{1} << t.right_sites;
  if (g.size() != na * nb) throw ValidationError("pullback_mps: cotangent size mismatch");

  // ψ is real, so only Re g contributes.
  std::vector<double> gr(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) gr[i] = g[i].real();

  const auto& p_top = t.left.back();
  const auto rt_top = transpose_each(t.right.back(), chi);

  // P̄ = Gᵀ · RT  (na × cc),  R̄T = G · P  (nb × cc)
  std::vector<double> p_bar(na * cc, 0.0);
  gemm_tn(na, cc, nb, gr.data(), rt_top.data(), p_bar.data());
  std::vector<double> rt_bar(nb * cc, 0.0);
  gemm_nn(nb, cc, na, gr.data(), p_top.data(), rt_bar.data());
  std::vector<double> r_bar = transpose_each(rt_bar, chi);

  std::vector<std::array<std::vector<double>, 2>> a_bar(static_cast<std::size_t>(t.sites));
  for (auto& site : a_bar)
    for (auto& m : site) m.assign(cc, 0.0);

  // Left trie: P^{k+1}[q + 2^k p] = P^k[q] · A_k[p]
  for (int k = t.left_sites - 1; k >= 0; --k) {
    const std::size_t count = std::size_t{1} << k;
    const auto ku = static_cast<std::size_t>(k);
    std::vector<double> below(count * cc, 0.0);
    for (std::size_t q = 0; q < count; ++q) {
      for (std::size_t ph = 0; ph < 2; ++ph) {
        const double* child_bar = &p_bar[(q + count * ph) * cc];
        gemm_tn(chi, chi, chi, &t.left[ku][q * cc], child_bar, a_bar[ku][ph].data());
        if (k > 0) gemm_nt(chi, chi, chi, child_bar, t.mats[ku][ph].data(), &below[q * cc]);
      }
    }
    p_bar = std::move(below);
  }

  // Right trie: R^{k+1}[p + 2r] = A_s[p] · R^k[r], s = L-k-1
  for (int k = t.right_sites - 1; k >= 0; --k) {
    const std::size_t count = std::size_t{1} << k;
    const auto ku = static_cast<std::size_t>(k);
    const auto site = static_cast<std::size_t>(t.sites - k - 1);
    std::vector<double> below(count * cc, 0.0);
    for (std::size_t r = 0; r < count; ++r) {
      for (std::size_t ph = 0; ph < 2; ++ph) {
        const double* child_bar = &r_bar[(ph + 2 * r) * cc];
        gemm_nt(chi, chi, chi, child_bar, &t.right[ku][r * cc], a_bar[site][ph].data());
        if (k > 0) gemm_tn(chi, chi, chi, t.mats[site][ph].data(), child_bar, &below[r * cc]);
      }
    }
    r_bar = std::move(below);
  }

  std::vector<double> grad(theta.size());
  for (std::size_t j = 0; j < a_bar.size(); ++j)
    for (std::size_t e = 0; e < cc; ++e)
      for (std::size_t ph = 0; ph < 2; ++ph) grad[j * cc * 2 + e * 2 + ph] = a_bar[j][ph][e];
  return grad;
}

}  // namespace efftemp::ansatz
