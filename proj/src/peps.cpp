// Doubly periodic PEPS, contracted exactly with the physical legs left open.
//
// Sites are absorbed in row-major order into a state tensor whose first axis
// is the combined physical index of the sites absorbed so far (bit k = site k)
// and whose remaining axes are the bonds still open. Each absorption is one
// dense product; the pullback replays the recorded products in reverse.

#include <algorithm>
#include <array>
#include <string>

#include "ansatz_internal.hpp"
#include "efftemp/errors.hpp"

namespace efftemp::ansatz {
namespace {

using Dims = std::vector<std::size_t>;

constexpr std::size_t kMaxIntermediate = std::size_t{1} << 25;

// out axis i = in axis perm[i].
std::vector<double> permute(const std::vector<double>& in, const Dims& dims, const Dims& perm) {
  const std::size_t rank = dims.size();
  if (rank == 0) return in;
  Dims in_stride(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) in_stride[i - 1] = in_stride[i] * dims[i];
  Dims out_dims(rank), stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_dims[i] = dims[perm[i]];
    stride[i] = in_stride[perm[i]];
  }
  std::vector<double> out(in.size());
  Dims idx(rank, 0);
  std::size_t src = 0;
  for (std::size_t dst = 0; dst < out.size(); ++dst) {
    out[dst] = in[src];
    for (std::size_t ax = rank; ax-- > 0;) {
      if (++idx[ax] < out_dims[ax]) {
        src += stride[ax];
        break;
      }
      src -= stride[ax] * (out_dims[ax] - 1);
      idx[ax] = 0;
    }
  }
  return out;
}

Dims permuted(const Dims& dims, const Dims& perm) {
  Dims out(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = dims[perm[i]];
  return out;
}

Dims inverse(const Dims& perm) {
  Dims inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

struct Step {
  Dims s_dims;  // state before absorption: phys, open bonds...
  Dims s_perm;  // -> phys, rest..., shared...
  std::vector<double> s_mat;
  Dims t_perm;  // site legs (u, d, l, r, p) -> shared..., p, new...
  std::vector<double> t_mat;
  std::size_t rows = 0, inner = 0, cols = 0;
  Dims m_dims;  // product: phys, rest..., p, new...
  Dims m_perm;  // -> p, phys, rest..., new...
};

struct Contraction {
  std::vector<Step> steps;
  std::vector<double> amplitudes;
};

// Bond labels: horizontal h(r,c) joins (r,c).right with (r,c+1).left;
// vertical v(r,c) joins (r,c).down with (r+1,c).up, both periodic.
std::array<int, 4> leg_labels(const model::Lattice& lat, int site) {
  const int r = site / lat.lx;
  const int c = site % lat.lx;
  const int L = lat.sites;
  auto h = [&](int rr, int cc) { return rr * lat.lx + cc; };
  auto v = [&](int rr, int cc) { return L + rr * lat.lx + cc; };
  return {v((r - 1 + lat.ly) % lat.ly, c), v(r, c), h(r, (c - 1 + lat.lx) % lat.lx), h(r, c)};
}

Contraction contract(const AnsatzSpec& spec, std::span<const double> theta, bool record) {
  const auto& lat = spec.lattice;
  const auto chi = static_cast<std::size_t>(spec.bond_dim);
  const std::size_t site_size = chi * chi * chi * chi * 2;
  const Dims site_dims{chi, chi, chi, chi, 2};

  Contraction out;
  std::vector<double> state{1.0};
  std::vector<int> open;  // labels of state axes 1..
  std::size_t phys = 1;

  for (int k = 0; k < lat.sites; ++k) {
    const auto labels = leg_labels(lat, k);
    Dims shared_legs, new_legs;
    Dims shared_pos;  // positions in `open`
    for (std::size_t leg = 0; leg < 4; ++leg) {
      const auto it = std::find(open.begin(), open.end(), labels[leg]);
      if (it != open.end()) {
        shared_legs.push_back(leg);
        shared_pos.push_back(static_cast<std::size_t>(it - open.begin()));
      } else {
        new_legs.push_back(leg);
      }
    }
    Dims rest_pos;
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (std::find(shared_pos.begin(), shared_pos.end(), i) == shared_pos.end()) rest_pos.push_back(i);
    }

    Step st;
    st.s_dims.push_back(phys);
    for (std::size_t i = 0; i < open.size(); ++i) st.s_dims.push_back(chi);
    st.s_perm.push_back(0);
    for (auto p : rest_pos) st.s_perm.push_back(p + 1);
    for (auto p : shared_pos) st.s_perm.push_back(p + 1);
    for (auto l : shared_legs) st.t_perm.push_back(l);
    st.t_perm.push_back(4);
    for (auto l : new_legs) st.t_perm.push_back(l);

    std::size_t rest_size = 1;
    for (std::size_t i = 0; i < rest_pos.size(); ++i) rest_size *= chi;
    st.inner = 1;
    for (std::size_t i = 0; i < shared_legs.size(); ++i) st.inner *= chi;
    st.rows = phys * rest_size;
    st.cols = 2;
    for (std::size_t i = 0; i < new_legs.size(); ++i) st.cols *= chi;
    if (st.rows * st.cols > kMaxIntermediate) {
      throw ValidationError("peps: exact contraction intermediate of " + std::to_string(st.rows * st.cols) +
                            " entries exceeds the budget; reduce the bond dimension or lattice size");
    }

    st.s_mat = permute(state, st.s_dims, st.s_perm);
    const std::vector<double> site(theta.begin() + static_cast<std::ptrdiff_t>(k * site_size),
                                   theta.begin() + static_cast<std::ptrdiff_t>((k + 1) * site_size));
    st.t_mat = permute(site, site_dims, st.t_perm);

    std::vector<double> m(st.rows * st.cols, 0.0);
    detail::gemm_nn(st.rows, st.cols, st.inner, st.s_mat.data(), st.t_mat.data(), m.data());

    st.m_dims.push_back(phys);
    for (std::size_t i = 0; i < rest_pos.size(); ++i) st.m_dims.push_back(chi);
    st.m_dims.push_back(2);
    for (std::size_t i = 0; i < new_legs.size(); ++i) st.m_dims.push_back(chi);
    const std::size_t p_axis = 1 + rest_pos.size();
    st.m_perm.push_back(p_axis);
    for (std::size_t i = 0; i < st.m_dims.size(); ++i)
      if (i != p_axis) st.m_perm.push_back(i);
    state = permute(m, st.m_dims, st.m_perm);

    std::vector<int> next_open;
    for (auto p : rest_pos) next_open.push_back(open[p]);
    for (auto l : new_legs) next_open.push_back(labels[l]);
    open = std::move(next_open);
    phys *= 2;
    if (record) out.steps.push_back(std::move(st));
  }
  if (!open.empty()) throw NumericalError("peps: contraction left open bonds");
  out.amplitudes = std::move(state);
  return out;
}

}  // namespace

ComplexVector forward_peps(const AnsatzSpec& spec, std::span<const double> theta) {
  check_params(spec, Variant::PEPS, theta);
  const auto c = contract(spec, theta, false);
  ComplexVector psi(c.amplitudes.size());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = {c.amplitudes[i], 0.0};
  return psi;
}

std::vector<double> pullback_peps(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g) {
  check_params(spec, Variant::PEPS, theta);
  const auto c = contract(spec, theta, true);
  if (g.size() != c.amplitudes.size()) throw ValidationError("pullback_peps: cotangent size mismatch");

  const auto chi = static_cast<std::size_t>(spec.bond_dim);
  const std::size_t site_size = chi * chi * chi * chi * 2;
  std::vector<double> grad(theta.size(), 0.0);

  std::vector<double> state_bar(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) state_bar[i] = g[i].real();

  for (std::size_t k = c.steps.size(); k-- > 0;) {
    const Step& st = c.steps[k];
    const auto m_bar = permute(state_bar, permuted(st.m_dims, st.m_perm), inverse(st.m_perm));

    std::vector<double> t_bar(st.inner * st.cols, 0.0);
    detail::gemm_tn(st.inner, st.cols, st.rows, st.s_mat.data(), m_bar.data(), t_bar.data());
    const Dims site_dims{chi, chi, chi, chi, 2};
    const auto site_bar = permute(t_bar, permuted(site_dims, st.t_perm), inverse(st.t_perm));
    for (std::size_t e = 0; e < site_size; ++e) grad[k * site_size + e] += site_bar[e];

    if (k > 0) {
      std::vector<double> s_bar(st.rows * st.inner, 0.0);
      detail::gemm_nt(st.rows, st.inner, st.cols, m_bar.data(), st.t_mat.data(), s_bar.data());
      state_bar = permute(s_bar, permuted(st.s_dims, st.s_perm), inverse(st.s_perm));
    }
  }
  return grad;
}

}  // namespace efftemp::ansatz
