#include <gtest/gtest.h>

#include <numeric>

#include "efftemp/ansatz.hpp"
#include "efftemp/errors.hpp"
#include "oracles.hpp"

using namespace efftemp;
using namespace efftemp::ansatz;
using model::LatticeKind;

namespace {

AnsatzSpec make(Variant v, LatticeKind kind, int lx, int ly, int chi = 1, int width = 1, int depth = 1) {
  AnsatzSpec s;
  s.variant = v;
  s.lattice = model::build_lattice(kind, lx, ly, true);
  s.bond_dim = chi;
  s.width = width;
  s.depth = depth;
  return s;
}

// Tr(Π_j A_j[s_j]) by explicit matrix products.
Complex mps_oracle(const AnsatzSpec& spec, std::span<const double> th, std::size_t basis) {
  const std::size_t chi = static_cast<std::size_t>(spec.bond_dim);
  const int L = spec.sites();
  std::vector<double> m(chi * chi, 0.0), tmp(chi * chi);
  for (std::size_t i = 0; i < chi; ++i) m[i * chi + i] = 1.0;
  for (int j = 0; j < L; ++j) {
    const std::size_t p = (basis >> j) & 1U;
    const double* a = th.data() + static_cast<std::size_t>(j) * chi * chi * 2;
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (std::size_t x = 0; x < chi; ++x)
      for (std::size_t y = 0; y < chi; ++y)
        for (std::size_t z = 0; z < chi; ++z) tmp[x * chi + z] += m[x * chi + y] * a[(y * chi + z) * 2 + p];
    m = tmp;
  }
  double tr = 0.0;
  for (std::size_t i = 0; i < chi; ++i) tr += m[i * chi + i];
  return tr;
}

// Sum over every assignment of the periodic bond indices.
Complex peps_oracle(const AnsatzSpec& spec, std::span<const double> th, std::size_t basis) {
  const int lx = spec.lattice.lx, ly = spec.lattice.ly, L = spec.sites();
  const std::size_t chi = static_cast<std::size_t>(spec.bond_dim);
  const std::size_t nb = 2 * static_cast<std::size_t>(L);
  std::size_t total = 1;
  for (std::size_t k = 0; k < nb; ++k) total *= chi;
  std::vector<std::size_t> idx(nb);
  double sum = 0.0;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t k = 0; k < nb; ++k) {
      idx[k] = c % chi;
      c /= chi;
    }
    auto hb = [&](int r, int col) { return idx[static_cast<std::size_t>(r * lx + col)]; };
    auto vb = [&](int r, int col) { return idx[static_cast<std::size_t>(L + r * lx + col)]; };
    double prod = 1.0;
    for (int r = 0; r < ly && prod != 0.0; ++r)
      for (int col = 0; col < lx; ++col) {
        const int site = r * lx + col;
        const std::size_t up = vb((r + ly - 1) % ly, col), down = vb(r, col);
        const std::size_t left = hb(r, (col + lx - 1) % lx), right = hb(r, col);
        const std::size_t p = (basis >> site) & 1U;
        const std::size_t off = static_cast<std::size_t>(site) * chi * chi * chi * chi * 2;
        prod *= th[off + ((((up * chi + down) * chi + left) * chi + right) * 2 + p)];
      }
    sum += prod;
  }
  return sum;
}

oracle::Dense single_qubit(int sites, int q, const oracle::Dense& u) {
  oracle::Dense out = oracle::identity(1);
  for (int s = sites - 1; s >= 0; --s) out = oracle::kron(out, s == q ? u : oracle::identity(2));
  return out;
}

oracle::Dense swap_gate(int sites, int a, int b, double th) {
  const std::size_t dim = std::size_t{1} << sites;
  oracle::Dense sw(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const std::size_t ba = (i >> a) & 1U, bb = (i >> b) & 1U;
    std::size_t j = i & ~((std::size_t{1} << a) | (std::size_t{1} << b));
    j |= (bb << a) | (ba << b);
    sw(j, i) = 1.0;
  }
  oracle::Dense id = oracle::identity(dim);
  for (auto& z : id.a) z *= std::cos(th);
  return oracle::add(id, sw, Complex(0, -std::sin(th)));
}

}  // namespace

TEST(ParamCount, MatchesClosedForms) {
  auto mps = make(Variant::MPS, LatticeKind::Square, 4, 3, 32);
  EXPECT_EQ(param_count(mps), 24576U);
  auto peps = make(Variant::PEPS, LatticeKind::Square, 4, 3, 2);
  EXPECT_EQ(param_count(peps), 2U * 12 * 16);
  auto vec = make(Variant::VEC, LatticeKind::Chain, 8, 1);
  EXPECT_EQ(param_count(vec), 512U);
  auto nqs = make(Variant::NQS, LatticeKind::Chain, 10, 1, 1, 40, 2);
  EXPECT_EQ(param_count(nqs), 2U * (2 * (2 * 40 * 10 + 40 + 10) + 2));
  auto vqe = make(Variant::VQE, LatticeKind::Chain, 6, 1, 1, 1, 3);
  EXPECT_EQ(param_count(vqe), 3U * (2 * 6 + 6));
  auto vqe2 = make(Variant::VQE, LatticeKind::Square, 4, 3, 1, 1, 2);
  EXPECT_EQ(vqe_bonds(vqe2.lattice).size(), 3U * 3 + 2 * 4);
  EXPECT_EQ(param_count(vqe2), 2U * (24 + 17));
  const auto layout = param_layout(nqs);
  EXPECT_EQ(layout.total, param_count(nqs));
  EXPECT_EQ(layout.version, kLayoutVersion);
}

TEST(Validate, RejectsBadSpecs) {
  EXPECT_THROW(validate(make(Variant::MPS, LatticeKind::Chain, 4, 1, 0)), ValidationError);
  EXPECT_THROW(validate(make(Variant::PEPS, LatticeKind::Chain, 4, 1, 2)), ValidationError);
  EXPECT_THROW(validate(make(Variant::VQE, LatticeKind::Chain, 5, 1, 1, 1, 1)), ValidationError);
  EXPECT_THROW(variant_from_string("rbm"), ValidationError);
  auto spec = make(Variant::MPS, LatticeKind::Chain, 4, 1, 2);
  EXPECT_THROW(forward(spec, std::vector<double>(3)), ValidationError);
}

TEST(Init, DeterministicAndScaled) {
  auto spec = make(Variant::VEC, LatticeKind::Chain, 10, 1);
  const auto a = init_params(spec, 42), b = init_params(spec, 42), c = init_params(spec, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  double mean = 0.0, var = 0.0;
  for (double x : a) mean += x / static_cast<double>(a.size());
  for (double x : a) var += (x - mean) * (x - mean) / static_cast<double>(a.size());
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(var), 0.1, 0.01);
}

TEST(Mps, MatchesTraceOracle) {
  auto spec = make(Variant::MPS, LatticeKind::Chain, 5, 1, 3);
  const auto th = oracle::random_vector(param_count(spec), 3, 0.5);
  const auto psi = forward(spec, th);
  for (std::size_t b = 0; b < psi.size(); ++b) EXPECT_NEAR(std::abs(psi[b] - mps_oracle(spec, th, b)), 0.0, 1e-13);
}

TEST(Mps, CyclicShiftOfTensorsShiftsBitstrings) {
  auto spec = make(Variant::MPS, LatticeKind::Chain, 5, 1, 2);
  const auto th = oracle::random_vector(param_count(spec), 8, 0.7);
  const std::size_t block = 2 * 2 * 2;
  std::vector<double> shifted(th.size());
  // New site j holds old site j+1.
  for (std::size_t j = 0; j < 5; ++j)
    std::copy_n(th.begin() + static_cast<long>(((j + 1) % 5) * block), block, shifted.begin() + static_cast<long>(j * block));
  const auto psi = forward(spec, th), psi2 = forward(spec, shifted);
  for (std::size_t s = 0; s < 32; ++s) {
    // Site j of the new string carries old site j+1's bit.
    const std::size_t rot = ((s >> 1) | ((s & 1U) << 4)) & 31U;
    EXPECT_NEAR(std::abs(psi2[rot] - psi[s]), 0.0, 1e-13);
  }
}

TEST(Mps, ExactRepresentationOfRandomTarget) {
  // L=6, χ=8: sites 0..2 write their bits into the bond, site 3 applies the
  // target matrix C[a][b], sites 4..5 check the remaining bits of b.
  auto spec = make(Variant::MPS, LatticeKind::Chain, 6, 1, 8);
  const auto target = oracle::random_vector(64, 21);
  const std::size_t chi = 8;
  std::vector<double> th(param_count(spec), 0.0);
  auto at = [&](std::size_t site, std::size_t l, std::size_t r, std::size_t p) -> double& {
    return th[site * chi * chi * 2 + (l * chi + r) * 2 + p];
  };
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t l = 0; l < (std::size_t{1} << j); ++l)
      for (std::size_t p = 0; p < 2; ++p) at(j, l, l + (p << j), p) = 1.0;
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t p = 0; p < 2; ++p) at(3, a, m, p) = target[a + 8 * (p + 2 * m)];
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t p = 0; p < 2; ++p)
      if ((m & 1U) == p) at(4, m, m >> 1, p) = 1.0;
  for (std::size_t m = 0; m < 2; ++m) at(5, m, 0, m) = 1.0;
  const auto psi = forward(spec, th);
  oracle::ComplexVector t(target.begin(), target.end());
  EXPECT_LT(1.0 - oracle::fidelity(psi, t), 1e-10);
}

TEST(Peps, MatchesBondSumOracle) {
  for (auto [lx, ly] : {std::pair{2, 2}, std::pair{3, 2}}) {
    auto spec = make(Variant::PEPS, LatticeKind::Square, lx, ly, 2);
    const auto th = oracle::random_vector(param_count(spec), 5 + static_cast<std::uint64_t>(lx), 0.6);
    const auto psi = forward(spec, th);
    for (std::size_t b = 0; b < psi.size(); ++b) {
      const Complex o = peps_oracle(spec, th, b);
      EXPECT_NEAR(std::abs(psi[b] - o), 0.0, 1e-12 * std::max(1.0, std::abs(o)));
      EXPECT_EQ(psi[b].imag(), 0.0);
    }
  }
}

TEST(Nqs, DepthZeroClosedForm) {
  auto spec = make(Variant::NQS, LatticeKind::Chain, 4, 1, 1, 3, 0);
  ASSERT_EQ(param_count(spec), 4U);
  const std::vector<double> th{0.3, -0.2, 1.1, 0.4};
  const auto psi = forward(spec, th);
  for (std::size_t b = 0; b < 16; ++b) {
    double mean = 0.0;
    for (int j = 0; j < 4; ++j) mean += ((b >> j) & 1U) ? -0.25 : 0.25;
    const Complex expect = std::exp(Complex(0.3 * mean - 0.2, 1.1 * mean + 0.4));
    EXPECT_NEAR(std::abs(psi[b] - expect), 0.0, 1e-14);
  }
}

TEST(Nqs, OneBlockMatchesDirectEvaluation) {
  auto spec = make(Variant::NQS, LatticeKind::Chain, 4, 1, 1, 3, 1);
  const auto th = oracle::random_vector(param_count(spec), 13, 0.5);
  const auto psi = forward(spec, th);
  const std::size_t L = 4, W = 3, head = 2 * W * L + W + L + 2;
  auto run = [&](std::size_t off, const std::vector<double>& s) {
    const double* w1 = &th[off];
    const double* b1 = w1 + W * L;
    const double* w2 = b1 + W;
    const double* b2 = w2 + L * W;
    std::vector<double> x = s;
    for (std::size_t j = 0; j < L; ++j) {
      double v = b2[j];
      for (std::size_t i = 0; i < W; ++i) {
        double z = b1[i];
        for (std::size_t k = 0; k < L; ++k) z += w1[i * L + k] * s[k];
        v += w2[j * W + i] * std::tanh(z);
      }
      x[j] += v;
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(L);
    return th[off + head - 2] * mean + th[off + head - 1];
  };
  for (std::size_t b = 0; b < 16; ++b) {
    std::vector<double> s(L);
    for (std::size_t j = 0; j < L; ++j) s[j] = ((b >> j) & 1U) ? -1.0 : 1.0;
    const Complex expect = std::exp(Complex(run(0, s), run(head, s)));
    EXPECT_NEAR(std::abs(psi[b] - expect), 0.0, 1e-13 * std::abs(expect));
  }
}

TEST(Vqe, ZeroAnglesGiveSingletProduct) {
  auto spec = make(Variant::VQE, LatticeKind::Chain, 6, 1, 1, 1, 2);
  const auto psi = forward(spec, std::vector<double>(param_count(spec), 0.0));
  double total = 0.0, sz0 = 0.0;
  for (std::size_t b = 0; b < psi.size(); ++b) {
    total += std::norm(psi[b]);
    if (model::magnetization_of(b, 6) == 0) sz0 += std::norm(psi[b]);
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_NEAR(sz0, 1.0, 1e-14);
  // (|01> - |10>)/√2 on each pair: bit pattern 0b10 (site 0 up, site 1 down) is +.
  EXPECT_NEAR(psi[0b101010].real(), std::pow(0.5, 1.5), 1e-14);
  EXPECT_NEAR(psi[0b101001].real(), -std::pow(0.5, 1.5), 1e-14);
}

TEST(Vqe, MatchesDenseGateOracle) {
  auto spec = make(Variant::VQE, LatticeKind::Chain, 4, 1, 1, 1, 2);
  const auto th = oracle::random_vector(param_count(spec), 17, 0.8);
  const auto bonds = vqe_bonds(spec.lattice);
  ASSERT_EQ(bonds.size(), 4U);
  auto psi = forward(spec, std::vector<double>(th.size(), 0.0));
  std::size_t p = 0;
  for (int k = 0; k < 2; ++k) {
    for (int q = 0; q < 4; ++q) {
      oracle::Dense rz(2);
      rz(0, 0) = std::exp(Complex(0, -th[p]));
      rz(1, 1) = std::exp(Complex(0, th[p]));
      psi = oracle::apply(single_qubit(4, q, rz), psi);
      ++p;
    }
    for (int q = 0; q < 4; ++q) {
      oracle::Dense ry(2);
      ry(0, 0) = std::cos(th[p]);
      ry(0, 1) = -std::sin(th[p]);
      ry(1, 0) = std::sin(th[p]);
      ry(1, 1) = std::cos(th[p]);
      psi = oracle::apply(single_qubit(4, q, ry), psi);
      ++p;
    }
    for (const auto& [a, b] : bonds) {
      psi = oracle::apply(swap_gate(4, a, b, th[p]), psi);
      ++p;
    }
  }
  const auto got = forward(spec, th);
  double norm = 0.0;
  for (std::size_t b = 0; b < 16; ++b) {
    EXPECT_NEAR(std::abs(got[b] - psi[b]), 0.0, 1e-13);
    norm += std::norm(got[b]);
  }
  EXPECT_NEAR(norm, 1.0, 1e-13);
}

TEST(Vec, InterleavedAmplitudes) {
  auto spec = make(Variant::VEC, LatticeKind::Chain, 3, 1);
  std::vector<double> th(16);
  std::iota(th.begin(), th.end(), 0.0);
  const auto psi = forward(spec, th);
  for (std::size_t b = 0; b < 8; ++b) EXPECT_EQ(psi[b], Complex(2.0 * b, 2.0 * b + 1));
}
