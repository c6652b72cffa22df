// Residual neural quantum state: ψ(s) = exp(a(s) + i φ(s)), with a and φ
// produced by two independent heads of identical shape.

#include <array>
#include <cmath>

#include "ansatz_internal.hpp"
#include "efftemp/errors.hpp"

namespace efftemp::ansatz {
namespace {

struct HeadView {
  std::size_t offset = 0;  // start of the head in θ
  std::size_t sites = 0;
  std::size_t width = 0;
  int depth = 0;

  std::size_t block_size() const { return 2 * width * sites + width + sites; }
  std::size_t w1(int k) const { return offset + static_cast<std::size_t>(k) * block_size(); }
  std::size_t b1(int k) const { return w1(k) + width * sites; }
  std::size_t w2(int k) const { return b1(k) + width; }
  std::size_t b2(int k) const { return w2(k) + sites * width; }
  std::size_t out_w() const { return offset + static_cast<std::size_t>(depth) * block_size(); }
  std::size_t out_b() const { return out_w() + 1; }
  std::size_t size() const { return out_b() + 1 - offset; }
};

std::array<HeadView, 2> heads(const AnsatzSpec& spec) {
  HeadView amp{0, static_cast<std::size_t>(spec.sites()), static_cast<std::size_t>(spec.width), spec.depth};
  HeadView phase = amp;
  phase.offset = amp.size();
  return {amp, phase};
}

// Activations of one head for one configuration.
struct Tape {
  std::vector<std::vector<double>> x;  // block inputs, plus the final residual stream
  std::vector<std::vector<double>> a;  // tanh outputs per block
  double mean = 0.0;
  double out = 0.0;
};

void spins(std::size_t basis, std::size_t sites, std::vector<double>& s) {
  s.resize(sites);
  for (std::size_t j = 0; j < sites; ++j) s[j] = ((basis >> j) & 1U) ? -1.0 : 1.0;
}

void run_head(const HeadView& h, std::span<const double> theta, const std::vector<double>& s, Tape& t) {
  const std::size_t L = h.sites;
  const std::size_t W = h.width;
  t.x.assign(static_cast<std::size_t>(h.depth) + 1, {});
  t.a.assign(static_cast<std::size_t>(h.depth), {});
  t.x[0] = s;
  for (int k = 0; k < h.depth; ++k) {
    const auto& xin = t.x[static_cast<std::size_t>(k)];
    auto& a = t.a[static_cast<std::size_t>(k)];
    a.assign(W, 0.0);
    const double* w1 = theta.data() + h.w1(k);
    const double* b1 = theta.data() + h.b1(k);
    for (std::size_t i = 0; i < W; ++i) {
      double z = b1[i];
      for (std::size_t j = 0; j < L; ++j) z += w1[i * L + j] * xin[j];
      a[i] = std::tanh(z);
    }
    auto& xout = t.x[static_cast<std::size_t>(k) + 1];
    xout = xin;
    const double* w2 = theta.data() + h.w2(k);
    const double* b2 = theta.data() + h.b2(k);
    for (std::size_t j = 0; j < L; ++j) {
      double v = b2[j];
      for (std::size_t i = 0; i < W; ++i) v += w2[j * W + i] * a[i];
      xout[j] += v;
    }
  }
  double sum = 0.0;
  for (double v : t.x.back()) sum += v;
  t.mean = sum / static_cast<double>(L);
  t.out = theta[h.out_w()] * t.mean + theta[h.out_b()];
}

void backprop_head(const HeadView& h, std::span<const double> theta, const Tape& t, double bar_out,
                   std::vector<double>& grad) {
  const std::size_t L = h.sites;
  const std::size_t W = h.width;
  grad[h.out_w()] += bar_out * t.mean;
  grad[h.out_b()] += bar_out;
  std::vector<double> bar_x(L, bar_out * theta[h.out_w()] / static_cast<double>(L));
  std::vector<double> bar_z(W);
  for (int k = h.depth - 1; k >= 0; --k) {
    const auto& xin = t.x[static_cast<std::size_t>(k)];
    const auto& a = t.a[static_cast<std::size_t>(k)];
    const double* w1 = theta.data() + h.w1(k);
    const double* w2 = theta.data() + h.w2(k);
    double* g_w1 = grad.data() + h.w1(k);
    double* g_b1 = grad.data() + h.b1(k);
    double* g_w2 = grad.data() + h.w2(k);
    double* g_b2 = grad.data() + h.b2(k);
    for (std::size_t j = 0; j < L; ++j) {
      g_b2[j] += bar_x[j];
      for (std::size_t i = 0; i < W; ++i) g_w2[j * W + i] += bar_x[j] * a[i];
    }
    for (std::size_t i = 0; i < W; ++i) {
      double bar_a = 0.0;
      for (std::size_t j = 0; j < L; ++j) bar_a += w2[j * W + i] * bar_x[j];
      bar_z[i] = bar_a * (1.0 - a[i] * a[i]);
      g_b1[i] += bar_z[i];
      for (std::size_t j = 0; j < L; ++j) g_w1[i * L + j] += bar_z[i] * xin[j];
    }
    // Residual path keeps bar_x; add the branch contribution.
    for (std::size_t j = 0; j < L; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < W; ++i) v += w1[i * L + j] * bar_z[i];
      bar_x[j] += v;
    }
  }
}

}  // namespace

ComplexVector forward_nqs(const AnsatzSpec& spec, std::span<const double> theta) {
  check_params(spec, Variant::NQS, theta);
  const auto hs = heads(spec);
  const std::size_t L = static_cast<std::size_t>(spec.sites());
  const std::size_t dim = std::size_t{1} << L;
  ComplexVector psi(dim);
  std::vector<double> s;
  Tape ta, tp;
  for (std::size_t b = 0; b < dim; ++b) {
    spins(b, L, s);
    run_head(hs[0], theta, s, ta);
    run_head(hs[1], theta, s, tp);
    psi[b] = std::exp(ta.out) * Complex(std::cos(tp.out), std::sin(tp.out));
  }
  return psi;
}

std::vector<double> pullback_nqs(const AnsatzSpec& spec, std::span<const double> theta, std::span<const Complex> g) {
  check_params(spec, Variant::NQS, theta);
  const auto hs = heads(spec);
  const std::size_t L = static_cast<std::size_t>(spec.sites());
  const std::size_t dim = std::size_t{1} << L;
  if (g.size() != dim) throw ValidationError("pullback_nqs: cotangent size mismatch");
  std::vector<double> grad(theta.size(), 0.0);
  std::vector<double> s;
  Tape ta, tp;
  for (std::size_t b = 0; b < dim; ++b) {
    spins(b, L, s);
    run_head(hs[0], theta, s, ta);
    run_head(hs[1], theta, s, tp);
    const Complex psi = std::exp(ta.out) * Complex(std::cos(tp.out), std::sin(tp.out));
    const Complex w = std::conj(g[b]) * psi;
    backprop_head(hs[0], theta, ta, w.real(), grad);
    backprop_head(hs[1], theta, tp, -w.imag(), grad);
  }
  return grad;
}

}  // namespace efftemp::ansatz
