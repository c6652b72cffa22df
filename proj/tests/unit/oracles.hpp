#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "efftemp/numerics.hpp"

namespace oracle {

using efftemp::Complex;
using efftemp::ComplexVector;

// Dense row-major complex matrix.
struct Dense {
  std::size_t n = 0;
  std::vector<Complex> a;

  explicit Dense(std::size_t size = 0) : n(size), a(size * size) {}
  Complex& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  Complex operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

inline Dense identity(std::size_t n) {
  Dense d(n);
  for (std::size_t i = 0; i < n; ++i) d(i, i) = 1.0;
  return d;
}

inline Dense kron(const Dense& x, const Dense& y) {
  Dense out(x.n * y.n);
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t j = 0; j < x.n; ++j)
      for (std::size_t k = 0; k < y.n; ++k)
        for (std::size_t l = 0; l < y.n; ++l) out(i * y.n + k, j * y.n + l) = x(i, j) * y(k, l);
  return out;
}

inline Dense add(const Dense& x, const Dense& y, Complex scale = 1.0) {
  Dense out = x;
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += scale * y.a[i];
  return out;
}

inline Dense matmul(const Dense& x, const Dense& y) {
  Dense out(x.n);
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t k = 0; k < x.n; ++k) {
      const Complex v = x(i, k);
      if (v == Complex{}) continue;
      for (std::size_t j = 0; j < x.n; ++j) out(i, j) += v * y(k, j);
    }
  return out;
}

inline ComplexVector apply(const Dense& m, const ComplexVector& v) {
  ComplexVector out(m.n);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < m.n; ++j) out[i] += m(i, j) * v[j];
  return out;
}

inline Dense pauli(char which) {
  Dense p(2);
  switch (which) {
    case 'X': p(0, 1) = 1.0; p(1, 0) = 1.0; break;
    case 'Y': p(0, 1) = Complex(0, -1); p(1, 0) = Complex(0, 1); break;
    case 'Z': p(0, 0) = 1.0; p(1, 1) = -1.0; break;
    default: p = identity(2);
  }
  return p;
}

// Single-site operators embedded with a Kronecker product. Site j is bit j, so
// site L-1 is the leftmost (most significant) factor.
inline Dense embed(int sites, const std::vector<std::pair<int, char>>& ops) {
  Dense out = identity(1);
  for (int site = sites - 1; site >= 0; --site) {
    char which = 'I';
    for (const auto& [s, c] : ops)
      if (s == site) which = c;
    out = kron(out, pauli(which));
  }
  return out;
}

inline Dense xxz_dense(int sites, const std::vector<std::pair<int, int>>& bonds, double jx, double jy, double jz,
                       const std::vector<double>& h) {
  const std::size_t dim = std::size_t{1} << sites;
  Dense H(dim);
  for (const auto& [i, j] : bonds) {
    H = add(H, embed(sites, {{i, 'X'}, {j, 'X'}}), jx);
    H = add(H, embed(sites, {{i, 'Y'}, {j, 'Y'}}), jy);
    H = add(H, embed(sites, {{i, 'Z'}, {j, 'Z'}}), jz);
  }
  for (int i = 0; i < sites; ++i) H = add(H, embed(sites, {{i, 'Z'}}), h[static_cast<std::size_t>(i)]);
  return H;
}

inline ComplexVector random_state(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  ComplexVector v(dim);
  for (auto& z : v) z = Complex(n(gen), n(gen));
  return v;
}

inline std::vector<double> random_vector(std::size_t size, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(size);
  for (auto& x : v) x = n(gen);
  return v;
}

inline double fidelity(const ComplexVector& a, const ComplexVector& b) {
  Complex o{};
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    o += std::conj(a[i]) * b[i];
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  return std::norm(o) / (na * nb);
}

// Plain OLS for cross-checking fits.
struct Line {
  double slope, intercept, r2;
};

inline Line ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
  }
  const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
  const double slope = cxy / cxx;
  return {slope, (sy - slope * sx) / n, cxy * cxy / (cxx * cyy)};
}

}  // namespace oracle
