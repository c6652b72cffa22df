#include "efftemp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "efftemp/errors.hpp"

namespace efftemp::numerics {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(std::span<const Complex> values) {
  return std::all_of(values.begin(), values.end(), [](const Complex& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

// ---------------------------------------------------------------------------
// RealSymMatrix

RealSymMatrix::RealSymMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), data_(std::move(entries)) {
  if (data_.size() != n * n) {
    throw ValidationError("RealSymMatrix: expected " + std::to_string(n * n) + " entries, got " +
                          std::to_string(data_.size()));
  }
  if (!all_finite(data_)) throw ValidationError("RealSymMatrix: non-finite entry");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (data_[i * n + j] + data_[j * n + i]);
      data_[i * n + j] = avg;
      data_[j * n + i] = avg;
    }
  }
}

RealSymMatrix RealSymMatrix::zeros(std::size_t n) { return RealSymMatrix(n, std::vector<double>(n * n, 0.0)); }

RealSymMatrix RealSymMatrix::identity(std::size_t n) {
  auto m = zeros(n);
  for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
  return m;
}

void RealSymMatrix::set(std::size_t i, std::size_t j, double value) {
  if (!std::isfinite(value)) throw ValidationError("RealSymMatrix::set: non-finite value");
  data_[i * n_ + j] = value;
  data_[j * n_ + i] = value;
}

double RealSymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// SparseRealMatrix

SparseRealMatrix SparseRealMatrix::from_triplets(std::size_t n, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= n || t.col >= n) throw ValidationError("SparseRealMatrix: index out of range");
    if (!std::isfinite(t.value)) throw ValidationError("SparseRealMatrix: non-finite value");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseRealMatrix s;
  s.n_ = n;
  s.row_offsets_.assign(n + 1, 0);
  std::size_t i = 0;
  while (i < triplets.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row && triplets[j].col == triplets[i].col) {
      sum += triplets[j].value;
      ++j;
    }
    if (sum != 0.0) {
      s.col_indices_.push_back(triplets[i].col);
      s.values_.push_back(sum);
      ++s.row_offsets_[triplets[i].row + 1];
    }
    i = j;
  }
  std::partial_sum(s.row_offsets_.begin(), s.row_offsets_.end(), s.row_offsets_.begin());

  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = s.row_offsets_[r]; k < s.row_offsets_[r + 1]; ++k) {
      const std::size_t c = s.col_indices_[k];
      const auto begin = s.col_indices_.begin() + static_cast<std::ptrdiff_t>(s.row_offsets_[c]);
      const auto end = s.col_indices_.begin() + static_cast<std::ptrdiff_t>(s.row_offsets_[c + 1]);
      if (!std::binary_search(begin, end, r)) {
        throw ValidationError("SparseRealMatrix: structure is not symmetric");
      }
    }
  }
  return s;
}

double SparseRealMatrix::at(std::size_t row, std::size_t col) const {
  const auto begin = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
  const auto end = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

std::vector<double> SparseRealMatrix::to_dense() const {
  std::vector<double> dense(n_ * n_, 0.0);
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      dense[r * n_ + col_indices_[k]] = values_[k];
    }
  }
  return dense;
}

double SparseRealMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double SparseRealMatrix::trace() const {
  double t = 0.0;
  for (std::size_t r = 0; r < n_; ++r) t += at(r, r);
  return t;
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver

namespace {

constexpr int kMaxQlIterations = 50;

// Householder reduction to tridiagonal form. On exit `v` (row-major) holds the
// accumulated orthogonal transformation, d the diagonal and e the subdiagonal
// in e[1..n-1].
void tridiagonalize(std::size_t n, std::vector<double>& v, std::vector<double>& d, std::vector<double>& e) {
  auto V = [&](std::size_t i, std::size_t j) -> double& { return v[i * n + j]; };
  for (std::size_t j = 0; j < n; ++j) d[j] = V(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
        V(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        V(j, i) = f;
        g = e[j] + V(j, j) * f;
        for (std::size_t k = j + 1; k + 1 <= i; ++k) {
          g += V(k, j) * d[k];
          e[k] += V(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k + 1 <= i; ++k) V(k, j) -= (f * e[k] + g * d[k]);
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    V(n - 1, i) = V(i, i);
    V(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = V(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += V(k, i + 1) * V(k, j);
        for (std::size_t k = 0; k <= i; ++k) V(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) V(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = V(n - 1, j);
    V(n - 1, j) = 0.0;
  }
  V(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL on the tridiagonal (d, e). `w` is row-major with row k
// holding the k-th column of the transformation, so rotations touch two
// contiguous rows.
void ql_implicit(std::size_t n, std::vector<double>& w, std::vector<double>& d, std::vector<double>& e) {
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxQlIterations) {
          throw NumericalError("sym_eig: QL iteration did not converge for eigenvalue " + std::to_string(l));
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          double* wi = &w[ii * n];
          double* wi1 = &w[(ii + 1) * n];
          for (std::size_t k = 0; k < n; ++k) {
            const double t = wi1[k];
            wi1[k] = s * wi[k] + c * t;
            wi[k] = c * wi[k] - s * t;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace

EigenSystem sym_eig(const RealSymMatrix& a) {
  const std::size_t n = a.size();
  if (n == 0) throw ValidationError("sym_eig: empty matrix");
  if (!all_finite(a.entries())) throw ValidationError("sym_eig: non-finite input");

  std::vector<double> v(a.entries().begin(), a.entries().end());
  std::vector<double> d(n), e(n);
  tridiagonalize(n, v, d, e);

  std::vector<double> w(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w[j * n + i] = v[i * n + j];
  ql_implicit(n, w, d, e);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });

  EigenSystem out;
  out.n = n;
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = d[order[k]];
    std::copy_n(&w[order[k] * n], n, &out.vectors[k * n]);
  }
  if (!all_finite(out.values) || !all_finite(out.vectors)) {
    throw NumericalError("sym_eig: non-finite output");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sparse products

void spmv(const SparseRealMatrix& s, std::span<const Complex> x, std::span<Complex> out) {
  if (x.size() != s.size() || out.size() != s.size()) {
    throw ValidationError("spmv: dimension mismatch (matrix " + std::to_string(s.size()) + ", vector " +
                          std::to_string(x.size()) + ")");
  }
  const auto offsets = s.row_offsets();
  const auto cols = s.col_indices();
  const auto vals = s.values();
  for (std::size_t r = 0; r < s.size(); ++r) {
    Complex acc{0.0, 0.0};
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) acc += vals[k] * x[cols[k]];
    out[r] = acc;
  }
}

ComplexVector spmv(const SparseRealMatrix& s, std::span<const Complex> x) {
  ComplexVector out(s.size());
  spmv(s, x, out);
  return out;
}

// ---------------------------------------------------------------------------
// Singular values

std::vector<double> singular_values(const ComplexMatrix& m) {
  if (m.rows == 0 || m.cols == 0) throw ValidationError("singular_values: empty matrix");
  if (!all_finite(m.data)) throw ValidationError("singular_values: non-finite input");

  // Work on columns of whichever orientation has fewer of them. Columns are
  // stored contiguously.
  const bool transpose = m.cols > m.rows;
  const std::size_t len = transpose ? m.cols : m.rows;
  const std::size_t ncol = transpose ? m.rows : m.cols;
  std::vector<Complex> a(len * ncol);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (transpose) a[i * len + j] = std::conj(m(i, j));
      else a[j * len + i] = m(i, j);
    }
  }

  constexpr int kMaxSweeps = 100;
  const double tol = 1e-15;
  bool rotated = true;
  int sweep = 0;
  while (rotated) {
    if (++sweep > kMaxSweeps) throw NumericalError("singular_values: Jacobi sweeps did not converge");
    rotated = false;
    for (std::size_t p = 0; p + 1 < ncol; ++p) {
      for (std::size_t q = p + 1; q < ncol; ++q) {
        Complex* ap = &a[p * len];
        Complex* aq = &a[q * len];
        double alpha = 0.0, beta = 0.0;
        Complex gamma{0.0, 0.0};
        for (std::size_t k = 0; k < len; ++k) {
          alpha += std::norm(ap[k]);
          beta += std::norm(aq[k]);
          gamma += std::conj(ap[k]) * aq[k];
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Complex phase = std::conj(gamma) / g;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < len; ++k) {
          const Complex x = ap[k];
          const Complex y = aq[k] * phase;
          ap[k] = c * x - s * y;
          aq[k] = s * x + c * y;
        }
      }
    }
  }

  std::vector<double> sv(ncol);
  for (std::size_t j = 0; j < ncol; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += std::norm(a[j * len + k]);
    sv[j] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

// ---------------------------------------------------------------------------
// Least squares

LineFit ols_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("ols_line: x and y lengths differ");
  if (x.size() < 3) throw ValidationError("ols_line: at least 3 points required");
  if (!all_finite(x) || !all_finite(y)) throw ValidationError("ols_line: non-finite data");

  const double n = static_cast<double>(x.size());
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - xbar;
    const double dy = y[i] - ybar;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw ValidationError("ols_line: degenerate x (all values equal)");

  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (syy / n < 1e-300) {
    fit.slope_stderr = 0.0;
    fit.r_squared = 0.0;
    return fit;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
  return fit;
}

}  // namespace efftemp::numerics
