#pragma once

// Dense and sparse linear-algebra kernels plus least-squares statistics.
// All routines are pure and deterministic for a given input.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace efftemp {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

namespace numerics {

bool all_finite(std::span<const double> values);
bool all_finite(std::span<const Complex> values);

/// Real symmetric matrix, row-major. Construction symmetrizes the input as
/// (A + Aᵀ)/2 so that entry(i, j) == entry(j, i) holds bit-exactly.
class RealSymMatrix {
 public:
  RealSymMatrix() = default;
  RealSymMatrix(std::size_t n, std::vector<double> entries);
  static RealSymMatrix zeros(std::size_t n);
  static RealSymMatrix identity(std::size_t n);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  // Writes both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double value);
  std::span<const double> entries() const { return data_; }
  double frobenius_norm() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-row real matrix. Duplicate triplets are summed; column indices
/// are sorted within each row. Structural symmetry is checked on construction.
class SparseRealMatrix {
 public:
  SparseRealMatrix() = default;
  static SparseRealMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);

  std::size_t size() const { return n_; }
  std::size_t nonzeros() const { return values_.size(); }
  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  // Entry lookup by binary search within the row; 0 when absent.
  double at(std::size_t row, std::size_t col) const;
  std::vector<double> to_dense() const;
  double frobenius_norm() const;
  double trace() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

/// Eigenpairs in ascending order. `vectors` is column-major: column k holds
/// the eigenvector of values[k].
struct EigenSystem {
  std::vector<double> values;
  std::vector<double> vectors;
  std::size_t n = 0;

  std::span<const double> vector(std::size_t k) const {
    return std::span<const double>(vectors).subspan(k * n, n);
  }
};

// Householder tridiagonalization followed by implicit-shift QL.
EigenSystem sym_eig(const RealSymMatrix& a);

ComplexVector spmv(const SparseRealMatrix& s, std::span<const Complex> x);
void spmv(const SparseRealMatrix& s, std::span<const Complex> x, std::span<Complex> out);

/// Row-major complex matrix.
struct ComplexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> data;

  ComplexMatrix() = default;
  ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  Complex& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  Complex operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Descending singular values (one-sided Jacobi on the columns).
std::vector<double> singular_values(const ComplexMatrix& m);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y ≈ intercept + slope·x. When the y variance is below
/// 1e-300 the fit is flat: slope_stderr and r_squared are both reported as 0.
LineFit ols_line(std::span<const double> x, std::span<const double> y);

}  // namespace numerics
}  // namespace efftemp
