#pragma once

// Dense complex matrices and a cyclic Jacobi eigensolver for small Hermitian
// problems (the excited-state Hamiltonian is 6x6).

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace nvsim {

using cplx = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const double> values);
  // |v><w|
  static ComplexMatrix outer(std::span<const cplx> v, std::span<const cplx> w);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const cplx> data() const { return data_; }
  std::vector<cplx> column(std::size_t c) const;

  ComplexMatrix adjoint() const;
  cplx trace() const;
  double max_abs() const;
  double frobenius_norm() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(cplx s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

std::vector<cplx> operator*(const ComplexMatrix& m, std::span<const cplx> v);

// max_ij |a_ij - b_ij|; dimensions must agree.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

// Standard tensor product; result is (a.rows*b.rows) x (a.cols*b.cols).
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

cplx inner(std::span<const cplx> a, std::span<const cplx> b);  // <a|b>

struct EigenSystem {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column k belongs to values[k]
  int sweeps = 0;
  double off_diagonal_norm = 0.0;
};

inline constexpr double kDefaultEigenTolerance = 1e-12;
inline constexpr int kMaxJacobiSweeps = 100;
inline constexpr std::size_t kMaxEigenDimension = 64;

// Cyclic Jacobi diagonalization of a Hermitian matrix. Converged when the
// off-diagonal Frobenius norm is <= tol * ||m||_F. Each eigenvector is scaled
// so its first non-negligible component is real and positive.
//
// Throws InputError for non-square, oversize, or non-Hermitian input and
// NumericalError when the sweep cap is reached.
EigenSystem hermitian_eigen(const ComplexMatrix& m, double tol = kDefaultEigenTolerance);

}  // namespace nvsim
