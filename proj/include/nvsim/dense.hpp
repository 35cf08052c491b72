#pragma once

// Small dense real matrices for the rate-equation generators (10x10).

#include <cstddef>
#include <span>
#include <vector>

namespace nvsim {

class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static RealMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double norm1() const;  // max column sum of |a_ij|

  RealMatrix& operator*=(double s);
  friend RealMatrix operator*(const RealMatrix& a, const RealMatrix& b);
  friend RealMatrix operator*(RealMatrix a, double s) { return a *= s; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> operator*(const RealMatrix& m, std::span<const double> v);

// Gaussian elimination with partial pivoting. Throws NumericalError when a
// pivot falls below 1e-14 of the largest absolute entry.
std::vector<double> solve_linear(RealMatrix a, std::vector<double> b);

// exp(m) by scaling and squaring of a degree-18 Taylor polynomial
// (||m / 2^s||_1 <= 1/2).
RealMatrix expm(const RealMatrix& m);

}  // namespace nvsim
