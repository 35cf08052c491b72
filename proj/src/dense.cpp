#include "nvsim/dense.hpp"

#include <algorithm>
#include <cmath>

#include "nvsim/error.hpp"

namespace nvsim {

RealMatrix RealMatrix::identity(std::size_t n) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double RealMatrix::norm1() const {
  double best = 0.0;
  for (std::size_t c = 0; c < cols_; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) s += std::abs((*this)(r, c));
    best = std::max(best, s);
  }
  return best;
}

RealMatrix& RealMatrix::operator*=(double s) {
  for (auto& x : data_) x *= s;
  return *this;
}

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) throw InputError("RealMatrix *: dimension mismatch");
  RealMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

std::vector<double> operator*(const RealMatrix& m, std::span<const double> v) {
  if (m.cols() != v.size()) throw InputError("RealMatrix * vector: dimension mismatch");
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
  return out;
}

std::vector<double> solve_linear(RealMatrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw InputError("solve_linear: dimension mismatch");
  double amax = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) amax = std::max(amax, std::abs(a(r, c)));
  const double floor = 1e-14 * amax;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
    if (!(std::abs(a(piv, k)) > floor)) throw NumericalError("solve_linear: singular matrix");
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
      b[r] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

RealMatrix expm(const RealMatrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw InputError("expm: matrix is not square");
  const double norm = m.norm1();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const RealMatrix a = m * std::ldexp(1.0, -squarings);

  RealMatrix result = RealMatrix::identity(n);
  RealMatrix term = RealMatrix::identity(n);
  for (int k = 1; k <= 18; ++k) {
    term = term * a;
    term *= 1.0 / k;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) result(r, c) += term(r, c);
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

}  // namespace nvsim
