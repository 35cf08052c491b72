#include "nvsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nvsim/error.hpp"

namespace nvsim {

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InputError("ComplexMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> values) {
  ComplexMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

ComplexMatrix ComplexMatrix::outer(std::span<const cplx> v, std::span<const cplx> w) {
  ComplexMatrix m(v.size(), w.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) m(i, j) = v[i] * std::conj(w[j]);
  return m;
}

std::vector<cplx> ComplexMatrix::column(std::size_t c) const {
  std::vector<cplx> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

cplx ComplexMatrix::trace() const {
  cplx t{0.0, 0.0};
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw InputError("ComplexMatrix +=: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw InputError("ComplexMatrix -=: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw InputError("ComplexMatrix *: dimension mismatch");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{0.0, 0.0}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

std::vector<cplx> operator*(const ComplexMatrix& m, std::span<const cplx> v) {
  if (m.cols() != v.size()) throw InputError("ComplexMatrix * vector: dimension mismatch");
  std::vector<cplx> out(m.rows(), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw InputError("inner: dimension mismatch");
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

namespace {

inline double conj_of(double x) { return x; }
inline cplx conj_of(cplx z) { return std::conj(z); }
inline double real_of(double x) { return x; }
inline double real_of(cplx z) { return z.real(); }

// Cyclic Jacobi on a row-major n x n Hermitian matrix. T is double for real
// symmetric input and cplx otherwise; the rotation is the same in both cases
// (a phase that makes a_pq real, followed by a real Givens rotation).
template <class T>
void jacobi(std::vector<T>& a, std::vector<T>& v, std::size_t n, double tol, double scale,
            int& sweeps_out, double& off_out) {
  auto at = [&](std::size_t r, std::size_t c) -> T& { return a[r * n + c]; };
  auto vt = [&](std::size_t r, std::size_t c) -> T& { return v[r * n + c]; };
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (r != c) s += std::norm(at(r, c));
    return std::sqrt(s);
  };

  const double target = tol * scale;
  double off = off_norm();
  int sweep = 0;
  while (off > target) {
    if (sweep == kMaxJacobiSweeps) {
      throw NumericalError("hermitian_eigen: no convergence after " +
                           std::to_string(kMaxJacobiSweeps) +
                           " Jacobi sweeps, residual off-diagonal norm " + std::to_string(off));
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const T apq = at(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const T phase = apq / mag;
        const double app = real_of(at(p, p));
        const double aqq = real_of(at(q, q));
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // U = D P with D = diag(1, conj(phase)) on (p, q).
        const T u_pp = T(c);
        const T u_pq = T(s);
        const T u_qp = T(-s) * conj_of(phase);
        const T u_qq = T(c) * conj_of(phase);
        for (std::size_t k = 0; k < n; ++k) {  // A <- A U
          const T akp = at(k, p);
          const T akq = at(k, q);
          at(k, p) = akp * u_pp + akq * u_qp;
          at(k, q) = akp * u_pq + akq * u_qq;
        }
        for (std::size_t k = 0; k < n; ++k) {  // A <- U^H A
          const T apk = at(p, k);
          const T aqk = at(q, k);
          at(p, k) = conj_of(u_pp) * apk + conj_of(u_qp) * aqk;
          at(q, k) = conj_of(u_pq) * apk + conj_of(u_qq) * aqk;
        }
        at(p, q) = T(0.0);
        at(q, p) = T(0.0);
        at(p, p) = T(app - t * mag);
        at(q, q) = T(aqq + t * mag);
        for (std::size_t k = 0; k < n; ++k) {  // V <- V U
          const T vkp = vt(k, p);
          const T vkq = vt(k, q);
          vt(k, p) = vkp * u_pp + vkq * u_qp;
          vt(k, q) = vkp * u_pq + vkq * u_qq;
        }
      }
    }
    off = off_norm();
  }
  sweeps_out = sweep;
  off_out = off;
}

}  // namespace

EigenSystem hermitian_eigen(const ComplexMatrix& m, double tol) {
  if (!m.is_square()) throw InputError("hermitian_eigen: matrix is not square");
  const std::size_t n = m.rows();
  if (n > kMaxEigenDimension) throw InputError("hermitian_eigen: dimension exceeds 64");
  const double mmax = m.max_abs();
  double herm = 0.0;
  bool real_input = true;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      herm = std::max(herm, std::abs(m(r, c) - std::conj(m(c, r))));
      if (m(r, c).imag() != 0.0) real_input = false;
    }
  if (herm > 1e-10 * mmax) {
    throw InputError("hermitian_eigen: matrix is not Hermitian (max |M - M^H| = " +
                     std::to_string(herm) + ")");
  }

  const double scale = m.frobenius_norm();
  EigenSystem es;
  es.vectors = ComplexMatrix(n, n);
  std::vector<double> diag(n);
  if (real_input) {
    std::vector<double> a(n * n), v(n * n, 0.0);
    // symmetrize to remove the tolerated asymmetry
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) a[r * n + c] = 0.5 * (m(r, c).real() + m(c, r).real());
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    jacobi(a, v, n, tol, scale, es.sweeps, es.off_diagonal_norm);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
    for (std::size_t i = 0; i < n * n; ++i) es.vectors(i / n, i % n) = v[i];
  } else {
    std::vector<cplx> a(n * n), v(n * n, cplx{0.0, 0.0});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) a[r * n + c] = 0.5 * (m(r, c) + std::conj(m(c, r)));
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    jacobi(a, v, n, tol, scale, es.sweeps, es.off_diagonal_norm);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i].real();
    for (std::size_t i = 0; i < n * n; ++i) es.vectors(i / n, i % n) = v[i];
  }

  // Phase convention: first component above 1e-12 of the column max is real positive.
  auto first_significant = [&](std::size_t col) {
    double cmax = 0.0;
    for (std::size_t r = 0; r < n; ++r) cmax = std::max(cmax, std::abs(es.vectors(r, col)));
    for (std::size_t r = 0; r < n; ++r)
      if (std::abs(es.vectors(r, col)) > 1e-12 * cmax) return r;
    return std::size_t{0};
  };
  for (std::size_t col = 0; col < n; ++col) {
    const cplx lead = es.vectors(first_significant(col), col);
    const double mag = std::abs(lead);
    if (mag == 0.0) continue;
    const cplx rot = std::conj(lead) / mag;
    for (std::size_t r = 0; r < n; ++r) es.vectors(r, col) *= rot;
    es.vectors(first_significant(col), col) = cplx{std::abs(es.vectors(first_significant(col), col)), 0.0};
  }

  // Ascending order; exact ties ordered by the leading component's row index.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> lead(n);
  for (std::size_t col = 0; col < n; ++col) lead[col] = first_significant(col);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (diag[x] != diag[y]) return diag[x] < diag[y];
    return lead[x] < lead[y];
  });
  ComplexMatrix sorted(n, n);
  es.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    es.values[k] = diag[order[k]];
    for (std::size_t r = 0; r < n; ++r) sorted(r, k) = es.vectors(r, order[k]);
  }
  es.vectors = std::move(sorted);
  return es;
}

}  // namespace nvsim
