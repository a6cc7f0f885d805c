#include "stground/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stground::num {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw NonFiniteError("matrix fill");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimMismatchError("matrix data length " + std::to_string(data_.size()) +
                           " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  check_finite("matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimMismatchError("ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  check_finite("matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

void Matrix::check_finite(const char* what) const {
  for (double v : data_) {
    if (!std::isfinite(v)) throw NonFiniteError(what);
  }
}

Vector::Vector(std::vector<double> data) : data_(std::move(data)) {
  for (double v : data_) {
    if (!std::isfinite(v)) throw NonFiniteError("vector");
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimMismatchError("matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                           " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  // Fixed summation order: ascending k, row-major writes.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

double dot(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) throw DimMismatchError("dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const Vector& v) { return std::sqrt(dot(v, v)); }

Vector l2_normalize(const Vector& v) {
  const double n = l2_norm(v);
  if (n < 1e-12) throw ZeroVectorError("l2_normalize");
  Vector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] / n;
  return out;
}

double cosine(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) throw DimMismatchError("cosine");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < 1e-12 || nb < 1e-12) throw ZeroVectorError("cosine");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vector softmax(const Vector& row) {
  for (std::size_t i = 0; i < row.dim(); ++i) {
    if (!std::isfinite(row[i])) throw NonFiniteError("softmax input");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < row.dim(); ++i) mx = std::max(mx, row[i]);
  Vector out(row.dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < row.dim(); ++i) {
    out[i] = std::exp(row[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < row.dim(); ++i) out[i] /= sum;
  return out;
}

Matrix row_softmax(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < a.cols(); ++c) mx = std::max(mx, a.at(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      out.at(r, c) = std::exp(a.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) /= sum;
  }
  return out;
}

Matrix row_l2_normalize(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += a.at(r, c) * a.at(r, c);
    const double n = std::sqrt(s);
    if (n < 1e-12) throw ZeroVectorError("row_l2_normalize row " + std::to_string(r));
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) = a.at(r, c) / n;
  }
  return out;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(seed_ ^ splitmix64(counter_++)); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // Box-Muller; u1 kept away from 0 so log stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection-free modulo is biased; rejection keeps the stream exact.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace stground::num
