#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "stground/errors.hpp"

namespace stground::num {

// Dense row-major matrix of 64-bit floats. Entries are validated finite on
// construction from external data; in-place writes via at() are unchecked.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void check_finite(const char* what) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Fixed-dim vector of 64-bit floats, finite on construction.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  explicit Vector(std::vector<double> data);
  Vector(std::initializer_list<double> data) : Vector(std::vector<double>(data)) {}

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Vector& o) const { return data_ == o.data_; }

 private:
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double dot(const Vector& a, const Vector& b);
double l2_norm(const Vector& v);
Vector l2_normalize(const Vector& v);
double cosine(const Vector& a, const Vector& b);
Vector softmax(const Vector& row);

// Row-wise helpers used by the attention stack.
Matrix row_softmax(const Matrix& a);
Matrix row_l2_normalize(const Matrix& a);

// Counter-based generator (SplitMix64 over an incrementing counter).
// Identical seeds give identical, platform-independent streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();  // standard normal via Box-Muller, two draws per call
  // Uniform integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace stground::num
