#pragma once
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "scmil/error.hpp"

namespace scmil {

// Dense row-major matrix of 64-bit floats. Every public kernel in the
// library keeps entries finite; inputs are validated at the boundaries.
class Matrix {
public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(count(rows, cols), 0.0) {}
  Matrix(int rows, int cols, double fill)
      : rows_(rows), cols_(cols), data_(count(rows, cols), fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  static Matrix row(std::initializer_list<double> xs) {
    Matrix m(1, static_cast<int>(xs.size()));
    int j = 0;
    for (const double x : xs) m.at(0, j++) = x;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c)
        throw ShapeError("from_rows: ragged initializer");
      int j = 0;
      for (const double x : row) m.at(i, j++) = x;
      ++i;
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row_ptr(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  bool all_finite() const {
    for (const double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

private:
  static size_t count(int rows, int cols) {
    if (rows < 0 || cols < 0)
      throw ShapeError("matrix dimensions must be nonnegative, got " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    return static_cast<size_t>(rows) * static_cast<size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// c = a * b, naive i-k-j loop; inner loop vectorizes.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ, a is " + a.shape_str() +
                     ", b is " + b.shape_str());
  Matrix c(a.rows(), b.cols());
  const int n = b.cols();
  for (int i = 0; i < a.rows(); ++i) {
    double* ci = c.row_ptr(i);
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row_ptr(k);
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shapes differ, " + a.shape_str() +
                     " vs " + b.shape_str());
}

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw DomainError(std::string(what) + ": non-finite entries");
}

}  // namespace scmil
