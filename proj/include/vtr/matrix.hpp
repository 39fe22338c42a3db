#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace vtr {

/// Dense row-major matrix of 32-bit floats.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);
  Matrix(std::initializer_list<std::initializer_list<float>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  const std::vector<float>& data() const { return data_; }

  static Matrix identity(std::size_t n);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Reference triple-loop product, k ascending. Test oracle.
Matrix naive_matmul(const Matrix& a, const Matrix& w);

/// Cache-friendly product used by the inference engine. Every output element
/// is accumulated from zero in ascending k, so results are bit-identical to
/// naive_matmul.
Matrix matmul(const Matrix& a, const Matrix& w);

Matrix transpose(const Matrix& m);

/// Columns [begin, end) as a new matrix.
Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end);

/// Rows [begin, end) as a new matrix.
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);

/// Adds `v` to every row of `m`.
void add_row_vector(Matrix& m, std::span<const float> v);

/// max |a - b| / max(max |b|, tiny). Shapes must match.
double max_relative_error(const Matrix& actual, const Matrix& expected);

/// ||a - b||_F / ||b||_F (or ||a||_F when b is all zero).
double relative_frobenius_error(const Matrix& actual, const Matrix& expected);

}  // namespace vtr
