#include "vtr/matrix.hpp"

#include <cstring>

#include <algorithm>
#include <cmath>
#include <string>

#include "vtr/errors.hpp"

namespace vtr {

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionMismatch("Matrix: data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<float>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

namespace {

void check_inner(const Matrix& a, const Matrix& w, const char* what) {
  if (a.cols() != w.rows()) {
    throw DimensionMismatch(std::string(what) + ": inner dimensions differ (" +
                            std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                            std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + ")");
  }
}

}  // namespace

Matrix naive_matmul(const Matrix& a, const Matrix& w) {
  check_inner(a, w, "naive_matmul");
  Matrix out(a.rows(), w.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      float sum = 0.0f;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * w(k, j);
      out(i, j) = sum;
    }
  }
  return out;
}

namespace {

using f32x8 = float __attribute__((vector_size(32)));

// R consecutive output rows. Columns go in register tiles of 8; every
// accumulator starts at zero and adds k in ascending order, which is exactly
// the naive summation.
template <std::size_t R>
[[gnu::always_inline]] inline void matmul_rows(const float* a, std::size_t lda, const float* w, std::size_t n,
                                               std::size_t depth, float* out) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    f32x8 acc[R] = {};
    for (std::size_t k = 0; k < depth; ++k) {
      f32x8 wv;
      std::memcpy(&wv, w + k * n + j, sizeof wv);
      for (std::size_t r = 0; r < R; ++r) acc[r] += a[r * lda + k] * wv;
    }
    for (std::size_t r = 0; r < R; ++r) std::memcpy(out + r * n + j, &acc[r], sizeof acc[r]);
  }
  for (; j < n; ++j)
    for (std::size_t r = 0; r < R; ++r) {
      float acc = 0.0f;
      for (std::size_t k = 0; k < depth; ++k) acc += a[r * lda + k] * w[k * n + j];
      out[r * n + j] = acc;
    }
}

}  // namespace

__attribute__((target_clones("avx2", "default"), flatten))
Matrix matmul(const Matrix& a, const Matrix& w) {
  check_inner(a, w, "matmul");
  const std::size_t n = w.cols();
  const std::size_t depth = a.cols();
  Matrix out(a.rows(), n);
  const float* ap = a.values().data();
  const float* wp = w.values().data();
  float* op = out.values().data();
  std::size_t i = 0;
  for (; i + 4 <= a.rows(); i += 4) matmul_rows<4>(ap + i * depth, depth, wp, n, depth, op + i * n);
  for (; i < a.rows(); ++i) matmul_rows<1>(ap + i * depth, depth, wp, n, depth, op + i * n);
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.cols()) throw DimensionMismatch("slice_cols: range out of bounds");
  Matrix out(m.rows(), end - begin);
  for (std::size_t r = 0; r < m.rows(); ++r)
    std::copy(m.row(r).begin() + begin, m.row(r).begin() + end, out.row(r).begin());
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) throw DimensionMismatch("slice_rows: range out of bounds");
  std::vector<float> data(m.values().begin() + begin * m.cols(),
                          m.values().begin() + end * m.cols());
  return Matrix(end - begin, m.cols(), std::move(data));
}

void add_row_vector(Matrix& m, std::span<const float> v) {
  if (v.size() != m.cols()) throw DimensionMismatch("add_row_vector: length mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < v.size(); ++c) row[c] += v[c];
  }
}

double max_relative_error(const Matrix& actual, const Matrix& expected) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    throw DimensionMismatch("max_relative_error: shapes differ");
  }
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = expected.values()[i];
    diff = std::max(diff, std::abs(static_cast<double>(actual.values()[i]) - e));
    scale = std::max(scale, std::abs(e));
  }
  return diff / std::max(scale, 1e-30);
}

double relative_frobenius_error(const Matrix& actual, const Matrix& expected) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    throw DimensionMismatch("relative_frobenius_error: shapes differ");
  }
  double diff = 0.0;
  double ref = 0.0;
  double act = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double a = actual.values()[i];
    const double e = expected.values()[i];
    diff += (a - e) * (a - e);
    ref += e * e;
    act += a * a;
  }
  const double denom = ref > 0.0 ? ref : act;
  return denom > 0.0 ? std::sqrt(diff / denom) : 0.0;
}

}  // namespace vtr
