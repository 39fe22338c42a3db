#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "vtr/blocked.hpp"
#include "vtr/errors.hpp"
#include "vtr/ewise.hpp"
#include "vtr/matrix.hpp"

using namespace vtr;
using vtr::test::random_matrix;
using vtr::test::random_size;

namespace {

Matrix sequence(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = static_cast<float>(i + 1);
  return m;
}

// Double-precision product, independent of the float kernels.
Matrix matmul_f64(const Matrix& a, const Matrix& w) {
  Matrix out(a.rows(), w.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += double(a(i, k)) * double(w(k, j));
      out(i, j) = static_cast<float>(s);
    }
  return out;
}

}  // namespace

TEST(Matrix, ConstructionChecksLength) {
  EXPECT_THROW(Matrix(2, 3, std::vector<float>(5)), DimensionMismatch);
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0f);
}

TEST(NaiveMatmul, HandExamples) {
  EXPECT_EQ(naive_matmul(Matrix{{1, 2}, {3, 4}}, Matrix::identity(2)), (Matrix{{1, 2}, {3, 4}}));
  EXPECT_EQ(naive_matmul(Matrix{{1, 2}}, Matrix{{3}, {4}}), (Matrix{{11}}));
  for (std::size_t n : {1u, 7u, 100u}) {
    EXPECT_EQ(naive_matmul(Matrix(1, n, 1.0f), Matrix(n, 1, 1.0f)), (Matrix{{float(n)}}));
  }
  EXPECT_THROW(naive_matmul(Matrix(2, 3), Matrix(2, 3)), DimensionMismatch);
}

TEST(Matmul, BitIdenticalToNaive) {
  SeededRng rng(11);
  for (int i = 0; i < 60; ++i) {
    const std::size_t hi = i < 40 ? 12 : 130;
    const auto m = random_size(rng, 1, hi), k = random_size(rng, 1, hi), n = random_size(rng, 1, hi);
    const Matrix a = random_matrix(rng, m, k), w = random_matrix(rng, k, n);
    EXPECT_EQ(matmul(a, w), naive_matmul(a, w));
  }
}

TEST(Matmul, CloseToDoublePrecision) {
  SeededRng rng(12);
  const Matrix a = random_matrix(rng, 33, 65), w = random_matrix(rng, 65, 17);
  EXPECT_LT(relative_frobenius_error(matmul(a, w), matmul_f64(a, w)), 1e-6);
}

TEST(Matrix, SlicesAndTranspose) {
  const Matrix m = sequence(3, 4);
  EXPECT_EQ(slice_cols(m, 1, 3), (Matrix{{2, 3}, {6, 7}, {10, 11}}));
  EXPECT_EQ(slice_rows(m, 2, 3), (Matrix{{9, 10, 11, 12}}));
  EXPECT_EQ(transpose(transpose(m)), m);
  EXPECT_EQ(transpose(m)(3, 1), 8.0f);
  EXPECT_THROW(slice_cols(m, 3, 5), DimensionMismatch);
}

TEST(Matrix, ErrorMetrics) {
  const Matrix b{{1, -4}};
  const Matrix a{{1, -3.6f}};
  EXPECT_NEAR(max_relative_error(a, b), 0.1, 1e-6);
  EXPECT_NEAR(relative_frobenius_error(a, b), 0.4 / std::sqrt(17.0), 1e-6);
  EXPECT_EQ(max_relative_error(b, b), 0.0);
}

// ---- layout ----------------------------------------------------------------

TEST(Blocked, SingleBlockEqualsInput) {
  const Matrix m = sequence(4, 4);
  const auto bm = to_blocked(m, 4, BlockOrder::row_major);
  ASSERT_EQ(bm.storage().size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(bm.storage()[i], m.values()[i]);
}

TEST(Blocked, BlockRowMajorOrder) {
  const auto bm = to_blocked(sequence(4, 4), 2, BlockOrder::row_major);
  const std::vector<float> expected = {1, 2, 5, 6, 3, 4, 7, 8, 9, 10, 13, 14, 11, 12, 15, 16};
  EXPECT_EQ(std::vector<float>(bm.storage().begin(), bm.storage().end()), expected);
}

TEST(Blocked, BlockColumnMajorOrder) {
  const auto bm = to_blocked(sequence(4, 4), 2, BlockOrder::col_major);
  // Tiles (0,0), (1,0), (0,1), (1,1).
  const std::vector<float> expected = {1, 2, 5, 6, 9, 10, 13, 14, 3, 4, 7, 8, 11, 12, 15, 16};
  EXPECT_EQ(std::vector<float>(bm.storage().begin(), bm.storage().end()), expected);
}

TEST(Blocked, PaddingIsZero) {
  const auto bm = to_blocked(sequence(3, 3), 2, BlockOrder::row_major);
  EXPECT_EQ(bm.padded_rows(), 4u);
  EXPECT_EQ(bm.padded_cols(), 4u);
  EXPECT_EQ(bm.row_blocks() * bm.col_blocks(), 4u);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      if (r == 3 || c == 3) {
        EXPECT_EQ(bm.at(r, c), 0.0f);
      }
}

TEST(Blocked, RoundTripExamples) {
  SeededRng rng(3);
  const Matrix a = random_matrix(rng, 7, 5);
  EXPECT_EQ(from_blocked(to_blocked(a, 8, BlockOrder::row_major)), a);
  const Matrix one{{42}};
  EXPECT_EQ(from_blocked(to_blocked(one, 16, BlockOrder::row_major)), one);
  const Matrix b = random_matrix(rng, 6, 4);
  EXPECT_EQ(from_blocked(to_blocked(b, 2, BlockOrder::col_major)), b);
}

TEST(BlockedProperty, RoundTripAllBlockSizes) {
  SeededRng rng(4);
  for (std::size_t b = 1; b <= 64; ++b) {
    const Matrix m = random_matrix(rng, random_size(rng, 1, 70), random_size(rng, 1, 70));
    for (auto order : {BlockOrder::row_major, BlockOrder::col_major}) {
      const auto bm = to_blocked(m, b, order);
      EXPECT_EQ(bm.padded_rows(), (m.rows() + b - 1) / b * b);
      EXPECT_EQ(bm.padded_cols(), (m.cols() + b - 1) / b * b);
      ASSERT_EQ(from_blocked(bm), m) << "b=" << b;
    }
  }
}

TEST(BlockedProperty, OffsetFormula) {
  SeededRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = random_size(rng, 1, 9);
    const Matrix m = random_matrix(rng, random_size(rng, 1, 30), random_size(rng, 1, 30));
    for (auto order : {BlockOrder::row_major, BlockOrder::col_major}) {
      const auto bm = to_blocked(m, b, order);
      const std::size_t rb = bm.padded_rows() / b, cb = bm.padded_cols() / b;
      for (std::size_t r = 0; r < bm.padded_rows(); ++r)
        for (std::size_t c = 0; c < bm.padded_cols(); ++c) {
          const std::size_t blk = order == BlockOrder::row_major ? (r / b) * cb + c / b : (c / b) * rb + r / b;
          const std::size_t off = blk * b * b + (r % b) * b + c % b;
          ASSERT_EQ(bm.offset(r, c), off);
          const float want = (r < m.rows() && c < m.cols()) ? m(r, c) : 0.0f;
          ASSERT_EQ(bm.storage()[off], want);
        }
    }
  }
}

// ---- dbmm ------------------------------------------------------------------

TEST(Dbmm, IdentityAndZero) {
  SeededRng rng(6);
  const Matrix w = random_matrix(rng, 4, 3);
  const auto id = to_blocked(Matrix::identity(4), 2, BlockOrder::row_major);
  EXPECT_EQ(from_blocked(dbmm(id, to_blocked(w, 2, BlockOrder::col_major))), w);
  const auto zero = to_blocked(Matrix(4, 4), 2, BlockOrder::row_major);
  EXPECT_EQ(from_blocked(dbmm(zero, to_blocked(w, 2, BlockOrder::col_major))), Matrix(4, 3));
}

TEST(Dbmm, MatchesNaive9x7x5) {
  SeededRng rng(7);
  const Matrix a = random_matrix(rng, 9, 7), w = random_matrix(rng, 7, 5);
  const Matrix got = from_blocked(dbmm(to_blocked(a, 4, BlockOrder::row_major), to_blocked(w, 4, BlockOrder::col_major)));
  EXPECT_LT(relative_frobenius_error(got, naive_matmul(a, w)), 1e-5);
  EXPECT_EQ(got, naive_matmul(a, w));
}

TEST(Dbmm, Errors) {
  const auto a = to_blocked(Matrix(4, 4), 2, BlockOrder::row_major);
  EXPECT_THROW(dbmm(a, to_blocked(Matrix(4, 4), 4, BlockOrder::col_major)), BlockSizeMismatch);
  EXPECT_THROW(dbmm(a, to_blocked(Matrix(3, 4), 2, BlockOrder::col_major)), DimensionMismatch);
  EXPECT_THROW(dbmm(a, to_blocked(Matrix(4, 4), 2, BlockOrder::row_major)), InvalidConfig);
}

TEST(DbmmProperty, RandomAgainstNaiveWithCleanPadding) {
  SeededRng rng(8);
  const std::size_t blocks[] = {8, 16, 32};
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t b = blocks[trial % 3];
    const auto m = random_size(rng, 1, 128), k = random_size(rng, 1, 128), n = random_size(rng, 1, 128);
    const Matrix a = random_matrix(rng, m, k), w = random_matrix(rng, k, n);
    const auto out = dbmm(to_blocked(a, b, BlockOrder::row_major), to_blocked(w, b, BlockOrder::col_major));
    ASSERT_LT(relative_frobenius_error(from_blocked(out), matmul_f64(a, w)), 1e-5);
    for (std::size_t r = 0; r < out.padded_rows(); ++r)
      for (std::size_t c = 0; c < out.padded_cols(); ++c)
        if (r >= m || c >= n) {
          ASSERT_EQ(out.at(r, c), 0.0f);
        }
  }
}

// ---- element-wise ----------------------------------------------------------

TEST(Ewise, Examples) {
  const Matrix a{{1, 2}}, mul{{2, 2}}, add{{1, 1}};
  EXPECT_EQ(ewise_ref(EwiseFn::identity, &mul, &add, a), (Matrix{{3, 5}}));
  EXPECT_EQ(ewise_ref(EwiseFn::exp, nullptr, nullptr, Matrix{{0}}), (Matrix{{1}}));
  EXPECT_EQ(ewise_ref(EwiseFn::gelu, nullptr, nullptr, Matrix{{0}}), (Matrix{{0}}));
  EXPECT_NEAR(ewise_ref(EwiseFn::gelu, nullptr, nullptr, Matrix{{10}})(0, 0), 10.0f, 1e-6);
  EXPECT_NEAR(gelu(1.0f), 0.841345f, 1e-6);
  EXPECT_NEAR(gelu(-1.0f), -0.158655f, 1e-6);
  EXPECT_EQ(apply(EwiseFn::reciprocal, 4.0f), 0.25f);
  EXPECT_EQ(apply(EwiseFn::rsqrt, 4.0f), 0.5f);
  EXPECT_THROW(ewise_ref(EwiseFn::identity, &mul, nullptr, Matrix{{1, 2, 3}}), DimensionMismatch);
}
