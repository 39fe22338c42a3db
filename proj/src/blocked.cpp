#include "vtr/blocked.hpp"

#include <string>

#include "vtr/errors.hpp"

namespace vtr {

namespace {

std::size_t blocks_for(std::size_t n, std::size_t b) { return (n + b - 1) / b; }

}  // namespace

BlockedMatrix::BlockedMatrix(std::size_t logical_rows, std::size_t logical_cols,
                             std::size_t block_size, BlockOrder order)
    : logical_rows_(logical_rows),
      logical_cols_(logical_cols),
      b_(block_size),
      order_(order) {
  if (block_size == 0) throw InvalidConfig("BlockedMatrix: block size must be >= 1");
  row_blocks_ = blocks_for(logical_rows, block_size);
  col_blocks_ = blocks_for(logical_cols, block_size);
  data_.assign(row_blocks_ * col_blocks_ * b_ * b_, 0.0f);
}

BlockedMatrix to_blocked(const Matrix& m, std::size_t block_size, BlockOrder order) {
  BlockedMatrix bm(m.rows(), m.cols(), block_size, order);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) bm.at(r, c) = m(r, c);
  return bm;
}

Matrix from_blocked(const BlockedMatrix& bm) {
  Matrix m(bm.logical_rows(), bm.logical_cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = bm.at(r, c);
  return m;
}

void block_mac(std::span<const float> a_tile, std::span<const float> w_tile,
               std::span<float> out_tile, std::size_t b) {
  for (std::size_t r = 0; r < b; ++r) {
    const float* ar = a_tile.data() + r * b;
    float* __restrict__ o = out_tile.data() + r * b;
    for (std::size_t k = 0; k < b; ++k) {
      const float s = ar[k];
      const float* __restrict__ wr = w_tile.data() + k * b;
      for (std::size_t c = 0; c < b; ++c) o[c] += s * wr[c];
    }
  }
}

BlockedMatrix dbmm(const BlockedMatrix& a, const BlockedMatrix& w) {
  if (a.block_size() != w.block_size()) {
    throw BlockSizeMismatch("dbmm: block sizes differ (" + std::to_string(a.block_size()) +
                            " vs " + std::to_string(w.block_size()) + ")");
  }
  if (a.logical_cols() != w.logical_rows()) {
    throw DimensionMismatch("dbmm: inner dimensions differ (" + std::to_string(a.logical_cols()) +
                            " vs " + std::to_string(w.logical_rows()) + ")");
  }
  if (a.order() != BlockOrder::row_major || w.order() != BlockOrder::col_major) {
    throw InvalidConfig("dbmm: expects block-row-major left and block-column-major right operand");
  }
  const std::size_t b = a.block_size();
  BlockedMatrix out(a.logical_rows(), w.logical_cols(), b, BlockOrder::row_major);
  for (std::size_t i = 0; i < out.row_blocks(); ++i) {
    for (std::size_t j = 0; j < out.col_blocks(); ++j) {
      auto tile = out.block(i, j);
      for (std::size_t kb = 0; kb < a.col_blocks(); ++kb) block_mac(a.block(i, kb), w.block(kb, j), tile, b);
    }
  }
  return out;
}

}  // namespace vtr
