#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vtr/matrix.hpp"

namespace vtr {

enum class BlockOrder { row_major, col_major };

/// A matrix split into b x b tiles stored block-contiguously. Tiles are laid
/// out in block-row-major order (left operands, results) or
/// block-column-major order (right operands). Elements inside a tile are
/// always row-major. Logical dimensions are padded up to multiples of b with
/// zeros.
class BlockedMatrix {
 public:
  BlockedMatrix() = default;
  BlockedMatrix(std::size_t logical_rows, std::size_t logical_cols, std::size_t block_size,
                BlockOrder order);

  std::size_t logical_rows() const { return logical_rows_; }
  std::size_t logical_cols() const { return logical_cols_; }
  std::size_t block_size() const { return b_; }
  BlockOrder order() const { return order_; }
  std::size_t padded_rows() const { return row_blocks_ * b_; }
  std::size_t padded_cols() const { return col_blocks_ * b_; }
  std::size_t row_blocks() const { return row_blocks_; }
  std::size_t col_blocks() const { return col_blocks_; }

  /// Index of tile (i, j) in storage order.
  std::size_t block_index(std::size_t i, std::size_t j) const {
    return order_ == BlockOrder::row_major ? i * col_blocks_ + j : j * row_blocks_ + i;
  }

  /// Flat offset of element (r, c) in the padded storage.
  std::size_t offset(std::size_t r, std::size_t c) const {
    return block_index(r / b_, c / b_) * b_ * b_ + (r % b_) * b_ + (c % b_);
  }

  float& at(std::size_t r, std::size_t c) { return data_[offset(r, c)]; }
  float at(std::size_t r, std::size_t c) const { return data_[offset(r, c)]; }

  std::span<float> block(std::size_t i, std::size_t j) {
    return {data_.data() + block_index(i, j) * b_ * b_, b_ * b_};
  }
  std::span<const float> block(std::size_t i, std::size_t j) const {
    return {data_.data() + block_index(i, j) * b_ * b_, b_ * b_};
  }

  std::span<const float> storage() const { return data_; }

 private:
  std::size_t logical_rows_ = 0;
  std::size_t logical_cols_ = 0;
  std::size_t b_ = 1;
  std::size_t row_blocks_ = 0;
  std::size_t col_blocks_ = 0;
  BlockOrder order_ = BlockOrder::row_major;
  std::vector<float> data_;
};

BlockedMatrix to_blocked(const Matrix& m, std::size_t block_size, BlockOrder order);
Matrix from_blocked(const BlockedMatrix& bm);

/// Accumulates one output tile: out += a_tile * w_tile, k ascending.
void block_mac(std::span<const float> a_tile, std::span<const float> w_tile,
               std::span<float> out_tile, std::size_t b);

/// Dense block-wise matrix multiplication. `a` must be block-row-major, `w`
/// block-column-major; the result is block-row-major. Each output element is
/// summed over k-blocks ascending, then k ascending inside a block.
BlockedMatrix dbmm(const BlockedMatrix& a, const BlockedMatrix& w);

}  // namespace vtr
