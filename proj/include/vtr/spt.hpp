#pragma once

#include <cstddef>
#include <vector>

#include "vtr/matrix.hpp"

namespace vtr {

/// H x W x C image, channel-last row-major.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels, float fill = 0.0f);
  Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data);

  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }
  std::size_t channels() const { return c_; }

  float& operator()(std::size_t r, std::size_t c, std::size_t ch) { return data_[(r * w_ + c) * c_ + ch]; }
  float operator()(std::size_t r, std::size_t c, std::size_t ch) const {
    return data_[(r * w_ + c) * c_ + ch];
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  /// H x (W*C) view of the same values, used for traces.
  Matrix as_matrix() const;

  bool operator==(const Image&) const = default;

 private:
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::size_t c_ = 0;
  std::vector<float> data_;
};

struct PixelShift {
  int dx = 0;
  int dy = 0;
  bool operator==(const PixelShift&) const = default;
};

/// Shift directions applied before tokenization. The default is the four
/// diagonals (left-up, right-up, left-down, right-down) at 2 pixels.
struct ShiftSpec {
  std::vector<PixelShift> directions;

  static ShiftSpec diagonal(int magnitude = 2);
  std::size_t count() const { return directions.size(); }
};

/// N x D_raw token matrix, patch-row-major.
struct TokenMatrix {
  Matrix data;
  std::size_t tokens() const { return data.rows(); }
  std::size_t raw_dim() const { return data.cols(); }
};

/// out(r, c) = img(r - dy, c - dx) when in bounds, else 0.
Image shift_image(const Image& img, int dx, int dy);

/// Concatenates the original image with each shifted copy along channels.
Image spt_transform(const Image& img, const ShiftSpec& spec);

/// Splits into non-overlapping P x P patches; each token is its patch
/// flattened in (row, col, channel) order with channel fastest.
TokenMatrix tokenize(const Image& stack, std::size_t patch);

/// Inverse of tokenize.
Image untokenize(const TokenMatrix& tokens, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch);

}  // namespace vtr
