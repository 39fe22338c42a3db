#include "vtr/spt.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "vtr/errors.hpp"

namespace vtr {

Image::Image(std::size_t height, std::size_t width, std::size_t channels, float fill)
    : h_(height), w_(width), c_(channels), data_(height * width * channels, fill) {
  if (height == 0 || width == 0 || channels == 0) throw InvalidConfig("Image: empty dimensions");
}

Image::Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data)
    : h_(height), w_(width), c_(channels), data_(std::move(data)) {
  if (height == 0 || width == 0 || channels == 0) throw InvalidConfig("Image: empty dimensions");
  if (data_.size() != height * width * channels) {
    throw DimensionMismatch("Image: data length does not match dimensions");
  }
}

Matrix Image::as_matrix() const { return Matrix(h_, w_ * c_, data_); }

ShiftSpec ShiftSpec::diagonal(int magnitude) {
  const int m = magnitude;
  return ShiftSpec{{{-m, -m}, {m, -m}, {-m, m}, {m, m}}};
}

Image shift_image(const Image& img, int dx, int dy) {
  const auto limit = static_cast<int>(std::min(img.height(), img.width()));
  if (std::abs(dx) >= limit || std::abs(dy) >= limit) {
    throw ShiftTooLarge("shift_image: shift (" + std::to_string(dx) + ", " + std::to_string(dy) +
                        ") must be smaller than " + std::to_string(limit));
  }
  Image out(img.height(), img.width(), img.channels());
  const auto h = static_cast<long>(img.height());
  const auto w = static_cast<long>(img.width());
  for (long r = 0; r < h; ++r) {
    const long sr = r - dy;
    if (sr < 0 || sr >= h) continue;
    for (long c = 0; c < w; ++c) {
      const long sc = c - dx;
      if (sc < 0 || sc >= w) continue;
      for (std::size_t ch = 0; ch < img.channels(); ++ch) out(r, c, ch) = img(sr, sc, ch);
    }
  }
  return out;
}

Image spt_transform(const Image& img, const ShiftSpec& spec) {
  const std::size_t c = img.channels();
  const std::size_t total = c * (spec.count() + 1);
  Image out(img.height(), img.width(), total);
  auto place = [&](const Image& src, std::size_t block) {
    for (std::size_t r = 0; r < img.height(); ++r)
      for (std::size_t col = 0; col < img.width(); ++col)
        for (std::size_t ch = 0; ch < c; ++ch) out(r, col, block * c + ch) = src(r, col, ch);
  };
  place(img, 0);
  for (std::size_t i = 0; i < spec.count(); ++i) {
    place(shift_image(img, spec.directions[i].dx, spec.directions[i].dy), i + 1);
  }
  return out;
}

TokenMatrix tokenize(const Image& stack, std::size_t patch) {
  if (patch == 0 || stack.height() % patch != 0 || stack.width() % patch != 0) {
    throw DivisibilityError("tokenize: patch size " + std::to_string(patch) +
                            " does not divide image " + std::to_string(stack.height()) + "x" +
                            std::to_string(stack.width()));
  }
  const std::size_t ph = stack.height() / patch;
  const std::size_t pw = stack.width() / patch;
  const std::size_t c = stack.channels();
  Matrix tokens(ph * pw, patch * patch * c);
  for (std::size_t pr = 0; pr < ph; ++pr) {
    for (std::size_t pc = 0; pc < pw; ++pc) {
      auto row = tokens.row(pr * pw + pc);
      std::size_t k = 0;
      for (std::size_t r = 0; r < patch; ++r)
        for (std::size_t col = 0; col < patch; ++col)
          for (std::size_t ch = 0; ch < c; ++ch) row[k++] = stack(pr * patch + r, pc * patch + col, ch);
    }
  }
  return TokenMatrix{std::move(tokens)};
}

Image untokenize(const TokenMatrix& tokens, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw DivisibilityError("untokenize: patch size does not divide image");
  }
  const std::size_t pw = width / patch;
  if (tokens.tokens() != (height / patch) * pw || tokens.raw_dim() != patch * patch * channels) {
    throw DimensionMismatch("untokenize: token matrix shape does not match image geometry");
  }
  Image out(height, width, channels);
  for (std::size_t t = 0; t < tokens.tokens(); ++t) {
    const std::size_t pr = t / pw;
    const std::size_t pc = t % pw;
    auto row = tokens.data.row(t);
    std::size_t k = 0;
    for (std::size_t r = 0; r < patch; ++r)
      for (std::size_t col = 0; col < patch; ++col)
        for (std::size_t ch = 0; ch < channels; ++ch) out(pr * patch + r, pc * patch + col, ch) = row[k++];
  }
  return out;
}

}  // namespace vtr
