#pragma once

#include <cstddef>
#include <string>

#include "vtr/spt.hpp"

namespace vtr {

/// Model hyper-parameters. All derived sizes are computed, never stored.
struct VtrConfig {
  std::size_t image_height = 88;
  std::size_t image_width = 88;
  std::size_t channels = 1;
  std::size_t patch = 8;
  std::size_t shifts = 4;          // diagonal directions; 0 disables shifting
  std::size_t shift_magnitude = 2;  // pixels
  std::size_t dim = 44;
  std::size_t depth = 4;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  std::size_t num_classes = 10;

  std::size_t tokens() const { return (image_height / patch) * (image_width / patch); }
  std::size_t sequence() const { return tokens() + 1; }
  std::size_t raw_dim() const { return patch * patch * channels * (shifts + 1); }
  std::size_t head_dim() const { return dim / heads; }
  std::size_t hidden_dim() const { return mlp_ratio * dim; }

  /// Shift directions in channel-block order.
  ShiftSpec shift_spec() const;

  /// Throws InvalidConfig when an invariant does not hold.
  void validate() const;

  std::string describe() const;

  bool operator==(const VtrConfig&) const = default;
};

}  // namespace vtr
