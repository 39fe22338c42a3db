#pragma once

#include <cstdint>
#include <string>

#include "vtr/config.hpp"

namespace vtr {

enum class ParamVariant {
  full,              // every tensor in the weight file
  paper_comparable,  // excludes positional embeddings, class token and Q/K/V biases
};

/// Learnable parameter count:
///   embedding  2*D_raw (LN) + D_raw*D + D (linear)
///   tokens     D (class token) + (N+1)*D (positional)
///   per layer  4*D (two LNs) + 3*(D^2 + D) (Q/K/V) + 1 (temperature)
///              + D^2 + D (projection) + 2*r*D^2 + r*D + D (MLP)
///   head       2*D (LN) + D*classes + classes
std::uint64_t count_params(const VtrConfig& cfg, ParamVariant variant = ParamVariant::full);

struct MacBreakdown {
  std::uint64_t embedding = 0;   // N * D_raw * D
  std::uint64_t qkv = 0;         // per layer: 3 (N+1) D^2
  std::uint64_t attention = 0;   // per layer: 2 (N+1)^2 D   (Q K^T and S V)
  std::uint64_t projection = 0;  // per layer: (N+1) D^2
  std::uint64_t mlp = 0;         // per layer: 2 r (N+1) D^2
  std::uint64_t head = 0;        // D * classes

  std::uint64_t per_layer() const { return qkv + attention + projection + mlp; }
  std::uint64_t total(std::size_t depth) const { return embedding + depth * per_layer() + head; }
};

MacBreakdown mac_breakdown(const VtrConfig& cfg);

/// Analytic multiply-accumulate count of one forward pass (matrix products only).
std::uint64_t count_macs(const VtrConfig& cfg);

/// Human-readable statement of the MAC formula.
std::string mac_formula();

}  // namespace vtr
