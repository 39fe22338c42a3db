#include "vtr/counters.hpp"

namespace vtr {

std::uint64_t count_params(const VtrConfig& cfg, ParamVariant variant) {
  const std::uint64_t d = cfg.dim;
  const std::uint64_t raw = cfg.raw_dim();
  const std::uint64_t hidden = cfg.hidden_dim();
  const std::uint64_t seq = cfg.sequence();
  const std::uint64_t classes = cfg.num_classes;

  const std::uint64_t embedding = 2 * raw + raw * d + d;
  const std::uint64_t token_params = d + seq * d;
  const std::uint64_t qkv_bias = 3 * d;
  const std::uint64_t layer = 4 * d + 3 * (d * d + d) + 1 + (d * d + d) + (d * hidden + hidden) + (hidden * d + d);
  const std::uint64_t head = 2 * d + d * classes + classes;

  std::uint64_t total = embedding + token_params + cfg.depth * layer + head;
  if (variant == ParamVariant::paper_comparable) total -= token_params + cfg.depth * qkv_bias;
  return total;
}

MacBreakdown mac_breakdown(const VtrConfig& cfg) {
  const std::uint64_t n = cfg.tokens();
  const std::uint64_t seq = cfg.sequence();
  const std::uint64_t d = cfg.dim;
  MacBreakdown m;
  m.embedding = n * cfg.raw_dim() * d;
  m.qkv = 3 * seq * d * d;
  m.attention = 2 * seq * seq * d;
  m.projection = seq * d * d;
  m.mlp = 2 * cfg.mlp_ratio * seq * d * d;
  m.head = d * cfg.num_classes;
  return m;
}

std::uint64_t count_macs(const VtrConfig& cfg) { return mac_breakdown(cfg).total(cfg.depth); }

std::string mac_formula() {
  return "N*D_raw*D + L*[3(N+1)D^2 + 2(N+1)^2 D + (N+1)D^2 + 2r(N+1)D^2] + D*classes";
}

}  // namespace vtr
