#include "vtr/accel.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "vtr/counters.hpp"
#include "vtr/errors.hpp"

namespace vtr::accel {

std::string_view to_string(CostModel m) { return m == CostModel::ideal ? "ideal" : "fill-drain"; }
std::string_view to_string(Unit u) { return u == Unit::hppu ? "HPPU" : "ECU"; }
std::string_view to_string(StageKind k) {
  switch (k) {
    case StageKind::matmul: return "matmul";
    case StageKind::reduction: return "reduction";
    case StageKind::elementwise: return "elementwise";
    case StageKind::relayout: return "relayout";
  }
  return "?";
}

void AccelConfig::validate() const {
  if (hcus == 0 || pe_rows == 0 || pe_cols == 0 || pe_size == 0 || block == 0) {
    throw InvalidConfig("AccelConfig: all unit counts must be >= 1");
  }
  if (block % pe_size != 0) {
    throw InvalidConfig("AccelConfig: block size " + std::to_string(block) +
                        " is not a multiple of the PE array size " + std::to_string(pe_size));
  }
  if (!(clock_hz > 0.0)) throw InvalidConfig("AccelConfig: clock must be positive");
}

std::uint64_t AccelConfig::lanes() const {
  return static_cast<std::uint64_t>(hcus) * pe_rows * pe_cols * pe_size * pe_size;
}

std::uint64_t block_mult_cycles(const AccelConfig& cfg) {
  const std::uint64_t b = cfg.block;
  const std::uint64_t p = cfg.pe_size;
  const std::uint64_t ideal = b * b * b / (p * p);
  return cfg.cost_model == CostModel::ideal ? ideal : ideal + 2 * p;
}

double peak_throughput(const AccelConfig& cfg) { return static_cast<double>(cfg.lanes()) * cfg.clock_hz; }

double latency_lower_bound(const VtrConfig& model, const AccelConfig& accel) {
  return static_cast<double>(count_macs(model)) / peak_throughput(accel);
}

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::uint64_t ecu_cycles(std::size_t rows, std::size_t cols, const AccelConfig& cfg) {
  const std::uint64_t b = cfg.block;
  const std::uint64_t padded = ceil_div(rows, b) * b * ceil_div(cols, b) * b;
  return ceil_div(padded, cfg.lanes());
}

DbmmPlan plan_dbmm(std::size_t row_blocks, std::span<const std::size_t> head_col_blocks,
                   std::size_t k_blocks, const AccelConfig& cfg, bool keep_tiles) {
  DbmmPlan plan;
  plan.row_blocks = row_blocks;
  plan.k_blocks = k_blocks;
  plan.waves = ceil_div(head_col_blocks.size(), cfg.hcus);
  const std::uint64_t per_pass = k_blocks * block_mult_cycles(cfg);
  const std::size_t grid = cfg.pes_per_hcu();

  std::vector<std::uint64_t> wave_cycles(plan.waves, 0);
  std::size_t col = 0;
  for (std::size_t h = 0; h < head_col_blocks.size(); ++h) {
    HeadAssignment ha;
    ha.head = h;
    ha.hcu = h % cfg.hcus;
    ha.wave = h / cfg.hcus;
    ha.col_block_begin = col;
    ha.col_block_end = col + head_col_blocks[h];
    col = ha.col_block_end;
    const std::size_t width = head_col_blocks[h];
    const std::size_t tiles = row_blocks * width;
    ha.cycles = ceil_div(tiles, grid) * per_pass;
    if (keep_tiles) {
      ha.tiles.reserve(tiles);
      for (std::size_t t = 0; t < tiles; ++t) {
        const std::size_t slot = t % grid;
        ha.tiles.push_back({t / width, ha.col_block_begin + t % width, t / grid, slot / cfg.pe_cols,
                            slot % cfg.pe_cols});
      }
    }
    wave_cycles[ha.wave] = std::max(wave_cycles[ha.wave], ha.cycles);
    plan.heads.push_back(std::move(ha));
  }
  plan.cycles = std::accumulate(wave_cycles.begin(), wave_cycles.end(), std::uint64_t{0});
  return plan;
}

std::vector<std::size_t> map_fictitious_heads(std::size_t col_blocks, std::size_t hcus) {
  if (col_blocks == 0) return {};
  const std::size_t groups = std::min(col_blocks, std::max<std::size_t>(hcus, 1));
  std::vector<std::size_t> sizes(groups, col_blocks / groups);
  for (std::size_t i = 0; i < col_blocks % groups; ++i) ++sizes[i];
  return sizes;
}

std::vector<std::size_t> map_fictitious_heads(const BlockedMatrix& w, std::size_t hcus) {
  return map_fictitious_heads(w.col_blocks(), hcus);
}

std::vector<std::size_t> head_blocks_from_columns(std::span<const std::size_t> widths, std::size_t block) {
  std::vector<std::size_t> blocks;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const bool last = i + 1 == widths.size();
    if (widths[i] == 0) throw PartitionError("head partition: empty head");
    if (!last && widths[i] % block != 0) {
      throw PartitionError("head partition: head " + std::to_string(i) + " width " +
                           std::to_string(widths[i]) + " is not a multiple of block size " +
                           std::to_string(block));
    }
    blocks.push_back(ceil_div(widths[i], block));
  }
  return blocks;
}

namespace {

void check_operands(const BlockedMatrix& a, const BlockedMatrix& w, const AccelConfig& cfg) {
  if (a.block_size() != w.block_size() || a.block_size() != cfg.block) {
    throw BlockSizeMismatch("hppu: operand block sizes (" + std::to_string(a.block_size()) + ", " +
                            std::to_string(w.block_size()) + ") must equal accelerator block " +
                            std::to_string(cfg.block));
  }
  if (a.logical_cols() != w.logical_rows()) {
    throw DimensionMismatch("hppu: inner dimensions differ (" + std::to_string(a.logical_cols()) + " vs " +
                            std::to_string(w.logical_rows()) + ")");
  }
  if (a.order() != BlockOrder::row_major || w.order() != BlockOrder::col_major) {
    throw InvalidConfig("hppu: expects block-row-major left and block-column-major right operand");
  }
}

// Executes every tile of `head` the way its PE would: k-blocks ascending.
void run_head(const HeadAssignment& head, const BlockedMatrix& a, const BlockedMatrix& w,
              BlockedMatrix& out, std::size_t col_offset) {
  for (const auto& t : head.tiles) {
    auto tile = out.block(t.row_block, t.col_block - col_offset);
    for (std::size_t kb = 0; kb < a.col_blocks(); ++kb) {
      block_mac(a.block(t.row_block, kb), w.block(kb, t.col_block - col_offset), tile, a.block_size());
    }
  }
}

}  // namespace

HppuResult hppu_dbmm(const BlockedMatrix& a, const BlockedMatrix& w,
                     std::span<const std::size_t> head_col_blocks, const AccelConfig& cfg) {
  cfg.validate();
  check_operands(a, w, cfg);
  std::size_t total = 0;
  for (auto c : head_col_blocks) {
    if (c == 0) throw PartitionError("hppu: empty head partition");
    total += c;
  }
  if (total != w.col_blocks()) {
    throw PartitionError("hppu: head partition covers " + std::to_string(total) + " column blocks, operand has " +
                         std::to_string(w.col_blocks()));
  }
  HppuResult r;
  r.plan = plan_dbmm(a.row_blocks(), head_col_blocks, a.col_blocks(), cfg);
  r.cycles = r.plan.cycles;
  r.out = BlockedMatrix(a.logical_rows(), w.logical_cols(), cfg.block, BlockOrder::row_major);
  for (const auto& head : r.plan.heads) run_head(head, a, w, r.out, 0);
  return r;
}

HppuHeadsResult hppu_dbmm_heads(std::span<const BlockedMatrix> a, std::span<const BlockedMatrix> w,
                                const AccelConfig& cfg) {
  cfg.validate();
  if (a.size() != w.size() || a.empty()) throw PartitionError("hppu: need one (left, right) pair per head");
  std::vector<std::size_t> widths;
  for (std::size_t h = 0; h < a.size(); ++h) {
    check_operands(a[h], w[h], cfg);
    if (a[h].row_blocks() != a[0].row_blocks() || a[h].col_blocks() != a[0].col_blocks()) {
      throw DimensionMismatch("hppu: heads must share the left operand geometry");
    }
    if (w[h].col_blocks() == 0) throw PartitionError("hppu: empty head");
    widths.push_back(w[h].col_blocks());
  }
  HppuHeadsResult r;
  r.plan = plan_dbmm(a[0].row_blocks(), widths, a[0].col_blocks(), cfg);
  r.cycles = r.plan.cycles;
  for (std::size_t h = 0; h < a.size(); ++h) {
    r.outs.emplace_back(a[h].logical_rows(), w[h].logical_cols(), cfg.block, BlockOrder::row_major);
    run_head(r.plan.heads[h], a[h], w[h], r.outs.back(), r.plan.heads[h].col_block_begin);
  }
  return r;
}

EcuResult ecu_op(EwiseFn f, const Matrix* mul, const Matrix* add, const Matrix& a, const AccelConfig& cfg) {
  cfg.validate();
  if (a.rows() == 0 || a.cols() == 0) throw DimensionMismatch("ecu: zero-size operand");
  auto same = [&](const Matrix* m) { return !m || (m->rows() == a.rows() && m->cols() == a.cols()); };
  if (!same(mul) || !same(add)) throw DimensionMismatch("ecu: operand shapes differ");

  const std::size_t b = cfg.block;
  const BlockedMatrix ab = to_blocked(a, b, BlockOrder::row_major);
  std::optional<BlockedMatrix> mb, cb;
  if (mul) mb = to_blocked(*mul, b, BlockOrder::row_major);
  if (add) cb = to_blocked(*add, b, BlockOrder::row_major);
  BlockedMatrix out(a.rows(), a.cols(), b, BlockOrder::row_major);

  // One PE per output tile; padding lanes stay zero.
  for (std::size_t i = 0; i < ab.row_blocks(); ++i) {
    for (std::size_t j = 0; j < ab.col_blocks(); ++j) {
      const std::size_t rows = std::min(b, a.rows() - i * b);
      const std::size_t cols = std::min(b, a.cols() - j * b);
      auto o = out.block(i, j);
      auto x = ab.block(i, j);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t e = r * b + c;
          float v = x[e];
          if (mb) v = v * mb->block(i, j)[e];
          if (cb) v = v + cb->block(i, j)[e];
          o[e] = apply(f, v);
        }
      }
    }
  }
  return EcuResult{from_blocked(out), ecu_cycles(a.rows(), a.cols(), cfg)};
}

}  // namespace vtr::accel
