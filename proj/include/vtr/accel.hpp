#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtr/blocked.hpp"
#include "vtr/config.hpp"
#include "vtr/ewise.hpp"
#include "vtr/matrix.hpp"
#include "vtr/model.hpp"
#include "vtr/spt.hpp"
#include "vtr/weights.hpp"

namespace vtr::accel {

enum class CostModel {
  ideal,       // a PE sustains p_pe^2 MACs per cycle
  fill_drain,  // ideal + 2*p_pe cycles per b x b x b tile pass
};

enum class Unit { hppu, ecu };

enum class StageKind {
  matmul,       // model matrix product; counted in the analytic MAC total
  reduction,    // aggregation (multiply by ones, row max)
  elementwise,  // f(A*B + C)
  relayout,     // block re-layout / head split / concat
};

std::string_view to_string(CostModel m);
std::string_view to_string(Unit u);
std::string_view to_string(StageKind k);

/// Accelerator geometry.
struct AccelConfig {
  std::size_t hcus = 4;       // p_h, head compute units
  std::size_t pe_rows = 12;   // p_t, PEs per HCU along the token axis
  std::size_t pe_cols = 2;    // p_c, PEs per HCU along the embedding axis
  std::size_t pe_size = 8;    // p_pe, systolic array side inside a PE
  std::size_t block = 16;     // b, tile side; multiple of pe_size
  double clock_hz = 300e6;
  CostModel cost_model = CostModel::ideal;

  /// Throws InvalidConfig on zero counts or b not a multiple of p_pe.
  void validate() const;

  std::size_t pes_per_hcu() const { return pe_rows * pe_cols; }
  /// p_h * p_t * p_c * p_pe^2: MACs per cycle of the HPPU, element lanes of the ECU.
  std::uint64_t lanes() const;
};

/// Cycles one PE needs for a b x b x b tile product.
std::uint64_t block_mult_cycles(const AccelConfig& cfg);

/// Peak HPPU rate in MAC/s.
double peak_throughput(const AccelConfig& cfg);

/// count_macs(model) / peak_throughput(accel), in seconds.
double latency_lower_bound(const VtrConfig& model, const AccelConfig& accel);

/// ceil(padded elements / lanes) for an element-wise pass over a rows x cols matrix.
std::uint64_t ecu_cycles(std::size_t rows, std::size_t cols, const AccelConfig& cfg);

// ---------------------------------------------------------------------------
// Scheduling

struct TileAssignment {
  std::size_t row_block = 0;
  std::size_t col_block = 0;  // in the combined output column-block index space
  std::size_t pass = 0;       // sequential pass of the HCU's PE grid
  std::size_t pe_row = 0;
  std::size_t pe_col = 0;
};

struct HeadAssignment {
  std::size_t head = 0;
  std::size_t hcu = 0;
  std::size_t wave = 0;
  std::size_t col_block_begin = 0;
  std::size_t col_block_end = 0;
  std::uint64_t cycles = 0;
  std::vector<TileAssignment> tiles;
};

/// Mapping of one DBMM onto the HPPU. Heads go to HCUs round-robin in waves
/// of p_h; inside an HCU output tiles are dealt row-major onto the
/// p_t x p_c PE grid, one tile per PE per pass.
struct DbmmPlan {
  std::size_t row_blocks = 0;
  std::size_t k_blocks = 0;
  std::size_t waves = 0;
  std::vector<HeadAssignment> heads;
  std::uint64_t cycles = 0;  // sum over waves of the slowest HCU in the wave
};

DbmmPlan plan_dbmm(std::size_t row_blocks, std::span<const std::size_t> head_col_blocks,
                   std::size_t k_blocks, const AccelConfig& cfg, bool keep_tiles = true);

/// Splits `col_blocks` column blocks into at most p_h contiguous groups whose
/// sizes differ by at most one block (larger groups first).
std::vector<std::size_t> map_fictitious_heads(std::size_t col_blocks, std::size_t hcus);
std::vector<std::size_t> map_fictitious_heads(const BlockedMatrix& w, std::size_t hcus);

/// Converts head widths in columns to column-block counts; throws
/// PartitionError when an interior boundary is not on the block grid.
std::vector<std::size_t> head_blocks_from_columns(std::span<const std::size_t> widths, std::size_t block);

// ---------------------------------------------------------------------------
// Compute primitives

struct HppuResult {
  BlockedMatrix out;
  DbmmPlan plan;
  std::uint64_t cycles = 0;
};

/// DBMM on the HPPU. `head_col_blocks` partitions the columns of `w` (in
/// blocks). The result is bit-identical to vtr::dbmm.
HppuResult hppu_dbmm(const BlockedMatrix& a, const BlockedMatrix& w,
                     std::span<const std::size_t> head_col_blocks, const AccelConfig& cfg);

struct HppuHeadsResult {
  std::vector<BlockedMatrix> outs;
  DbmmPlan plan;
  std::uint64_t cycles = 0;
};

/// Independent per-head products a[h] * w[h], one head per HCU.
HppuHeadsResult hppu_dbmm_heads(std::span<const BlockedMatrix> a, std::span<const BlockedMatrix> w,
                                const AccelConfig& cfg);

struct EcuResult {
  Matrix out;
  std::uint64_t cycles = 0;
};

/// f(a * mul + add) on the ECU; bit-identical to ewise_ref.
EcuResult ecu_op(EwiseFn f, const Matrix* mul, const Matrix* add, const Matrix& a, const AccelConfig& cfg);

// ---------------------------------------------------------------------------
// Reports

struct SimStage {
  std::string name;
  Unit unit = Unit::ecu;
  StageKind kind = StageKind::elementwise;
  std::uint64_t cycles = 0;
  std::uint64_t ops = 0;          // MACs (HPPU) or element operations (ECU)
  std::uint64_t bytes_in = 0;     // buffer traffic, reported only
  std::uint64_t bytes_out = 0;
};

struct SimReport {
  AccelConfig accel;
  std::vector<SimStage> stages;
  std::vector<std::string> notes;
  std::uint64_t analytic_macs = 0;  // count_macs of the simulated model
  double lower_bound_seconds = 0.0;

  std::uint64_t total_cycles() const;
  std::uint64_t cycles_on(Unit u) const;
  /// Sum of ops over matmul stages.
  std::uint64_t model_macs() const;
  double latency_seconds() const;
  /// analytic MACs / (peak MACs per cycle * total cycles).
  double utilization() const;

  std::string to_text() const;
  std::string to_json(int indent = 2) const;
};

struct LayerNormSim {
  Matrix out;
  std::uint64_t cycles = 0;
  std::vector<SimStage> stages;
};

/// Layer norm as HPPU sums (multiply by ones) plus ECU centering, squaring,
/// rsqrt and affine passes. Bit-identical to vtr::layer_norm.
LayerNormSim sim_layer_norm(const Matrix& x, std::span<const float> gamma, std::span<const float> beta,
                            const AccelConfig& cfg, float eps = kLayerNormEps,
                            const std::string& prefix = "ln");

struct ScheduledOp {
  std::string stage;
  Unit unit = Unit::ecu;
  std::optional<DbmmPlan> plan;  // HPPU stages only
};

struct Schedule {
  std::vector<ScheduledOp> ops;
};

struct SimOptions {
  bool record_schedule = false;
};

struct SimResult {
  Logits logits;
  SimReport report;
  Schedule schedule;
};

/// Runs the whole model through the simulated HPPU/ECU flow. Shifting and
/// tokenization run on the host and are not timed.
SimResult simulate_forward(const Image& img, const WeightSet& w, const VtrConfig& model,
                           const AccelConfig& accel, const SimOptions& options = {});

}  // namespace vtr::accel
