#pragma once

#include <cstddef>
#include <vector>

#include "vtr/config.hpp"
#include "vtr/spt.hpp"
#include "vtr/weights.hpp"

namespace vtr {

struct BenchOptions {
  std::size_t iters = 10;    // timed forwards per thread
  std::size_t threads = 1;
  std::size_t warmup = 1;    // untimed forwards per thread
};

struct BenchResult {
  std::vector<double> latencies;  // seconds, one per timed forward
  std::size_t threads = 1;
  double wall_seconds = 0.0;      // timed section, all threads

  double min() const;
  double median() const;
  double mean() const;
  /// Timed images over wall-clock time.
  double images_per_second() const;
};

/// Times `forward` on one image. Worker threads share `w` read-only.
BenchResult run_bench(const Image& img, const WeightSet& w, const VtrConfig& cfg, const BenchOptions& opts);

}  // namespace vtr
