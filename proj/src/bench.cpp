#include "vtr/bench.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <numeric>
#include <thread>

#include "vtr/errors.hpp"
#include "vtr/model.hpp"

namespace vtr {

double BenchResult::min() const {
  return latencies.empty() ? 0.0 : *std::min_element(latencies.begin(), latencies.end());
}

double BenchResult::median() const {
  if (latencies.empty()) return 0.0;
  std::vector<double> s = latencies;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double BenchResult::mean() const {
  if (latencies.empty()) return 0.0;
  return std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
}

double BenchResult::images_per_second() const {
  return wall_seconds > 0.0 ? static_cast<double>(latencies.size()) / wall_seconds : 0.0;
}

BenchResult run_bench(const Image& img, const WeightSet& w, const VtrConfig& cfg, const BenchOptions& opts) {
  if (opts.iters == 0) throw InvalidConfig("bench: iters must be at least 1");
  if (opts.threads == 0) throw InvalidConfig("bench: threads must be at least 1");
  cfg.validate();
  validate_weights(w, cfg);
  using clock = std::chrono::steady_clock;

  std::vector<std::vector<double>> per_thread(opts.threads, std::vector<double>(opts.iters));
  clock::time_point start;
  std::barrier warmed(static_cast<std::ptrdiff_t>(opts.threads), [&]() noexcept { start = clock::now(); });
  auto worker = [&](std::size_t t) {
    for (std::size_t i = 0; i < opts.warmup; ++i) forward(img, w, cfg);
    warmed.arrive_and_wait();
    for (std::size_t i = 0; i < opts.iters; ++i) {
      const auto t0 = clock::now();
      forward(img, w, cfg);
      per_thread[t][i] = std::chrono::duration<double>(clock::now() - t0).count();
    }
  };

  BenchResult r;
  r.threads = opts.threads;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < opts.threads; ++t) pool.emplace_back(worker, t);
    worker(0);
  }
  r.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  for (auto& v : per_thread) r.latencies.insert(r.latencies.end(), v.begin(), v.end());
  return r;
}

}  // namespace vtr
