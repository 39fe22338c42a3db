#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "vtr/config.hpp"
#include "vtr/matrix.hpp"
#include "vtr/spt.hpp"
#include "vtr/weights.hpp"

namespace vtr::test {

inline Matrix random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = static_cast<float>(lo + (hi - lo) * rng.uniform());
  return m;
}

inline std::vector<float> random_vector(SeededRng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(lo + (hi - lo) * rng.uniform());
  return v;
}

inline std::size_t random_size(SeededRng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

inline Image random_image(SeededRng& rng, const VtrConfig& cfg) {
  Image img(cfg.image_height, cfg.image_width, cfg.channels);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

/// Small but non-trivial model: 16x16 image, 4x4 patches (16 tokens).
inline VtrConfig small_config() {
  VtrConfig c;
  c.image_height = 16;
  c.image_width = 16;
  c.patch = 4;
  c.dim = 24;
  c.depth = 2;
  c.heads = 3;
  c.num_classes = 5;
  return c;
}

/// Weights with every tensor randomized, including biases, LN affine and
/// positional embeddings, so no code path is hidden behind zeros.
inline WeightSet dense_random_weights(const VtrConfig& cfg, std::uint64_t seed) {
  WeightSet w = allocate_weights(cfg);
  SeededRng rng(seed);
  for (auto& t : tensor_refs(w)) {
    const bool temperature = t.name.ends_with("temperature");
    const bool gamma = t.name.ends_with("gamma");
    const double scale = t.dims.size() == 2 ? 1.0 / std::sqrt(static_cast<double>(t.dims[0])) : 0.1;
    for (auto& v : t.values) {
      if (temperature) {
        v = static_cast<float>(std::sqrt(cfg.head_dim()) * (0.5 + rng.uniform()));
      } else if (gamma) {
        v = static_cast<float>(1.0 + 0.2 * (rng.uniform() - 0.5));
      } else {
        v = static_cast<float>(scale * rng.normal());
      }
    }
  }
  return w;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("vtr-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace vtr::test
