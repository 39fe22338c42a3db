#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vtr/config.hpp"
#include "vtr/matrix.hpp"

namespace vtr {

struct LayerNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
};

/// y = x * weight + bias, weight stored [in, out].
struct LinearParams {
  Matrix weight;
  std::vector<float> bias;
};

struct EncoderLayerParams {
  LayerNormParams ln1;
  LinearParams q, k, v;
  float temperature = 1.0f;  // one learned scalar per layer, shared by all heads
  LinearParams proj;
  LayerNormParams ln2;
  LinearParams fc1, fc2;
};

/// All learned tensors of one model.
struct WeightSet {
  LayerNormParams embed_ln;
  LinearParams embed;
  std::vector<float> cls_token;
  Matrix pos_embed;
  std::vector<EncoderLayerParams> layers;
  LayerNormParams head_ln;
  LinearParams head;

  bool operator==(const WeightSet& other) const;
};

/// One named tensor inside a WeightSet.
template <typename T>
struct BasicTensorRef {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::span<T> values;
};
using TensorRef = BasicTensorRef<float>;
using ConstTensorRef = BasicTensorRef<const float>;

/// Every tensor of `w` in canonical file order. The names form the binding
/// contract with external tooling:
///
///   embed.ln.gamma [D_raw]            embed.ln.beta [D_raw]
///   embed.linear.weight [D_raw, D]    embed.linear.bias [D]
///   cls_token [D]                     pos_embed [N+1, D]
///   layer{i}.ln1.gamma / beta [D]
///   layer{i}.attn.{q,k,v}.weight [D, D]    layer{i}.attn.{q,k,v}.bias [D]
///   layer{i}.attn.temperature [1]
///   layer{i}.attn.proj.weight [D, D]       layer{i}.attn.proj.bias [D]
///   layer{i}.ln2.gamma / beta [D]
///   layer{i}.mlp.fc1.weight [D, rD]   layer{i}.mlp.fc1.bias [rD]
///   layer{i}.mlp.fc2.weight [rD, D]   layer{i}.mlp.fc2.bias [D]
///   head.ln.gamma / beta [D]
///   head.linear.weight [D, classes]   head.linear.bias [classes]
///
/// Linear weights are [in, out]; the engine computes x * W + b.
std::vector<TensorRef> tensor_refs(WeightSet& w);
std::vector<ConstTensorRef> tensor_refs(const WeightSet& w);

/// Expected (name, dims) list for a configuration, same order as tensor_refs.
std::vector<std::pair<std::string, std::vector<std::uint32_t>>> tensor_layout(const VtrConfig& cfg);

/// Zero-filled weight set with the right shapes (gamma = 1, temperature = sqrt(d_k)).
WeightSet allocate_weights(const VtrConfig& cfg);

/// Seeded initialization: truncated normal (std 0.02, cut at 2 std) for
/// matrices and the class token, zero biases and positional embeddings,
/// unit gamma, zero beta, temperature sqrt(d_k). Identical across platforms
/// for the same seed.
WeightSet random_init(const VtrConfig& cfg, std::uint64_t seed);

/// Throws ShapeInconsistent / InvalidConfig if `w` does not fit `cfg`.
void validate_weights(const WeightSet& w, const VtrConfig& cfg);

/// Total scalar count of a materialized weight set.
std::size_t element_count(const WeightSet& w);

/// Portable seeded generator (mt19937_64 underneath, explicit transforms so
/// results do not depend on the standard library's distributions).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);
  double uniform();                 // [0, 1)
  double normal();                  // N(0, 1), Box-Muller
  double truncated_normal(double stddev, double cut_sigmas = 2.0);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vtr
