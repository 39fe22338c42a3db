#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vtr/config.hpp"
#include "vtr/matrix.hpp"
#include "vtr/spt.hpp"
#include "vtr/weights.hpp"

namespace vtr {

/// Value written over the diagonal of every scaled attention matrix.
inline constexpr float kMaskSentinel = -1e9f;
inline constexpr float kLayerNormEps = 1e-6f;

/// Named intermediate tensors of one forward pass, in execution order.
///
/// Stage names:
///   input                  H x (W*C)
///   spt                    H x (W*(N_s+1)*C)
///   tokens                 N x D_raw
///   embed                  (N+1) x D
///   layer{i}.ln1           (N+1) x D
///   layer{i}.attn_scores   (heads*(N+1)) x (N+1), head h in rows [h(N+1), (h+1)(N+1))
///   layer{i}.msa_out       (N+1) x D   (after the output projection)
///   layer{i}.res1          (N+1) x D
///   layer{i}.ln2           (N+1) x D
///   layer{i}.mlp_out       (N+1) x D
///   layer{i}.out           (N+1) x D
///   head_ln                1 x D       (class-token row)
///   logits                 1 x classes
class ActivationTrace {
 public:
  void record(std::string name, Matrix value);
  const Matrix* find(std::string_view name) const;
  const Matrix& at(std::string_view name) const;
  const std::vector<std::pair<std::string, Matrix>>& entries() const { return entries_; }
  std::vector<std::string> names() const;

 private:
  std::vector<std::pair<std::string, Matrix>> entries_;
};

/// Every stage name a forward pass of `cfg` records, in order.
std::vector<std::string> trace_stage_names(const VtrConfig& cfg);

struct Logits {
  std::vector<float> values;

  std::size_t argmax() const;
  /// Softmax of the logits.
  std::vector<float> probabilities() const;
};

/// Per-row normalization with population variance, then affine.
Matrix layer_norm(const Matrix& x, std::span<const float> gamma, std::span<const float> beta,
                  float eps = kLayerNormEps);

/// x * W + b.
Matrix linear(const Matrix& x, const LinearParams& p);

/// concat(cls, LN(tokens) * W + b) + positional embeddings.
Matrix embed(const TokenMatrix& tokens, const WeightSet& w);

/// Row-wise softmax with max subtraction, in place.
void softmax_rows(Matrix& m);

/// Locality self-attention: per head, scores = softmax(mask(Q_h K_h^T / temperature)),
/// output = concat_h(scores_h V_h) * W_p + b. When `scores` is non-null the
/// stacked per-head score matrices are written to it.
Matrix lsa_attention(const Matrix& z, const EncoderLayerParams& layer, const VtrConfig& cfg,
                     Matrix* scores = nullptr);

/// GELU(x W1 + b1) W2 + b2.
Matrix mlp_block(const Matrix& x, const LinearParams& fc1, const LinearParams& fc2);

/// Pre-norm encoder layer. `prefix` names trace stages when `trace` is set.
Matrix encoder_layer(const Matrix& z, const EncoderLayerParams& layer, const VtrConfig& cfg,
                     ActivationTrace* trace = nullptr, const std::string& prefix = {});

/// Host-side preprocessing: shift, concatenate, tokenize.
TokenMatrix preprocess(const Image& img, const VtrConfig& cfg);

/// Full inference for one image. Reentrant; `trace` is per-call state.
Logits forward(const Image& img, const WeightSet& w, const VtrConfig& cfg,
               ActivationTrace* trace = nullptr);

}  // namespace vtr
