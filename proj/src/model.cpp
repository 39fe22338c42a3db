#include "vtr/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vtr/errors.hpp"
#include "vtr/ewise.hpp"

namespace vtr {

void ActivationTrace::record(std::string name, Matrix value) {
  entries_.emplace_back(std::move(name), std::move(value));
}

const Matrix* ActivationTrace::find(std::string_view name) const {
  for (const auto& [n, m] : entries_)
    if (n == name) return &m;
  return nullptr;
}

const Matrix& ActivationTrace::at(std::string_view name) const {
  const Matrix* m = find(name);
  if (!m) throw std::out_of_range("trace has no stage '" + std::string(name) + "'");
  return *m;
}

std::vector<std::string> ActivationTrace::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

std::vector<std::string> trace_stage_names(const VtrConfig& cfg) {
  std::vector<std::string> names = {"input", "spt", "tokens", "embed"};
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    for (const char* s : {"ln1", "attn_scores", "msa_out", "res1", "ln2", "mlp_out", "out"}) {
      names.push_back(p + s);
    }
  }
  names.push_back("head_ln");
  names.push_back("logits");
  return names;
}

std::size_t Logits::argmax() const {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<float> Logits::probabilities() const {
  std::vector<float> p(values.size());
  if (values.empty()) return p;
  const float m = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    p[i] = std::exp(values[i] - m);
    sum += p[i];
  }
  for (auto& x : p) x = static_cast<float>(x / sum);
  return p;
}

Matrix layer_norm(const Matrix& x, std::span<const float> gamma, std::span<const float> beta, float eps) {
  if (gamma.size() != x.cols() || beta.size() != x.cols()) {
    throw DimensionMismatch("layer_norm: gamma/beta length " + std::to_string(gamma.size()) +
                            " does not match width " + std::to_string(x.cols()));
  }
  const std::size_t d = x.cols();
  const float inv_d = 1.0f / static_cast<float>(d);
  Matrix out(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    float sum = 0.0f;
    for (float v : in) sum += v;
    const float mean = sum * inv_d;
    float sq = 0.0f;
    for (float v : in) {
      const float c = v - mean;
      sq += c * c;
    }
    const float var = sq * inv_d;
    const float rstd = 1.0f / std::sqrt(var + eps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < d; ++c) o[c] = (in[c] - mean) * rstd * gamma[c] + beta[c];
  }
  return out;
}

Matrix linear(const Matrix& x, const LinearParams& p) {
  Matrix y = matmul(x, p.weight);
  add_row_vector(y, p.bias);
  return y;
}

Matrix embed(const TokenMatrix& tokens, const WeightSet& w) {
  if (tokens.raw_dim() != w.embed_ln.gamma.size()) {
    throw DimensionMismatch("embed: token width " + std::to_string(tokens.raw_dim()) +
                            " does not match weights " + std::to_string(w.embed_ln.gamma.size()));
  }
  if (w.pos_embed.rows() != tokens.tokens() + 1) {
    throw DimensionMismatch("embed: positional embedding rows do not match token count + 1");
  }
  const Matrix projected = linear(layer_norm(tokens.data, w.embed_ln.gamma, w.embed_ln.beta), w.embed);
  const std::size_t d = projected.cols();
  Matrix z(tokens.tokens() + 1, d);
  std::copy(w.cls_token.begin(), w.cls_token.end(), z.row(0).begin());
  std::copy(projected.values().begin(), projected.values().end(), z.values().begin() + d);
  for (std::size_t i = 0; i < z.size(); ++i) z.values()[i] += w.pos_embed.values()[i];
  return z;
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const float mx = *std::max_element(row.begin(), row.end());
    float sum = 0.0f;
    for (auto& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : row) v = v / sum;
  }
}

Matrix lsa_attention(const Matrix& z, const EncoderLayerParams& layer, const VtrConfig& cfg, Matrix* scores) {
  if (z.cols() != cfg.dim) throw DimensionMismatch("lsa_attention: input width does not match dim");
  if (!(layer.temperature > 0.0f)) throw InvalidConfig("lsa_attention: temperature must be positive");
  const std::size_t n = z.rows();
  const std::size_t dk = cfg.head_dim();
  const Matrix q = linear(z, layer.q);
  const Matrix k = linear(z, layer.k);
  const Matrix v = linear(z, layer.v);
  Matrix o(n, cfg.dim);
  if (scores) *scores = Matrix(cfg.heads * n, n);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Matrix qh = slice_cols(q, h * dk, (h + 1) * dk);
    const Matrix kt = transpose(slice_cols(k, h * dk, (h + 1) * dk));
    Matrix a = matmul(qh, kt);
    for (auto& x : a.values()) x = x / layer.temperature;
    for (std::size_t i = 0; i < n; ++i) a(i, i) = kMaskSentinel;
    softmax_rows(a);
    const Matrix oh = matmul(a, slice_cols(v, h * dk, (h + 1) * dk));
    for (std::size_t r = 0; r < n; ++r)
      std::copy(oh.row(r).begin(), oh.row(r).end(), o.row(r).begin() + h * dk);
    if (scores) std::copy(a.values().begin(), a.values().end(), scores->values().begin() + h * n * n);
  }
  return linear(o, layer.proj);
}

Matrix mlp_block(const Matrix& x, const LinearParams& fc1, const LinearParams& fc2) {
  Matrix h = linear(x, fc1);
  for (auto& v : h.values()) v = gelu(v);
  return linear(h, fc2);
}

namespace {

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
  return out;
}

}  // namespace

Matrix encoder_layer(const Matrix& z, const EncoderLayerParams& layer, const VtrConfig& cfg,
                     ActivationTrace* trace, const std::string& prefix) {
  const Matrix ln1 = layer_norm(z, layer.ln1.gamma, layer.ln1.beta);
  Matrix scores;
  const Matrix msa = lsa_attention(ln1, layer, cfg, trace ? &scores : nullptr);
  const Matrix res1 = add(z, msa);
  const Matrix ln2 = layer_norm(res1, layer.ln2.gamma, layer.ln2.beta);
  const Matrix mlp = mlp_block(ln2, layer.fc1, layer.fc2);
  Matrix out = add(res1, mlp);
  if (trace) {
    trace->record(prefix + "ln1", ln1);
    trace->record(prefix + "attn_scores", std::move(scores));
    trace->record(prefix + "msa_out", msa);
    trace->record(prefix + "res1", res1);
    trace->record(prefix + "ln2", ln2);
    trace->record(prefix + "mlp_out", mlp);
    trace->record(prefix + "out", out);
  }
  return out;
}

namespace {

void check_image(const Image& img, const VtrConfig& cfg) {
  if (img.height() != cfg.image_height || img.width() != cfg.image_width || img.channels() != cfg.channels) {
    throw DimensionMismatch("forward: image is " + std::to_string(img.height()) + "x" +
                            std::to_string(img.width()) + "x" + std::to_string(img.channels()) +
                            ", model expects " + std::to_string(cfg.image_height) + "x" +
                            std::to_string(cfg.image_width) + "x" + std::to_string(cfg.channels));
  }
}

}  // namespace

TokenMatrix preprocess(const Image& img, const VtrConfig& cfg) {
  check_image(img, cfg);
  return tokenize(spt_transform(img, cfg.shift_spec()), cfg.patch);
}

Logits forward(const Image& img, const WeightSet& w, const VtrConfig& cfg, ActivationTrace* trace) {
  check_image(img, cfg);
  Image stack;
  if (trace) {
    trace->record("input", img.as_matrix());
    stack = spt_transform(img, cfg.shift_spec());
    trace->record("spt", stack.as_matrix());
  }
  const TokenMatrix tokens = trace ? tokenize(stack, cfg.patch) : preprocess(img, cfg);
  if (trace) trace->record("tokens", tokens.data);

  Matrix z = embed(tokens, w);
  if (trace) trace->record("embed", z);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    z = encoder_layer(z, w.layers[i], cfg, trace, "layer" + std::to_string(i) + ".");
  }
  const Matrix cls = slice_rows(z, 0, 1);
  const Matrix normed = layer_norm(cls, w.head_ln.gamma, w.head_ln.beta);
  const Matrix logits = linear(normed, w.head);
  if (trace) {
    trace->record("head_ln", normed);
    trace->record("logits", logits);
  }
  return Logits{logits.data()};
}

}  // namespace vtr
