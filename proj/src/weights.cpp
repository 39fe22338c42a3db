#include "vtr/weights.hpp"

#include <cmath>
#include <numbers>

#include "vtr/errors.hpp"

namespace vtr {

namespace {

template <typename T, typename W>
std::vector<BasicTensorRef<T>> collect(W& w) {
  std::vector<BasicTensorRef<T>> refs;
  auto u32 = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  auto vec = [&](std::string name, auto& v) {
    refs.push_back({std::move(name), {u32(v.size())}, std::span<T>(v.data(), v.size())});
  };
  auto mat = [&](std::string name, auto& m) {
    refs.push_back({std::move(name), {u32(m.rows()), u32(m.cols())}, std::span<T>(m.values())});
  };
  auto ln = [&](const std::string& prefix, auto& p) {
    vec(prefix + ".gamma", p.gamma);
    vec(prefix + ".beta", p.beta);
  };
  auto linear = [&](const std::string& prefix, auto& p) {
    mat(prefix + ".weight", p.weight);
    vec(prefix + ".bias", p.bias);
  };

  ln("embed.ln", w.embed_ln);
  linear("embed.linear", w.embed);
  vec("cls_token", w.cls_token);
  mat("pos_embed", w.pos_embed);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    auto& layer = w.layers[i];
    const std::string p = "layer" + std::to_string(i);
    ln(p + ".ln1", layer.ln1);
    linear(p + ".attn.q", layer.q);
    linear(p + ".attn.k", layer.k);
    linear(p + ".attn.v", layer.v);
    refs.push_back({p + ".attn.temperature", {1u}, std::span<T>(&layer.temperature, 1)});
    linear(p + ".attn.proj", layer.proj);
    ln(p + ".ln2", layer.ln2);
    linear(p + ".mlp.fc1", layer.fc1);
    linear(p + ".mlp.fc2", layer.fc2);
  }
  ln("head.ln", w.head_ln);
  linear("head.linear", w.head);
  return refs;
}

}  // namespace

bool WeightSet::operator==(const WeightSet& other) const {
  auto a = tensor_refs(*this);
  auto b = tensor_refs(other);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].dims != b[i].dims) return false;
    if (!std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin(), b[i].values.end())) {
      return false;
    }
  }
  return true;
}

std::vector<TensorRef> tensor_refs(WeightSet& w) { return collect<float>(w); }
std::vector<ConstTensorRef> tensor_refs(const WeightSet& w) { return collect<const float>(w); }

WeightSet allocate_weights(const VtrConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.dim;
  auto ln = [](std::size_t n) { return LayerNormParams{std::vector<float>(n, 1.0f), std::vector<float>(n, 0.0f)}; };
  auto linear = [](std::size_t in, std::size_t out) {
    return LinearParams{Matrix(in, out), std::vector<float>(out, 0.0f)};
  };
  WeightSet w;
  w.embed_ln = ln(cfg.raw_dim());
  w.embed = linear(cfg.raw_dim(), d);
  w.cls_token.assign(d, 0.0f);
  w.pos_embed = Matrix(cfg.sequence(), d);
  w.layers.resize(cfg.depth);
  for (auto& layer : w.layers) {
    layer.ln1 = ln(d);
    layer.q = linear(d, d);
    layer.k = linear(d, d);
    layer.v = linear(d, d);
    layer.temperature = std::sqrt(static_cast<float>(cfg.head_dim()));
    layer.proj = linear(d, d);
    layer.ln2 = ln(d);
    layer.fc1 = linear(d, cfg.hidden_dim());
    layer.fc2 = linear(cfg.hidden_dim(), d);
  }
  w.head_ln = ln(d);
  w.head = linear(d, cfg.num_classes);
  return w;
}

std::vector<std::pair<std::string, std::vector<std::uint32_t>>> tensor_layout(const VtrConfig& cfg) {
  const WeightSet w = allocate_weights(cfg);
  std::vector<std::pair<std::string, std::vector<std::uint32_t>>> layout;
  for (auto& r : tensor_refs(w)) layout.emplace_back(r.name, r.dims);
  return layout;
}

WeightSet random_init(const VtrConfig& cfg, std::uint64_t seed) {
  WeightSet w = allocate_weights(cfg);
  SeededRng rng(seed);
  auto fill = [&](std::span<float> v) {
    for (auto& x : v) x = static_cast<float>(rng.truncated_normal(0.02));
  };
  fill(w.embed.weight.values());
  fill(w.cls_token);
  for (auto& layer : w.layers) {
    for (auto* p : {&layer.q, &layer.k, &layer.v, &layer.proj, &layer.fc1, &layer.fc2}) {
      fill(p->weight.values());
    }
  }
  fill(w.head.weight.values());
  return w;
}

void validate_weights(const WeightSet& w, const VtrConfig& cfg) {
  cfg.validate();
  if (w.layers.size() != cfg.depth) {
    throw ShapeInconsistent("weights: expected " + std::to_string(cfg.depth) + " layers, got " +
                            std::to_string(w.layers.size()));
  }
  const auto expected = tensor_layout(cfg);
  const auto actual = tensor_refs(w);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (actual[i].dims != expected[i].second || actual[i].values.size() != [&] {
          std::size_t n = 1;
          for (auto d : expected[i].second) n *= d;
          return n;
        }()) {
      throw ShapeInconsistent("weights: tensor '" + expected[i].first + "' has the wrong shape");
    }
  }
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const float t = w.layers[i].temperature;
    if (!(t > 0.0f) || !std::isfinite(t)) {
      throw InvalidConfig("weights: layer" + std::to_string(i) + " temperature must be positive");
    }
  }
}

std::size_t element_count(const WeightSet& w) {
  std::size_t n = 0;
  for (const auto& r : tensor_refs(w)) n += r.values.size();
  return n;
}

SeededRng::SeededRng(std::uint64_t seed) : engine_(seed) {}

double SeededRng::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SeededRng::truncated_normal(double stddev, double cut_sigmas) {
  for (;;) {
    const double z = normal();
    if (std::abs(z) <= cut_sigmas) return z * stddev;
  }
}

}  // namespace vtr
