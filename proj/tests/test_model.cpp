#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "vtr/errors.hpp"
#include "vtr/model.hpp"

using namespace vtr;
using vtr::test::dense_random_weights;
using vtr::test::random_matrix;
using vtr::test::small_config;

namespace {

EncoderLayerParams random_layer(const VtrConfig& cfg, std::uint64_t seed) {
  return dense_random_weights(cfg, seed).layers.at(0);
}

}  // namespace

// ---- layer norm ------------------------------------------------------------

TEST(LayerNorm, ConstantRowCollapsesToBeta) {
  const std::vector<float> g(4, 1.0f), b(4, 0.0f);
  EXPECT_EQ(layer_norm(Matrix{{5, 5, 5, 5}}, g, b), Matrix(1, 4, 0.0f));
  const std::vector<float> beta = {1, 2, 3, 4};
  EXPECT_EQ(layer_norm(Matrix{{5, 5, 5, 5}}, g, beta), (Matrix{{1, 2, 3, 4}}));
}

TEST(LayerNorm, AlreadyNormalized) {
  const std::vector<float> g(2, 1.0f), b(2, 0.0f);
  EXPECT_EQ(layer_norm(Matrix{{1, -1}}, g, b, 0.0f), (Matrix{{1, -1}}));
}

TEST(LayerNorm, RowStatistics) {
  SeededRng rng(31);
  const Matrix x = random_matrix(rng, 121, 320, -3.0, 5.0);
  const std::vector<float> g(320, 1.0f), b(320, 0.0f);
  const Matrix y = layer_norm(x, g, b);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (float v : y.row(r)) mean += v;
    mean /= 320.0;
    for (float v : y.row(r)) var += (v - mean) * (v - mean);
    var /= 320.0;
    EXPECT_LT(std::abs(mean), 1e-5);
    EXPECT_NEAR(std::sqrt(var), 1.0, 1e-3);
  }
}

TEST(LayerNorm, WidthMismatch) {
  const std::vector<float> g(3, 1.0f), b(3, 0.0f);
  EXPECT_THROW(layer_norm(Matrix(2, 4), g, b), DimensionMismatch);
}

// ---- embedding -------------------------------------------------------------

TEST(Embed, Shape) {
  VtrConfig cfg;  // 88x88, P=8, D=44
  const WeightSet w = random_init(cfg, 1);
  const TokenMatrix tokens{Matrix(cfg.tokens(), cfg.raw_dim(), 0.5f)};
  const Matrix z = embed(tokens, w);
  EXPECT_EQ(z.rows(), 122u);
  EXPECT_EQ(z.cols(), 44u);
}

TEST(Embed, ZeroWeightsLeaveClassToken) {
  const VtrConfig cfg = small_config();
  WeightSet w = allocate_weights(cfg);
  SeededRng rng(2);
  w.cls_token = test::random_vector(rng, cfg.dim);
  const Matrix z = embed(TokenMatrix{Matrix(cfg.tokens(), cfg.raw_dim())}, w);
  for (std::size_t c = 0; c < cfg.dim; ++c) EXPECT_EQ(z(0, c), w.cls_token[c]);
  for (std::size_t r = 1; r < z.rows(); ++r)
    for (float v : z.row(r)) EXPECT_EQ(v, 0.0f);
}

// ---- attention -------------------------------------------------------------

TEST(Lsa, TwoTokensForcedScores) {
  VtrConfig cfg = small_config();
  cfg.heads = 1;
  cfg.dim = 6;
  const EncoderLayerParams layer = random_layer(cfg, 5);
  SeededRng rng(6);
  const Matrix z = random_matrix(rng, 2, cfg.dim);
  Matrix scores;
  const Matrix out = lsa_attention(z, layer, cfg, &scores);
  EXPECT_EQ(scores, (Matrix{{0, 1}, {1, 0}}));

  const Matrix v = linear(z, layer.v);
  Matrix swapped(2, cfg.dim);
  std::copy(v.row(1).begin(), v.row(1).end(), swapped.row(0).begin());
  std::copy(v.row(0).begin(), v.row(0).end(), swapped.row(1).begin());
  EXPECT_LT(max_relative_error(out, linear(swapped, layer.proj)), 1e-6);
}

TEST(LsaProperty, RowsSumToOneAndDiagonalMasked) {
  SeededRng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    VtrConfig cfg = small_config();
    cfg.heads = test::random_size(rng, 1, 4);
    cfg.dim = cfg.heads * test::random_size(rng, 1, 8);
    const EncoderLayerParams layer = random_layer(cfg, 100 + trial);
    const Matrix z = random_matrix(rng, test::random_size(rng, 2, 30), cfg.dim, -2.0, 2.0);
    Matrix scores;
    lsa_attention(z, layer, cfg, &scores);
    ASSERT_EQ(scores.rows(), cfg.heads * z.rows());
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      double sum = 0.0;
      for (float s : scores.row(r)) sum += s;
      EXPECT_NEAR(sum, 1.0, 1e-6);
      EXPECT_LT(scores(r, r % z.rows()), 1e-6);
    }
  }
}

TEST(LsaProperty, TemperatureKeepsArgmax) {
  SeededRng rng(8);
  const VtrConfig cfg = small_config();
  for (int trial = 0; trial < 10; ++trial) {
    EncoderLayerParams layer = random_layer(cfg, 200 + trial);
    const Matrix z = random_matrix(rng, 12, cfg.dim, -2.0, 2.0);
    Matrix base, scaled;
    lsa_attention(z, layer, cfg, &base);
    layer.temperature *= static_cast<float>(0.25 + 3.0 * rng.uniform());
    lsa_attention(z, layer, cfg, &scaled);
    EXPECT_NE(base, scaled);
    for (std::size_t r = 0; r < base.rows(); ++r) {
      const auto a = base.row(r), b = scaled.row(r);
      EXPECT_EQ(std::max_element(a.begin(), a.end()) - a.begin(), std::max_element(b.begin(), b.end()) - b.begin());
    }
  }
}

TEST(Lsa, RejectsNonPositiveTemperature) {
  const VtrConfig cfg = small_config();
  EncoderLayerParams layer = random_layer(cfg, 9);
  layer.temperature = 0.0f;
  EXPECT_THROW(lsa_attention(Matrix(3, cfg.dim), layer, cfg), InvalidConfig);
}

// ---- MLP and encoder -------------------------------------------------------

TEST(Mlp, Examples) {
  const VtrConfig cfg = small_config();
  const WeightSet w = allocate_weights(cfg);
  const auto& l = w.layers[0];
  EXPECT_EQ(mlp_block(Matrix(3, cfg.dim), l.fc1, l.fc2), Matrix(3, cfg.dim));

  const LinearParams one{Matrix{{1}}, {0.0f}};
  EXPECT_NEAR(mlp_block(Matrix{{1}}, one, one)(0, 0), 0.8413f, 1e-4);
}

TEST(Encoder, ZeroWeightsAreIdentity) {
  const VtrConfig cfg = small_config();
  WeightSet w = allocate_weights(cfg);
  w.layers[0].temperature = 1.0f;
  SeededRng rng(10);
  const Matrix z = random_matrix(rng, cfg.sequence(), cfg.dim);
  ActivationTrace trace;
  const Matrix out = encoder_layer(z, w.layers[0], cfg, &trace, "x.");
  EXPECT_EQ(out, z);
  // Uniform over the off-diagonal entries.
  const Matrix& s = trace.at("x.attn_scores");
  const float u = 1.0f / static_cast<float>(cfg.sequence() - 1);
  for (std::size_t r = 0; r < cfg.sequence(); ++r)
    for (std::size_t c = 0; c < cfg.sequence(); ++c) EXPECT_NEAR(s(r, c), r == c ? 0.0f : u, 1e-7);
}

TEST(EncoderProperty, PermutationEquivariance) {
  const VtrConfig cfg = small_config();
  SeededRng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const EncoderLayerParams layer = random_layer(cfg, 300 + trial);
    const std::size_t n = 10;
    const Matrix z = random_matrix(rng, n, cfg.dim, -2.0, 2.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 1; --i) std::swap(perm[i], perm[1 + test::random_size(rng, 0, i - 1)]);
    Matrix zp(n, cfg.dim);
    for (std::size_t i = 0; i < n; ++i) std::copy(z.row(perm[i]).begin(), z.row(perm[i]).end(), zp.row(i).begin());
    const Matrix out = encoder_layer(z, layer, cfg), outp = encoder_layer(zp, layer, cfg);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < cfg.dim; ++c) EXPECT_NEAR(outp(i, c), out(perm[i], c), 1e-5);
  }
}

// ---- forward ---------------------------------------------------------------

TEST(Forward, LogitCountMatchesClasses) {
  VtrConfig cfg;  // MSTAR geometry
  const WeightSet w = random_init(cfg, 3);
  SeededRng rng(12);
  EXPECT_EQ(forward(test::random_image(rng, cfg), w, cfg).values.size(), 10u);
}

TEST(Forward, Deterministic) {
  const VtrConfig cfg = small_config();
  const WeightSet w = dense_random_weights(cfg, 4);
  SeededRng rng(13);
  const Image img = test::random_image(rng, cfg);
  EXPECT_EQ(forward(img, w, cfg).values, forward(img, w, cfg).values);
}

TEST(Forward, ImageShapeChecked) {
  const VtrConfig cfg = small_config();
  const WeightSet w = random_init(cfg, 1);
  EXPECT_THROW(forward(Image(8, 16, 1), w, cfg), DimensionMismatch);
}

TEST(Forward, TraceShapeChain) {
  const VtrConfig cfg = small_config();
  const WeightSet w = dense_random_weights(cfg, 5);
  SeededRng rng(14);
  ActivationTrace trace;
  const Logits logits = forward(test::random_image(rng, cfg), w, cfg, &trace);
  EXPECT_EQ(trace.names(), trace_stage_names(cfg));

  const std::size_t h = cfg.image_height, wd = cfg.image_width, n = cfg.tokens(), d = cfg.dim;
  auto shape = [&](const char* name) { return std::pair{trace.at(name).rows(), trace.at(name).cols()}; };
  EXPECT_EQ(shape("input"), std::pair(h, wd * cfg.channels));
  EXPECT_EQ(shape("spt"), std::pair(h, wd * (cfg.shifts + 1) * cfg.channels));
  EXPECT_EQ(shape("tokens"), std::pair(n, cfg.raw_dim()));
  EXPECT_EQ(shape("embed"), std::pair(n + 1, d));
  for (const char* s : {"layer1.ln1", "layer1.msa_out", "layer1.res1", "layer1.ln2", "layer1.mlp_out", "layer1.out"})
    EXPECT_EQ(shape(s), std::pair(n + 1, d)) << s;
  EXPECT_EQ(shape("layer0.attn_scores"), std::pair(cfg.heads * (n + 1), n + 1));
  EXPECT_EQ(shape("head_ln"), std::pair(std::size_t{1}, d));
  EXPECT_EQ(shape("logits"), std::pair(std::size_t{1}, cfg.num_classes));
  EXPECT_EQ(trace.at("logits").data(), logits.values);
}

TEST(Forward, ZeroDepth) {
  VtrConfig cfg = small_config();
  cfg.depth = 0;
  const WeightSet w = dense_random_weights(cfg, 6);
  SeededRng rng(15);
  ActivationTrace trace;
  forward(test::random_image(rng, cfg), w, cfg, &trace);
  EXPECT_EQ(trace.names(), (std::vector<std::string>{"input", "spt", "tokens", "embed", "head_ln", "logits"}));
}

TEST(Logits, Probabilities) {
  const Logits l{{1.0f, 3.0f, 2.0f}};
  EXPECT_EQ(l.argmax(), 1u);
  const auto p = l.probabilities();
  const double z = std::exp(1.0) + std::exp(3.0) + std::exp(2.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-7);
  EXPECT_NEAR(p[1], std::exp(3.0) / z, 1e-7);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-6);
}
