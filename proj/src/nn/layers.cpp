#include "wifisense/nn/layers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::nn {

namespace {
double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }
}  // namespace

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
               bool bias) {
  const double bound = fan_in_bound(in);
  weight_ = store.add_uniform(name + ".weight", {out, in}, bound);
  if (bias) bias_ = store.add_uniform(name + ".bias", {out}, bound);
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
               std::pair<std::size_t, std::size_t> kernel, Conv2dGeometry geometry)
    : geometry_(geometry) {
  const double bound = fan_in_bound(in * kernel.first * kernel.second);
  weight_ = store.add_uniform(name + ".weight", {out, in, kernel.first, kernel.second}, bound);
  bias_ = store.add_uniform(name + ".bias", {out}, bound);
}

ConvTranspose1d::ConvTranspose1d(ParamStore& store, const std::string& name, std::size_t in,
                                 std::size_t out, std::size_t kernel,
                                 ConvTranspose1dGeometry geometry)
    : geometry_(geometry) {
  const double bound = fan_in_bound(in * kernel);
  weight_ = store.add_uniform(name + ".weight", {in, out, kernel}, bound);
  bias_ = store.add_uniform(name + ".bias", {out}, bound);
}

BatchNorm::BatchNorm(ParamStore& store, const std::string& name, std::size_t channels,
                     double momentum, double eps)
    : momentum_(momentum), eps_(eps) {
  gamma_ = store.add_constant(name + ".gamma", {channels}, 1.0);
  beta_ = store.add_constant(name + ".beta", {channels}, 0.0);
  buffers_.running_mean = store.add_buffer(name + ".running_mean", {channels}, 0.0);
  buffers_.running_var = store.add_buffer(name + ".running_var", {channels}, 1.0);
}

Tensor BatchNorm::operator()(const Tensor& x, Mode mode) const {
  BatchNormBuffers buffers = buffers_;  // handles share storage with the store
  return batchnorm(x, gamma_, beta_, buffers, {mode, momentum_, eps_});
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::size_t features) {
  gamma_ = store.add_constant(name + ".gamma", {features}, 1.0);
  beta_ = store.add_constant(name + ".beta", {features}, 0.0);
}

MultiHeadSelfAttention::MultiHeadSelfAttention(ParamStore& store, const std::string& name,
                                               std::size_t d_model, std::size_t heads)
    : d_model_(d_model), heads_(heads) {
  if (heads == 0 || d_model % heads != 0) {
    throw DimensionError(fmt::format("{}: d_model {} is not divisible by {} heads", name,
                                     d_model, heads));
  }
  q_ = Linear(store, name + ".q_proj", d_model, d_model);
  k_ = Linear(store, name + ".k_proj", d_model, d_model);
  v_ = Linear(store, name + ".v_proj", d_model, d_model);
  out_ = Linear(store, name + ".out_proj", d_model, d_model);
}

MultiHeadSelfAttention::Output MultiHeadSelfAttention::forward(const Tensor& seq) const {
  const bool batched = seq.rank() == 3;
  if (!(seq.rank() == 2 || batched) || seq.shape().back() != d_model_) {
    throw DimensionError(fmt::format("attention: expected (S, {0}) or (B, S, {0}), got {1}",
                                     d_model_, to_string(seq.shape())));
  }
  const std::size_t batch = batched ? seq.dim(0) : 1;
  const std::size_t len = seq.dim(batched ? 1 : 0);
  const std::size_t head_dim = d_model_ / heads_;
  const Tensor x = batched ? seq : reshape(seq, {1, len, d_model_});

  auto split_heads = [&](const Tensor& t) {
    return permute(reshape(t, {batch, len, heads_, head_dim}), {0, 2, 1, 3});
  };
  const Tensor q = split_heads(q_(x));
  const Tensor k = split_heads(k_(x));
  const Tensor v = split_heads(v_(x));
  const Tensor scores = scale(matmul(q, k, false, true), 1.0 / std::sqrt(double(head_dim)));
  const Tensor weights = softmax(scores);
  const Tensor context = permute(matmul(weights, v), {0, 2, 1, 3});
  Tensor out = out_(reshape(context, {batch, len, d_model_}));
  if (!batched) out = reshape(out, {len, d_model_});
  return {out, weights};
}

TransformerEncoderLayer::TransformerEncoderLayer(ParamStore& store, const std::string& name,
                                                 std::size_t d_model, std::size_t heads,
                                                 std::size_t ffn_width, double dropout)
    : attention_(store, name + ".self_attn", d_model, heads),
      norm1_(store, name + ".norm1", d_model),
      norm2_(store, name + ".norm2", d_model),
      ffn_in_(store, name + ".ffn.linear1", d_model, ffn_width),
      ffn_out_(store, name + ".ffn.linear2", ffn_width, d_model),
      dropout_(dropout) {}

Tensor TransformerEncoderLayer::operator()(const Tensor& seq, const ForwardOptions& o) const {
  Tensor x = norm1_(add(seq, dropout(attention_(seq), dropout_, o.mode, o.rng)));
  Tensor hidden = dropout(relu(ffn_in_(x)), dropout_, o.mode, o.rng);
  return norm2_(add(x, dropout(ffn_out_(hidden), dropout_, o.mode, o.rng)));
}

TransformerEncoder::TransformerEncoder(ParamStore& store, const std::string& name,
                                       std::size_t layers, std::size_t d_model, std::size_t heads,
                                       std::size_t ffn_width, double dropout) {
  for (std::size_t i = 0; i < layers; ++i)
    layers_.emplace_back(store, fmt::format("{}.layers.{}", name, i), d_model, heads, ffn_width,
                         dropout);
}

Tensor TransformerEncoder::operator()(const Tensor& seq, const ForwardOptions& options) const {
  Tensor x = seq;
  for (const auto& layer : layers_) x = layer(x, options);
  return x;
}

Tensor sinusoidal_positional_encoding(std::size_t seq_len, std::size_t d_model) {
  std::vector<double> table(seq_len * d_model);
  for (std::size_t pos = 0; pos < seq_len; ++pos)
    for (std::size_t i = 0; i < d_model; ++i) {
      const double exponent = static_cast<double>(i - i % 2) / static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      table[pos * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return Tensor::from({seq_len, d_model}, std::move(table));
}

}  // namespace wifisense::nn
