#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wifisense/nn/ops.hpp"
#include "wifisense/nn/param_store.hpp"

namespace wifisense::nn {

struct ForwardOptions {
  Mode mode = Mode::eval;
  std::mt19937_64* rng = nullptr;  // required only for dropout in train mode
};

// Weights are uniform in +-1/sqrt(fan_in); norms start at gamma=1, beta=0.

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
         bool bias = true);
  Tensor operator()(const Tensor& x) const { return linear(x, weight_, bias_); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  Tensor weight_, bias_;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
         std::pair<std::size_t, std::size_t> kernel, Conv2dGeometry geometry);
  Tensor operator()(const Tensor& x) const { return conv2d(x, weight_, bias_, geometry_); }
  const Tensor& weight() const { return weight_; }

 private:
  Tensor weight_, bias_;
  Conv2dGeometry geometry_;
};

class ConvTranspose1d {
 public:
  ConvTranspose1d() = default;
  ConvTranspose1d(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                  std::size_t kernel, ConvTranspose1dGeometry geometry);
  Tensor operator()(const Tensor& x) const {
    return conv_transpose1d(x, weight_, bias_, geometry_);
  }

 private:
  Tensor weight_, bias_;
  ConvTranspose1dGeometry geometry_;
};

// Running statistics live in the store as buffers "<name>.running_mean/var".
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParamStore& store, const std::string& name, std::size_t channels,
            double momentum = 0.1, double eps = 1e-5);
  Tensor operator()(const Tensor& x, Mode mode) const;
  const BatchNormBuffers& buffers() const { return buffers_; }

 private:
  Tensor gamma_, beta_;
  BatchNormBuffers buffers_;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::size_t features);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma_, beta_); }

 private:
  Tensor gamma_, beta_;
};

class MultiHeadSelfAttention {
 public:
  struct Output {
    Tensor out;      // same shape as the input sequence
    Tensor weights;  // (B, heads, S, S); rows sum to one
  };

  MultiHeadSelfAttention() = default;
  // Throws DimensionError unless d_model is divisible by heads.
  MultiHeadSelfAttention(ParamStore& store, const std::string& name, std::size_t d_model,
                         std::size_t heads);

  // seq is (S, D) or (B, S, D).
  Output forward(const Tensor& seq) const;
  Tensor operator()(const Tensor& seq) const { return forward(seq).out; }

  std::size_t heads() const { return heads_; }
  const Linear& value_projection() const { return v_; }
  const Linear& output_projection() const { return out_; }

 private:
  std::size_t d_model_ = 0, heads_ = 0;
  Linear q_, k_, v_, out_;
};

// Post-norm encoder layer: x = LN(x + MHA(x)); x = LN(x + FFN(x)).
class TransformerEncoderLayer {
 public:
  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(ParamStore& store, const std::string& name, std::size_t d_model,
                          std::size_t heads, std::size_t ffn_width, double dropout);
  Tensor operator()(const Tensor& seq, const ForwardOptions& options) const;
  const MultiHeadSelfAttention& attention() const { return attention_; }

 private:
  MultiHeadSelfAttention attention_;
  LayerNorm norm1_, norm2_;
  Linear ffn_in_, ffn_out_;
  double dropout_ = 0.0;
};

class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(ParamStore& store, const std::string& name, std::size_t layers,
                     std::size_t d_model, std::size_t heads, std::size_t ffn_width,
                     double dropout);
  Tensor operator()(const Tensor& seq, const ForwardOptions& options) const;
  std::size_t depth() const { return layers_.size(); }

 private:
  std::vector<TransformerEncoderLayer> layers_;
};

// Fixed sin/cos table of shape (seq_len, d_model).
Tensor sinusoidal_positional_encoding(std::size_t seq_len, std::size_t d_model);

}  // namespace wifisense::nn
