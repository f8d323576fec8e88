#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "wifisense/nn/tensor.hpp"

namespace wifisense::nn {

enum class Mode { train, eval };
enum class Activation { relu, tanh };

// ---- elementwise / structural ----

// b may equal a's shape or a trailing suffix of it (broadcast over leading axes).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor activation(const Tensor& x, Activation kind);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
// Slice [start, start + length) of one axis.
Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

// Sum of all elements, shape (1).
Tensor sum(const Tensor& x);
// Mean over the last axis: (..., L) -> (...).
Tensor mean_last(const Tensor& x);

// ---- linear algebra ----

// Batched matrix product of (..., M, K) and (..., K, N); either operand may be
// rank 2 and is then shared across the other's batch. Transpose flags apply
// to the trailing two axes.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

// Affine map over the last axis; weight is (F_out, F_in), bias (F_out) or undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct Conv2dGeometry {
  std::pair<std::size_t, std::size_t> stride{1, 1};
  std::pair<std::size_t, std::size_t> padding{0, 0};
};

// Cross-correlation. x is (C_in, H, W) or (B, C_in, H, W); weight (C_out, C_in, kh, kw).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dGeometry geometry);
std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             std::size_t padding);

struct ConvTranspose1dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0;
};

// Gradient-of-conv1d. x is (C_in, L) or (B, C_in, L); weight (C_in, C_out, k).
Tensor conv_transpose1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        ConvTranspose1dGeometry geometry);
// Throws DimensionError when the length would be non-positive.
std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                                       std::size_t padding, std::size_t output_padding);

// ---- normalization ----

struct BatchNormBuffers {
  Tensor running_mean;
  Tensor running_var;
};

struct BatchNormOptions {
  Mode mode = Mode::train;
  double momentum = 0.1;
  double eps = 1e-5;
};

// x is (B, C) or (B, C, L). Train mode uses batch statistics and updates the
// running buffers; eval mode uses the running buffers.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 BatchNormBuffers& buffers, BatchNormOptions options);

// Normalizes over the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Softmax over the last axis.
Tensor softmax(const Tensor& x);

// Inverted dropout. Identity in eval mode or when p == 0. Throws ConfigError
// unless 0 <= p < 1.
Tensor dropout(const Tensor& x, double p, Mode mode, std::mt19937_64* rng);

// ---- losses ----

// Mean of squared elementwise differences; target is treated as a constant.
Tensor mse_loss(const Tensor& prediction, const Tensor& target);
// Mean negative log-likelihood of softmax(logits); logits (B, K).
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace wifisense::nn
