#include "wifisense/tednet/tednet.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::tednet {

using nn::Shape;
using nn::Tensor;

TedNetConfig TedNetConfig::tiny() {
  TedNetConfig c;
  c.encoder[0].channels = 4;
  c.encoder[1].channels = 8;
  c.encoder[2].channels = 8;
  c.d_model = 24;
  c.ffn_width = 32;
  c.decoder_channels = {6, 4};
  return c;
}

const std::vector<ShapeRecord>& reference_shapes() {
  static const std::vector<ShapeRecord> table{
      {"CNN-Encoder 1", {64, 58, 5}},
      {"CNN-Encoder 2", {128, 31, 3}},
      {"CNN-Encoder 3", {128, 17, 2}},
      {"Concatenate", {384, 17, 2}},
      {"Reshape", {34, 384}},
      {"Transformer", {34, 384}},
      {"CNN-Decoder 1", {64, 68}},
      {"CNN-Decoder 2", {32, 136}},
      {"Flatten", {4352}},
      {"Fully Connected Layer", {34}},
      {"Reshape (Output)", {17, 2}},
  };
  return table;
}

namespace {

Shape drop_batch(const Shape& s) { return Shape(s.begin() + 1, s.end()); }

std::size_t checked_conv(std::size_t in, std::size_t k, std::size_t s, std::size_t p,
                         const std::string& layer, const char* axis) {
  try {
    return nn::conv_output_size(in, k, s, p);
  } catch (const DimensionError& e) {
    throw DimensionError(fmt::format("{} ({} axis): {}", layer, axis, e.what()));
  }
}

}  // namespace

std::string TedNet::encoder_prefix(std::size_t receiver) const {
  return config_.share_encoder_weights ? std::string("encoder.shared")
                                       : fmt::format("encoder.{}", receiver);
}

TedNet::TedNet(TedNetConfig config) : config_(config), store_(config.seed) {
  const auto& c = config_;
  if (c.receivers == 0) throw ConfigError("TED-Net needs at least one receiver");
  const std::size_t concat_channels = c.receivers * c.encoder[2].channels;
  if (concat_channels != c.d_model) {
    throw DimensionError(fmt::format(
        "Concatenate: {} receivers x {} channels = {} does not match d_model {}", c.receivers,
        c.encoder[2].channels, concat_channels, c.d_model));
  }

  // Closed-form spatial sizes through the encoder.
  std::size_t h = c.subcarriers, w = c.window;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& e = c.encoder[i];
    const std::string layer = fmt::format("CNN-Encoder {}", i + 1);
    h = checked_conv(h, e.kernel.first, e.stride.first, e.padding.first, layer, "height");
    w = checked_conv(w, e.kernel.second, e.stride.second, e.padding.second, layer, "width");
  }
  const std::size_t seq_len = h * w;
  if (seq_len != c.joints * 2) {
    throw DimensionError(fmt::format("Reshape: encoder output {}x{} gives sequence length {}, "
                                     "expected joints x 2 = {}",
                                     h, w, seq_len, c.joints * 2));
  }
  if (c.heads == 0 || c.d_model % c.heads != 0) {
    throw DimensionError(fmt::format("Transformer: d_model {} not divisible by {} heads",
                                     c.d_model, c.heads));
  }
  std::size_t len = seq_len;
  for (std::size_t i = 0; i < 2; ++i) {
    try {
      len = nn::conv_transpose_output_size(len, c.decoder_kernel, c.decoder_stride,
                                           c.decoder_padding, c.decoder_output_padding);
    } catch (const DimensionError& e) {
      throw DimensionError(fmt::format("CNN-Decoder {}: {}", i + 1, e.what()));
    }
  }
  const std::size_t flat = c.decoder_channels[1] * len;

  const std::size_t stacks = c.share_encoder_weights ? 1 : c.receivers;
  for (std::size_t r = 0; r < stacks; ++r) {
    Encoder enc;
    std::size_t in = 1;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& e = c.encoder[i];
      enc.convs[i] = nn::Conv2d(store_, fmt::format("{}.conv{}", encoder_prefix(r), i + 1), in,
                                e.channels, e.kernel, {e.stride, e.padding});
      in = e.channels;
    }
    encoders_.push_back(std::move(enc));
  }
  transformer_ = nn::TransformerEncoder(store_, "transformer", c.transformer_layers, c.d_model,
                                        c.heads, c.ffn_width, c.dropout);
  if (c.positional_encoding) positional_ = nn::sinusoidal_positional_encoding(seq_len, c.d_model);
  const nn::ConvTranspose1dGeometry geo{c.decoder_stride, c.decoder_padding,
                                        c.decoder_output_padding};
  decoder_[0] = nn::ConvTranspose1d(store_, "decoder.deconv1", c.d_model, c.decoder_channels[0],
                                    c.decoder_kernel, geo);
  decoder_[1] = nn::ConvTranspose1d(store_, "decoder.deconv2", c.decoder_channels[0],
                                    c.decoder_channels[1], c.decoder_kernel, geo);
  head_ = nn::Linear(store_, "head.fc", flat, c.joints * 2);

  // Construction-time audit with a real forward pass.
  nn::NoGradGuard no_grad;
  std::vector<Tensor> probe(c.receivers, Tensor::zeros({1, 1, c.subcarriers, c.window}));
  forward(probe, {nn::Mode::eval, nullptr}, &audit_);
}

Tensor TedNet::forward(const std::vector<Tensor>& receivers, const nn::ForwardOptions& options,
                       std::vector<ShapeRecord>* trace) const {
  const auto& c = config_;
  if (receivers.size() != c.receivers) {
    throw DimensionError(fmt::format("TED-Net: got {} receiver tensors, expected {}",
                                     receivers.size(), c.receivers));
  }
  const std::size_t batch = receivers.front().rank() == 4 ? receivers.front().dim(0) : 0;
  const Shape expected{batch, 1, c.subcarriers, c.window};
  auto record = [&](const char* layer, const Tensor& t) {
    if (trace) trace->push_back({layer, drop_batch(t.shape())});
  };

  std::vector<Tensor> features;
  for (std::size_t r = 0; r < c.receivers; ++r) {
    if (receivers[r].shape() != expected) {
      throw DimensionError(fmt::format("TED-Net input {}: expected {}, got {}", r,
                                       nn::to_string(expected),
                                       nn::to_string(receivers[r].shape())));
    }
    const Encoder& enc = encoders_[c.share_encoder_weights ? 0 : r];
    Tensor x = receivers[r];
    for (std::size_t i = 0; i < 3; ++i) {
      x = nn::relu(enc.convs[i](x));
      if (r == 0) {
        static constexpr const char* names[] = {"CNN-Encoder 1", "CNN-Encoder 2",
                                                "CNN-Encoder 3"};
        record(names[i], x);
      }
    }
    features.push_back(x);
  }
  Tensor merged = nn::concat(features, 1);
  record("Concatenate", merged);

  const std::size_t seq_len = merged.dim(2) * merged.dim(3);
  // Sequence index enumerates (joint, coordinate) row-major.
  Tensor seq = nn::permute(nn::reshape(merged, {batch, c.d_model, seq_len}), {0, 2, 1});
  record("Reshape", seq);
  if (positional_.defined()) seq = nn::add(seq, positional_);
  seq = transformer_(seq, options);
  record("Transformer", seq);

  Tensor x = nn::permute(seq, {0, 2, 1});
  x = nn::relu(decoder_[0](x));
  record("CNN-Decoder 1", x);
  x = nn::relu(decoder_[1](x));
  record("CNN-Decoder 2", x);
  x = nn::reshape(x, {batch, x.dim(1) * x.dim(2)});
  record("Flatten", x);
  x = head_(x);
  record("Fully Connected Layer", x);
  x = nn::reshape(nn::tanh(x), {batch, c.joints, 2});
  record("Reshape (Output)", x);
  return x;
}

Tensor TedNet::predict(const csi::CsiWindow& window) const {
  nn::NoGradGuard no_grad;
  Tensor out = forward(stack_windows({&window}), {nn::Mode::eval, nullptr});
  return nn::reshape(out, {config_.joints, 2});
}

std::vector<Tensor> stack_windows(const std::vector<const csi::CsiWindow*>& windows) {
  if (windows.empty()) throw DimensionError("stack_windows: empty batch");
  const std::size_t receivers = windows.front()->receivers.size();
  std::vector<Tensor> out;
  for (std::size_t r = 0; r < receivers; ++r) {
    const Shape& s = windows.front()->receivers[r].shape();
    if (s.size() != 3) throw DimensionError("stack_windows: receiver tensor must be (1, S, W)");
    std::vector<double> values;
    values.reserve(windows.size() * nn::numel(s));
    for (const auto* w : windows) {
      if (w->receivers.size() != receivers || w->receivers[r].shape() != s) {
        throw DimensionError("stack_windows: windows disagree on receiver shapes");
      }
      const auto d = w->receivers[r].data();
      values.insert(values.end(), d.begin(), d.end());
    }
    out.push_back(Tensor::from({windows.size(), s[0], s[1], s[2]}, std::move(values)));
  }
  return out;
}

std::vector<keypoints::Skeleton> infer_sequence(const TedNet& model,
                                                const std::vector<csi::CsiWindow>& windows,
                                                InferenceLog* log, std::size_t batch_size) {
  nn::NoGradGuard no_grad;
  const std::size_t joints = model.config().joints;
  if (joints != keypoints::kJoints) throw ConfigError("infer_sequence requires a 17-joint model");
  std::vector<keypoints::Skeleton> out;
  out.reserve(windows.size());
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t end = std::min(windows.size(), start + batch_size);
    std::vector<const csi::CsiWindow*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&windows[i]);
    const Tensor pred = model.forward(stack_windows(batch), {nn::Mode::eval, nullptr});
    const auto v = pred.data();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      keypoints::Skeleton s;
      s.frame_index = batch[b]->frame_index;
      for (std::size_t j = 0; j < joints; ++j) {
        double x = v[(b * joints + j) * 2];
        double y = v[(b * joints + j) * 2 + 1];
        const double cx = std::clamp(x, 0.0, 1.0), cy = std::clamp(y, 0.0, 1.0);
        const bool clamped = cx != x || cy != y;
        if (log) log->clamped_values += (cx != x) + (cy != y);
        s.keypoints[j] = {cx, cy, true, clamped};
      }
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace wifisense::tednet
