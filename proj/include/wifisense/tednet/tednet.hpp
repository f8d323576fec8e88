#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wifisense/csi/window.hpp"
#include "wifisense/keypoints/skeleton.hpp"
#include "wifisense/nn/layers.hpp"
#include "wifisense/nn/param_store.hpp"

namespace wifisense::tednet {

struct EncoderLayerSpec {
  std::size_t channels;
  std::pair<std::size_t, std::size_t> kernel;
  std::pair<std::size_t, std::size_t> stride;
  std::pair<std::size_t, std::size_t> padding;
};

struct TedNetConfig {
  std::size_t receivers = 3;
  std::size_t subcarriers = 114;
  std::size_t window = 10;
  std::array<EncoderLayerSpec, 3> encoder{{
      {64, {4, 3}, {2, 2}, {2, 1}},
      {128, {2, 3}, {2, 2}, {2, 1}},
      {128, {2, 3}, {2, 2}, {2, 1}},
  }};
  std::size_t d_model = 384;
  std::size_t transformer_layers = 2;
  std::size_t heads = 8;
  std::size_t ffn_width = 1536;
  bool positional_encoding = true;
  double dropout = 0.0;
  std::array<std::size_t, 2> decoder_channels{64, 32};
  std::size_t decoder_kernel = 3;
  std::size_t decoder_stride = 2;
  std::size_t decoder_padding = 1;
  std::size_t decoder_output_padding = 1;
  std::size_t joints = 17;
  bool share_encoder_weights = false;
  std::uint64_t seed = 0;

  // Same topology with narrow channels, for gradient checks.
  static TedNetConfig tiny();
};

// One audited intermediate, batch axis omitted.
struct ShapeRecord {
  std::string layer;
  nn::Shape shape;
};

// The eleven output shapes of the reference architecture table.
const std::vector<ShapeRecord>& reference_shapes();

// CSI-to-skeleton network: per-receiver conv encoders, channel concat,
// (joint, coordinate) sequence through a transformer encoder, transposed-conv
// decoder, and a tanh fully connected head producing (17, 2).
class TedNet {
 public:
  // Runs the forward-shape audit; throws DimensionError naming the layer
  // whose shape breaks the topology.
  explicit TedNet(TedNetConfig config);

  TedNet(const TedNet&) = delete;
  TedNet& operator=(const TedNet&) = delete;
  TedNet(TedNet&&) = default;
  TedNet& operator=(TedNet&&) = default;

  // receivers[r] is (B, 1, S, W); returns (B, joints, 2).
  nn::Tensor forward(const std::vector<nn::Tensor>& receivers, const nn::ForwardOptions& options,
                     std::vector<ShapeRecord>* trace = nullptr) const;

  // Eval-mode single window -> (joints, 2).
  nn::Tensor predict(const csi::CsiWindow& window) const;

  const std::vector<ShapeRecord>& shape_audit() const { return audit_; }
  const TedNetConfig& config() const { return config_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  // Parameter prefix of receiver r's encoder stack.
  std::string encoder_prefix(std::size_t receiver) const;

 private:
  struct Encoder {
    std::array<nn::Conv2d, 3> convs;
  };

  TedNetConfig config_;
  nn::ParamStore store_;
  std::vector<Encoder> encoders_;
  nn::TransformerEncoder transformer_;
  nn::Tensor positional_;
  std::array<nn::ConvTranspose1d, 2> decoder_;
  nn::Linear head_;
  std::vector<ShapeRecord> audit_;
};

// Stacks per-window receiver tensors (1, S, W) into (B, 1, S, W) per receiver.
std::vector<nn::Tensor> stack_windows(const std::vector<const csi::CsiWindow*>& windows);

struct InferenceLog {
  std::size_t clamped_values = 0;  // outputs outside [0,1] before clamping
};

// Eval-mode inference, one skeleton per window, frame indices preserved.
std::vector<keypoints::Skeleton> infer_sequence(const TedNet& model,
                                                const std::vector<csi::CsiWindow>& windows,
                                                InferenceLog* log = nullptr,
                                                std::size_t batch_size = 64);

}  // namespace wifisense::tednet
