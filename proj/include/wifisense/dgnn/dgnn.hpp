#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wifisense/dgnn/graph.hpp"
#include "wifisense/keypoints/skeleton.hpp"
#include "wifisense/nn/layers.hpp"
#include "wifisense/nn/param_store.hpp"

namespace wifisense::dgnn {

enum class ActionClass : int { stand = 0, walk = 1, squat = 2, fall = 3 };
inline constexpr std::size_t kClasses = 4;

std::string_view to_string(ActionClass c);

// How the edge stream uses each block's temporal conv.
enum class TemporalEdgeMode { shared, vertex_only };

std::string_view to_string(TemporalEdgeMode mode);
TemporalEdgeMode parse_temporal_edge_mode(std::string_view text);

struct DgnnConfig {
  std::size_t in_channels = 2;
  std::array<std::size_t, 3> block_channels{16, 32, 64};
  std::size_t window = 30;
  std::size_t temporal_kernel = 9;
  std::size_t classes = kClasses;
  double dropout = 0.5;
  TemporalEdgeMode temporal_edge_mode = TemporalEdgeMode::shared;
  std::uint64_t seed = 0;

  // Narrow channels, identical topology, for gradient checks.
  static DgnnConfig tiny();
  // True for the layout whose parameter budget is audited.
  bool is_reference() const;
};

// Skeletons of T consecutive frames; the label belongs to the last frame.
struct ActionWindow {
  std::vector<keypoints::Skeleton> frames;
  int label = 0;
  std::size_t last_frame = 0;
};

// Sliding windows of `length` frames ending at every frame t >= length-1,
// advancing by `stride`. labels[i] is frame i's class.
std::vector<ActionWindow> make_action_windows(std::span<const keypoints::Skeleton> frames,
                                              std::span<const int> labels, std::size_t length,
                                              std::size_t stride = 1);

// (B, T, V, 2) coordinates of a batch of windows.
nn::Tensor vertex_input(std::span<const ActionWindow* const> windows);
nn::Tensor vertex_input(const ActionWindow& window);

// Bone vectors target - source: (B, T, V, 2) -> (B, T, E, 2). No gradient.
nn::Tensor edge_features(const nn::Tensor& vertices, const DirectedSkeletonGraph& graph);

struct AuditRow {
  std::string layer;
  std::string input;
  std::string output;
  std::size_t params = 0;
  std::optional<std::size_t> expected;
  bool group = false;  // block subtotal row
};

struct ParamAudit {
  std::vector<AuditRow> rows;
  std::size_t total = 0;
  std::optional<std::size_t> expected_total;

  bool ok() const;
};

// Text table; the last line reads "Total <n> (expected <m>) OK|MISMATCH".
std::string format_audit(const ParamAudit& audit);

class Dgnn {
 public:
  // Throws AuditError with a per-group diff when a reference config does not
  // reproduce the audited budget.
  explicit Dgnn(DgnnConfig config);

  Dgnn(const Dgnn&) = delete;
  Dgnn& operator=(const Dgnn&) = delete;
  Dgnn(Dgnn&&) = default;
  Dgnn& operator=(Dgnn&&) = default;

  // vertices (B, T, V, 2) -> logits (B, classes).
  nn::Tensor forward(const nn::Tensor& vertices, const nn::ForwardOptions& options) const;

  // Eval-mode scores for one window.
  std::array<double, kClasses> classify(const ActionWindow& window) const;

  ParamAudit audit() const;
  const DgnnConfig& config() const { return config_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

 private:
  struct Block {
    std::size_t in = 0, out = 0;
    nn::Linear vertex_linear, edge_linear;
    nn::Tensor a_source, a_target;
    nn::BatchNorm vertex_bn, edge_bn;
    nn::Conv2d tcn;
    nn::BatchNorm tcn_bn;
    bool has_residual_conv = false;
    bool identity_residual = false;
    nn::Conv2d residual;
    nn::BatchNorm residual_bn;
  };

  std::pair<nn::Tensor, nn::Tensor> block_forward(const Block& block, const nn::Tensor& vertex,
                                                  const nn::Tensor& edge,
                                                  const nn::ForwardOptions& options) const;

  DgnnConfig config_;
  nn::ParamStore store_;
  nn::BatchNorm data_bn_v_, data_bn_e_;
  std::vector<Block> blocks_;
  nn::Linear fc_;
};

// Argmax with the lowest index winning ties.
int argmax(std::span<const double> scores);

}  // namespace wifisense::dgnn
