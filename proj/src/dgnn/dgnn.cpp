#include "wifisense/dgnn/dgnn.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "wifisense/error.hpp"
#include "wifisense/nn/ops.hpp"

namespace wifisense::dgnn {

using nn::Shape;
using nn::Tensor;

std::string_view to_string(ActionClass c) {
  switch (c) {
    case ActionClass::stand:
      return "stand";
    case ActionClass::walk:
      return "walk";
    case ActionClass::squat:
      return "squat";
    case ActionClass::fall:
      return "fall";
  }
  return "unknown";
}

std::string_view to_string(TemporalEdgeMode mode) {
  return mode == TemporalEdgeMode::shared ? "shared" : "vertex_only";
}

TemporalEdgeMode parse_temporal_edge_mode(std::string_view text) {
  if (text == "shared") return TemporalEdgeMode::shared;
  if (text == "vertex_only") return TemporalEdgeMode::vertex_only;
  throw ConfigError(fmt::format("temporal_edge_mode must be shared or vertex_only, got '{}'", text));
}

DgnnConfig DgnnConfig::tiny() {
  DgnnConfig c;
  c.block_channels = {3, 4, 5};
  c.window = 12;
  c.dropout = 0.0;
  return c;
}

bool DgnnConfig::is_reference() const {
  return in_channels == 2 && block_channels == std::array<std::size_t, 3>{16, 32, 64} &&
         temporal_kernel == 9 && classes == 4;
}

std::vector<ActionWindow> make_action_windows(std::span<const keypoints::Skeleton> frames,
                                              std::span<const int> labels, std::size_t length,
                                              std::size_t stride) {
  if (length == 0 || stride == 0) throw ConfigError("action window length and stride must be positive");
  if (labels.size() != frames.size()) {
    throw DataError(fmt::format("{} skeleton frames but {} labels", frames.size(), labels.size()));
  }
  std::vector<ActionWindow> out;
  for (std::size_t end = length; end <= frames.size(); end += stride) {
    ActionWindow w;
    w.frames.assign(frames.begin() + (end - length), frames.begin() + end);
    w.label = labels[end - 1];
    w.last_frame = frames[end - 1].frame_index;
    out.push_back(std::move(w));
  }
  return out;
}

Tensor vertex_input(std::span<const ActionWindow* const> windows) {
  if (windows.empty()) throw DimensionError("vertex_input: empty batch");
  const std::size_t t_len = windows.front()->frames.size();
  std::vector<double> values;
  values.reserve(windows.size() * t_len * kVertices * 2);
  for (const ActionWindow* w : windows) {
    if (w->frames.size() != t_len) {
      throw DimensionError(fmt::format("vertex_input: window lengths {} and {} differ", t_len,
                                       w->frames.size()));
    }
    for (const auto& s : w->frames)
      for (const auto& k : s.keypoints) {
        values.push_back(k.x);
        values.push_back(k.y);
      }
  }
  return Tensor::from({windows.size(), t_len, kVertices, 2}, std::move(values));
}

Tensor vertex_input(const ActionWindow& window) {
  const ActionWindow* one[] = {&window};
  return vertex_input(one);
}

Tensor edge_features(const Tensor& vertices, const DirectedSkeletonGraph& graph) {
  const Shape& s = vertices.shape();
  if (s.size() != 4 || s[2] != kVertices) {
    throw DimensionError(fmt::format("edge_features: expected (B, T, {}, C), got {}", kVertices,
                                     nn::to_string(s)));
  }
  const std::size_t frames = s[0] * s[1], c = s[3];
  const auto v = vertices.data();
  std::vector<double> out(frames * kEdges * c);
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t e = 0; e < kEdges; ++e)
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(f * kEdges + e) * c + ch] = v[(f * kVertices + graph.edges[e].target) * c + ch] -
                                         v[(f * kVertices + graph.edges[e].source) * c + ch];
  return Tensor::from({s[0], s[1], kEdges, c}, std::move(out));
}

bool ParamAudit::ok() const {
  if (expected_total && *expected_total != total) return false;
  return std::all_of(rows.begin(), rows.end(),
                     [](const AuditRow& r) { return !r.expected || *r.expected == r.params; });
}

std::string format_audit(const ParamAudit& audit) {
  std::string out = fmt::format("{:<24} {:>10} {:>14} {:>8} {:>10}\n", "Layer", "Input", "Output",
                                "Params", "Expected");
  for (const auto& r : audit.rows) {
    const std::string label = r.group ? r.layer : "  " + r.layer;
    const std::string expected = r.expected ? fmt::format("{}", *r.expected) : "-";
    const char* mark = (r.expected && *r.expected != r.params) ? "  MISMATCH" : "";
    out += fmt::format("{:<24} {:>10} {:>14} {:>8} {:>10}{}\n", label, r.input, r.output,
                       r.params, expected, mark);
  }
  if (audit.expected_total) {
    out += fmt::format("Total {} (expected {}) {}\n", audit.total, *audit.expected_total,
                       audit.ok() ? "OK" : "MISMATCH");
  } else {
    out += fmt::format("Total {} (expected -) {}\n", audit.total, audit.ok() ? "OK" : "MISMATCH");
  }
  return out;
}

namespace {

// (B, C, T, N) batch-norm over channels with (T, N) as length.
Tensor norm4(const nn::BatchNorm& bn, const Tensor& x, nn::Mode mode) {
  const Shape s = x.shape();
  return nn::reshape(bn(nn::reshape(x, {s[0], s[1], s[2] * s[3]}), mode), s);
}

// (B, T, N, C) -> batch-norm over the N*C flattened channels -> (B, C, T, N).
Tensor data_norm(const nn::BatchNorm& bn, const Tensor& x, nn::Mode mode) {
  const Shape s = x.shape();
  Tensor y = nn::reshape(nn::permute(x, {0, 2, 3, 1}), {s[0], s[2] * s[3], s[1]});
  y = nn::reshape(bn(y, mode), {s[0], s[2], s[3], s[1]});
  return nn::permute(y, {0, 2, 3, 1});
}

// Channel-last linear on (B, C, T, N).
Tensor channel_linear(const nn::Linear& lin, const Tensor& x) {
  return nn::permute(lin(nn::permute(x, {0, 2, 3, 1})), {0, 3, 1, 2});
}

Tensor incidence(const std::vector<double>& values) {
  return Tensor::from({kVertices, kEdges}, values);
}

}  // namespace

Dgnn::Dgnn(DgnnConfig config) : config_(config), store_(config.seed) {
  const auto& c = config_;
  if (c.in_channels == 0 || c.classes == 0 || c.window == 0) {
    throw ConfigError("DGNN channels, classes and window must be positive");
  }
  if (c.temporal_kernel % 2 == 0) throw ConfigError("temporal_kernel must be odd");
  if (c.dropout < 0.0 || c.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  for (std::size_t ch : c.block_channels)
    if (ch == 0) throw ConfigError("block channels must be positive");

  const auto& graph = build_graph();
  data_bn_v_ = nn::BatchNorm(store_, "data_bn_v", kVertices * c.in_channels);
  data_bn_e_ = nn::BatchNorm(store_, "data_bn_e", kEdges * c.in_channels);
  const std::size_t k = c.temporal_kernel;
  const nn::Conv2dGeometry same{{1, 1}, {k / 2, 0}};
  std::size_t in = c.in_channels;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t out = c.block_channels[b];
    const std::string p = fmt::format("block{}", b + 1);
    Block block;
    block.in = in;
    block.out = out;
    block.vertex_linear = nn::Linear(store_, p + ".dgn.vertex_linear", 3 * in, out);
    block.edge_linear = nn::Linear(store_, p + ".dgn.edge_linear", 3 * in, out);
    block.a_source = store_.add(p + ".dgn.A_source", incidence(graph.source_incidence()));
    block.a_target = store_.add(p + ".dgn.A_target", incidence(graph.target_incidence()));
    block.vertex_bn = nn::BatchNorm(store_, p + ".dgn.vertex_bn", out);
    block.edge_bn = nn::BatchNorm(store_, p + ".dgn.edge_bn", out);
    block.tcn = nn::Conv2d(store_, p + ".tcn.conv", out, out, {k, 1}, same);
    block.tcn_bn = nn::BatchNorm(store_, p + ".tcn.bn", out);
    if (b > 0 && in != out) {
      block.has_residual_conv = true;
      block.residual = nn::Conv2d(store_, p + ".residual.conv", in, out, {k, 1}, same);
      block.residual_bn = nn::BatchNorm(store_, p + ".residual.bn", out);
    } else if (b > 0) {
      block.identity_residual = true;
    }
    blocks_.push_back(std::move(block));
    in = out;
  }
  fc_ = nn::Linear(store_, "fc", 2 * in, c.classes);

  if (c.is_reference()) {
    const ParamAudit a = audit();
    if (!a.ok()) {
      std::string diff;
      for (const auto& r : a.rows)
        if (r.expected && *r.expected != r.params)
          diff += fmt::format("; {} has {} (expected {})", r.layer, r.params, *r.expected);
      throw AuditError(fmt::format("DGNN parameter audit failed: total {} (expected {}){}",
                                   a.total, *a.expected_total, diff));
    }
  }
}

ParamAudit Dgnn::audit() const {
  const bool ref = config_.is_reference();
  auto expect = [&](std::size_t v) { return ref ? std::optional<std::size_t>(v) : std::nullopt; };
  static constexpr std::size_t dgn_ref[] = {832, 3808, 13216};
  static constexpr std::size_t tcn_ref[] = {2352, 9312, 37056};
  static constexpr std::size_t res_ref[] = {0, 4704, 18624};
  static constexpr std::size_t block_ref[] = {3184, 17824, 68896};

  ParamAudit a;
  const std::size_t cv = kVertices * config_.in_channels, ce = kEdges * config_.in_channels;
  a.rows.push_back({"data_bn_v (BN1d)", fmt::format("(batch, {})", cv),
                    fmt::format("(batch, {})", cv), store_.count_with_prefix("data_bn_v."),
                    expect(68), false});
  a.rows.push_back({"data_bn_e (BN1d)", fmt::format("(batch, {})", ce),
                    fmt::format("(batch, {})", ce), store_.count_with_prefix("data_bn_e."),
                    expect(64), false});
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    const std::string p = fmt::format("block{}.", b + 1);
    a.rows.push_back({fmt::format("GraphTemporalConv {}", b + 1), "", "",
                      store_.count_with_prefix(p), expect(block_ref[b]), true});
    a.rows.push_back({"DGNBlock (Linear)", fmt::format("({})", 3 * blk.in),
                      fmt::format("({})", blk.out), store_.count_with_prefix(p + "dgn."),
                      expect(dgn_ref[b]), false});
    a.rows.push_back({"TemporalConv", fmt::format("({})", blk.out), fmt::format("({})", blk.out),
                      store_.count_with_prefix(p + "tcn."), expect(tcn_ref[b]), false});
    if (blk.has_residual_conv || (ref && res_ref[b] != 0)) {
      a.rows.push_back({"Residual Conv", fmt::format("({})", blk.in), fmt::format("({})", blk.out),
                        store_.count_with_prefix(p + "residual."), expect(res_ref[b]), false});
    }
  }
  const std::size_t last = config_.block_channels[2];
  for (const char* name : {"Dropout1", "Dropout2", "ReLU"}) {
    a.rows.push_back({name, fmt::format("({})", last), fmt::format("({})", last), 0, std::nullopt,
                      false});
  }
  a.rows.push_back({"Fully Connected (FC)", fmt::format("({})", 2 * last),
                    fmt::format("({})", config_.classes), store_.count_with_prefix("fc."),
                    expect(516), false});
  a.total = store_.total_count();
  if (ref) a.expected_total = 90552;
  return a;
}

std::pair<Tensor, Tensor> Dgnn::block_forward(const Block& blk, const Tensor& vertex,
                                              const Tensor& edge,
                                              const nn::ForwardOptions& options) const {
  const nn::Mode mode = options.mode;
  // Incoming edges aggregate through A_target, outgoing through A_source.
  const Tensor in_agg = nn::matmul(edge, blk.a_target, false, true);
  const Tensor out_agg = nn::matmul(edge, blk.a_source, false, true);
  Tensor v = channel_linear(blk.vertex_linear, nn::concat({vertex, in_agg, out_agg}, 1));
  v = nn::relu(norm4(blk.vertex_bn, v, mode));

  const Tensor src = nn::matmul(vertex, blk.a_source);
  const Tensor tgt = nn::matmul(vertex, blk.a_target);
  Tensor e = channel_linear(blk.edge_linear, nn::concat({edge, src, tgt}, 1));
  e = nn::relu(norm4(blk.edge_bn, e, mode));

  auto residual = [&](const Tensor& x) -> Tensor {
    if (blk.has_residual_conv) return norm4(blk.residual_bn, blk.residual(x), mode);
    if (blk.identity_residual) return x;
    return {};
  };
  auto temporal = [&](const Tensor& x, const Tensor& skip) {
    Tensor y = norm4(blk.tcn_bn, blk.tcn(x), mode);
    const Tensor r = residual(skip);
    return nn::relu(r.defined() ? nn::add(y, r) : y);
  };

  if (config_.temporal_edge_mode == TemporalEdgeMode::shared) {
    const Tensor joint = temporal(nn::concat({v, e}, 3), nn::concat({vertex, edge}, 3));
    return {nn::narrow(joint, 3, 0, kVertices), nn::narrow(joint, 3, kVertices, kEdges)};
  }
  return {temporal(v, vertex), e};
}

Tensor Dgnn::forward(const Tensor& vertices, const nn::ForwardOptions& options) const {
  const Shape& s = vertices.shape();
  if (s.size() != 4 || s[1] != config_.window || s[2] != kVertices ||
      s[3] != config_.in_channels) {
    throw DimensionError(fmt::format("DGNN input: expected (B, {}, {}, {}), got {}",
                                     config_.window, kVertices, config_.in_channels,
                                     nn::to_string(s)));
  }
  const std::size_t batch = s[0];
  Tensor v = data_norm(data_bn_v_, vertices, options.mode);
  Tensor e = data_norm(data_bn_e_, edge_features(vertices, build_graph()), options.mode);
  for (const Block& blk : blocks_) std::tie(v, e) = block_forward(blk, v, e, options);

  const std::size_t c = config_.block_channels[2];
  Tensor pv = nn::mean_last(nn::reshape(v, {batch, c, v.dim(2) * v.dim(3)}));
  Tensor pe = nn::mean_last(nn::reshape(e, {batch, c, e.dim(2) * e.dim(3)}));
  pv = nn::dropout(pv, config_.dropout, options.mode, options.rng);
  pe = nn::dropout(pe, config_.dropout, options.mode, options.rng);
  return fc_(nn::relu(nn::concat({pv, pe}, 1)));
}

std::array<double, kClasses> Dgnn::classify(const ActionWindow& window) const {
  if (config_.classes != kClasses) throw ConfigError("classify requires a 4-class model");
  nn::NoGradGuard no_grad;
  const Tensor logits = forward(vertex_input(window), {nn::Mode::eval, nullptr});
  std::array<double, kClasses> out{};
  std::copy_n(logits.data().begin(), kClasses, out.begin());
  return out;
}

int argmax(std::span<const double> scores) {
  if (scores.empty()) throw DimensionError("argmax of empty scores");
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

}  // namespace wifisense::dgnn
