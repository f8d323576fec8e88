#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include "wifisense/config/run_config.hpp"
#include "wifisense/csi/session_io.hpp"
#include "wifisense/dgnn/train.hpp"
#include "wifisense/error.hpp"
#include "wifisense/keypoints/skeleton_io.hpp"
#include "wifisense/metrics/confusion.hpp"
#include "wifisense/metrics/pck.hpp"
#include "wifisense/metrics/segments.hpp"
#include "wifisense/nn/checkpoint.hpp"
#include "wifisense/nn/heap.hpp"
#include "wifisense/pipeline.hpp"

namespace fs = std::filesystem;
using namespace wifisense;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kAudit = 4 };

constexpr const char* kConfigEcho = "run_config.txt";
constexpr const char* kPoseCheckpoint = "tednet.ckpt";
constexpr const char* kActionCheckpoint = "dgnn.ckpt";

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_file, "config file of `section.key = value` lines");
  cmd->add_option("--set", c.overrides, "override one key, e.g. --set train_pose.lr=0.0005");
}

config::RunConfig resolve(const Common& c, const std::optional<fs::path>& base = std::nullopt) {
  config::RunConfig cfg;
  if (base) cfg.merge_file(*base);
  if (!c.config_file.empty()) cfg.merge_file(c.config_file);
  for (const auto& o : c.overrides) cfg.set_assignment(o);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = fmt::output_file(path.string());
  out.print("{}", text);
}

fs::path prepare_out(const std::string& out, const config::RunConfig& cfg) {
  fs::create_directories(out);
  cfg.write(fs::path(out) / kConfigEcho);
  return out;
}

fs::path model_config(const std::string& dir) {
  const fs::path p = fs::path(dir) / kConfigEcho;
  if (!fs::exists(p)) throw DataError(fmt::format("model directory '{}' has no {}", dir, kConfigEcho));
  return p;
}

tednet::TedNet load_pose_model(const std::string& dir) {
  const auto cfg = config::RunConfig::load(model_config(dir));
  tednet::TedNet model(config::tednet_config(cfg));
  nn::load_checkpoint(fs::path(dir) / kPoseCheckpoint, model.params());
  return model;
}

dgnn::Dgnn load_action_model(const std::string& dir) {
  const auto cfg = config::RunConfig::load(model_config(dir));
  dgnn::Dgnn model(config::dgnn_config(cfg));
  nn::load_checkpoint(fs::path(dir) / kActionCheckpoint, model.params());
  return model;
}

// ---- subcommands ----

int cmd_synth(const Common& c, const std::string& out, std::optional<std::uint64_t> seed) {
  auto cfg = resolve(c);
  if (seed) cfg.set("synth.seed", std::to_string(*seed));
  const auto infos = synth::write_dataset(out, config::dataset_config(cfg));
  cfg.write(fs::path(out) / kConfigEcho);
  std::size_t train = 0, test = 0;
  for (const auto& i : infos) (i.split == "train" ? train : test) += i.frames;
  fmt::print("wrote {} sessions to {} ({} train frames, {} test frames)\n", infos.size(), out,
             train, test);
  return kOk;
}

int cmd_ingest(const Common& c, const std::string& input, const std::string& out) {
  const auto cfg = resolve(c);
  const auto policy = config::sync_policy(cfg);
  const auto records = csi::read_records(input);
  const auto streams = csi::split_by_receiver(records, policy.receivers);
  const auto result = csi::synchronize(streams, policy);
  const auto windows = csi::make_windows(result.samples, config::window_config(cfg));
  const auto& s = result.stats;
  std::string report = fmt::format("records {}\naligned {}\ndropped_seqs {}\nwindows {}\n",
                                   records.size(), s.aligned, s.dropped_seqs, windows.size());
  for (std::size_t r = 0; r < policy.receivers; ++r) {
    report += fmt::format("receiver {}: unmatched {}, duplicates {}, wraps {}\n", r,
                          s.unmatched_records[r], s.duplicates[r], s.wraps[r]);
  }
  fmt::print("{}", report);
  if (!out.empty()) write_text(prepare_out(out, cfg) / "ingest_stats.txt", report);
  return kOk;
}

int cmd_train_pose(const Common& c, const std::string& data, const std::string& out,
                   std::optional<std::uint64_t> seed, std::optional<std::size_t> epochs,
                   std::optional<std::size_t> max_windows, bool validate) {
  auto cfg = resolve(c);
  if (seed) cfg.set("tednet.seed", std::to_string(*seed));
  if (epochs) cfg.set("train_pose.epochs", std::to_string(*epochs));
  if (max_windows) cfg.set("train_pose.max_windows", std::to_string(*max_windows));
  const fs::path dir = prepare_out(out, cfg);
  const auto policy = config::sync_policy(cfg);
  const auto window = config::window_config(cfg);
  const auto train = pipeline::pose_dataset(pipeline::load_split(data, "train"), policy, window,
                                            cfg.unsigned_integer("train_pose.max_windows"));
  std::optional<tednet::PoseDataset> val;
  if (validate) val = pipeline::pose_dataset(pipeline::load_split(data, "test"), policy, window);

  tednet::TedNet model(config::tednet_config(cfg));
  auto tc = config::pose_train_config(cfg);
  tc.checkpoint = dir / kPoseCheckpoint;
  const double target = cfg.real("train_pose.target_mse");
  if (target > 0.0) {
    tc.stop = [target](const std::vector<tednet::EpochRecord>& log) {
      for (auto it = log.rbegin(); it != log.rend(); ++it)
        if (it->split == "train") return it->epoch > 0 && it->mse < target;
      return false;
    };
  }
  std::ofstream log(dir / "train_log.csv");
  log << "epoch,split,mse\n";
  fmt::print("training TED-Net on {} windows\n", train.size());
  const auto result = tednet::train(model, train, tc, val ? &*val : nullptr, &log);
  fmt::print("best epoch {} mse {:.6g} after {} epochs\n", result.best_epoch, result.best_mse,
             result.epochs_run);
  return kOk;
}

int cmd_eval_pose(const Common& c, const std::string& data, const std::string& split,
                  const std::string& model_dir, const std::string& out, bool split_fall,
                  const std::string& pred_csv, const std::string& gt_csv) {
  std::vector<keypoints::Skeleton> preds, gts;
  std::vector<int> labels;
  config::RunConfig cfg;
  if (!pred_csv.empty() || !gt_csv.empty()) {
    if (pred_csv.empty() || gt_csv.empty()) throw ConfigError("--pred and --gt go together");
    cfg = resolve(c);
    preds = keypoints::read_skeleton_csv(pred_csv);
    gts = keypoints::read_skeleton_csv(gt_csv);
    if (split_fall) throw ConfigError("--split-fall needs --data and --model");
  } else {
    if (data.empty() || model_dir.empty()) {
      throw ConfigError("eval-pose needs --data and --model, or --pred and --gt");
    }
    cfg = resolve(c, model_config(model_dir));
    const auto model = load_pose_model(model_dir);
    const auto policy = config::sync_policy(cfg);
    const auto window = config::window_config(cfg);
    for (const auto& s : pipeline::load_split(data, split)) {
      const auto track = pipeline::skeleton_track(s, &model, policy, window);
      for (std::size_t i = 0; i < track.frames.size(); ++i) {
        preds.push_back(track.frames[i]);
        gts.push_back(s.skeletons[track.frames[i].frame_index]);
        labels.push_back(track.labels[i]);
      }
    }
  }
  const fs::path dir = prepare_out(out, cfg);
  const auto pck_cfg = config::pck_config(cfg);
  const auto report = metrics::pck(preds, gts, pck_cfg);
  if (!metrics::is_monotone(report)) throw Error("PCK report is not monotone in alpha");
  std::string text = metrics::format_pck_table(report);
  text += fmt::format("frames {}, excluded {}\n", report.frames, report.excluded_frames.size());
  write_text(dir / "pck.txt", text);
  write_text(dir / "pck.csv", metrics::format_pck_csv(report));
  write_text(dir / "segments.csv", metrics::format_segment_csv(metrics::segment_tracking_error(
                                       preds, gts, metrics::default_segments())));
  fmt::print("{}", text);
  if (split_fall) {
    std::vector<keypoints::Skeleton> pf, gf, pn, gn;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      auto& p = labels[i] == metrics::kFallClass ? pf : pn;
      auto& g = labels[i] == metrics::kFallClass ? gf : gn;
      p.push_back(preds[i]);
      g.push_back(gts[i]);
    }
    const auto non_fall = metrics::pck(pn, gn, pck_cfg), fall = metrics::pck(pf, gf, pck_cfg);
    const std::string split_text = metrics::format_fall_split_table(non_fall, fall);
    write_text(dir / "pck_fall_split.txt", split_text);
    write_text(dir / "pck_fall_split.csv", metrics::format_fall_split_csv(non_fall, fall));
    fmt::print("{}", split_text);
  }
  return kOk;
}

const tednet::TedNet* pose_source(const std::string& source, const std::string& pose_model,
                                  std::optional<tednet::TedNet>& holder) {
  if (source == "rgb") return nullptr;
  if (source != "csi") throw ConfigError("--skeleton-source must be csi or rgb");
  if (pose_model.empty()) throw ConfigError("--skeleton-source csi needs --pose-model");
  holder.emplace(load_pose_model(pose_model));
  return &*holder;
}

int cmd_train_action(const Common& c, const std::string& data, const std::string& out,
                     std::optional<std::uint64_t> seed, std::optional<std::size_t> epochs,
                     const std::string& source, const std::string& pose_model) {
  auto cfg = resolve(c);
  if (seed) cfg.set("dgnn.seed", std::to_string(*seed));
  if (epochs) cfg.set("train_action.epochs", std::to_string(*epochs));
  const fs::path dir = prepare_out(out, cfg);
  std::optional<tednet::TedNet> holder;
  const auto* pose = pose_source(source, pose_model, holder);
  const auto windows = pipeline::action_windows(
      pipeline::load_split(data, "train"), cfg.unsigned_integer("dgnn.window"),
      cfg.unsigned_integer("train_action.stride"), pose, config::sync_policy(cfg),
      config::window_config(cfg), config::repair_config(cfg));
  dgnn::Dgnn model(config::dgnn_config(cfg));
  auto tc = config::action_train_config(cfg);
  tc.checkpoint = dir / kActionCheckpoint;
  std::ofstream log(dir / "train_log.csv");
  log << "epoch,loss,accuracy\n";
  fmt::print("training DGNN on {} windows\n", windows.size());
  const auto result = dgnn::train_action(model, windows, tc, &log);
  fmt::print("best epoch {} loss {:.6g}\n", result.best_epoch, result.best_loss);
  return kOk;
}

int cmd_eval_action(const Common& c, const std::string& data, const std::string& split,
                    const std::string& model_dir, const std::string& out,
                    const std::string& source, const std::string& pose_model) {
  const auto cfg = resolve(c, model_config(model_dir));
  const fs::path dir = prepare_out(out, cfg);
  std::optional<tednet::TedNet> holder;
  const auto* pose = pose_source(source, pose_model, holder);
  const auto model = load_action_model(model_dir);
  const auto windows = pipeline::action_windows(
      pipeline::load_split(data, split), cfg.unsigned_integer("dgnn.window"), 1, pose,
      config::sync_policy(cfg), config::window_config(cfg), config::repair_config(cfg));
  const auto preds = dgnn::predict_actions(model, windows);
  std::vector<int> p, t;
  for (const auto& x : preds) {
    p.push_back(x.predicted);
    t.push_back(x.label);
  }
  const auto cm = metrics::confusion(p, t);
  std::ofstream pred_out(dir / "predictions.csv");
  dgnn::write_predictions_csv(pred_out, preds);
  write_text(dir / "confusion.csv", metrics::format_confusion_csv(cm));
  const std::string row_name = source == "csi" ? "CSI-skeletons" : "RGB-skeletons";
  const std::string text = metrics::format_confusion_table(cm) + "\n" +
                           metrics::format_accuracy_table({{row_name, cm}});
  write_text(dir / "accuracy.txt", text);
  fmt::print("{}", text);
  return kOk;
}

int cmd_infer(const Common& c, const std::string& input, const std::string& pose_dir,
              const std::string& action_dir, const std::string& out) {
  const auto cfg = resolve(c, model_config(pose_dir));
  const fs::path dir = prepare_out(out, cfg);
  const fs::path in(input);
  const auto records = fs::is_directory(in) ? csi::read_csis(in / "session.csis") : csi::read_records(in);
  const auto policy = config::sync_policy(cfg);
  const auto result = csi::synchronize(csi::split_by_receiver(records, policy.receivers), policy);
  const auto windows = csi::make_windows(result.samples, config::window_config(cfg));
  const auto pose = load_pose_model(pose_dir);
  tednet::InferenceLog info;
  const auto skeletons = tednet::infer_sequence(pose, windows, &info);
  keypoints::write_skeleton_csv(dir / "skeleton.csv", skeletons);
  fmt::print("{} windows -> {} skeletons ({} values clamped)\n", windows.size(), skeletons.size(),
             info.clamped_values);
  if (!action_dir.empty()) {
    const auto action = load_action_model(action_dir);
    const std::vector<int> unknown(skeletons.size(), 0);
    const auto aw = dgnn::make_action_windows(skeletons, unknown, action.config().window, 1);
    std::ofstream csv(dir / "actions.csv");
    dgnn::write_predictions_csv(csv, dgnn::predict_actions(action, aw));
    fmt::print("{} action predictions\n", aw.size());
  }
  return kOk;
}

int cmd_audit(const Common& c, const std::string& which) {
  const auto cfg = resolve(c);
  if (which == "dgnn") {
    dgnn::DgnnConfig dc = config::dgnn_config(cfg);
    try {
      const dgnn::Dgnn model(dc);
      const auto audit = model.audit();
      fmt::print("{}", dgnn::format_audit(audit));
      return audit.ok() ? kOk : kAudit;
    } catch (const AuditError& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kAudit;
    }
  }
  if (which == "tednet") {
    const tednet::TedNet model(config::tednet_config(cfg));
    const auto& ref = tednet::reference_shapes();
    const auto& got = model.shape_audit();
    bool ok = got.size() == ref.size();
    fmt::print("{:<24} {:>16} {:>16}\n", "Layer", "Output", "Expected");
    for (std::size_t i = 0; i < got.size(); ++i) {
      const bool match = i < ref.size() && ref[i].layer == got[i].layer && ref[i].shape == got[i].shape;
      ok = ok && match;
      fmt::print("{:<24} {:>16} {:>16}{}\n", got[i].layer, nn::to_string(got[i].shape),
                 i < ref.size() ? nn::to_string(ref[i].shape) : "-", match ? "" : "  MISMATCH");
    }
    fmt::print("Parameters {}\nShapes {}\n", model.params().total_count(), ok ? "OK" : "MISMATCH");
    return ok ? kOk : kAudit;
  }
  throw ConfigError("--model must be dgnn or tednet");
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const AuditError& e) {
    fmt::print(stderr, "audit error: {}\n", e.what());
    return kAudit;
  } catch (const DimensionError& e) {
    fmt::print(stderr, "shape error: {}\n", e.what());
    return kAudit;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  wifisense::nn::retain_freed_memory();
  CLI::App app{"Wi-Fi CSI pose estimation and action recognition toolkit"};
  app.require_subcommand(0, 1);
  bool help_config = false;
  app.add_flag("--help-config", help_config, "list every config key with its default and rationale");
  app.footer("Exit codes: 0 ok, 1 other failure, 2 config error, 3 data error, 4 audit or shape mismatch.\n"
             "Run `wifisense --help-config` for the config keys.");

  Common common;
  std::string out, data, input, model, split = "test", source = "rgb", pose_model, action_model,
                                       pred_csv, gt_csv, which;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, max_windows;
  bool split_fall = false, validate = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic session dataset");
  add_common(synth, common);
  synth->add_option("-o,--out", out, "dataset directory")->required();
  synth->add_option("--seed", seed, "overrides synth.seed");

  auto* ingest = app.add_subcommand("ingest", "synchronize a .csis or CSV capture into windows");
  add_common(ingest, common);
  ingest->add_option("-i,--input", input, ".csis or .csv record file")->required();
  ingest->add_option("-o,--out", out, "optional output directory for the statistics");

  auto* train_pose = app.add_subcommand("train-pose", "train TED-Net on a dataset's train split");
  add_common(train_pose, common);
  train_pose->add_option("-d,--data", data, "dataset directory")->required();
  train_pose->add_option("-o,--out", out, "model directory")->required();
  train_pose->add_option("--seed", seed, "overrides tednet.seed");
  train_pose->add_option("--epochs", epochs, "overrides train_pose.epochs");
  train_pose->add_option("--max-windows", max_windows, "overrides train_pose.max_windows");
  train_pose->add_flag("--validate", validate, "log test-split MSE and keep the best test checkpoint");

  auto* eval_pose = app.add_subcommand("eval-pose", "PCK report per keypoint and alpha");
  add_common(eval_pose, common);
  eval_pose->add_option("-d,--data", data, "dataset directory");
  eval_pose->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  eval_pose->add_option("-m,--model", model, "TED-Net model directory");
  eval_pose->add_option("--pred", pred_csv, "predicted skeleton CSV (fixture mode)");
  eval_pose->add_option("--gt", gt_csv, "ground-truth skeleton CSV (fixture mode)");
  eval_pose->add_option("-o,--out", out, "report directory")->required();
  eval_pose->add_flag("--split-fall", split_fall, "add non-fall (X) / fall (O) columns");

  auto* train_action = app.add_subcommand("train-action", "train the DGNN action classifier");
  add_common(train_action, common);
  train_action->add_option("-d,--data", data, "dataset directory")->required();
  train_action->add_option("-o,--out", out, "model directory")->required();
  train_action->add_option("--seed", seed, "overrides dgnn.seed");
  train_action->add_option("--epochs", epochs, "overrides train_action.epochs");
  train_action->add_option("--skeleton-source", source, "rgb (ground truth) or csi (TED-Net)")
      ->check(CLI::IsMember({"rgb", "csi"}));
  train_action->add_option("--pose-model", pose_model, "TED-Net model directory for csi skeletons");

  auto* eval_action = app.add_subcommand("eval-action", "confusion matrix and accuracies");
  add_common(eval_action, common);
  eval_action->add_option("-d,--data", data, "dataset directory")->required();
  eval_action->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  eval_action->add_option("-m,--model", model, "DGNN model directory")->required();
  eval_action->add_option("-o,--out", out, "report directory")->required();
  eval_action->add_option("--skeleton-source", source, "rgb (ground truth) or csi (TED-Net)")
      ->check(CLI::IsMember({"rgb", "csi"}));
  eval_action->add_option("--pose-model", pose_model, "TED-Net model directory for csi skeletons");

  auto* infer = app.add_subcommand("infer", "CSI -> skeleton CSV -> per-frame action CSV");
  add_common(infer, common);
  infer->add_option("-i,--input", input, "session directory, .csis or .csv")->required();
  infer->add_option("--pose-model", pose_model, "TED-Net model directory")->required();
  infer->add_option("--action-model", action_model, "DGNN model directory");
  infer->add_option("-o,--out", out, "output directory")->required();

  auto* audit = app.add_subcommand("audit-params", "parameter and shape audit");
  add_common(audit, common);
  audit->add_option("--model", which, "dgnn or tednet")->required()->check(CLI::IsMember({"dgnn", "tednet"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (help_config) {
    fmt::print("{}", config::config_help());
    return kOk;
  }
  return guarded([&] {
    if (synth->parsed()) return cmd_synth(common, out, seed);
    if (ingest->parsed()) return cmd_ingest(common, input, out);
    if (train_pose->parsed())
      return cmd_train_pose(common, data, out, seed, epochs, max_windows, validate);
    if (eval_pose->parsed())
      return cmd_eval_pose(common, data, split, model, out, split_fall, pred_csv, gt_csv);
    if (train_action->parsed())
      return cmd_train_action(common, data, out, seed, epochs, source, pose_model);
    if (eval_action->parsed())
      return cmd_eval_action(common, data, split, model, out, source, pose_model);
    if (infer->parsed()) return cmd_infer(common, input, pose_model, action_model, out);
    if (audit->parsed()) return cmd_audit(common, which);
    std::cout << app.help();
    return static_cast<int>(kOk);
  });
}
