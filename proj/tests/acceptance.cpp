// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//   acceptance [--cli PATH] [--only N]... [--work DIR]

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "support/gradcheck.hpp"
#include "support/metric_oracles.hpp"
#include "support/sync_fuzz.hpp"
#include "wifisense/config/run_config.hpp"
#include "wifisense/csi/sync.hpp"
#include "wifisense/dgnn/dgnn.hpp"
#include "wifisense/dgnn/train.hpp"
#include "wifisense/metrics/confusion.hpp"
#include "wifisense/metrics/pck.hpp"
#include "wifisense/nn/ops.hpp"
#include "wifisense/nn/heap.hpp"
#include "wifisense/pipeline.hpp"
#include "wifisense/synth/dataset.hpp"
#include "wifisense/tednet/tednet.hpp"
#include "wifisense/tednet/train.hpp"

namespace fs = std::filesystem;
using namespace wifisense;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Run {
  int code = -1;
  std::string output;
};

Run run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = "'" + cli + "' " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// 1. DGNN parameter budget, per group and total, also through the CLI.
Outcome parameter_budget(const std::string& cli) {
  const auto t0 = Clock::now();
  const dgnn::Dgnn model(dgnn::DgnnConfig{});
  const auto& s = model.params();
  const std::vector<std::pair<std::string, std::size_t>> expected{
      {"data_bn_v.", 68},         {"data_bn_e.", 64},         {"block1.", 3184},
      {"block1.dgn.", 832},       {"block1.tcn.", 2352},      {"block2.", 17824},
      {"block2.dgn.", 3808},      {"block2.tcn.", 9312},      {"block2.residual.", 4704},
      {"block3.", 68896},         {"block3.dgn.", 13216},     {"block3.tcn.", 37056},
      {"block3.residual.", 18624}, {"fc.", 516}};
  std::string diff;
  for (const auto& [prefix, n] : expected)
    if (s.count_with_prefix(prefix) != n)
      diff += fmt::format(" {}={} (want {})", prefix, s.count_with_prefix(prefix), n);
  if (s.total_count() != 90552) diff += fmt::format(" total={} (want 90552)", s.total_count());
  const double lib_time = seconds_since(t0);

  const auto t1 = Clock::now();
  const Run r = run_cli(cli, "audit-params --model dgnn");
  const double cli_time = seconds_since(t1);
  const bool cli_ok = r.code == 0 && r.output.find("Total 90552 (expected 90552) OK") != std::string::npos;
  if (!cli_ok) diff += fmt::format(" audit-params exit {}", r.code);
  if (cli_time >= 1.0) diff += fmt::format(" audit-params took {:.2f} s", cli_time);
  return {diff.empty(), diff.empty() ? fmt::format("14 groups and total 90552 exact; audit-params {:.3f} s, "
                                                   "in-process {:.3f} s", cli_time, lib_time)
                                     : "mismatch:" + diff};
}

// 2. TED-Net construction audit against the eleven reference output shapes.
Outcome shapes() {
  const std::vector<nn::Shape> want{{64, 58, 5}, {128, 31, 3}, {128, 17, 2}, {384, 17, 2},
                                    {34, 384},   {34, 384},    {64, 68},     {32, 136},
                                    {4352},      {34},         {17, 2}};
  const tednet::TedNet net(tednet::TedNetConfig{});
  const auto& audit = net.shape_audit();
  if (audit.size() != want.size()) return {false, fmt::format("{} audited layers, want 11", audit.size())};
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (audit[i].shape != want[i]) {
      return {false, fmt::format("{}: {} (want {})", audit[i].layer, nn::to_string(audit[i].shape),
                                 nn::to_string(want[i]))};
    }
  }
  return {true, "11/11 layer shapes exact"};
}

nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(nn::numel(shape));
  for (auto& x : v) x = u(rng);
  return nn::Tensor::from(std::move(shape), std::move(v));
}

keypoints::Skeleton random_skeleton(std::mt19937_64& rng, std::size_t frame) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  keypoints::Skeleton s;
  s.frame_index = frame;
  for (auto& k : s.keypoints) k = {u(rng), u(rng), true, false};
  return s;
}

// 3. Central differences on the narrow-channel variants of both networks.
Outcome gradients() {
  const auto t0 = Clock::now();
  const double h = 1e-6;
  std::mt19937_64 rng(31);

  tednet::TedNet ted(tednet::TedNetConfig::tiny());
  std::vector<nn::Tensor> inputs;
  for (int r = 0; r < 3; ++r) inputs.push_back(random_tensor({2, 1, 114, 10}, rng));
  std::vector<double> target_values;
  for (int i = 0; i < 2 * 34; ++i) target_values.push_back(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
  const nn::Tensor target = nn::Tensor::from({2, 17, 2}, target_values);
  const auto ted_report = testing::gradcheck_store(
      ted.params(),
      [&] { return nn::mse_loss(ted.forward(inputs, {nn::Mode::train, nullptr}), target); }, h);

  dgnn::DgnnConfig dc = dgnn::DgnnConfig::tiny();
  dc.seed = 3;
  dgnn::Dgnn dg(dc);
  std::vector<dgnn::ActionWindow> windows(4);
  std::vector<const dgnn::ActionWindow*> ptrs;
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) {
    for (std::size_t t = 0; t < dc.window; ++t) windows[i].frames.push_back(random_skeleton(rng, t));
    windows[i].label = i;
    ptrs.push_back(&windows[i]);
    labels.push_back(i);
  }
  const nn::Tensor x = dgnn::vertex_input(ptrs);
  const auto dg_report = testing::gradcheck_store(
      dg.params(),
      [&] { return nn::cross_entropy(dg.forward(x, {nn::Mode::train, nullptr}), labels); }, h);

  const double elapsed = seconds_since(t0);
  bool pass = elapsed < 300.0;
  std::string detail;
  for (const auto& [name, r] : {std::pair{"tednet", &ted_report}, std::pair{"dgnn", &dg_report}}) {
    const double frac = r->fraction_below(1e-4);
    const double worst = r->max_rel_error();
    pass = pass && frac >= 0.99 && worst < 1e-3;
    detail += fmt::format("{} {} params, {:.2f}% < 1e-4, max {:.2e} ({}); ", name, r->samples.size(),
                          100.0 * frac, worst, r->worst() ? r->worst()->name : "-");
  }
  detail += fmt::format("h {:g}, {:.1f} s", h, elapsed);
  return {pass, detail};
}

synth::DatasetConfig small_dataset(std::uint64_t seed) {
  synth::DatasetConfig c;
  c.seed = seed;
  return c;
}

// 4. Full TED-Net overfits 64 synthetic windows.
Outcome overfit() {
  const auto t0 = Clock::now();
  synth::DatasetConfig dc = small_dataset(4);
  std::vector<synth::Session> train_sessions;
  for (auto& s : synth::generate_sessions(dc))
    if (s.info.split == "train") train_sessions.push_back(std::move(s));
  const tednet::PoseDataset data = pipeline::pose_dataset(train_sessions, {}, {}, 64);
  if (data.size() != 64) return {false, fmt::format("built {} windows, want 64", data.size())};

  tednet::TedNet net(tednet::TedNetConfig{});
  const metrics::PckConfig pck_cfg{{0.5}};
  auto pck50 = [&] {
    const auto preds = tednet::infer_sequence(net, data.windows);
    return metrics::pck(preds, data.targets, pck_cfg).avg[0];
  };
  double last_pck = 0.0;
  tednet::TrainConfig tc;
  tc.epochs = 300;
  tc.batch_size = 8;
  tc.adam.lr = config::pose_train_config(config::RunConfig{}).adam.lr;
  tc.seed = 1;
  tc.stop = [&](const std::vector<tednet::EpochRecord>& log) {
    if (log.back().mse >= 1e-3) return false;
    last_pck = pck50();
    return tednet::evaluate_mse(net, data) < 1e-3 && last_pck == 100.0;
  };
  const auto result = tednet::train(net, data, tc);
  const double final_mse = tednet::evaluate_mse(net, data);
  last_pck = pck50();
  const double elapsed = seconds_since(t0);
  const bool pass = final_mse < 1e-3 && last_pck == 100.0 && result.epochs_run <= 300 && elapsed < 900.0;
  return {pass, fmt::format("lr {:g}, epochs {}, train MSE {:.3e} (eval mode), AVG PCK50 {:.1f}%, {:.0f} s",
                            tc.adam.lr, result.epochs_run, final_mse, last_pck, elapsed)};
}

// Up to `per_class` windows of each class, spread evenly over what is available.
std::vector<dgnn::ActionWindow> balanced(const std::vector<dgnn::ActionWindow>& all, std::size_t per_class,
                                         std::array<std::size_t, 4>* available) {
  std::array<std::vector<const dgnn::ActionWindow*>, 4> by_class;
  for (const auto& w : all) by_class[static_cast<std::size_t>(w.label)].push_back(&w);
  std::vector<dgnn::ActionWindow> out;
  for (std::size_t c = 0; c < 4; ++c) {
    (*available)[c] = by_class[c].size();
    const std::size_t n = std::min(per_class, by_class[c].size());
    for (std::size_t i = 0; i < n; ++i) out.push_back(*by_class[c][i * by_class[c].size() / n]);
  }
  return out;
}

// Several subjects with short recordings.
synth::DatasetConfig action_dataset(std::uint64_t seed) {
  synth::DatasetConfig c;
  c.seed = seed;
  c.subjects = 4;
  c.action_duration_s = 10.0;
  c.fall_repetitions = 2;
  c.fall_train_repetitions = 1;
  return c;
}

// 5. DGNN on the synthetic four-class task, judged on a freshly generated set.
Outcome separability() {
  const auto t0 = Clock::now();
  auto windows_for = [&](std::uint64_t seed, std::size_t per_class, std::array<std::size_t, 4>* available) {
    const auto sessions = synth::generate_sessions(action_dataset(seed));
    return balanced(pipeline::action_windows(sessions, 30, 1, nullptr, {}, {}), per_class, available);
  };
  std::array<std::size_t, 4> train_avail{}, test_avail{};
  const auto train_set = windows_for(101, 120, &train_avail);
  const auto test_set = windows_for(202, 60, &test_avail);
  for (std::size_t c = 0; c < 4; ++c)
    if (std::min(train_avail[c], test_avail[c]) < 50)
      return {false, fmt::format("class {} has only {} / {} windows", c, train_avail[c], test_avail[c])};

  dgnn::Dgnn model(dgnn::DgnnConfig{});
  dgnn::ActionTrainConfig tc;
  tc.epochs = 30;
  tc.seed = 1;
  const auto log = dgnn::train_action(model, train_set, tc).log;
  const auto preds = dgnn::predict_actions(model, test_set);

  std::vector<int> p, t;
  for (const auto& pr : preds) p.push_back(pr.predicted), t.push_back(pr.label);
  const auto cm = metrics::confusion(p, t);
  const auto oracle = testing::brute_force_confusion(p, t);
  bool rows_ok = cm.total() == t.size();
  for (std::size_t c = 0; c < 4; ++c) {
    const auto want = static_cast<std::size_t>(std::count(t.begin(), t.end(), static_cast<int>(c)));
    rows_ok = rows_ok && cm.row_sum(c) == want && cm.counts[c] == oracle[c];
  }
  const double acc = 100.0 * dgnn::accuracy(preds);
  const double elapsed = seconds_since(t0);
  const auto pc = cm.per_class_accuracy();
  return {acc >= 95.0 && rows_ok && elapsed < 900.0,
          fmt::format("held-out accuracy {:.1f}% on {} windows (per class {:.1f}/{:.1f}/{:.1f}/{:.1f}), "
                      "{} train windows (final epoch loss {:.3f}, accuracy {:.1f}%), counts {}, "
                      "confusion rows {}, {:.0f} s",
                      acc, preds.size(), pc[0], pc[1], pc[2], pc[3], train_set.size(), log.back().loss,
                      100.0 * log.back().accuracy, fmt::join(cm.counts, " "),
                      rows_ok ? "match oracle" : "DIFFER", elapsed)};
}

// 6. PCK and confusion matrices against brute-force recounts.
Outcome metric_oracles() {
  std::mt19937_64 rng(6006);
  std::size_t pck_bad = 0, mono_bad = 0, cm_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = testing::make_pck_case(rng);
    const auto report = metrics::pck(c.preds, c.gts, {c.alphas});
    const auto oracle = testing::brute_force_pck(c.preds, c.gts, c.alphas);
    bool ok = true;
    for (std::size_t k = 0; k < keypoints::kJoints; ++k)
      for (std::size_t a = 0; a < c.alphas.size(); ++a)
        ok = ok && testing::same_or_both_nan(report.percent[k][a], oracle[k][a], 1e-9);
    for (std::size_t a = 0; a < c.alphas.size(); ++a) {
      double total = 0.0;
      std::size_t n = 0;
      for (const auto& row : oracle)
        if (!std::isnan(row[a])) total += row[a], ++n;
      const double avg = n ? total / static_cast<double>(n) : std::nan("");
      ok = ok && testing::same_or_both_nan(report.avg[a], avg, 1e-9);
    }
    pck_bad += !ok;

    // monotone in alpha once the alphas are sorted
    auto sorted = c.alphas;
    std::sort(sorted.begin(), sorted.end());
    const auto sorted_report = metrics::pck(c.preds, c.gts, {sorted});
    mono_bad += !metrics::is_monotone(sorted_report);
    if (std::is_sorted(c.alphas.begin(), c.alphas.end())) mono_bad += !metrics::is_monotone(report);

    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    std::vector<int> p(n), t(n);
    std::uniform_int_distribution<int> cls(0, 3);
    for (std::size_t i = 0; i < n; ++i) p[i] = cls(rng), t[i] = cls(rng);
    const auto cm = metrics::confusion(p, t);
    const auto want = testing::brute_force_confusion(p, t);
    bool cm_ok = cm.counts == want && cm.total() == n;
    const auto acc = cm.per_class_accuracy();
    for (std::size_t r = 0; r < 4; ++r) {
      std::size_t row = 0;
      for (std::size_t col = 0; col < 4; ++col) row += want[r][col];
      const double expect = row ? 100.0 * static_cast<double>(want[r][r]) / static_cast<double>(row) : std::nan("");
      cm_ok = cm_ok && testing::same_or_both_nan(acc[r], expect, 1e-9);
    }
    std::size_t binary_hits = want[3][3];
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t col = 0; col < 3; ++col) binary_hits += want[r][col];
    cm_ok = cm_ok && std::abs(cm.binary_fall_accuracy() - 100.0 * static_cast<double>(binary_hits) /
                                                           static_cast<double>(n)) <= 1e-9;
    cm_bad += !cm_ok;
  }
  return {pck_bad == 0 && mono_bad == 0 && cm_bad == 0,
          fmt::format("1000 trials: PCK mismatches {}, monotonicity violations {}, confusion mismatches {}",
                      pck_bad, mono_bad, cm_bad)};
}

// 7. Synchronizer against the brute-force intersection.
Outcome synchronizer() {
  std::mt19937_64 rng(7007);
  std::size_t mismatches = 0, aligned = 0, wraps = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto sc = testing::make_sync_scenario(rng);
    const auto streams = csi::split_by_receiver(sc.interleaved, sc.receivers);
    const auto r = csi::synchronize(streams, {.receivers = sc.receivers});
    std::vector<std::uint64_t> got;
    for (const auto& s : r.samples) got.push_back(s.extended_seq);
    const auto want = testing::brute_force_intersection(sc.kept);
    mismatches += got != want;
    aligned += got.size();
    wraps += !want.empty() && want.back() >= (std::uint64_t{1} << 32);
  }
  return {mismatches == 0, fmt::format("10000 scenarios ({} crossing the 32-bit wrap), {} aligned seqs, "
                                       "{} mismatches", wraps, aligned, mismatches)};
}

// 8. Same seed, same bytes through synth -> train-pose -> eval-pose.
Outcome determinism(const std::string& cli, const fs::path& work) {
  const auto t0 = Clock::now();
  const std::string small =
      " --set synth.duration=4 --set synth.fall_lead_in=2 --set synth.fall_duration=2"
      " --set synth.fall_repetitions=2 --set synth.fall_train_repetitions=1";
  std::vector<std::string> reports;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = work / "determinism" / run;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const Run s = run_cli(cli, "synth --out " + q(dir / "data") + " --seed 8" + small);
    if (s.code != 0) return {false, "synth failed: " + s.output};
    const Run t = run_cli(cli, "train-pose --data " + q(dir / "data") + " --out " + q(dir / "model") +
                                   " --seed 8 --epochs 2 --max-windows 32 --set train_pose.batch_size=8");
    if (t.code != 0) return {false, "train-pose failed: " + t.output};
    const Run e = run_cli(cli, "eval-pose --data " + q(dir / "data") + " --model " + q(dir / "model") +
                                   " --split train --split-fall --out " + q(dir / "report"));
    if (e.code != 0) return {false, "eval-pose failed: " + e.output};
    std::string bytes;
    for (const char* f : {"pck.txt", "pck.csv", "segments.csv", "pck_fall_split.txt", "pck_fall_split.csv"})
      bytes += slurp(dir / "report" / f) + '\x1f';
    bytes += slurp(dir / "model" / "train_log.csv") + '\x1f' + slurp(dir / "model" / "tednet.ckpt");
    reports.push_back(std::move(bytes));
  }
  const bool same = reports[0] == reports[1] && reports[0].size() > 100;
  return {same, fmt::format("reports, training log and checkpoint {} ({} bytes), {:.0f} s",
                            same ? "byte-identical" : "DIFFER", reports[0].size(), seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  wifisense::nn::retain_freed_memory();
  CLI::App app{"acceptance criteria 1-8"};
  std::string cli = WIFISENSE_CLI;
  std::vector<int> only;
  fs::path work = fs::temp_directory_path() / "wifisense_acceptance";
  app.add_option("--cli", cli, "wifisense binary");
  app.add_option("--only", only, "criterion numbers to run");
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"parameter budget", [&] { return parameter_budget(cli); }},
      {"shape reproduction", shapes},
      {"gradient correctness", gradients},
      {"overfit capability", overfit},
      {"action separability", separability},
      {"metric oracles", metric_oracles},
      {"synchronizer correctness", synchronizer},
      {"determinism", [&] { return determinism(cli, work); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    fmt::print("{} {}. {}: {}\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
