#include <doctest.h>

#include <cmath>
#include <random>

#include "support/common.hpp"
#include "support/gradcheck.hpp"
#include "wifisense/error.hpp"
#include "wifisense/nn/ops.hpp"
#include "wifisense/tednet/tednet.hpp"
#include "wifisense/tednet/train.hpp"

using namespace wifisense;
using namespace wifisense::tednet;
using nn::Tensor;

namespace {

csi::CsiWindow random_window(std::mt19937_64& rng, std::size_t frame, const TedNetConfig& c) {
  csi::CsiWindow w;
  w.frame_index = frame;
  w.first_seq = frame * c.window;
  for (std::size_t r = 0; r < c.receivers; ++r)
    w.receivers.push_back(testing::random_tensor({1, c.subcarriers, c.window}, rng));
  return w;
}

PoseDataset random_dataset(std::mt19937_64& rng, std::size_t n, const TedNetConfig& c) {
  PoseDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.windows.push_back(random_window(rng, i, c));
    d.targets.push_back(testing::random_skeleton(rng, i));
  }
  return d;
}

std::vector<double> snapshot(const nn::ParamStore& store) {
  std::vector<double> out;
  for (const auto& p : store.parameters()) {
    const auto d = p.tensor.data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

}  // namespace

TEST_SUITE("tednet") {

TEST_CASE("default configuration matches the reference shapes") {
  const TedNet net(TedNetConfig{});
  const auto& audit = net.shape_audit();
  const auto& ref = reference_shapes();
  REQUIRE(audit.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CAPTURE(ref[i].layer);
    CHECK(audit[i].layer == ref[i].layer);
    CHECK(audit[i].shape == ref[i].shape);
  }
  CHECK(ref.size() == 11);
}

TEST_CASE("a forward trace of a batch repeats the audit") {
  const TedNet net(TedNetConfig::tiny());
  std::mt19937_64 rng(4);
  std::vector<Tensor> in;
  for (int r = 0; r < 3; ++r) in.push_back(testing::random_tensor({3, 1, 114, 10}, rng));
  std::vector<ShapeRecord> trace;
  const Tensor out = net.forward(in, {}, &trace);
  CHECK(out.shape() == nn::Shape{3, 17, 2});
  REQUIRE(trace.size() == net.shape_audit().size());
  for (std::size_t i = 0; i < trace.size(); ++i) CHECK(trace[i].shape == net.shape_audit()[i].shape);
}

TEST_CASE("shared encoder weights divide the encoder parameters by the receiver count") {
  TedNetConfig c;
  const TedNet separate(c);
  c.share_encoder_weights = true;
  const TedNet shared(c);
  const std::size_t a = separate.params().count_with_prefix("encoder.");
  const std::size_t b = shared.params().count_with_prefix("encoder.");
  CHECK(a == 3 * b);
  CHECK(separate.params().total_count() - a == shared.params().total_count() - b);
  CHECK(shared.shape_audit().back().shape == nn::Shape{17, 2});
}

TEST_CASE("incompatible topologies are rejected at construction") {
  TedNetConfig c;
  c.receivers = 1;
  CHECK_THROWS_AS(TedNet{c}, DimensionError);
  c = TedNetConfig{};
  c.subcarriers = 200;
  CHECK_THROWS_AS(TedNet{c}, DimensionError);
  c = TedNetConfig{};
  c.heads = 7;
  CHECK_THROWS_AS(TedNet{c}, DimensionError);
  c = TedNetConfig{};
  c.receivers = 0;
  CHECK_THROWS_AS(TedNet{c}, ConfigError);

  const TedNet net(TedNetConfig::tiny());
  std::vector<Tensor> bad(3, Tensor::zeros({1, 1, 114, 9}));
  CHECK_THROWS_AS(net.forward(bad, {}), DimensionError);
  bad.resize(2, Tensor::zeros({1, 1, 114, 10}));
  CHECK_THROWS_AS(net.forward(bad, {}), DimensionError);
}

TEST_CASE("zero input gives finite output inside the tanh range") {
  const TedNet net(TedNetConfig{});
  std::vector<Tensor> in(3, Tensor::zeros({1, 1, 114, 10}));
  const Tensor out = net.forward(in, {});
  for (double v : out.data()) {
    CHECK(std::isfinite(v));
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("equal seeds give identical predictions") {
  TedNetConfig c = TedNetConfig::tiny();
  c.seed = 17;
  const TedNet a(c), b(c);
  std::mt19937_64 rng(1);
  const auto w = random_window(rng, 0, c);
  const Tensor ta = a.predict(w), tb = b.predict(w);
  for (std::size_t i = 0; i < ta.numel(); ++i) CHECK(ta.data()[i] == tb.data()[i]);
  c.seed = 18;
  const TedNet other(c);
  CHECK(other.predict(w).data()[0] != ta.data()[0]);
}

TEST_CASE("batched eval forward equals per-window predictions") {
  const TedNet net(TedNetConfig::tiny());
  std::mt19937_64 rng(2);
  std::vector<csi::CsiWindow> windows;
  for (std::size_t i = 0; i < 5; ++i) windows.push_back(random_window(rng, 40 + i, net.config()));
  std::vector<const csi::CsiWindow*> ptrs;
  for (const auto& w : windows) ptrs.push_back(&w);
  const Tensor batched = net.forward(stack_windows(ptrs), {});
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const Tensor t = net.predict(windows[b]);
    const auto single = t.data();
    for (std::size_t i = 0; i < single.size(); ++i)
      CHECK(std::abs(batched.data()[b * 34 + i] - single[i]) < 1e-12);
  }

  InferenceLog log;
  const auto skeletons = infer_sequence(net, windows, &log, 2);
  REQUIRE(skeletons.size() == windows.size());
  std::size_t clamped = 0;
  for (std::size_t b = 0; b < windows.size(); ++b) {
    CHECK(skeletons[b].frame_index == 40 + b);
    const Tensor t = net.predict(windows[b]);
    const auto single = t.data();
    for (std::size_t j = 0; j < 17; ++j) {
      const auto& k = skeletons[b].keypoints[j];
      CHECK(k.valid);
      CHECK(std::abs(k.x - std::clamp(single[2 * j], 0.0, 1.0)) < 1e-12);
      CHECK(std::abs(k.y - std::clamp(single[2 * j + 1], 0.0, 1.0)) < 1e-12);
      clamped += (single[2 * j] < 0.0) + (single[2 * j + 1] < 0.0);
      CHECK(k.clamped == (single[2 * j] < 0.0 || single[2 * j + 1] < 0.0));
    }
  }
  CHECK(log.clamped_values == clamped);
}

TEST_CASE("zero learning rate leaves the parameters unchanged") {
  TedNet net(TedNetConfig::tiny());
  std::mt19937_64 rng(3);
  const auto data = random_dataset(rng, 6, net.config());
  const auto before = snapshot(net.params());
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.adam.lr = 0.0;
  train(net, data, tc);
  CHECK(snapshot(net.params()) == before);
}

TEST_CASE("training log starts with an evaluation pass and loss falls") {
  TedNet net(TedNetConfig::tiny());
  std::mt19937_64 rng(5);
  const auto data = random_dataset(rng, 8, net.config());
  const auto val = random_dataset(rng, 4, net.config());
  const double initial = evaluate_mse(net, data);
  const double initial_val = evaluate_mse(net, val);
  TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 4;
  tc.adam.lr = 3e-3;
  const auto r = train(net, data, tc, &val);
  REQUIRE(r.log.size() == 2 * 31);
  CHECK(r.log[0].epoch == 0);
  CHECK(r.log[0].split == "train");
  CHECK(r.log[0].mse == initial);
  CHECK(r.log[1].split == "test");
  CHECK(r.log[1].mse == initial_val);
  CHECK(r.epochs_run == 30);
  CHECK(r.log[r.log.size() - 2].mse < 0.5 * initial);

  std::size_t calls = 0;
  tc.stop = [&](const std::vector<EpochRecord>& log) { return ++calls, log.back().epoch == 3; };
  const auto stopped = train(net, data, tc);
  CHECK(stopped.epochs_run == 3);
  CHECK(calls == 4);
}

TEST_CASE("best checkpoint is written") {
  TedNet net(TedNetConfig::tiny());
  std::mt19937_64 rng(6);
  const auto data = random_dataset(rng, 4, net.config());
  const auto dir = testing::scratch_dir("tednet_ckpt");
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 2;
  tc.checkpoint = dir / "best.ckpt";
  const auto r = train(net, data, tc);
  CHECK(std::filesystem::exists(dir / "best.ckpt"));
  CHECK(r.best_mse <= r.log.front().mse);
}

TEST_CASE("mismatched datasets are rejected") {
  TedNet net(TedNetConfig::tiny());
  std::mt19937_64 rng(7);
  auto data = random_dataset(rng, 3, net.config());
  data.targets.pop_back();
  CHECK_THROWS(evaluate_mse(net, data));
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(train(net, random_dataset(rng, 2, net.config()), tc), ConfigError);
}

TEST_CASE("gradients of the tiny network match central differences") {
  TedNet net(TedNetConfig::tiny());
  std::mt19937_64 rng(8);
  const auto data = random_dataset(rng, 2, net.config());
  const Tensor target = stack_targets(data, {0, 1});
  const auto inputs = stack_windows({&data.windows[0], &data.windows[1]});
  auto report = testing::gradcheck_store(
      net.params(), [&] { return nn::mse_loss(net.forward(inputs, {nn::Mode::train, nullptr}), target); },
      1e-5, 11);
  CAPTURE(report.worst()->name);
  CHECK(report.samples.size() > 2000);
  CHECK(report.fraction_below(1e-4) >= 0.99);
  CHECK(report.max_rel_error() < 1e-3);
}

}  // TEST_SUITE
