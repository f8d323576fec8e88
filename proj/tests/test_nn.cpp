#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support/common.hpp"
#include "support/gradcheck.hpp"
#include "wifisense/error.hpp"
#include "wifisense/nn/adam.hpp"
#include "wifisense/nn/checkpoint.hpp"
#include "wifisense/nn/layers.hpp"
#include "wifisense/nn/ops.hpp"

using namespace wifisense;
using namespace wifisense::nn;
using testing::gradcheck;
using testing::random_tensor;

namespace {

// direct nested-loop convolution, (C,H,W) input, (O,C,KH,KW) weight
std::vector<double> conv2d_loops(const Tensor& x, const Tensor& w, const Tensor& b,
                                 std::size_t sh, std::size_t sw, std::size_t ph, std::size_t pw) {
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const std::size_t OH = (H + 2 * ph - KH) / sh + 1, OW = (W + 2 * pw - KW) / sw + 1;
  std::vector<double> out(O * OH * OW);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < OH; ++i)
      for (std::size_t j = 0; j < OW; ++j) {
        double acc = b.data()[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t u = 0; u < KH; ++u)
            for (std::size_t v = 0; v < KW; ++v) {
              const long r = long(i * sh + u) - long(ph), q = long(j * sw + v) - long(pw);
              if (r < 0 || q < 0 || r >= long(H) || q >= long(W)) continue;
              acc += w.at({o, c, u, v}) * x.at({c, std::size_t(r), std::size_t(q)});
            }
        out[(o * OH + i) * OW + j] = acc;
      }
  return out;
}

// scatter form of the transposed convolution, (C,L) input, (C,O,K) weight
std::vector<double> conv_t_loops(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t s,
                                 std::size_t p, std::size_t op) {
  const std::size_t C = x.dim(0), L = x.dim(1), O = w.dim(1), K = w.dim(2);
  const std::size_t out_len = (L - 1) * s + K + op - 2 * p;
  std::vector<double> out(O * out_len);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t t = 0; t < out_len; ++t) out[o * out_len + t] = b.data()[o];
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t k = 0; k < K; ++k) {
        const long t = long(i * s + k) - long(p);
        if (t < 0 || t >= long(out_len)) continue;
        for (std::size_t o = 0; o < O; ++o)
          out[o * out_len + std::size_t(t)] += x.at({c, i}) * w.at({c, o, k});
      }
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void check_grads(const testing::GradReport& r, double tol = 1e-6) {
  const auto* w = r.worst();
  REQUIRE(w != nullptr);
  INFO(w->name << " analytic " << w->analytic << " numeric " << w->numeric);
  CHECK(w->rel_error < tol);
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("conv2d encoder layer 1 shape") {
  ParamStore store(1);
  Conv2d conv(store, "c", 1, 64, {4, 3}, {{2, 2}, {2, 1}});
  const Tensor y = conv(Tensor::zeros({1, 114, 10}));
  CHECK(y.shape() == Shape{64, 58, 5});
  CHECK(store.total_count() == 64 * 12 + 64);
}

TEST_CASE("conv2d 1x1 identity kernel returns the input") {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({3, 5, 4}, rng);
  std::vector<double> w(9, 0.0);
  for (std::size_t c = 0; c < 3; ++c) w[c * 3 + c] = 1.0;
  const Tensor y = conv2d(x, Tensor::from({3, 3, 1, 1}, w), Tensor::zeros({3}), {});
  CHECK(y.shape() == x.shape());
  CHECK(max_abs_diff(y.data(), x.data()) == 0.0);
}

TEST_CASE("conv2d matches nested loops") {
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor({2, 5, 4}, rng);
  const Tensor w = random_tensor({3, 2, 2, 3}, rng);
  const Tensor b = random_tensor({3}, rng);
  for (auto [sh, sw, ph, pw] : {std::array<std::size_t, 4>{1, 1, 0, 0}, {2, 2, 2, 1},
                                {2, 1, 1, 1}, {1, 2, 0, 1}}) {
    const Tensor y = conv2d(x, w, b, {{sh, sw}, {ph, pw}});
    CHECK(max_abs_diff(y.data(), conv2d_loops(x, w, b, sh, sw, ph, pw)) < 1e-12);
  }
}

TEST_CASE("conv2d batched equals per-sample") {
  std::mt19937_64 rng(12);
  const Tensor x = random_tensor({3, 2, 5, 4}, rng);
  const Tensor w = random_tensor({4, 2, 2, 3}, rng);
  const Tensor b = random_tensor({4}, rng);
  const Tensor y = conv2d(x, w, b, {{2, 2}, {2, 1}});
  const std::size_t per = y.numel() / 3;
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor xi = reshape(narrow(x, 0, i, 1), {2, 5, 4});
    const auto ref = conv2d_loops(xi, w, b, 2, 2, 2, 1);
    CHECK(max_abs_diff(y.data().subspan(i * per, per), ref) < 1e-12);
  }
}

TEST_CASE("conv2d rejects a channel mismatch") {
  CHECK_THROWS_AS(conv2d(Tensor::zeros({2, 5, 4}), Tensor::zeros({1, 3, 1, 1}), Tensor(), {}),
                  DimensionError);
}

TEST_CASE("transposed conv decoder shapes") {
  ParamStore store(2);
  ConvTranspose1d d1(store, "d1", 384, 64, 3, {2, 1, 1});
  ConvTranspose1d d2(store, "d2", 64, 32, 3, {2, 1, 1});
  const Tensor h = d1(Tensor::zeros({384, 34}));
  CHECK(h.shape() == Shape{64, 68});
  CHECK(d2(h).shape() == Shape{32, 136});
  CHECK(conv_transpose_output_size(34, 3, 2, 1, 0) == 67);
  CHECK(conv_transpose_output_size(34, 3, 2, 1, 1) == 68);
}

TEST_CASE("transposed conv identity and loop oracle") {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor({2, 7}, rng);
  const Tensor eye = Tensor::from({2, 2, 1}, {1, 0, 0, 1});
  CHECK(max_abs_diff(conv_transpose1d(x, eye, Tensor::zeros({2}), {}).data(), x.data()) == 0.0);

  const Tensor w = random_tensor({2, 3, 3}, rng);
  const Tensor b = random_tensor({3}, rng);
  for (auto [s, p, op] : {std::array<std::size_t, 3>{2, 1, 1}, {2, 1, 0}, {1, 0, 0}, {3, 1, 2}}) {
    const Tensor y = conv_transpose1d(x, w, b, {s, p, op});
    CHECK(max_abs_diff(y.data(), conv_t_loops(x, w, b, s, p, op)) < 1e-12);
  }
}

TEST_CASE("transposed conv with negative output length is rejected") {
  CHECK_THROWS_AS(conv_transpose_output_size(1, 1, 1, 1, 0), DimensionError);
  CHECK_THROWS_AS(conv_transpose_output_size(4, 3, 2, 1, 2), DimensionError);
}

TEST_CASE("linear parameter counts and zero weight") {
  ParamStore a(0), b(0);
  Linear l1(a, "l", 6, 16);
  CHECK(a.total_count() == 112);
  Linear fc(b, "fc", 128, 4);
  CHECK(b.total_count() == 516);
  const Tensor y = linear(Tensor::full({3, 2}, 7.0), Tensor::zeros({2, 2}),
                          Tensor::from({2}, {0.25, -1.5}));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(y.at({i, 0}) == 0.25);
    CHECK(y.at({i, 1}) == -1.5);
  }
}

TEST_CASE("batchnorm parameter counts") {
  ParamStore a(0), b(0);
  BatchNorm bn_v(a, "v", 34);
  BatchNorm bn_e(b, "e", 32);
  CHECK(a.total_count() == 68);
  CHECK(b.total_count() == 64);
  CHECK(a.buffers().size() == 2);
}

TEST_CASE("batchnorm normalizes a standardized batch to itself") {
  ParamStore store(0);
  BatchNorm bn(store, "bn", 3);
  const Tensor x = Tensor::from({2, 3}, {-1, 1, -1, 1, -1, 1});
  const Tensor y = bn(x, Mode::train);
  CHECK(max_abs_diff(y.data(), x.data()) < 1e-5);
  // running var uses the unbiased estimate: 0.9 * 1 + 0.1 * 2
  CHECK(bn.buffers().running_var.data()[0] == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(bn.buffers().running_mean.data()[0] == 0.0);
}

TEST_CASE("batchnorm degenerate batch") {
  ParamStore store(0);
  BatchNorm bn(store, "bn", 2);
  CHECK_THROWS_AS(bn(Tensor::from({1, 2}, {0.5, 0.5}), Mode::train), NumericError);
  CHECK_NOTHROW(bn(Tensor::from({1, 2}, {0.5, 0.5}), Mode::eval));
}

TEST_CASE("attention shapes and single-token case") {
  ParamStore store(4);
  MultiHeadSelfAttention attn(store, "a", 384, 8);
  CHECK(attn(Tensor::zeros({34, 384})).shape() == Shape{34, 384});

  std::mt19937_64 rng(9);
  ParamStore small(5);
  MultiHeadSelfAttention one(small, "a", 8, 2);
  const Tensor x = random_tensor({1, 8}, rng);
  const auto out = one.forward(x);
  for (double w : out.weights.data()) CHECK(w == 1.0);
  const Tensor expected = one.output_projection()(one.value_projection()(x));
  CHECK(max_abs_diff(out.out.data(), expected.data()) < 1e-15);
}

TEST_CASE("attention rows sum to one") {
  std::mt19937_64 rng(13);
  ParamStore store(6);
  MultiHeadSelfAttention attn(store, "a", 16, 4);
  const auto out = attn.forward(random_tensor({2, 9, 16}, rng, -3, 3));
  CHECK(out.weights.shape() == Shape{2, 4, 9, 9});
  const auto w = out.weights.data();
  for (std::size_t r = 0; r < w.size() / 9; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < 9; ++j) s += w[r * 9 + j];
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("transformer layer with zeroed sublayers is a layer-norm chain") {
  std::mt19937_64 rng(21);
  ParamStore store(7);
  TransformerEncoderLayer layer(store, "t", 12, 3, 20, 0.0);
  for (const auto& p : store.parameters())
    if (p.name.find("self_attn") != std::string::npos || p.name.find("ffn") != std::string::npos)
      std::fill(p.tensor.node()->value.begin(), p.tensor.node()->value.end(), 0.0);
  const Tensor x = random_tensor({5, 12}, rng, -2, 2);
  const Tensor y = layer(x, {});
  auto ln = [](std::vector<double> v) {
    for (std::size_t r = 0; r < v.size() / 12; ++r) {
      double mu = 0, var = 0;
      for (std::size_t i = 0; i < 12; ++i) mu += v[r * 12 + i] / 12;
      for (std::size_t i = 0; i < 12; ++i) var += (v[r * 12 + i] - mu) * (v[r * 12 + i] - mu) / 12;
      for (std::size_t i = 0; i < 12; ++i) v[r * 12 + i] = (v[r * 12 + i] - mu) / std::sqrt(var + 1e-5);
    }
    return v;
  };
  const auto expected = ln(ln({x.data().begin(), x.data().end()}));
  CHECK(max_abs_diff(y.data(), expected) < 1e-12);
}

TEST_CASE("transformer stack shape and stability") {
  ParamStore store(8);
  TransformerEncoder enc(store, "tr", 2, 384, 8, 1536, 0.0);
  CHECK(enc(Tensor::zeros({34, 384}), {}).shape() == Shape{34, 384});

  ParamStore small(9);
  TransformerEncoder e2(small, "tr", 2, 16, 4, 32, 0.0);
  std::mt19937_64 rng(1);
  for (double mag : {1.0, 10.0, 100.0, 1000.0}) {
    const Tensor y = e2(random_tensor({2, 6, 16}, rng, -mag, mag), {});
    for (double v : y.data()) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("elementary values") {
  const Tensor x = Tensor::from({3}, {0.1, -0.2, 5.0});
  CHECK(mse_loss(x, x).item() == 0.0);
  CHECK(tanh(Tensor::scalar(0.0)).item() == 0.0);
  CHECK(relu(Tensor::scalar(-1.0)).item() == 0.0);
  CHECK(mse_loss(Tensor::zeros({2}), Tensor::full({2}, 1.0)).item() == 1.0);
}

TEST_CASE("gradient of a dot product is the fixed vector") {
  ParamStore store(0);
  const Tensor w = store.add_uniform("w", {4}, 1.0);
  const Tensor unused = store.add_uniform("unused", {2}, 1.0);
  const Tensor x = Tensor::from({4}, {0.5, -1.25, 3.0, 0.0});
  store.zero_grad();
  sum(mul(w, x)).backward();
  for (std::size_t i = 0; i < 4; ++i) CHECK(w.grad()[i] == x.data()[i]);
  for (double g : unused.grad()) CHECK(g == 0.0);
}

TEST_CASE("op gradients match central differences") {
  std::mt19937_64 rng(31);
  auto T = [&](Shape s, double lo = -1, double hi = 1) { return random_tensor(s, rng, lo, hi, true); };

  SUBCASE("add with broadcasting, sub, mul") {
    const Tensor a = T({3, 4}), b = T({4}), c = T({3, 4});
    check_grads(gradcheck({a, b, c}, {"a", "b", "c"}, [&] {
      return sum(mul(add(a, b), sub(a, c)));
    }));
  }
  SUBCASE("relu tanh scale") {
    const Tensor a = T({10}, 0.1, 1.0), b = T({10}, -1.0, -0.1);
    check_grads(gradcheck({a, b}, {"a", "b"}, [&] {
      return sum(mul(tanh(scale(a, 1.7)), add(relu(a), relu(b))));
    }));
  }
  SUBCASE("reshape permute concat narrow") {
    const Tensor a = T({2, 3, 4}), b = T({2, 2, 4});
    const Tensor w = T({2, 4, 5});
    check_grads(gradcheck({a, b}, {"a", "b"}, [&] {
      const Tensor c = concat({a, b}, 1);
      const Tensor p = permute(reshape(narrow(c, 1, 1, 3), {2, 3, 4}), {0, 2, 1});
      return sum(mul(p, narrow(w, 2, 1, 3)));
    }));
  }
  SUBCASE("matmul with transposes and batch") {
    const Tensor a = T({2, 3, 4}), b = T({2, 5, 4}), c = T({4, 3}), d = T({3, 4});
    check_grads(gradcheck({a, b}, {"a", "b"}, [&] { return sum(tanh(matmul(a, b, false, true))); }));
    check_grads(gradcheck({c, d}, {"c", "d"}, [&] {
      return add(sum(tanh(matmul(c, d, true, true))), sum(tanh(matmul(c, c, true, false))));
    }));
  }
  SUBCASE("linear and mean_last") {
    const Tensor x = T({4, 3}), w = T({5, 3}), bias = T({5});
    check_grads(gradcheck({x, w, bias}, {"x", "w", "b"}, [&] {
      return sum(tanh(mean_last(tanh(linear(x, w, bias)))));
    }));
  }
  SUBCASE("conv2d") {
    const Tensor x = T({2, 2, 5, 4}), w = T({3, 2, 2, 3}), bias = T({3});
    check_grads(gradcheck({x, w, bias}, {"x", "w", "b"}, [&] {
      return sum(tanh(conv2d(x, w, bias, {{2, 2}, {2, 1}})));
    }));
  }
  SUBCASE("conv_transpose1d") {
    const Tensor x = T({2, 3, 5}), w = T({3, 2, 3}), bias = T({2});
    check_grads(gradcheck({x, w, bias}, {"x", "w", "b"}, [&] {
      return sum(tanh(conv_transpose1d(x, w, bias, {2, 1, 1})));
    }));
  }
  SUBCASE("batchnorm train mode") {
    const Tensor x = T({4, 3, 5}), g = T({3}, 0.5, 1.5), b = T({3});
    const Tensor k = T({4, 3, 5});
    BatchNormBuffers buf{Tensor::zeros({3}), Tensor::full({3}, 1.0)};
    check_grads(gradcheck({x, g, b}, {"x", "gamma", "beta"}, [&] {
      return sum(mul(batchnorm(x, g, b, buf, {Mode::train}), k));
    }), 1e-5);
  }
  SUBCASE("layer_norm and softmax") {
    const Tensor x = T({3, 6}), g = T({6}, 0.5, 1.5), b = T({6});
    const Tensor k = T({3, 6});
    check_grads(gradcheck({x, g, b}, {"x", "gamma", "beta"}, [&] {
      return sum(mul(softmax(layer_norm(x, g, b)), k));
    }), 1e-5);
  }
  SUBCASE("losses") {
    const Tensor p = T({3, 4}), t = T({3, 4});
    check_grads(gradcheck({p}, {"p"}, [&] { return mse_loss(tanh(p), t); }));
    const std::vector<int> labels{2, 0, 3};
    check_grads(gradcheck({p}, {"logits"}, [&] { return cross_entropy(p, labels); }));
  }
  SUBCASE("attention block") {
    ParamStore store(3);
    TransformerEncoderLayer layer(store, "t", 8, 2, 12, 0.0);
    const Tensor x = T({2, 4, 8});
    const Tensor k = T({2, 4, 8});
    auto r = testing::gradcheck_store(store, [&] { return sum(mul(layer(x, {}), k)); });
    CHECK(r.fraction_below(1e-4) >= 0.99);
    CHECK(r.max_rel_error() < 1e-3);
  }
}

TEST_CASE("adam first step and zero gradients") {
  ParamStore store(0);
  const Tensor p = store.add_constant("p", {1}, 2.0);
  AdamState state(store, {0.01});
  store.zero_grad();
  adam_step(store, state);
  CHECK(p.data()[0] == 2.0);

  AdamState fresh(store, {0.01});
  store.zero_grad();
  p.node()->grad[0] = -3.5;
  adam_step(store, fresh);
  // m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps)
  CHECK(p.data()[0] == doctest::Approx(2.0 + 0.01).epsilon(1e-9));
}

TEST_CASE("adam converges on a quadratic") {
  ParamStore store(0);
  const Tensor x = store.add_constant("x", {1}, -1.0);
  AdamState state(store, {0.05});
  const Tensor target = Tensor::from({1}, {0.75});
  for (int i = 0; i < 200; ++i) {
    store.zero_grad();
    mse_loss(x, target).backward();
    adam_step(store, state);
  }
  CHECK(std::abs(x.data()[0] - 0.75) < 1e-3);
}

TEST_CASE("adam reports parameters without gradients") {
  ParamStore store(0);
  store.add_constant("first", {1}, 0.0);
  store.add_constant("second", {2}, 0.0);
  AdamState state(store, {});
  try {
    adam_step(store, state);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("first") != std::string::npos);
    CHECK(msg.find("second") != std::string::npos);
  }
}

TEST_CASE("param store counting") {
  ParamStore empty(0);
  CHECK(empty.total_count() == 0);
  ParamStore store(0);
  store.add_uniform("a.w", {3, 4}, 1.0);
  store.add_uniform("a.b", {4}, 1.0);
  store.add_uniform("b.w", {2}, 1.0);
  store.add_buffer("a.running", {4}, 0.0);
  CHECK(store.total_count() == 18);
  CHECK(store.count_with_prefix("a.") == 16);
  CHECK_THROWS_AS(store.add_uniform("a.w", {1}, 1.0), ConfigError);
}

TEST_CASE("same seed gives identical initialization") {
  ParamStore a(42), b(42), c(43);
  const Tensor ta = a.add_uniform("w", {50}, 1.0);
  const Tensor tb = b.add_uniform("w", {50}, 1.0);
  const Tensor tc = c.add_uniform("w", {50}, 1.0);
  CHECK(max_abs_diff(ta.data(), tb.data()) == 0.0);
  CHECK(max_abs_diff(ta.data(), tc.data()) > 0.0);
}

TEST_CASE("checkpoint round trip") {
  ParamStore a(1);
  Linear l(a, "l", 3, 2);
  BatchNorm bn(a, "bn", 2);
  bn(Tensor::from({2, 2}, {0, 1, 2, 5}), Mode::train);
  std::stringstream buf;
  save_checkpoint(buf, a);

  ParamStore b(99);
  Linear l2(b, "l", 3, 2);
  BatchNorm bn2(b, "bn", 2);
  load_checkpoint(buf, b);
  for (std::size_t i = 0; i < a.parameters().size(); ++i)
    CHECK(max_abs_diff(a.parameters()[i].tensor.data(), b.parameters()[i].tensor.data()) == 0.0);
  CHECK(max_abs_diff(bn.buffers().running_var.data(), bn2.buffers().running_var.data()) == 0.0);

  ParamStore c(0);
  Linear l3(c, "l", 4, 2);
  std::stringstream again;
  save_checkpoint(again, a);
  CHECK_THROWS_AS(load_checkpoint(again, c), Error);
}

}  // TEST_SUITE
