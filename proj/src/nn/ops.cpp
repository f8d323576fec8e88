#include "wifisense/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "linalg.hpp"
#include "wifisense/error.hpp"

namespace wifisense::nn {

namespace {

using NodePtr = std::shared_ptr<Node>;

bool needs_grad(const NodePtr& n) { return n && n->requires_grad; }

void require_rank(const Tensor& t, std::size_t lo, std::size_t hi, const char* op) {
  if (t.rank() < lo || t.rank() > hi) {
    throw DimensionError(fmt::format("{}: expected rank in [{}, {}], got shape {}", op, lo, hi,
                                     to_string(t.shape())));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(fmt::format("{}: shape mismatch {} vs {}", op, to_string(a.shape()),
                                     to_string(b.shape())));
  }
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

}  // namespace

// ---------------------------------------------------------------------------
// elementwise / structural

Tensor add(const Tensor& a, const Tensor& b) {
  if (!is_suffix(b.shape(), a.shape())) {
    throw DimensionError(fmt::format("add: shape {} does not broadcast onto {}",
                                     to_string(b.shape()), to_string(a.shape())));
  }
  const std::size_t inner = b.numel();
  const std::size_t outer = inner ? a.numel() / inner : 0;
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t o = 0; o < outer; ++o) {
    double* row = out.data() + o * inner;
    for (std::size_t i = 0; i < inner; ++i) row[i] += bv[i];
  }
  NodePtr an = a.node_ptr(), bn = b.node_ptr();
  return make_result(a.shape(), std::move(out), {a, b},
                     [an, bn, inner, outer](Node& self) {
                       const auto& g = self.grad;
                       if (needs_grad(an)) {
                         auto& ga = an->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                       }
                       if (needs_grad(bn)) {
                         auto& gb = bn->grad_buffer();
                         for (std::size_t o = 0; o < outer; ++o)
                           for (std::size_t i = 0; i < inner; ++i) gb[i] += g[o * inner + i];
                       }
                     },
                     "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  NodePtr an = a.node_ptr(), bn = b.node_ptr();
  return make_result(a.shape(), std::move(out), {a, b},
                     [an, bn](Node& self) {
                       const auto& g = self.grad;
                       if (needs_grad(an)) {
                         auto& ga = an->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                       }
                       if (needs_grad(bn)) {
                         auto& gb = bn->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                       }
                     },
                     "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  NodePtr an = a.node_ptr(), bn = b.node_ptr();
  return make_result(a.shape(), std::move(out), {a, b},
                     [an, bn](Node& self) {
                       const auto& g = self.grad;
                       if (needs_grad(an)) {
                         auto& ga = an->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->value[i];
                       }
                       if (needs_grad(bn)) {
                         auto& gb = bn->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->value[i];
                       }
                     },
                     "mul");
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  NodePtr an = a.node_ptr();
  return make_result(a.shape(), std::move(out), {a},
                     [an, factor](Node& self) {
                       auto& ga = an->grad_buffer();
                       for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * self.grad[i];
                     },
                     "scale");
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  NodePtr xn = x.node_ptr();
  return make_result(x.shape(), std::move(out), {x},
                     [xn](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t i = 0; i < gx.size(); ++i)
                         if (xn->value[i] > 0.0) gx[i] += self.grad[i];
                     },
                     "relu");
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  NodePtr xn = x.node_ptr();
  return make_result(x.shape(), std::move(out), {x},
                     [xn](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t i = 0; i < gx.size(); ++i) {
                         const double y = self.value[i];
                         gx[i] += self.grad[i] * (1.0 - y * y);
                       }
                     },
                     "tanh");
}

Tensor activation(const Tensor& x, Activation kind) {
  return kind == Activation::relu ? relu(x) : tanh(x);
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError(fmt::format("reshape: cannot view {} as {}", to_string(x.shape()),
                                     to_string(shape)));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  NodePtr xn = x.node_ptr();
  return make_result(std::move(shape), std::move(out), {x},
                     [xn](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
                     },
                     "reshape");
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
  const Shape& in = x.shape();
  const std::size_t rank = in.size();
  if (order.size() != rank) throw DimensionError("permute: order length does not match rank");
  std::vector<bool> seen(rank, false);
  for (std::size_t a : order) {
    if (a >= rank || seen[a]) throw DimensionError("permute: order is not a permutation");
    seen[a] = true;
  }
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  Shape out_shape(rank);
  std::vector<std::size_t> step(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in[order[i]];
    step[i] = in_stride[order[i]];
  }
  const std::size_t n = x.numel();
  auto gather = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t src = 0;
  for (std::size_t dst = 0; dst < n; ++dst) {
    (*gather)[dst] = src;
    for (std::size_t ax = rank; ax-- > 0;) {
      if (++counter[ax] < out_shape[ax]) {
        src += step[ax];
        break;
      }
      src -= step[ax] * (out_shape[ax] - 1);
      counter[ax] = 0;
    }
  }
  std::vector<double> out(n);
  const auto xv = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[(*gather)[i]];
  NodePtr xn = x.node_ptr();
  return make_result(std::move(out_shape), std::move(out), {x},
                     [xn, gather](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         gx[(*gather)[i]] += self.grad[i];
                     },
                     "permute");
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) {
      throw DimensionError(fmt::format("concat: shape {} incompatible with {} on axis {}",
                                       to_string(s), to_string(first), axis));
    }
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];

  std::vector<double> out(numel(out_shape));
  const std::size_t out_block = out_shape[axis] * inner;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t block = p.dim(axis) * inner;
    const auto pv = p.data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pv.data() + o * block, block, out.data() + o * out_block + offset);
    offsets.push_back(offset);
    offset += block;
  }
  std::vector<NodePtr> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node_ptr());
  return make_result(std::move(out_shape), std::move(out), parts,
                     [nodes, offsets, outer, inner, out_block, axis](Node& self) {
                       for (std::size_t k = 0; k < nodes.size(); ++k) {
                         if (!needs_grad(nodes[k])) continue;
                         auto& gp = nodes[k]->grad_buffer();
                         const std::size_t block = nodes[k]->shape[axis] * inner;
                         for (std::size_t o = 0; o < outer; ++o) {
                           const double* src = self.grad.data() + o * out_block + offsets[k];
                           double* dst = gp.data() + o * block;
                           for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                         }
                       }
                     },
                     "concat");
}

Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& in_shape = x.shape();
  if (axis >= in_shape.size()) throw DimensionError("narrow: axis out of range");
  if (start + length > in_shape[axis] || length == 0) {
    throw DimensionError(fmt::format("narrow: [{}, {}) outside axis {} of {}", start,
                                     start + length, axis, to_string(in_shape)));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= in_shape[i];
  for (std::size_t i = axis + 1; i < in_shape.size(); ++i) inner *= in_shape[i];
  Shape out_shape = in_shape;
  out_shape[axis] = length;
  const std::size_t in_block = in_shape[axis] * inner, block = length * inner,
                    offset = start * inner;
  std::vector<double> out(numel(out_shape));
  const auto xv = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(xv.data() + o * in_block + offset, block, out.data() + o * block);
  NodePtr xn = x.node_ptr();
  return make_result(std::move(out_shape), std::move(out), {x},
                     [xn, outer, in_block, block, offset](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t i = 0; i < block; ++i)
                           gx[o * in_block + offset + i] += self.grad[o * block + i];
                     },
                     "narrow");
}

Tensor sum(const Tensor& x) {
  const auto xv = x.data();
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  NodePtr xn = x.node_ptr();
  return make_result({1}, {total}, {x},
                     [xn](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (double& v : gx) v += self.grad[0];
                     },
                     "sum");
}

Tensor mean_last(const Tensor& x) {
  require_rank(x, 1, 16, "mean_last");
  const std::size_t len = x.shape().back();
  if (len == 0) throw DimensionError("mean_last: empty last axis");
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  const std::size_t rows = x.numel() / len;
  std::vector<double> out(rows);
  const auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += xv[r * len + i];
    out[r] = s / static_cast<double>(len);
  }
  NodePtr xn = x.node_ptr();
  return make_result(std::move(out_shape), std::move(out), {x},
                     [xn, rows, len](Node& self) {
                       auto& gx = xn->grad_buffer();
                       const double inv = 1.0 / static_cast<double>(len);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t i = 0; i < len; ++i) gx[r * len + i] += self.grad[r] * inv;
                     },
                     "mean_last");
}

// ---------------------------------------------------------------------------
// linear algebra

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  require_rank(a, 2, 16, "matmul");
  require_rank(b, 2, 16, "matmul");
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  const std::size_t m = trans_a ? as[as.size() - 1] : as[as.size() - 2];
  const std::size_t ka = trans_a ? as[as.size() - 2] : as[as.size() - 1];
  const std::size_t kb = trans_b ? bs[bs.size() - 1] : bs[bs.size() - 2];
  const std::size_t n = trans_b ? bs[bs.size() - 2] : bs[bs.size() - 1];
  if (ka != kb) {
    throw DimensionError(fmt::format("matmul: inner dimensions differ ({} vs {}) for {} x {}", ka,
                                     kb, to_string(as), to_string(bs)));
  }
  const std::size_t k = ka;
  Shape batch_a(as.begin(), as.end() - 2), batch_b(bs.begin(), bs.end() - 2);
  Shape batch;
  if (batch_a.empty()) {
    batch = batch_b;
  } else if (batch_b.empty() || batch_a == batch_b) {
    batch = batch_a;
  } else {
    throw DimensionError(fmt::format("matmul: batch axes differ {} vs {}", to_string(batch_a),
                                     to_string(batch_b)));
  }
  const std::size_t batches = numel(batch);
  const std::size_t a_step = batch_a.empty() ? 0 : m * k;
  const std::size_t b_step = batch_b.empty() ? 0 : k * n;
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<double> out(batches * m * n);
  const double* av = a.data().data();
  const double* bv = b.data().data();
  for (std::size_t i = 0; i < batches; ++i)
    detail::gemm(trans_a, trans_b, m, n, k, av + i * a_step, bv + i * b_step,
                 out.data() + i * m * n, false);

  NodePtr an = a.node_ptr(), bn = b.node_ptr();
  return make_result(
      std::move(out_shape), std::move(out), {a, b},
      [an, bn, trans_a, trans_b, m, n, k, batches, a_step, b_step](Node& self) {
        const double* g = self.grad.data();
        if (needs_grad(an)) {
          double* ga = an->grad_buffer().data();
          for (std::size_t i = 0; i < batches; ++i) {
            const double* bi = bn->value.data() + i * b_step;
            const double* gi = g + i * m * n;
            double* gai = ga + i * a_step;
            if (!trans_a) {
              detail::gemm(false, !trans_b, m, k, n, gi, bi, gai, true);
            } else {
              detail::gemm(trans_b, true, k, m, n, bi, gi, gai, true);
            }
          }
        }
        if (needs_grad(bn)) {
          double* gb = bn->grad_buffer().data();
          for (std::size_t i = 0; i < batches; ++i) {
            const double* ai = an->value.data() + i * a_step;
            const double* gi = g + i * m * n;
            double* gbi = gb + i * b_step;
            if (!trans_b) {
              detail::gemm(!trans_a, false, k, n, m, ai, gi, gbi, true);
            } else {
              detail::gemm(true, trans_a, n, k, m, gi, ai, gbi, true);
            }
          }
        }
      },
      "matmul");
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, 2, "linear weight");
  const std::size_t f_out = weight.dim(0);
  const std::size_t f_in = weight.dim(1);
  if (x.rank() == 0 || x.shape().back() != f_in) {
    throw DimensionError(fmt::format("linear: last axis of input {} must equal {}",
                                     to_string(x.shape()), f_in));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != f_out)) {
    throw DimensionError(fmt::format("linear: bias shape {} must be ({},)",
                                     to_string(bias.shape()), f_out));
  }
  const std::size_t rows = x.numel() / f_in;
  Shape out_shape = x.shape();
  out_shape.back() = f_out;
  std::vector<double> out(rows * f_out);
  detail::gemm(false, true, rows, f_out, f_in, x.data().data(), weight.data().data(), out.data(),
               false);
  if (bias.defined()) {
    const auto bv = bias.data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < f_out; ++j) out[r * f_out + j] += bv[j];
  }
  NodePtr xn = x.node_ptr(), wn = weight.node_ptr(), bn = bias.node_ptr();
  return make_result(std::move(out_shape), std::move(out), {x, weight, bias},
                     [xn, wn, bn, rows, f_in, f_out](Node& self) {
                       const double* g = self.grad.data();
                       if (needs_grad(xn))
                         detail::gemm(false, false, rows, f_in, f_out, g, wn->value.data(),
                                      xn->grad_buffer().data(), true);
                       if (needs_grad(wn))
                         detail::gemm(true, false, f_out, f_in, rows, g, xn->value.data(),
                                      wn->grad_buffer().data(), true);
                       if (needs_grad(bn)) {
                         auto& gb = bn->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < f_out; ++j) gb[j] += g[r * f_out + j];
                       }
                     },
                     "linear");
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             std::size_t padding) {
  if (stride == 0) throw DimensionError("convolution stride must be positive");
  if (in + 2 * padding < kernel) {
    throw DimensionError(fmt::format("kernel {} does not fit padded input {}", kernel,
                                     in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvPlan {
  std::size_t batch, c_in, h, w, c_out, kh, kw, sh, sw, ph, pw, ho, wo;
  std::size_t col_rows() const { return c_in * kh * kw; }
  std::size_t col_cols() const { return ho * wo; }
};

void im2col(const ConvPlan& p, const double* x, double* col) {
  for (std::size_t c = 0; c < p.c_in; ++c)
    for (std::size_t ki = 0; ki < p.kh; ++ki)
      for (std::size_t kj = 0; kj < p.kw; ++kj) {
        double* row = col + ((c * p.kh + ki) * p.kw + kj) * p.col_cols();
        for (std::size_t oh = 0; oh < p.ho; ++oh) {
          const long ih = static_cast<long>(oh * p.sh + ki) - static_cast<long>(p.ph);
          for (std::size_t ow = 0; ow < p.wo; ++ow) {
            const long iw = static_cast<long>(ow * p.sw + kj) - static_cast<long>(p.pw);
            const bool inside = ih >= 0 && iw >= 0 && ih < static_cast<long>(p.h) &&
                                iw < static_cast<long>(p.w);
            row[oh * p.wo + ow] = inside ? x[(c * p.h + ih) * p.w + iw] : 0.0;
          }
        }
      }
}

void col2im_add(const ConvPlan& p, const double* col, double* x) {
  for (std::size_t c = 0; c < p.c_in; ++c)
    for (std::size_t ki = 0; ki < p.kh; ++ki)
      for (std::size_t kj = 0; kj < p.kw; ++kj) {
        const double* row = col + ((c * p.kh + ki) * p.kw + kj) * p.col_cols();
        for (std::size_t oh = 0; oh < p.ho; ++oh) {
          const long ih = static_cast<long>(oh * p.sh + ki) - static_cast<long>(p.ph);
          if (ih < 0 || ih >= static_cast<long>(p.h)) continue;
          for (std::size_t ow = 0; ow < p.wo; ++ow) {
            const long iw = static_cast<long>(ow * p.sw + kj) - static_cast<long>(p.pw);
            if (iw < 0 || iw >= static_cast<long>(p.w)) continue;
            x[(c * p.h + ih) * p.w + iw] += row[oh * p.wo + ow];
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dGeometry geometry) {
  require_rank(x, 3, 4, "conv2d input");
  require_rank(weight, 4, 4, "conv2d weight");
  const bool batched = x.rank() == 4;
  const Shape& xs = x.shape();
  ConvPlan p{};
  p.batch = batched ? xs[0] : 1;
  p.c_in = xs[batched ? 1 : 0];
  p.h = xs[batched ? 2 : 1];
  p.w = xs[batched ? 3 : 2];
  p.c_out = weight.dim(0);
  p.kh = weight.dim(2);
  p.kw = weight.dim(3);
  if (weight.dim(1) != p.c_in) {
    throw DimensionError(fmt::format("conv2d: input channel axis has {} but weight expects {}",
                                     p.c_in, weight.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != p.c_out)) {
    throw DimensionError(fmt::format("conv2d: bias shape {} must be ({},)",
                                     to_string(bias.shape()), p.c_out));
  }
  std::tie(p.sh, p.sw) = geometry.stride;
  std::tie(p.ph, p.pw) = geometry.padding;
  try {
    p.ho = conv_output_size(p.h, p.kh, p.sh, p.ph);
  } catch (const DimensionError& e) {
    throw DimensionError(fmt::format("conv2d height axis: {}", e.what()));
  }
  try {
    p.wo = conv_output_size(p.w, p.kw, p.sw, p.pw);
  } catch (const DimensionError& e) {
    throw DimensionError(fmt::format("conv2d width axis: {}", e.what()));
  }

  const std::size_t out_plane = p.c_out * p.ho * p.wo;
  const std::size_t in_plane = p.c_in * p.h * p.w;
  std::vector<double> out(p.batch * out_plane);
  std::vector<double> col(p.col_rows() * p.col_cols());
  const double* xv = x.data().data();
  const double* wv = weight.data().data();
  for (std::size_t b = 0; b < p.batch; ++b) {
    im2col(p, xv + b * in_plane, col.data());
    double* y = out.data() + b * out_plane;
    detail::gemm(false, false, p.c_out, p.col_cols(), p.col_rows(), wv, col.data(), y, false);
    if (bias.defined()) {
      const auto bv = bias.data();
      for (std::size_t o = 0; o < p.c_out; ++o)
        for (std::size_t i = 0; i < p.col_cols(); ++i) y[o * p.col_cols() + i] += bv[o];
    }
  }
  Shape out_shape = batched ? Shape{p.batch, p.c_out, p.ho, p.wo} : Shape{p.c_out, p.ho, p.wo};
  NodePtr xn = x.node_ptr(), wn = weight.node_ptr(), bn = bias.node_ptr();
  return make_result(
      std::move(out_shape), std::move(out), {x, weight, bias},
      [xn, wn, bn, p, in_plane, out_plane](Node& self) {
        std::vector<double> col(p.col_rows() * p.col_cols());
        std::vector<double> dcol;
        if (needs_grad(xn)) dcol.resize(col.size());
        for (std::size_t b = 0; b < p.batch; ++b) {
          const double* g = self.grad.data() + b * out_plane;
          if (needs_grad(wn)) {
            im2col(p, xn->value.data() + b * in_plane, col.data());
            detail::gemm(false, true, p.c_out, p.col_rows(), p.col_cols(), g, col.data(),
                         wn->grad_buffer().data(), true);
          }
          if (needs_grad(bn)) {
            auto& gb = bn->grad_buffer();
            for (std::size_t o = 0; o < p.c_out; ++o)
              for (std::size_t i = 0; i < p.col_cols(); ++i) gb[o] += g[o * p.col_cols() + i];
          }
          if (needs_grad(xn)) {
            detail::gemm(true, false, p.col_rows(), p.col_cols(), p.c_out, wn->value.data(), g,
                         dcol.data(), false);
            col2im_add(p, dcol.data(), xn->grad_buffer().data() + b * in_plane);
          }
        }
      },
      "conv2d");
}

std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                                       std::size_t padding, std::size_t output_padding) {
  if (stride == 0) throw DimensionError("transposed convolution stride must be positive");
  if (output_padding >= stride) {
    throw DimensionError(fmt::format("output_padding {} must be smaller than stride {}",
                                     output_padding, stride));
  }
  const long len = (static_cast<long>(in) - 1) * static_cast<long>(stride) -
                   2 * static_cast<long>(padding) + static_cast<long>(kernel) +
                   static_cast<long>(output_padding);
  if (in == 0 || len <= 0) {
    throw DimensionError(fmt::format("transposed convolution length axis: computed output length "
                                     "{} is not positive",
                                     len));
  }
  return static_cast<std::size_t>(len);
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        ConvTranspose1dGeometry geometry) {
  require_rank(x, 2, 3, "conv_transpose1d input");
  require_rank(weight, 3, 3, "conv_transpose1d weight");
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t c_in = x.dim(batched ? 1 : 0);
  const std::size_t len = x.dim(batched ? 2 : 1);
  if (weight.dim(0) != c_in) {
    throw DimensionError(fmt::format(
        "conv_transpose1d: input channel axis has {} but weight expects {}", c_in, weight.dim(0)));
  }
  const std::size_t c_out = weight.dim(1);
  const std::size_t kernel = weight.dim(2);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != c_out)) {
    throw DimensionError(fmt::format("conv_transpose1d: bias shape {} must be ({},)",
                                     to_string(bias.shape()), c_out));
  }
  const std::size_t stride = geometry.stride;
  const std::size_t pad = geometry.padding;
  const std::size_t out_len =
      conv_transpose_output_size(len, kernel, stride, pad, geometry.output_padding);

  const std::size_t rows = c_out * kernel;
  std::vector<double> out(batch * c_out * out_len, 0.0);
  std::vector<double> cols(rows * len);
  const double* xv = x.data().data();
  const double* wv = weight.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    detail::gemm(true, false, rows, len, c_in, wv, xv + b * c_in * len, cols.data(), false);
    double* y = out.data() + b * c_out * out_len;
    for (std::size_t o = 0; o < c_out; ++o)
      for (std::size_t kk = 0; kk < kernel; ++kk)
        for (std::size_t l = 0; l < len; ++l) {
          const long pos = static_cast<long>(l * stride + kk) - static_cast<long>(pad);
          if (pos < 0 || pos >= static_cast<long>(out_len)) continue;
          y[o * out_len + pos] += cols[(o * kernel + kk) * len + l];
        }
    if (bias.defined()) {
      const auto bv = bias.data();
      for (std::size_t o = 0; o < c_out; ++o)
        for (std::size_t t = 0; t < out_len; ++t) y[o * out_len + t] += bv[o];
    }
  }
  Shape out_shape = batched ? Shape{batch, c_out, out_len} : Shape{c_out, out_len};
  NodePtr xn = x.node_ptr(), wn = weight.node_ptr(), bn = bias.node_ptr();
  return make_result(
      std::move(out_shape), std::move(out), {x, weight, bias},
      [xn, wn, bn, batch, c_in, c_out, len, kernel, stride, pad, out_len, rows](Node& self) {
        std::vector<double> dcols(rows * len);
        for (std::size_t b = 0; b < batch; ++b) {
          const double* g = self.grad.data() + b * c_out * out_len;
          for (std::size_t o = 0; o < c_out; ++o)
            for (std::size_t kk = 0; kk < kernel; ++kk)
              for (std::size_t l = 0; l < len; ++l) {
                const long pos = static_cast<long>(l * stride + kk) - static_cast<long>(pad);
                const bool inside = pos >= 0 && pos < static_cast<long>(out_len);
                dcols[(o * kernel + kk) * len + l] = inside ? g[o * out_len + pos] : 0.0;
              }
          if (needs_grad(xn))
            detail::gemm(false, false, c_in, len, rows, wn->value.data(), dcols.data(),
                         xn->grad_buffer().data() + b * c_in * len, true);
          if (needs_grad(wn))
            detail::gemm(false, true, c_in, rows, len, xn->value.data() + b * c_in * len,
                         dcols.data(), wn->grad_buffer().data(), true);
          if (needs_grad(bn)) {
            auto& gb = bn->grad_buffer();
            for (std::size_t o = 0; o < c_out; ++o)
              for (std::size_t t = 0; t < out_len; ++t) gb[o] += g[o * out_len + t];
          }
        }
      },
      "conv_transpose1d");
}

// ---------------------------------------------------------------------------
// normalization

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 BatchNormBuffers& buffers, BatchNormOptions options) {
  require_rank(x, 2, 3, "batchnorm input");
  const std::size_t batch = x.dim(0);
  const std::size_t channels = x.dim(1);
  const std::size_t len = x.rank() == 3 ? x.dim(2) : 1;
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &buffers.running_mean, &buffers.running_var}) {
    if (t->rank() != 1 || t->dim(0) != channels) {
      throw DimensionError(fmt::format("batchnorm: channel axis has {} but parameter shape is {}",
                                       channels, to_string(t->shape())));
    }
  }
  const std::size_t count = batch * len;
  const auto xv = x.data();
  auto at = [&](std::size_t b, std::size_t c, std::size_t l) {
    return (b * channels + c) * len + l;
  };

  std::vector<double> mean(channels), invstd(channels);
  const bool training = options.mode == Mode::train;
  if (training) {
    if (count <= 1) {
      throw NumericError("batchnorm: degenerate batch (one value per channel) in train mode");
    }
    auto rm = buffers.running_mean.mutable_data();
    auto rv = buffers.running_var.mutable_data();
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t l = 0; l < len; ++l) s += xv[at(b, c, l)];
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t l = 0; l < len; ++l) {
          const double d = xv[at(b, c, l)] - mu;
          ss += d * d;
        }
      const double var = ss / static_cast<double>(count);
      if (batch == 1 && var == 0.0) {
        throw NumericError(fmt::format(
            "batchnorm: degenerate batch (batch size 1, zero variance on channel {})", c));
      }
      mean[c] = mu;
      invstd[c] = 1.0 / std::sqrt(var + options.eps);
      const double unbiased = ss / static_cast<double>(count - 1);
      rm[c] = (1.0 - options.momentum) * rm[c] + options.momentum * mu;
      rv[c] = (1.0 - options.momentum) * rv[c] + options.momentum * unbiased;
    }
  } else {
    const auto rm = buffers.running_mean.data();
    const auto rv = buffers.running_var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = rm[c];
      invstd[c] = 1.0 / std::sqrt(rv[c] + options.eps);
    }
  }

  const auto gv = gamma.data(), bv = beta.data();
  std::vector<double> xhat(x.numel()), out(x.numel());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t l = 0; l < len; ++l) {
        const std::size_t i = at(b, c, l);
        xhat[i] = (xv[i] - mean[c]) * invstd[c];
        out[i] = gv[c] * xhat[i] + bv[c];
      }

  NodePtr xn = x.node_ptr(), gn = gamma.node_ptr(), bn = beta.node_ptr();
  auto saved_xhat = std::make_shared<std::vector<double>>(std::move(xhat));
  return make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [xn, gn, bn, saved_xhat, invstd, batch, channels, len, count, training](Node& self) {
        const auto& g = self.grad;
        const auto& xh = *saved_xhat;
        auto at = [&](std::size_t b, std::size_t c, std::size_t l) {
          return (b * channels + c) * len + l;
        };
        for (std::size_t c = 0; c < channels; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t l = 0; l < len; ++l) {
              const std::size_t i = at(b, c, l);
              sum_g += g[i];
              sum_gx += g[i] * xh[i];
            }
          if (needs_grad(gn)) gn->grad_buffer()[c] += sum_gx;
          if (needs_grad(bn)) bn->grad_buffer()[c] += sum_g;
          if (!needs_grad(xn)) continue;
          auto& gx = xn->grad_buffer();
          const double gam = gn->value[c];
          if (training) {
            const double n = static_cast<double>(count);
            const double k = gam * invstd[c] / n;
            for (std::size_t b = 0; b < batch; ++b)
              for (std::size_t l = 0; l < len; ++l) {
                const std::size_t i = at(b, c, l);
                gx[i] += k * (n * g[i] - sum_g - xh[i] * sum_gx);
              }
          } else {
            for (std::size_t b = 0; b < batch; ++b)
              for (std::size_t l = 0; l < len; ++l) {
                const std::size_t i = at(b, c, l);
                gx[i] += g[i] * gam * invstd[c];
              }
          }
        }
      },
      "batchnorm");
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 1, 16, "layer_norm");
  const std::size_t d = x.shape().back();
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError(fmt::format("layer_norm: feature axis has {} but gamma/beta have {}/{}",
                                     d, gamma.numel(), beta.numel()));
  }
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data(), gv = gamma.data(), bv = beta.data();
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  std::vector<double> invstd(rows), out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(d);
    invstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (row[i] - mu) * invstd[r];
      (*xhat)[r * d + i] = h;
      out[r * d + i] = gv[i] * h + bv[i];
    }
  }
  NodePtr xn = x.node_ptr(), gn = gamma.node_ptr(), bn = beta.node_ptr();
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [xn, gn, bn, xhat, invstd, rows, d](Node& self) {
                       const auto& g = self.grad;
                       const auto& xh = *xhat;
                       if (needs_grad(gn) || needs_grad(bn)) {
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t i = 0; i < d; ++i) {
                             if (needs_grad(gn)) gn->grad_buffer()[i] += g[r * d + i] * xh[r * d + i];
                             if (needs_grad(bn)) bn->grad_buffer()[i] += g[r * d + i];
                           }
                       }
                       if (!needs_grad(xn)) return;
                       auto& gx = xn->grad_buffer();
                       const double n = static_cast<double>(d);
                       std::vector<double> dxh(d);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double s1 = 0.0, s2 = 0.0;
                         for (std::size_t i = 0; i < d; ++i) {
                           dxh[i] = g[r * d + i] * gn->value[i];
                           s1 += dxh[i];
                           s2 += dxh[i] * xh[r * d + i];
                         }
                         for (std::size_t i = 0; i < d; ++i)
                           gx[r * d + i] += invstd[r] / n * (n * dxh[i] - s1 - xh[r * d + i] * s2);
                       }
                     },
                     "layer_norm");
}

Tensor softmax(const Tensor& x) {
  require_rank(x, 1, 16, "softmax");
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * d;
    const double mx = *std::max_element(row, row + d);
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      out[r * d + i] = std::exp(row[i] - mx);
      z += out[r * d + i];
    }
    for (std::size_t i = 0; i < d; ++i) out[r * d + i] /= z;
  }
  NodePtr xn = x.node_ptr();
  return make_result(x.shape(), std::move(out), {x},
                     [xn, rows, d](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r) {
                         double dot = 0.0;
                         for (std::size_t i = 0; i < d; ++i)
                           dot += self.grad[r * d + i] * self.value[r * d + i];
                         for (std::size_t i = 0; i < d; ++i)
                           gx[r * d + i] += self.value[r * d + i] * (self.grad[r * d + i] - dot);
                       }
                     },
                     "softmax");
}

Tensor dropout(const Tensor& x, double p, Mode mode, std::mt19937_64* rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError(fmt::format("dropout probability {} outside [0, 1)", p));
  }
  if (mode == Mode::eval || p == 0.0) return x;
  if (!rng) throw ConfigError("dropout in train mode needs a random generator");
  std::bernoulli_distribution keep(1.0 - p);
  const double inv = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = keep(*rng) ? inv : 0.0;
    out[i] = xv[i] * (*mask)[i];
  }
  NodePtr xn = x.node_ptr();
  return make_result(x.shape(), std::move(out), {x},
                     [xn, mask](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * (*mask)[i];
                     },
                     "dropout");
}

// ---------------------------------------------------------------------------
// losses

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "mse_loss");
  const auto pv = prediction.data(), tv = target.data();
  const double n = static_cast<double>(pv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) total += (pv[i] - tv[i]) * (pv[i] - tv[i]);
  NodePtr pn = prediction.node_ptr(), tn = target.node_ptr();
  return make_result({1}, {total / n}, {prediction},
                     [pn, tn, n](Node& self) {
                       auto& gp = pn->grad_buffer();
                       const double k = 2.0 * self.grad[0] / n;
                       for (std::size_t i = 0; i < gp.size(); ++i)
                         gp[i] += k * (pn->value[i] - tn->value[i]);
                     },
                     "mse_loss");
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, 2, "cross_entropy");
  const std::size_t batch = logits.dim(0);
  const std::size_t classes = logits.dim(1);
  if (labels.size() != batch) {
    throw DimensionError(fmt::format("cross_entropy: {} labels for batch of {}", labels.size(),
                                     batch));
  }
  const auto lv = logits.data();
  auto probs = std::make_shared<std::vector<double>>(logits.numel());
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= classes) {
      throw DataError(fmt::format("cross_entropy: label {} outside [0, {})", labels[b], classes));
    }
    const double* row = lv.data() + b * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += std::exp(row[k] - mx);
    const double log_z = mx + std::log(z);
    for (std::size_t k = 0; k < classes; ++k) (*probs)[b * classes + k] = std::exp(row[k] - log_z);
    total += log_z - row[labels[b]];
  }
  std::vector<int> saved(labels.begin(), labels.end());
  NodePtr ln = logits.node_ptr();
  return make_result({1}, {total / static_cast<double>(batch)}, {logits},
                     [ln, probs, saved, batch, classes](Node& self) {
                       auto& gl = ln->grad_buffer();
                       const double k = self.grad[0] / static_cast<double>(batch);
                       for (std::size_t b = 0; b < batch; ++b)
                         for (std::size_t c = 0; c < classes; ++c) {
                           const double onehot = static_cast<int>(c) == saved[b] ? 1.0 : 0.0;
                           gl[b * classes + c] += k * ((*probs)[b * classes + c] - onehot);
                         }
                     },
                     "cross_entropy");
}

}  // namespace wifisense::nn
