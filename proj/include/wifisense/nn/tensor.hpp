#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wifisense::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct Node;
using BackwardFn = std::function<void(Node& self)>;

// Storage plus autograd bookkeeping. Tensors are handles onto a shared Node.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;  // null for leaves
  const char* op = "leaf";

  // Allocates a zero gradient buffer on first use.
  std::vector<double>& grad_buffer();
};

// Row-major float64 n-dimensional array with reverse-mode gradient tracking.
//
// Copying a Tensor copies the handle, not the data. Gradients accumulate into
// leaves that require grad; calling backward() twice without zero_grad() on
// the leaves doubles their gradients.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // New leaf sharing no history; data copied.
  Tensor detach() const;

  // Reverse-mode accumulation from this scalar.
  void backward() const;

  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Gradient recording is on by default; a guard disables it on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. History is attached only when grad recording is on
// and at least one input requires grad.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::initializer_list<Tensor> inputs, BackwardFn backward,
                   const char* op);
Tensor make_result(Shape shape, std::vector<double> value,
                   const std::vector<Tensor>& inputs, BackwardFn backward,
                   const char* op);

}  // namespace wifisense::nn
