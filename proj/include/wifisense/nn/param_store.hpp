#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wifisense/nn/tensor.hpp"

namespace wifisense::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered registry of a model's trainable parameters and non-trainable
// buffers (batch-norm running statistics). Initialization draws from a
// generator seeded at construction, so equal seeds give bit-identical models.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0);

  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  // Uniform in [-bound, bound].
  Tensor add_uniform(const std::string& name, Shape shape, double bound);
  Tensor add_constant(const std::string& name, Shape shape, double value);
  Tensor add(const std::string& name, Tensor tensor);
  Tensor add_buffer(const std::string& name, Shape shape, double value);

  const std::vector<NamedTensor>& parameters() const { return params_; }
  const std::vector<NamedTensor>& buffers() const { return buffers_; }

  // Parameter or buffer by exact name; throws ConfigError if absent.
  Tensor find(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t total_count() const;
  // Elements in parameters whose name starts with prefix.
  std::size_t count_with_prefix(std::string_view prefix) const;

  void zero_grad();
  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  void check_unique(const std::string& name) const;

  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<NamedTensor> params_;
  std::vector<NamedTensor> buffers_;
  std::unordered_map<std::string, Tensor> index_;
};

}  // namespace wifisense::nn
