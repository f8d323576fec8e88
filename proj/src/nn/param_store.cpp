#include "wifisense/nn/param_store.hpp"

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::nn {

ParamStore::ParamStore(std::uint64_t seed) : seed_(seed), rng_(seed) {}

void ParamStore::check_unique(const std::string& name) const {
  if (index_.count(name)) throw ConfigError(fmt::format("duplicate parameter name '{}'", name));
}

Tensor ParamStore::add(const std::string& name, Tensor tensor) {
  check_unique(name);
  tensor.set_requires_grad(true);
  params_.push_back({name, tensor});
  index_.emplace(name, tensor);
  return tensor;
}

Tensor ParamStore::add_uniform(const std::string& name, Shape shape, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(numel(shape));
  for (double& v : values) v = dist(rng_);
  return add(name, Tensor::from(std::move(shape), std::move(values)));
}

Tensor ParamStore::add_constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::full(std::move(shape), value));
}

Tensor ParamStore::add_buffer(const std::string& name, Shape shape, double value) {
  check_unique(name);
  Tensor t = Tensor::full(std::move(shape), value);
  buffers_.push_back({name, t});
  index_.emplace(name, t);
  return t;
}

Tensor ParamStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ConfigError(fmt::format("no parameter named '{}'", name));
  return it->second;
}

bool ParamStore::contains(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

std::size_t ParamStore::count_with_prefix(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (std::string_view(p.name).starts_with(prefix)) n += p.tensor.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace wifisense::nn
