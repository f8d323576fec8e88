#include "wifisense/nn/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::nn {

AdamState::AdamState(const ParamStore& store, AdamConfig config) : config_(config) {
  for (const auto& p : store.parameters()) {
    first_.emplace_back(p.tensor.numel(), 0.0);
    second_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void adam_step(ParamStore& store, AdamState& state) {
  auto& params = store.parameters();
  if (params.size() != state.first_.size()) {
    throw ConfigError("adam_step: optimizer state was built for a different parameter set");
  }
  std::string missing;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) missing += (missing.empty() ? "" : ", ") + p.name;
  }
  if (!missing.empty()) throw ConfigError("adam_step: missing gradients for " + missing);

  const AdamConfig& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor param = params[i].tensor;
    auto value = param.mutable_data();
    auto grad = param.grad();
    auto& m = state.first_[i];
    auto& v = state.second_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * grad[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * grad[j] * grad[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      value[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace wifisense::nn
