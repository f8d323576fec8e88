#pragma once

#include <cstdint>
#include <vector>

#include "wifisense/nn/param_store.hpp"

namespace wifisense::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment buffers follow the store's parameter order.
class AdamState {
 public:
  AdamState(const ParamStore& store, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::uint64_t step() const { return step_; }

 private:
  friend void adam_step(ParamStore& store, AdamState& state);
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> first_, second_;
};

// Bias-corrected Adam update. Throws ConfigError listing every parameter
// without a gradient buffer.
void adam_step(ParamStore& store, AdamState& state);

}  // namespace wifisense::nn
