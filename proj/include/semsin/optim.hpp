// optim.hpp - AdamW with decoupled weight decay

#pragma once

#include <cstdint>
#include <vector>

#include "semsin/tensor.hpp"

namespace semsin::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;
};

/// One update of every parameter from its accumulated grad:
///   p <- p - lr*wd*p - lr * m_hat / (sqrt(v_hat) + eps)
/// Moments are created on the first call; later calls throw ShapeMismatch if
/// the parameter list no longer matches them.
void adamw_step(const std::vector<Parameter*>& params, OptimizerState& state);

}  // namespace semsin::nn
