#pragma once

#include <cstdint>
#include <string>

#include "fedhin/model.hpp"

namespace fedhin {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments mirror ModelParams; step counts completed updates.
struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  ModelParams first_moment;
  ModelParams second_moment;

  static OptimizerState for_params(const ModelParams& params,
                                   AdamConfig config = {});
};

/// One Adam update of a single tensor at (1-based) step `t`.
void adam_update(Matrix& param, const Matrix& grad, Matrix& first_moment,
                 Matrix& second_moment, std::uint64_t t,
                 const AdamConfig& config);

/// Bias-corrected Adam over every tensor. Throws a numeric error naming the
/// first tensor with a non-finite gradient; nothing is modified in that case.
void adam_step(ModelParams& params, const ModelParams& grads,
               OptimizerState& state);

}  // namespace fedhin
