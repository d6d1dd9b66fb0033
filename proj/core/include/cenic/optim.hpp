#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cenic/tensor.hpp"

namespace cenic {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;

  // Zeroed moments shaped like `params`.
  static AdamState init(std::span<const Tensor* const> params, AdamConfig config = {});
};

// One bias-corrected Adam update applied in place. Throws ShapeError when the
// parameter, gradient and moment lists disagree.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace cenic
