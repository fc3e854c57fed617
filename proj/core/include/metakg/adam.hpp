#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "metakg/tensor.hpp"

namespace metakg {

// Bias-corrected Adam. Moment tensors are keyed by parameter name and created
// lazily on first update.
struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One update over all (name, grad) pairs, applied to params in place.
// Every tensor named in grads must exist in params with the same shape.
void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state, double lr);

}  // namespace metakg
