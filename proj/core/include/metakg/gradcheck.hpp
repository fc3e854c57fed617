#pragma once

#include <cstdint>
#include <functional>

#include "metakg/rng.hpp"
#include "metakg/tensor.hpp"

namespace metakg {

// f maps a tensor to a scalar loss; analytic_grad is the autodiff gradient at
// x. Returns max over coordinates of
//   |analytic - central_difference| / (|central_difference| + 1e-8).
double finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                         const Tensor& analytic_grad, double eps);

// Same comparison restricted to max_coords randomly chosen coordinates; used
// to keep whole-pipeline checks over large parameter tensors affordable.
double finite_diff_check_sampled(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                 const Tensor& analytic_grad, double eps, int64_t max_coords,
                                 RngStream& rng);

}  // namespace metakg
