#include "metakg/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

#include "metakg/errors.hpp"

namespace metakg {

namespace {

double check_coord(const std::function<double(const Tensor&)>& f, const Tensor& x,
                   const Tensor& analytic_grad, double eps, int64_t i) {
  Tensor probe = x.clone();
  probe.at(i) = x.at(i) + eps;
  double fp = f(probe);
  probe.at(i) = x.at(i) - eps;
  double fm = f(probe);
  if (!std::isfinite(fp) || !std::isfinite(fm)) {
    throw NumericError("finite_diff_check: f returned a non-finite value");
  }
  double fd = (fp - fm) / (2.0 * eps);
  return std::fabs(analytic_grad.at(i) - fd) / (std::fabs(fd) + 1e-8);
}

}  // namespace

double finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                         const Tensor& analytic_grad, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_check: eps must be positive");
  if (!x.same_shape(analytic_grad)) {
    throw std::invalid_argument("finite_diff_check: gradient shape mismatch");
  }
  double worst = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    worst = std::max(worst, check_coord(f, x, analytic_grad, eps, i));
  }
  return worst;
}

double finite_diff_check_sampled(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                 const Tensor& analytic_grad, double eps, int64_t max_coords,
                                 RngStream& rng) {
  if (x.numel() <= max_coords) return finite_diff_check(f, x, analytic_grad, eps);
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_check: eps must be positive");
  if (!x.same_shape(analytic_grad)) {
    throw std::invalid_argument("finite_diff_check: gradient shape mismatch");
  }
  double worst = 0.0;
  for (int64_t i : rng.sample_without_replacement(x.numel(), max_coords)) {
    worst = std::max(worst, check_coord(f, x, analytic_grad, eps, i));
  }
  return worst;
}

}  // namespace metakg
