#include "metakg/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "metakg/errors.hpp"

namespace metakg {

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state, double lr) {
  if (lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("adam_step: unknown parameter " + name);
    Tensor& p = it->second;
    if (!p.same_shape(g)) {
      throw std::invalid_argument("adam_step: shape mismatch for " + name + ": " + p.shape_str() +
                                  " vs " + g.shape_str());
    }
    if (!g.all_finite()) throw NumericError("adam_step: non-finite gradient for " + name);

    auto [mit, inserted_m] = state.m.try_emplace(name, Tensor::zeros(p.shape()));
    auto [vit, inserted_v] = state.v.try_emplace(name, Tensor::zeros(p.shape()));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (!m.same_shape(p) || !v.same_shape(p)) {
      throw std::invalid_argument("adam_step: stale moment shape for " + name);
    }

    double* pd = p.data();
    double* md = m.data();
    double* vd = v.data();
    const double* gd = g.data();
    int64_t n = p.numel();
    for (int64_t i = 0; i < n; ++i) {
      md[i] = state.beta1 * md[i] + (1.0 - state.beta1) * gd[i];
      vd[i] = state.beta2 * vd[i] + (1.0 - state.beta2) * gd[i] * gd[i];
      double mhat = md[i] / bc1;
      double vhat = vd[i] / bc2;
      pd[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace metakg
