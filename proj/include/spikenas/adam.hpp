#pragma once

#include <cmath>
#include <string>

#include "spikenas/errors.hpp"
#include "spikenas/tensor.hpp"

namespace spikenas {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class S>
struct AdamStateT {
  TensorT<S> m, v;
  int64_t step = 0;

  static AdamStateT make(const std::vector<int64_t>& dims) {
    AdamStateT s;
    s.m = TensorT<S>(dims);
    s.v = TensorT<S>(dims);
    return s;
  }
};

using AdamState = AdamStateT<float>;

// In-place Adam update with bias correction. Throws NumericError naming the
// parameter when the gradient is not finite.
template <class S>
void adam_step(TensorT<S>& param, const TensorT<S>& grad, AdamStateT<S>& state,
               const AdamConfig& cfg, const std::string& name) {
  require(param.same_dims(grad) && param.same_dims(state.m), "adam_step: shape mismatch for " + name);
  if (!grad.all_finite()) throw NumericError("adam_step: non-finite gradient in '" + name + "'");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (int64_t i = 0; i < param.numel(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double m = cfg.beta1 * static_cast<double>(state.m[i]) + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * static_cast<double>(state.v[i]) + (1.0 - cfg.beta2) * g * g;
    state.m[i] = static_cast<S>(m);
    state.v[i] = static_cast<S>(v);
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    param[i] = static_cast<S>(static_cast<double>(param[i]) -
                              cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
  }
}

}  // namespace spikenas
