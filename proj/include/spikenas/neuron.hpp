#pragma once

#include <cmath>

#include "spikenas/tensor.hpp"

namespace spikenas {

// Parametric leaky integrate-and-fire dynamics. The leak is a sigmoid of a
// trainable scalar, so the effective decay always stays in (0, 1). One alpha
// is shared per neuron layer.
struct NeuronConfig {
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double alpha_init = 0.0;  // sigmoid(0) = 0.5, i.e. a time constant of 2
};

// sigmoid(alpha): the membrane decay factor.
inline double plif_decay(double alpha) { return 1.0 / (1.0 + std::exp(-alpha)); }

// Surrogate for the Heaviside derivative used in backpropagation.
inline double surrogate_derivative(double x) { return 1.0 / (1.0 + x * x); }

// Differentiable stand-in for the hard spike, used by gradient-check paths:
// its derivative w.r.t. x is exactly 1/pi * 1/(1+x^2).
inline double soft_spike(double x) { return 0.5 + std::atan(x) / M_PI; }

template <class S>
struct NeuronStepResult {
  S spike;   // phi: {0,1} in hard mode, (0,1) in relaxed mode
  S v_next;  // membrane potential after the (possible) reset
  S h;       // pre-reset potential
};

// One timestep of the membrane recurrence for a single site:
//   H = V + decay * (-(V - V_reset) + z)
//   phi = step(H - V_th)      (hard: H >= V_th; relaxed: soft_spike)
//   V' = H * (1 - phi) + V_reset * phi
template <class S>
inline NeuronStepResult<S> neuron_step(S z, S v_prev, S decay, S v_threshold, S v_reset,
                                       bool relaxed) {
  NeuronStepResult<S> r;
  r.h = v_prev + decay * (-(v_prev - v_reset) + z);
  if (relaxed) {
    r.spike = static_cast<S>(soft_spike(static_cast<double>(r.h - v_threshold)));
  } else {
    r.spike = r.h >= v_threshold ? S(1) : S(0);
  }
  r.v_next = r.h * (S(1) - r.spike) + v_reset * r.spike;
  return r;
}

template <class S>
struct NeuronBackwardResult {
  S grad_z;       // dL/dz[t]
  S grad_v_prev;  // dL/dV[t-1], to be carried to the previous timestep
  S grad_alpha;   // contribution to dL/dalpha from this site and timestep
};

// Reverse step for a single site. grad_spike is the spatial gradient dL/dphi[t]
// arriving from the next layer (plus any regularizer seed); grad_v is the
// temporal gradient dL/dV[t] carried back from timestep t+1.
//   dL/dH = dL/dphi * phi'(H - V_th) + dL/dV * (1 - phi - H * phi'(H - V_th))
//   dL/dz = dL/dH * decay
//   dL/dV[t-1] = dL/dH * (1 - decay)
//   dL/dalpha += dL/dH * (H - V[t-1]) * (1 - decay)
// phi' is the surrogate in hard mode and the exact soft-spike derivative
// (the same expression scaled by 1/pi) in relaxed mode.
template <class S>
inline NeuronBackwardResult<S> neuron_backward_step(S grad_spike, S grad_v, S h, S v_prev, S spike,
                                                    S decay, S v_threshold, bool relaxed) {
  const double x = static_cast<double>(h - v_threshold);
  double dphi_dh = surrogate_derivative(x);
  if (relaxed) dphi_dh /= M_PI;
  const double gh = static_cast<double>(grad_spike) * dphi_dh +
                    static_cast<double>(grad_v) *
                        (1.0 - static_cast<double>(spike) - static_cast<double>(h) * dphi_dh);
  NeuronBackwardResult<S> r;
  r.grad_z = static_cast<S>(gh * static_cast<double>(decay));
  r.grad_v_prev = static_cast<S>(gh * (1.0 - static_cast<double>(decay)));
  r.grad_alpha = static_cast<S>(gh * static_cast<double>(h - v_prev) *
                                (1.0 - static_cast<double>(decay)));
  return r;
}

}  // namespace spikenas
