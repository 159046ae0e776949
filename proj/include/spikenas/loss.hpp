#pragma once

#include <cstdint>
#include <vector>

#include "spikenas/ledger.hpp"
#include "spikenas/tensor.hpp"

namespace spikenas {

template <class S>
TensorT<S> one_hot(const std::vector<int>& labels, int64_t classes) {
  TensorT<S> y({static_cast<int64_t>(labels.size()), classes});
  for (size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < classes, "one_hot: label out of range");
    y.at2(static_cast<int64_t>(i), labels[i]) = S(1);
  }
  return y;
}

// Mean over classes of the squared error, averaged over the batch.
template <class S>
double mse_loss(const TensorT<S>& o, const TensorT<S>& y) {
  require(o.same_dims(y), "mse_loss: shape mismatch");
  const int64_t n = o.dim(0), c = o.dim(1);
  double acc = 0.0;
  for (int64_t i = 0; i < n * c; ++i) {
    const double d = static_cast<double>(o[i]) - static_cast<double>(y[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(n * c);
}

template <class S>
TensorT<S> mse_loss_grad(const TensorT<S>& o, const TensorT<S>& y) {
  const int64_t n = o.dim(0), c = o.dim(1);
  TensorT<S> g(o.dims());
  const double scale = 2.0 / static_cast<double>(n * c);
  for (int64_t i = 0; i < n * c; ++i)
    g[i] = static_cast<S>(scale * (static_cast<double>(o[i]) - static_cast<double>(y[i])));
  return g;
}

// lambda * N / (K * T) with N the per-sample spike count and K the census.
inline double spike_reg_term(const SpikeLedger& ledger, double lambda_reg) {
  if (lambda_reg == 0.0) return 0.0;
  const int64_t k = ledger.census();
  if (k == 0) return 0.0;
  return lambda_reg * ledger.spikes_per_sample() /
         (static_cast<double>(k) * static_cast<double>(ledger.timesteps()));
}

// d(reg)/d(spike site) for a batch of the given size.
inline double spike_reg_seed(double lambda_reg, int64_t census, int timesteps, int64_t batch) {
  if (lambda_reg == 0.0 || census == 0) return 0.0;
  return lambda_reg / (static_cast<double>(census) * static_cast<double>(timesteps) *
                       static_cast<double>(batch));
}

template <class S>
int argmax_row(const TensorT<S>& o, int64_t row) {
  const int64_t c = o.dim(1);
  int best = 0;
  for (int64_t j = 1; j < c; ++j)
    if (o.at2(row, j) > o.at2(row, best)) best = static_cast<int>(j);
  return best;
}

template <class S>
double accuracy(const TensorT<S>& o, const std::vector<int>& labels) {
  const int64_t n = o.dim(0);
  int64_t hits = 0;
  for (int64_t i = 0; i < n; ++i)
    if (argmax_row(o, i) == labels[static_cast<size_t>(i)]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace spikenas
