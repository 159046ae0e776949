#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "spikenas/tensor.hpp"

namespace spikenas {

enum class Mode { train, eval };

template <class S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

template <class S>
struct ConvParamsT {
  TensorT<S> weight;  // (c_out, c_in / groups, k, k)
  TensorT<S> bias;    // (c_out)
  int stride = 1;
  int padding = 0;
  int groups = 1;

  int64_t c_out() const { return weight.dim(0); }
  int64_t c_in() const { return weight.dim(1) * groups; }
  int64_t kernel() const { return weight.dim(2); }
};

using ConvParams = ConvParamsT<float>;

template <class S>
struct ConvGradsT {
  TensorT<S> input;
  TensorT<S> weight;
  TensorT<S> bias;
};

inline int64_t conv_out_dim(int64_t in, int64_t k, int64_t pad, int64_t stride) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

// Unpacks one image's group-channel slice into a (cg*k*k, ho*wo) column
// buffer. Out-of-bounds taps are zero.
template <class S>
void im2col(const S* img, int64_t c, int64_t h, int64_t w, int64_t k, int64_t pad, int64_t stride,
            int64_t ho, int64_t wo, S* cols) {
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        S* row = cols + ((ch * k + ky) * k + kx) * ho * wo;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const int64_t iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            std::fill(row + oy * wo, row + (oy + 1) * wo, S(0));
            continue;
          }
          const S* src = img + (ch * h + iy) * w;
          for (int64_t ox = 0; ox < wo; ++ox) {
            const int64_t ix = ox * stride + kx - pad;
            row[oy * wo + ox] = (ix < 0 || ix >= w) ? S(0) : src[ix];
          }
        }
      }
    }
  }
}

// Scatter-adds a column buffer back into one image slice (adjoint of im2col).
template <class S>
void col2im(const S* cols, int64_t c, int64_t h, int64_t w, int64_t k, int64_t pad, int64_t stride,
            int64_t ho, int64_t wo, S* img) {
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        const S* row = cols + ((ch * k + ky) * k + kx) * ho * wo;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const int64_t iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          S* dst = img + (ch * h + iy) * w;
          for (int64_t ox = 0; ox < wo; ++ox) {
            const int64_t ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

template <class S>
TensorT<S> conv2d_forward(const TensorT<S>& input, const ConvParamsT<S>& p) {
  require(input.rank() == 4, "conv2d: input must be (n, c, h, w)");
  const int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  require(c == p.c_in(), "conv2d: channel mismatch, got " + input.shape_str());
  require(p.kernel() % 2 == 1, "conv2d: kernel must be odd");
  require(p.bias.numel() == p.c_out(), "conv2d: bias size mismatch");
  const int64_t k = p.kernel();
  const int64_t ho = conv_out_dim(h, k, p.padding, p.stride);
  const int64_t wo = conv_out_dim(w, k, p.padding, p.stride);
  require(ho > 0 && wo > 0, "conv2d: input too small for kernel");

  const int64_t g = p.groups;
  const int64_t cg = c / g;          // input channels per group
  const int64_t og = p.c_out() / g;  // output channels per group
  require(cg * g == c && og * g == p.c_out(), "conv2d: groups must divide channels");

  TensorT<S> out({n, p.c_out(), ho, wo});
  std::vector<S> cols(static_cast<size_t>(cg * k * k * ho * wo));

  for (int64_t i = 0; i < n; ++i) {
    for (int64_t gi = 0; gi < g; ++gi) {
      const S* img = input.data() + (i * c + gi * cg) * h * w;
      detail::im2col(img, cg, h, w, k, p.padding, p.stride, ho, wo, cols.data());
      ConstMatMap<S> wmat(p.weight.data() + gi * og * cg * k * k, og, cg * k * k);
      ConstMatMap<S> cmat(cols.data(), cg * k * k, ho * wo);
      MatMap<S> omat(out.data() + (i * p.c_out() + gi * og) * ho * wo, og, ho * wo);
      omat.noalias() = wmat * cmat;
    }
    for (int64_t oc = 0; oc < p.c_out(); ++oc) {
      S* dst = out.data() + (i * p.c_out() + oc) * ho * wo;
      const S b = p.bias[oc];
      for (int64_t j = 0; j < ho * wo; ++j) dst[j] += b;
    }
  }
  return out;
}

template <class S>
ConvGradsT<S> conv2d_backward(const TensorT<S>& input, const ConvParamsT<S>& p,
                              const TensorT<S>& grad_out) {
  const int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int64_t k = p.kernel();
  const int64_t ho = conv_out_dim(h, k, p.padding, p.stride);
  const int64_t wo = conv_out_dim(w, k, p.padding, p.stride);
  require(grad_out.rank() == 4 && grad_out.dim(0) == n && grad_out.dim(1) == p.c_out() &&
              grad_out.dim(2) == ho && grad_out.dim(3) == wo,
          "conv2d_backward: grad_out shape mismatch, got " + grad_out.shape_str());

  const int64_t g = p.groups;
  const int64_t cg = c / g;
  const int64_t og = p.c_out() / g;

  ConvGradsT<S> grads;
  grads.input = TensorT<S>({n, c, h, w});
  grads.weight = TensorT<S>(p.weight.dims());
  grads.bias = TensorT<S>({p.c_out()});

  std::vector<S> cols(static_cast<size_t>(cg * k * k * ho * wo));
  std::vector<S> gcols(cols.size());

  for (int64_t i = 0; i < n; ++i) {
    for (int64_t gi = 0; gi < g; ++gi) {
      const S* img = input.data() + (i * c + gi * cg) * h * w;
      detail::im2col(img, cg, h, w, k, p.padding, p.stride, ho, wo, cols.data());

      ConstMatMap<S> gout(grad_out.data() + (i * p.c_out() + gi * og) * ho * wo, og, ho * wo);
      ConstMatMap<S> cmat(cols.data(), cg * k * k, ho * wo);
      MatMap<S> gw(grads.weight.data() + gi * og * cg * k * k, og, cg * k * k);
      gw.noalias() += gout * cmat.transpose();

      ConstMatMap<S> wmat(p.weight.data() + gi * og * cg * k * k, og, cg * k * k);
      MatMap<S> gc(gcols.data(), cg * k * k, ho * wo);
      gc.noalias() = wmat.transpose() * gout;
      detail::col2im(gcols.data(), cg, h, w, k, p.padding, p.stride, ho, wo,
                     grads.input.data() + (i * c + gi * cg) * h * w);
    }
    for (int64_t oc = 0; oc < p.c_out(); ++oc) {
      const S* src = grad_out.data() + (i * p.c_out() + oc) * ho * wo;
      double acc = 0.0;
      for (int64_t j = 0; j < ho * wo; ++j) acc += static_cast<double>(src[j]);
      grads.bias[oc] += static_cast<S>(acc);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Pooling (2x2, stride 2 — the only configuration the block zoo uses)
// ---------------------------------------------------------------------------

template <class S>
struct MaxPoolResultT {
  TensorT<S> output;
  std::vector<uint8_t> argmax;  // 0..3 window index per output site
};

template <class S>
MaxPoolResultT<S> maxpool2d(const TensorT<S>& input) {
  require(input.rank() == 4, "maxpool2d: input must be (n, c, h, w)");
  const int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  require(h % 2 == 0 && w % 2 == 0, "maxpool2d: spatial dims must be even, got " + input.shape_str());
  MaxPoolResultT<S> res;
  res.output = TensorT<S>({n, c, h / 2, w / 2});
  res.argmax.resize(static_cast<size_t>(res.output.numel()));
  const int64_t ho = h / 2, wo = w / 2;
  int64_t oi = 0;
  for (int64_t i = 0; i < n * c; ++i) {
    const S* plane = input.data() + i * h * w;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox, ++oi) {
        const S* base = plane + (2 * oy) * w + 2 * ox;
        // ties go to the first window element in scan order
        S best = base[0];
        uint8_t arg = 0;
        if (base[1] > best) { best = base[1]; arg = 1; }
        if (base[w] > best) { best = base[w]; arg = 2; }
        if (base[w + 1] > best) { best = base[w + 1]; arg = 3; }
        res.output[oi] = best;
        res.argmax[static_cast<size_t>(oi)] = arg;
      }
    }
  }
  return res;
}

template <class S>
TensorT<S> maxpool2d_backward(const TensorT<S>& grad_out, const std::vector<uint8_t>& argmax,
                              int64_t h, int64_t w) {
  const int64_t n = grad_out.dim(0), c = grad_out.dim(1), ho = grad_out.dim(2), wo = grad_out.dim(3);
  require(ho * 2 == h && wo * 2 == w, "maxpool2d_backward: shape mismatch");
  TensorT<S> grad_in({n, c, h, w});
  int64_t oi = 0;
  for (int64_t i = 0; i < n * c; ++i) {
    S* plane = grad_in.data() + i * h * w;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox, ++oi) {
        const uint8_t arg = argmax[static_cast<size_t>(oi)];
        const int64_t iy = 2 * oy + (arg >> 1);
        const int64_t ix = 2 * ox + (arg & 1);
        plane[iy * w + ix] += grad_out[oi];
      }
    }
  }
  return grad_in;
}

template <class S>
TensorT<S> avgpool2d(const TensorT<S>& input) {
  require(input.rank() == 4, "avgpool2d: input must be (n, c, h, w)");
  const int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  require(h % 2 == 0 && w % 2 == 0, "avgpool2d: spatial dims must be even, got " + input.shape_str());
  TensorT<S> out({n, c, h / 2, w / 2});
  const int64_t ho = h / 2, wo = w / 2;
  int64_t oi = 0;
  for (int64_t i = 0; i < n * c; ++i) {
    const S* plane = input.data() + i * h * w;
    for (int64_t oy = 0; oy < ho; ++oy)
      for (int64_t ox = 0; ox < wo; ++ox, ++oi) {
        const S* base = plane + (2 * oy) * w + 2 * ox;
        out[oi] = (base[0] + base[1] + base[w] + base[w + 1]) * S(0.25);
      }
  }
  return out;
}

template <class S>
TensorT<S> avgpool2d_backward(const TensorT<S>& grad_out, int64_t h, int64_t w) {
  const int64_t n = grad_out.dim(0), c = grad_out.dim(1), ho = grad_out.dim(2), wo = grad_out.dim(3);
  require(ho * 2 == h && wo * 2 == w, "avgpool2d_backward: shape mismatch");
  TensorT<S> grad_in({n, c, h, w});
  int64_t oi = 0;
  for (int64_t i = 0; i < n * c; ++i) {
    S* plane = grad_in.data() + i * h * w;
    for (int64_t oy = 0; oy < ho; ++oy)
      for (int64_t ox = 0; ox < wo; ++ox, ++oi) {
        const S v = grad_out[oi] * S(0.25);
        S* base = plane + (2 * oy) * w + 2 * ox;
        base[0] += v;
        base[1] += v;
        base[w] += v;
        base[w + 1] += v;
      }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Batch normalization (per channel; statistics pool every non-channel dim,
// so with stacked timesteps one parameter set covers all steps)
// ---------------------------------------------------------------------------

template <class S>
struct BatchNormParamsT {
  TensorT<S> gamma, beta;              // (c)
  TensorT<S> running_mean, running_var;  // (c)
  double epsilon = 1e-5;
  double momentum = 0.1;

  static BatchNormParamsT make(int64_t c) {
    BatchNormParamsT p;
    p.gamma = TensorT<S>::full({c}, S(1));
    p.beta = TensorT<S>({c});
    p.running_mean = TensorT<S>({c});
    p.running_var = TensorT<S>::full({c}, S(1));
    return p;
  }
};

using BatchNormParams = BatchNormParamsT<float>;

template <class S>
struct BatchNormCacheT {
  TensorT<S> mean, invstd;  // (c), train-mode statistics used for the pass
};

// input (n, c, h, w) or (n, c); returns normalized output. In train mode the
// cache is filled and running statistics are updated.
template <class S>
TensorT<S> batchnorm_forward(const TensorT<S>& input, BatchNormParamsT<S>& p, Mode mode,
                             BatchNormCacheT<S>* cache = nullptr) {
  require(input.rank() == 4 || input.rank() == 2, "batchnorm: input must be (n,c,h,w) or (n,f)");
  const int64_t n = input.dim(0);
  const int64_t c = input.dim(1);
  require(c == p.gamma.numel(), "batchnorm: channel mismatch");
  require(n > 0, "batchnorm: empty batch");
  const int64_t spatial = input.rank() == 4 ? input.dim(2) * input.dim(3) : 1;
  const int64_t m = n * spatial;

  TensorT<S> out(input.dims());
  TensorT<S> mean({c}), invstd({c});

  if (mode == Mode::train) {
    for (int64_t ch = 0; ch < c; ++ch) {
      double acc = 0.0, acc2 = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const S* src = input.data() + (i * c + ch) * spatial;
        for (int64_t j = 0; j < spatial; ++j) {
          const double v = static_cast<double>(src[j]);
          acc += v;
          acc2 += v * v;
        }
      }
      const double mu = acc / static_cast<double>(m);
      double var = acc2 / static_cast<double>(m) - mu * mu;
      if (var < 0.0) var = 0.0;  // guard against rounding
      mean[ch] = static_cast<S>(mu);
      invstd[ch] = static_cast<S>(1.0 / std::sqrt(var + p.epsilon));
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      p.running_mean[ch] =
          static_cast<S>((1.0 - p.momentum) * static_cast<double>(p.running_mean[ch]) + p.momentum * mu);
      p.running_var[ch] =
          static_cast<S>((1.0 - p.momentum) * static_cast<double>(p.running_var[ch]) + p.momentum * unbiased);
    }
  } else {
    for (int64_t ch = 0; ch < c; ++ch) {
      mean[ch] = p.running_mean[ch];
      invstd[ch] = static_cast<S>(1.0 / std::sqrt(static_cast<double>(p.running_var[ch]) + p.epsilon));
    }
  }

  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const S* src = input.data() + (i * c + ch) * spatial;
      S* dst = out.data() + (i * c + ch) * spatial;
      const S mu = mean[ch], is = invstd[ch], ga = p.gamma[ch], be = p.beta[ch];
      for (int64_t j = 0; j < spatial; ++j) dst[j] = (src[j] - mu) * is * ga + be;
    }

  if (cache) {
    cache->mean = std::move(mean);
    cache->invstd = std::move(invstd);
  }
  return out;
}

template <class S>
struct BatchNormGradsT {
  TensorT<S> input, gamma, beta;
};

// Train-mode backward through the batch statistics.
template <class S>
BatchNormGradsT<S> batchnorm_backward(const TensorT<S>& input, const BatchNormParamsT<S>& p,
                                      const BatchNormCacheT<S>& cache, const TensorT<S>& grad_out) {
  const int64_t n = input.dim(0);
  const int64_t c = input.dim(1);
  const int64_t spatial = input.rank() == 4 ? input.dim(2) * input.dim(3) : 1;
  const int64_t m = n * spatial;

  BatchNormGradsT<S> g;
  g.input = TensorT<S>(input.dims());
  g.gamma = TensorT<S>({c});
  g.beta = TensorT<S>({c});

  for (int64_t ch = 0; ch < c; ++ch) {
    const S mu = cache.mean[ch], is = cache.invstd[ch], ga = p.gamma[ch];
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const S* x = input.data() + (i * c + ch) * spatial;
      const S* gy = grad_out.data() + (i * c + ch) * spatial;
      for (int64_t j = 0; j < spatial; ++j) {
        const double xhat = static_cast<double>((x[j] - mu) * is);
        sum_gy += static_cast<double>(gy[j]);
        sum_gy_xhat += static_cast<double>(gy[j]) * xhat;
      }
    }
    g.beta[ch] = static_cast<S>(sum_gy);
    g.gamma[ch] = static_cast<S>(sum_gy_xhat);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (int64_t i = 0; i < n; ++i) {
      const S* x = input.data() + (i * c + ch) * spatial;
      const S* gy = grad_out.data() + (i * c + ch) * spatial;
      S* gx = g.input.data() + (i * c + ch) * spatial;
      for (int64_t j = 0; j < spatial; ++j) {
        const double xhat = static_cast<double>((x[j] - mu) * is);
        const double t = static_cast<double>(gy[j]) - inv_m * sum_gy - inv_m * sum_gy_xhat * xhat;
        gx[j] = static_cast<S>(static_cast<double>(ga) * static_cast<double>(is) * t);
      }
    }
  }
  return g;
}

// Eval-mode backward (running statistics are constants).
template <class S>
TensorT<S> batchnorm_backward_eval(const BatchNormParamsT<S>& p, const TensorT<S>& grad_out) {
  const int64_t n = grad_out.dim(0);
  const int64_t c = grad_out.dim(1);
  const int64_t spatial = grad_out.rank() == 4 ? grad_out.dim(2) * grad_out.dim(3) : 1;
  TensorT<S> gx(grad_out.dims());
  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const S scale = static_cast<S>(static_cast<double>(p.gamma[ch]) /
                                     std::sqrt(static_cast<double>(p.running_var[ch]) + p.epsilon));
      const S* gy = grad_out.data() + (i * c + ch) * spatial;
      S* dst = gx.data() + (i * c + ch) * spatial;
      for (int64_t j = 0; j < spatial; ++j) dst[j] = gy[j] * scale;
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Fully connected
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> linear_forward(const TensorT<S>& input, const TensorT<S>& weight, const TensorT<S>& bias) {
  require(input.rank() == 2, "linear: input must be (n, f)");
  const int64_t n = input.dim(0), fin = input.dim(1);
  const int64_t fout = weight.dim(0);
  require(weight.dim(1) == fin, "linear: weight shape mismatch");
  TensorT<S> out({n, fout});
  ConstMatMap<S> x(input.data(), n, fin);
  ConstMatMap<S> wmat(weight.data(), fout, fin);
  MatMap<S> y(out.data(), n, fout);
  y.noalias() = x * wmat.transpose();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < fout; ++j) out.at2(i, j) += bias[j];
  return out;
}

template <class S>
struct LinearGradsT {
  TensorT<S> input, weight, bias;
};

template <class S>
LinearGradsT<S> linear_backward(const TensorT<S>& input, const TensorT<S>& weight,
                                const TensorT<S>& grad_out) {
  const int64_t n = input.dim(0), fin = input.dim(1), fout = weight.dim(0);
  require(grad_out.dim(0) == n && grad_out.dim(1) == fout, "linear_backward: grad shape mismatch");
  LinearGradsT<S> g;
  g.input = TensorT<S>({n, fin});
  g.weight = TensorT<S>({fout, fin});
  g.bias = TensorT<S>({fout});
  ConstMatMap<S> x(input.data(), n, fin);
  ConstMatMap<S> wmat(weight.data(), fout, fin);
  ConstMatMap<S> gy(grad_out.data(), n, fout);
  MatMap<S>(g.input.data(), n, fin).noalias() = gy * wmat;
  MatMap<S>(g.weight.data(), fout, fin).noalias() = gy.transpose() * x;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < fout; ++j) g.bias[j] += grad_out.at2(i, j);
  return g;
}

// ---------------------------------------------------------------------------
// ReLU (ANN mode)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> relu_forward(const TensorT<S>& input) {
  TensorT<S> out(input.dims());
  for (int64_t i = 0; i < input.numel(); ++i) out[i] = input[i] > S(0) ? input[i] : S(0);
  return out;
}

template <class S>
TensorT<S> relu_backward(const TensorT<S>& input, const TensorT<S>& grad_out) {
  TensorT<S> gx(input.dims());
  for (int64_t i = 0; i < input.numel(); ++i) gx[i] = input[i] > S(0) ? grad_out[i] : S(0);
  return gx;
}

}  // namespace spikenas
