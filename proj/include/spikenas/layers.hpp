#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spikenas/kernels.hpp"
#include "spikenas/ledger.hpp"
#include "spikenas/neuron.hpp"
#include "spikenas/rng.hpp"
#include "spikenas/tensor.hpp"

namespace spikenas {

// Shared state for one forward/backward pass. Inputs are stacked along the
// leading dimension as timesteps * batch rows; stateless layers treat that as
// one big batch while spiking layers unstack it internally.
struct RunCtx {
  Mode mode = Mode::eval;
  int timesteps = 1;
  SpikeLedger* ledger = nullptr;
  int unit_id = -1;       // ledger unit of the layer currently running
  bool relaxed = false;   // soft spikes, for gradient checking
  double reg_seed = 0.0;  // d(reg term)/d(spike) added at every counted site
};

template <class S>
struct ParamRef {
  std::string name;
  TensorT<S>* value = nullptr;
  TensorT<S>* grad = nullptr;
};

template <class S>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  virtual TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) = 0;
  virtual TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) = 0;

  virtual void collect_params(std::vector<ParamRef<S>>& out) {}
  // All persistent tensors (parameters plus running statistics).
  virtual void collect_state(std::vector<ParamRef<S>>& out) { collect_params(out); }
  virtual void zero_grads() {}
  virtual void clear_cache() {}

  // Neuron sites per sample that this layer contributes to its ledger unit.
  virtual int64_t neuron_sites() const { return 0; }

  // True when the layer's outputs are ledger-counted spike sites (and thus
  // receive the regularizer seed during backward).
  virtual bool counts_spikes() const { return false; }

  const std::string& name() const { return name_; }

 protected:
  std::string name_;
};

// Kaiming-uniform init matching fan-in, the usual default for conv/linear.
template <class S>
void init_uniform_fan_in(TensorT<S>& w, TensorT<S>& b, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<S>(rng.uniform(-bound, bound));
  for (int64_t i = 0; i < b.numel(); ++i) b[i] = static_cast<S>(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------------------

template <class S>
class Conv2dLayer : public Layer<S> {
 public:
  Conv2dLayer(std::string name, int64_t c_in, int64_t c_out, int kernel, int stride, int padding,
              int groups, Rng& rng)
      : Layer<S>(std::move(name)) {
    params_.weight = TensorT<S>({c_out, c_in / groups, kernel, kernel});
    params_.bias = TensorT<S>({c_out});
    params_.stride = stride;
    params_.padding = padding;
    params_.groups = groups;
    init_uniform_fan_in(params_.weight, params_.bias, (c_in / groups) * kernel * kernel, rng);
    grad_weight_ = TensorT<S>(params_.weight.dims());
    grad_bias_ = TensorT<S>(params_.bias.dims());
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    if (ctx.mode == Mode::train) input_ = x;
    return conv2d_forward(x, params_);
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    auto g = conv2d_backward(input_, params_, grad_out);
    grad_weight_.add_scaled(g.weight, S(1));
    grad_bias_.add_scaled(g.bias, S(1));
    return std::move(g.input);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name_ + ".weight", &params_.weight, &grad_weight_});
    out.push_back({this->name_ + ".bias", &params_.bias, &grad_bias_});
  }

  void zero_grads() override {
    grad_weight_.zero();
    grad_bias_.zero();
  }

  void clear_cache() override { input_ = TensorT<S>(); }

  ConvParamsT<S>& params() { return params_; }

 private:
  ConvParamsT<S> params_;
  TensorT<S> grad_weight_, grad_bias_;
  TensorT<S> input_;
};

// ---------------------------------------------------------------------------

template <class S>
class BatchNormLayer : public Layer<S> {
 public:
  BatchNormLayer(std::string name, int64_t channels) : Layer<S>(std::move(name)) {
    params_ = BatchNormParamsT<S>::make(channels);
    grad_gamma_ = TensorT<S>({channels});
    grad_beta_ = TensorT<S>({channels});
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    if (ctx.mode == Mode::train) {
      input_ = x;
      train_pass_ = true;
      return batchnorm_forward(x, params_, Mode::train, &cache_);
    }
    train_pass_ = false;
    return batchnorm_forward(x, params_, Mode::eval);
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    if (!train_pass_) return batchnorm_backward_eval(params_, grad_out);
    auto g = batchnorm_backward(input_, params_, cache_, grad_out);
    grad_gamma_.add_scaled(g.gamma, S(1));
    grad_beta_.add_scaled(g.beta, S(1));
    return std::move(g.input);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name_ + ".gamma", &params_.gamma, &grad_gamma_});
    out.push_back({this->name_ + ".beta", &params_.beta, &grad_beta_});
  }

  void collect_state(std::vector<ParamRef<S>>& out) override {
    collect_params(out);
    out.push_back({this->name_ + ".running_mean", &params_.running_mean, nullptr});
    out.push_back({this->name_ + ".running_var", &params_.running_var, nullptr});
  }

  void zero_grads() override {
    grad_gamma_.zero();
    grad_beta_.zero();
  }

  void clear_cache() override { input_ = TensorT<S>(); }

  BatchNormParamsT<S>& params() { return params_; }

 private:
  BatchNormParamsT<S> params_;
  BatchNormCacheT<S> cache_;
  TensorT<S> grad_gamma_, grad_beta_;
  TensorT<S> input_;
  bool train_pass_ = false;
};

// ---------------------------------------------------------------------------

// PLIF spiking activation over stacked timesteps. Holds the layer's trainable
// alpha; membrane state lives only for the duration of one forward call, so
// every batch starts from V_reset.
template <class S>
class PlifLayer : public Layer<S> {
 public:
  PlifLayer(std::string name, int64_t sites, const NeuronConfig& cfg)
      : Layer<S>(std::move(name)), sites_(sites), cfg_(cfg) {
    alpha_ = TensorT<S>::full({1}, static_cast<S>(cfg.alpha_init));
    grad_alpha_ = TensorT<S>({1});
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    const int64_t rows = x.dim(0);
    const int T = ctx.timesteps;
    require(rows % T == 0, "plif: rows not divisible by timesteps");
    const int64_t batch = rows / T;
    const int64_t per_row = x.numel() / rows;
    require(per_row == sites_, "plif: site count mismatch in '" + this->name_ + "'");
    if (!x.all_finite())
      throw NumericError("plif: non-finite synaptic input in '" + this->name_ + "'");

    const S decay = static_cast<S>(plif_decay(static_cast<double>(alpha_[0])));
    const S vth = static_cast<S>(cfg_.v_threshold);
    const S vr = static_cast<S>(cfg_.v_reset);
    const bool cache = ctx.mode == Mode::train;

    TensorT<S> out(x.dims());
    if (cache) {
      h_cache_ = TensorT<S>(x.dims());
      vprev_cache_ = TensorT<S>(x.dims());
    }
    std::vector<S> v(static_cast<size_t>(batch * per_row), vr);

    for (int t = 0; t < T; ++t) {
      const S* zt = x.data() + static_cast<int64_t>(t) * batch * per_row;
      S* ot = out.data() + static_cast<int64_t>(t) * batch * per_row;
      double popcount = 0.0;
      for (int64_t i = 0; i < batch * per_row; ++i) {
        const auto r = neuron_step(zt[i], v[static_cast<size_t>(i)], decay, vth, vr, ctx.relaxed);
        if (cache) {
          h_cache_[static_cast<int64_t>(t) * batch * per_row + i] = r.h;
          vprev_cache_[static_cast<int64_t>(t) * batch * per_row + i] = v[static_cast<size_t>(i)];
        }
        v[static_cast<size_t>(i)] = r.v_next;
        ot[i] = r.spike;
        popcount += static_cast<double>(r.spike);
      }
      if (ctx.ledger) ctx.ledger->record(ctx.unit_id, t, popcount);
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    require(h_cache_.numel() == grad_out.numel(), "plif: missing forward cache");
    const int T = ctx.timesteps;
    const int64_t rows = grad_out.dim(0);
    const int64_t chunk = grad_out.numel() / T;  // batch * per_row

    const S decay = static_cast<S>(plif_decay(static_cast<double>(alpha_[0])));
    const S vth = static_cast<S>(cfg_.v_threshold);
    const S seed = static_cast<S>(ctx.reg_seed);

    TensorT<S> grad_in(grad_out.dims());
    std::vector<S> gv(static_cast<size_t>(chunk), S(0));
    double galpha = 0.0;

    for (int t = T - 1; t >= 0; --t) {
      const int64_t off = static_cast<int64_t>(t) * chunk;
      for (int64_t i = 0; i < chunk; ++i) {
        const S h = h_cache_[off + i];
        const S vprev = vprev_cache_[off + i];
        const S spike = ctx.relaxed
                            ? static_cast<S>(soft_spike(static_cast<double>(h - vth)))
                            : (h >= vth ? S(1) : S(0));
        const auto r = neuron_backward_step(static_cast<S>(grad_out[off + i] + seed),
                                            gv[static_cast<size_t>(i)], h, vprev, spike, decay,
                                            vth, ctx.relaxed);
        grad_in[off + i] = r.grad_z;
        gv[static_cast<size_t>(i)] = r.grad_v_prev;
        galpha += static_cast<double>(r.grad_alpha);
      }
    }
    (void)rows;
    grad_alpha_[0] += static_cast<S>(galpha);
    return grad_in;
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name_ + ".alpha", &alpha_, &grad_alpha_});
  }

  void zero_grads() override { grad_alpha_.zero(); }

  void clear_cache() override {
    h_cache_ = TensorT<S>();
    vprev_cache_ = TensorT<S>();
  }

  int64_t neuron_sites() const override { return sites_; }
  bool counts_spikes() const override { return true; }

  TensorT<S>& alpha() { return alpha_; }

 private:
  int64_t sites_;
  NeuronConfig cfg_;
  TensorT<S> alpha_, grad_alpha_;
  TensorT<S> h_cache_, vprev_cache_;
};

// ---------------------------------------------------------------------------

// ReLU stand-in used when spiking neurons are stripped from a plan. Records
// activation sums so layerwise activation profiles stay comparable with the
// spiking ledger reports.
template <class S>
class ReluLayer : public Layer<S> {
 public:
  ReluLayer(std::string name, int64_t sites) : Layer<S>(std::move(name)), sites_(sites) {}

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    if (ctx.mode == Mode::train) input_ = x;
    auto out = relu_forward(x);
    if (ctx.ledger) {
      const int64_t chunk = out.numel() / ctx.timesteps;
      for (int t = 0; t < ctx.timesteps; ++t) {
        double s = 0.0;
        for (int64_t i = 0; i < chunk; ++i) s += static_cast<double>(out[t * chunk + i]);
        ctx.ledger->record(ctx.unit_id, t, s);
      }
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    return relu_backward(input_, grad_out);
  }

  void clear_cache() override { input_ = TensorT<S>(); }

  int64_t neuron_sites() const override { return sites_; }

 private:
  int64_t sites_;
  TensorT<S> input_;
};

// ---------------------------------------------------------------------------

// 2x2/stride-2 max pool. As a down-sampling stage its outputs are counted as
// spike sites: a window containing any input spike forwards one spike.
template <class S>
class MaxPoolLayer : public Layer<S> {
 public:
  MaxPoolLayer(std::string name, int64_t out_sites) : Layer<S>(std::move(name)), sites_(out_sites) {}

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    h_ = x.dim(2);
    w_ = x.dim(3);
    auto res = maxpool2d(x);
    argmax_ = std::move(res.argmax);
    if (ctx.ledger) record_output(res.output, ctx);
    return std::move(res.output);
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    if (ctx.reg_seed != 0.0) {
      TensorT<S> g = grad_out;
      g.add_scalar(static_cast<S>(ctx.reg_seed));
      return maxpool2d_backward(g, argmax_, h_, w_);
    }
    return maxpool2d_backward(grad_out, argmax_, h_, w_);
  }

  void clear_cache() override { argmax_.clear(); }

  int64_t neuron_sites() const override { return sites_; }
  bool counts_spikes() const override { return true; }

 private:
  void record_output(const TensorT<S>& out, RunCtx& ctx) {
    const int64_t chunk = out.numel() / ctx.timesteps;
    for (int t = 0; t < ctx.timesteps; ++t) {
      double s = 0.0;
      for (int64_t i = 0; i < chunk; ++i) s += static_cast<double>(out[t * chunk + i]);
      ctx.ledger->record(ctx.unit_id, t, s);
    }
  }

  int64_t sites_;
  int64_t h_ = 0, w_ = 0;
  std::vector<uint8_t> argmax_;
};

// 2x2/stride-2 average pool down-sampler. Outputs are graded, so the ledger
// counts occupied windows (any nonzero output) as transmitted spikes; the
// regularizer seed is spread through the averaging weights.
template <class S>
class AvgPoolLayer : public Layer<S> {
 public:
  AvgPoolLayer(std::string name, int64_t out_sites, bool spiking)
      : Layer<S>(std::move(name)), sites_(out_sites), spiking_(spiking) {}

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    h_ = x.dim(2);
    w_ = x.dim(3);
    auto out = avgpool2d(x);
    if (ctx.ledger) {
      const int64_t chunk = out.numel() / ctx.timesteps;
      for (int t = 0; t < ctx.timesteps; ++t) {
        double s = 0.0;
        for (int64_t i = 0; i < chunk; ++i) {
          const S v = out[t * chunk + i];
          s += spiking_ ? (v != S(0) ? 1.0 : 0.0) : static_cast<double>(v);
        }
        ctx.ledger->record(ctx.unit_id, t, s);
      }
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    if (ctx.reg_seed != 0.0) {
      TensorT<S> g = grad_out;
      g.add_scalar(static_cast<S>(ctx.reg_seed));
      return avgpool2d_backward(g, h_, w_);
    }
    return avgpool2d_backward(grad_out, h_, w_);
  }

  int64_t neuron_sites() const override { return sites_; }
  bool counts_spikes() const override { return true; }

 private:
  int64_t sites_;
  bool spiking_;
  int64_t h_ = 0, w_ = 0;
};

// ---------------------------------------------------------------------------

// Spatial mean per channel: (n, c, h, w) -> (n, c).
template <class S>
class GlobalAvgPoolLayer : public Layer<S> {
 public:
  explicit GlobalAvgPoolLayer(std::string name) : Layer<S>(std::move(name)) {}

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    h_ = h;
    w_ = w;
    TensorT<S> out({n, c});
    for (int64_t i = 0; i < n * c; ++i) {
      const S* plane = x.data() + i * h * w;
      double acc = 0.0;
      for (int64_t j = 0; j < h * w; ++j) acc += static_cast<double>(plane[j]);
      out[i] = static_cast<S>(acc / static_cast<double>(h * w));
    }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    const int64_t n = grad_out.dim(0), c = grad_out.dim(1);
    TensorT<S> gx({n, c, h_, w_});
    const S scale = static_cast<S>(1.0 / static_cast<double>(h_ * w_));
    for (int64_t i = 0; i < n * c; ++i) {
      const S v = grad_out[i] * scale;
      S* plane = gx.data() + i * h_ * w_;
      for (int64_t j = 0; j < h_ * w_; ++j) plane[j] = v;
    }
    return gx;
  }

 private:
  int64_t h_ = 0, w_ = 0;
};

// ---------------------------------------------------------------------------

template <class S>
class FlattenLayer : public Layer<S> {
 public:
  explicit FlattenLayer(std::string name) : Layer<S>(std::move(name)) {}

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    dims_ = x.dims();
    return x.reshaped({x.dim(0), x.numel() / x.dim(0)});
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    return grad_out.reshaped(dims_);
  }

 private:
  std::vector<int64_t> dims_;
};

// ---------------------------------------------------------------------------

template <class S>
class LinearLayer : public Layer<S> {
 public:
  LinearLayer(std::string name, int64_t in_features, int64_t out_features, Rng& rng)
      : Layer<S>(std::move(name)) {
    weight_ = TensorT<S>({out_features, in_features});
    bias_ = TensorT<S>({out_features});
    init_uniform_fan_in(weight_, bias_, in_features, rng);
    grad_weight_ = TensorT<S>(weight_.dims());
    grad_bias_ = TensorT<S>(bias_.dims());
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    if (ctx.mode == Mode::train) input_ = x;
    return linear_forward(x, weight_, bias_);
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    auto g = linear_backward(input_, weight_, grad_out);
    grad_weight_.add_scaled(g.weight, S(1));
    grad_bias_.add_scaled(g.bias, S(1));
    return std::move(g.input);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name_ + ".weight", &weight_, &grad_weight_});
    out.push_back({this->name_ + ".bias", &bias_, &grad_bias_});
  }

  void zero_grads() override {
    grad_weight_.zero();
    grad_bias_.zero();
  }

  void clear_cache() override { input_ = TensorT<S>(); }

 private:
  TensorT<S> weight_, bias_, grad_weight_, grad_bias_;
  TensorT<S> input_;
};

// ---------------------------------------------------------------------------

// 1-D average pool of width K over grouped class channels:
// (n, classes*K) -> (n, classes).
template <class S>
class VotingLayer : public Layer<S> {
 public:
  VotingLayer(std::string name, int64_t classes, int64_t k)
      : Layer<S>(std::move(name)), classes_(classes), k_(k) {}

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    require(x.rank() == 2 && x.dim(1) == classes_ * k_,
            "voting: feature dim must be classes*K, got " + x.shape_str());
    const int64_t n = x.dim(0);
    TensorT<S> out({n, classes_});
    const S inv_k = static_cast<S>(1.0 / static_cast<double>(k_));
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < classes_; ++j) {
        double acc = 0.0;
        for (int64_t u = 0; u < k_; ++u) acc += static_cast<double>(x.at2(i, j * k_ + u));
        out.at2(i, j) = static_cast<S>(acc) * inv_k;
      }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    const int64_t n = grad_out.dim(0);
    TensorT<S> gx({n, classes_ * k_});
    const S inv_k = static_cast<S>(1.0 / static_cast<double>(k_));
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < classes_; ++j) {
        const S v = grad_out.at2(i, j) * inv_k;
        for (int64_t u = 0; u < k_; ++u) gx.at2(i, j * k_ + u) = v;
      }
    return gx;
  }

 private:
  int64_t classes_, k_;
};

// ---------------------------------------------------------------------------

template <class S>
class IdentityLayer : public Layer<S> {
 public:
  explicit IdentityLayer(std::string name) : Layer<S>(std::move(name)) {}
  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override { return x; }
  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override { return grad_out; }
};

// Parameter-free channel widening for skip at a channel-changing slot: the
// input block of channels is tiled until c_out is filled. Binary inputs stay
// binary and no neurons are added.
template <class S>
class ChannelDupLayer : public Layer<S> {
 public:
  ChannelDupLayer(std::string name, int64_t c_in, int64_t c_out)
      : Layer<S>(std::move(name)), c_in_(c_in), c_out_(c_out) {
    require(c_out_ % c_in_ == 0, "channel_dup: c_out must be a multiple of c_in");
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    TensorT<S> out({n, c_out_, h, w});
    for (int64_t i = 0; i < n; ++i)
      for (int64_t c = 0; c < c_out_; ++c) {
        const S* src = x.data() + (i * c_in_ + c % c_in_) * h * w;
        S* dst = out.data() + (i * c_out_ + c) * h * w;
        std::copy(src, src + h * w, dst);
      }
    return out;
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    const int64_t n = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
    TensorT<S> gx({n, c_in_, h, w});
    for (int64_t i = 0; i < n; ++i)
      for (int64_t c = 0; c < c_out_; ++c) {
        const S* src = grad_out.data() + (i * c_out_ + c) * h * w;
        S* dst = gx.data() + (i * c_in_ + c % c_in_) * h * w;
        for (int64_t j = 0; j < h * w; ++j) dst[j] += src[j];
      }
    return gx;
  }

 private:
  int64_t c_in_, c_out_;
};

}  // namespace spikenas
