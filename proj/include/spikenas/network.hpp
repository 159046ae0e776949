#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spikenas/archspace.hpp"
#include "spikenas/blocks.hpp"
#include "spikenas/layers.hpp"

namespace spikenas {

// conv3x3 + BN + activation, the stem stage.
template <class S>
class ConvBnAct : public Layer<S> {
 public:
  ConvBnAct(const std::string& name, int64_t c_in, int64_t c_out, int64_t h, int64_t w,
            const NeuronConfig& cfg, bool ann, Rng& rng)
      : Layer<S>(name) {
    conv_ = std::make_unique<Conv2dLayer<S>>(name + ".conv", c_in, c_out, 3, 1, 1, 1, rng);
    bn_ = std::make_unique<BatchNormLayer<S>>(name + ".bn", c_out);
    act_ = make_activation<S>(name + ".n", c_out * h * w, cfg, ann);
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    return act_->forward(bn_->forward(conv_->forward(x, ctx), ctx), ctx);
  }
  TensorT<S> backward(const TensorT<S>& g, RunCtx& ctx) override {
    return conv_->backward(bn_->backward(act_->backward(g, ctx), ctx), ctx);
  }
  void collect_params(std::vector<ParamRef<S>>& out) override {
    conv_->collect_params(out);
    bn_->collect_params(out);
    act_->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<S>>& out) override {
    conv_->collect_state(out);
    bn_->collect_state(out);
    act_->collect_state(out);
  }
  void zero_grads() override {
    conv_->zero_grads();
    bn_->zero_grads();
    act_->zero_grads();
  }
  void clear_cache() override {
    conv_->clear_cache();
    bn_->clear_cache();
    act_->clear_cache();
  }
  int64_t neuron_sites() const override { return act_->neuron_sites(); }

 private:
  std::unique_ptr<Conv2dLayer<S>> conv_;
  std::unique_ptr<BatchNormLayer<S>> bn_;
  std::unique_ptr<Layer<S>> act_;
};

// Spatial mean feeding a width-c neuron stage.
template <class S>
class GapNeuron : public Layer<S> {
 public:
  GapNeuron(const std::string& name, int64_t channels, const NeuronConfig& cfg, bool ann)
      : Layer<S>(name), gap_(name + ".gap") {
    act_ = make_activation<S>(name + ".n", channels, cfg, ann);
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    return act_->forward(gap_.forward(x, ctx), ctx);
  }
  TensorT<S> backward(const TensorT<S>& g, RunCtx& ctx) override {
    return gap_.backward(act_->backward(g, ctx), ctx);
  }
  void collect_params(std::vector<ParamRef<S>>& out) override { act_->collect_params(out); }
  void collect_state(std::vector<ParamRef<S>>& out) override { act_->collect_state(out); }
  void zero_grads() override { act_->zero_grads(); }
  void clear_cache() override { act_->clear_cache(); }
  int64_t neuron_sites() const override { return act_->neuron_sites(); }

 private:
  GlobalAvgPoolLayer<S> gap_;
  std::unique_ptr<Layer<S>> act_;
};

// flatten + linear + spiking activation; the classifier before voting.
template <class S>
class FcHead : public Layer<S> {
 public:
  FcHead(const std::string& name, int64_t in_features, int64_t out_features,
         const NeuronConfig& cfg, bool ann, Rng& rng)
      : Layer<S>(name), flatten_(name + ".flatten") {
    linear_ = std::make_unique<LinearLayer<S>>(name + ".linear", in_features, out_features, rng);
    act_ = make_activation<S>(name + ".n", out_features, cfg, ann);
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    auto f = x.rank() == 2 ? x : flatten_.forward(x, ctx);
    used_flatten_ = x.rank() != 2;
    return act_->forward(linear_->forward(f, ctx), ctx);
  }
  TensorT<S> backward(const TensorT<S>& g, RunCtx& ctx) override {
    auto gf = linear_->backward(act_->backward(g, ctx), ctx);
    return used_flatten_ ? flatten_.backward(gf, ctx) : gf;
  }
  void collect_params(std::vector<ParamRef<S>>& out) override {
    linear_->collect_params(out);
    act_->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<S>>& out) override {
    linear_->collect_state(out);
    act_->collect_state(out);
  }
  void zero_grads() override {
    linear_->zero_grads();
    act_->zero_grads();
  }
  void clear_cache() override {
    linear_->clear_cache();
    act_->clear_cache();
  }
  int64_t neuron_sites() const override { return act_->neuron_sites(); }

 private:
  FlattenLayer<S> flatten_;
  std::unique_ptr<LinearLayer<S>> linear_;
  std::unique_ptr<Layer<S>> act_;
  bool used_flatten_ = true;
};

// Builds the layer for one plan unit.
template <class S>
std::shared_ptr<Layer<S>> build_unit(const PlanUnit& u, const NetworkPlan& plan,
                                     const NeuronConfig& cfg, Rng& rng) {
  switch (u.role) {
    case UnitRole::stem:
      return std::make_shared<ConvBnAct<S>>(u.label, u.c_in, u.c_out, u.h_out, u.w_out, cfg,
                                            plan.ann, rng);
    case UnitRole::stem_ds:
      return std::shared_ptr<Layer<S>>(
          build_block<S>(u.block, u.label, u.c_in, u.c_out, u.h_in, u.w_in, u.stride, cfg, plan.ann,
                         rng)
              .release());
    case UnitRole::tbd:
    case UnitRole::ds:
      return std::shared_ptr<Layer<S>>(
          build_block<S>(u.block, u.label, u.c_in, u.c_out, u.h_in, u.w_in, u.stride, cfg, plan.ann,
                         rng)
              .release());
    case UnitRole::gap:
      return std::make_shared<GapNeuron<S>>(u.label, u.c_out, cfg, plan.ann);
    case UnitRole::fc_head:
      return std::make_shared<FcHead<S>>(u.label, u.c_in * u.h_in * u.w_in, u.c_out, cfg, plan.ann,
                                         rng);
    case UnitRole::voting:
      return std::make_shared<VotingLayer<S>>(u.label, u.c_out, u.c_in / u.c_out);
  }
  throw ShapeError("build_unit: unknown role");
}

// An assembled network: one layer per plan unit, shared ownership so a
// supernet can lend slot layers to subnet views without copying weights.
template <class S>
class NetworkT {
 public:
  NetworkPlan plan;
  std::vector<std::shared_ptr<Layer<S>>> units;
  int timesteps = 1;

  static NetworkT build(const NetworkPlan& plan, const NeuronConfig& cfg, int timesteps, Rng& rng) {
    NetworkT net;
    net.plan = plan;
    net.timesteps = plan.ann ? 1 : timesteps;
    for (const auto& u : plan.units) net.units.push_back(build_unit<S>(u, plan, cfg, rng));
    return net;
  }

  int64_t num_classes() const { return plan.macro.num_classes; }

  // Registers all units with a fresh ledger. Safe to call once per ledger.
  void register_ledger(SpikeLedger& ledger) {
    ledger.configure(timesteps);
    unit_ids_.clear();
    for (size_t i = 0; i < units.size(); ++i)
      unit_ids_.push_back(
          ledger.register_unit(plan.units[i].label, units[i]->neuron_sites(), !plan.ann));
    bound_ledger_ = &ledger;
  }

  // Runs T timesteps over a (batch, c, h, w) input presented as an identical
  // current at every step; returns the time-averaged voted scores o in
  // (batch, classes). Spiking state starts from V_reset on every call.
  TensorT<S> forward_T(const TensorT<S>& batch, Mode mode, SpikeLedger* ledger = nullptr,
                       bool relaxed = false) {
    require(batch.rank() == 4, "forward_T: batch must be (n, c, h, w)");
    require(batch.dim(1) == plan.macro.input_channels && batch.dim(2) == plan.macro.input_hw() &&
                batch.dim(3) == plan.macro.input_hw(),
            "forward_T: input shape mismatch, got " + batch.shape_str());
    const int T = timesteps;
    const int64_t B = batch.dim(0);
    last_batch_ = B;

    if (ledger && ledger != bound_ledger_) register_ledger(*ledger);

    TensorT<S> x({T * B, batch.dim(1), batch.dim(2), batch.dim(3)});
    const int64_t chunk = batch.numel();
    for (int t = 0; t < T; ++t)
      std::copy(batch.data(), batch.data() + chunk, x.data() + static_cast<int64_t>(t) * chunk);

    RunCtx ctx;
    ctx.mode = mode;
    ctx.timesteps = T;
    ctx.ledger = ledger;
    ctx.relaxed = relaxed;
    for (size_t i = 0; i < units.size(); ++i) {
      ctx.unit_id = ledger ? unit_ids_[i] : -1;
      x = units[i]->forward(x, ctx);
    }
    if (ledger) ledger->add_samples(B);

    // o = (1/T) sum_t voted[t]
    const int64_t classes = num_classes();
    TensorT<S> o({B, classes});
    const S inv_t = static_cast<S>(1.0 / static_cast<double>(T));
    for (int t = 0; t < T; ++t)
      for (int64_t b = 0; b < B; ++b)
        for (int64_t j = 0; j < classes; ++j)
          o.at2(b, j) += x.at2(static_cast<int64_t>(t) * B + b, j) * inv_t;
    return o;
  }

  // Back-propagates dL/do through voting, layers and time. reg_seed is the
  // per-site derivative of the spike regularizer, if one is active.
  void backward_T(const TensorT<S>& grad_o, double reg_seed = 0.0, bool relaxed = false) {
    const int T = timesteps;
    const int64_t B = last_batch_;
    const int64_t classes = num_classes();
    require(grad_o.dim(0) == B && grad_o.dim(1) == classes, "backward_T: grad shape mismatch");

    TensorT<S> g({T * B, classes});
    const S inv_t = static_cast<S>(1.0 / static_cast<double>(T));
    for (int t = 0; t < T; ++t)
      for (int64_t b = 0; b < B; ++b)
        for (int64_t j = 0; j < classes; ++j)
          g.at2(static_cast<int64_t>(t) * B + b, j) = grad_o.at2(b, j) * inv_t;

    RunCtx ctx;
    ctx.mode = Mode::train;
    ctx.timesteps = T;
    ctx.relaxed = relaxed;
    ctx.reg_seed = reg_seed;
    for (size_t i = units.size(); i-- > 0;) {
      ctx.unit_id = -1;
      g = units[i]->backward(g, ctx);
    }
  }

  std::vector<ParamRef<S>> params() {
    std::vector<ParamRef<S>> out;
    for (auto& u : units) u->collect_params(out);
    return out;
  }

  std::vector<ParamRef<S>> state() {
    std::vector<ParamRef<S>> out;
    for (auto& u : units) u->collect_state(out);
    return out;
  }

  void zero_grads() {
    for (auto& u : units) u->zero_grads();
  }

  void clear_caches() {
    for (auto& u : units) u->clear_cache();
  }

  // Census from the instantiated layers (the analytic census lives in the plan).
  int64_t runtime_census(bool include_head = true) const {
    int64_t n = 0;
    for (size_t i = 0; i < units.size(); ++i) {
      const auto role = plan.units[i].role;
      if (!include_head && (role == UnitRole::fc_head || role == UnitRole::voting)) continue;
      n += units[i]->neuron_sites();
    }
    return n;
  }

 private:
  std::vector<int> unit_ids_;
  SpikeLedger* bound_ledger_ = nullptr;
  int64_t last_batch_ = 0;
};

using Network = NetworkT<float>;

}  // namespace spikenas
