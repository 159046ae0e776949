#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spikenas/layers.hpp"

namespace spikenas {

// ---------------------------------------------------------------------------
// Block vocabulary
// ---------------------------------------------------------------------------

enum class BlockTag {
  skip,
  scb,          // two conv+BN+neuron stages
  srb,          // SCB plus a shortcut into the second stage's pre-neuron input
  sib,          // inverted bottleneck: expand 1x1 / depthwise kxk / project 1x1
  channel_dup,  // realization of skip at a channel-changing slot
  maxpool_ds,
  avgpool_ds,
  gap,
  stem_conv,
  fc_head,
  voting,
};

struct BlockKind {
  BlockTag tag = BlockTag::skip;
  int kernel = 3;  // scb/srb/sib
  int expand = 1;  // sib only

  bool operator==(const BlockKind& o) const {
    if (tag != o.tag) return false;
    const bool kerneled = tag == BlockTag::scb || tag == BlockTag::srb || tag == BlockTag::sib;
    if (kerneled && kernel != o.kernel) return false;
    if (tag == BlockTag::sib && expand != o.expand) return false;
    return true;
  }
  bool operator!=(const BlockKind& o) const { return !(*this == o); }

  static BlockKind Skip() { return {BlockTag::skip}; }
  static BlockKind Scb(int k) { return {BlockTag::scb, k}; }
  static BlockKind Srb(int k) { return {BlockTag::srb, k}; }
  static BlockKind Sib(int k, int e) { return {BlockTag::sib, k, e}; }
  static BlockKind MaxPoolDs() { return {BlockTag::maxpool_ds}; }
  static BlockKind AvgPoolDs() { return {BlockTag::avgpool_ds}; }
};

std::string block_to_string(const BlockKind& k);
BlockKind block_from_string(const std::string& s);

// The candidate set searched over: skip plus SCB/SRB at kernel sizes 3 and 5.
std::vector<BlockKind> default_candidates();
// Single-kind fills used by block-zoo comparison experiments.
std::vector<BlockKind> sib_study_kinds();

// ---------------------------------------------------------------------------
// Closed-form per-block accounting
// ---------------------------------------------------------------------------

// Spiking-neuron sites of one block instance. h, w are the input resolution;
// a strided block places all its neuron stages at the reduced resolution
// except SIB, whose expansion stage precedes the strided depthwise conv.
// Pool/GAP sites are their output sites (a transmitted spike per window).
int64_t neuron_count(const BlockKind& kind, int64_t h, int64_t w, int64_t c_in, int64_t c_out,
                     int stride = 1);

// Trainable parameter count (conv weights/biases, BN affine pairs, and one
// alpha per neuron stage unless ann strips them).
int64_t block_param_count(const BlockKind& kind, int64_t c_in, int64_t c_out, int stride, bool ann,
                          int64_t fc_in = 0);

// ---------------------------------------------------------------------------
// Composite trainable blocks
// ---------------------------------------------------------------------------

template <class S>
std::unique_ptr<Layer<S>> make_activation(const std::string& name, int64_t sites,
                                          const NeuronConfig& cfg, bool ann) {
  if (ann) return std::make_unique<ReluLayer<S>>(name, sites);
  return std::make_unique<PlifLayer<S>>(name, sites, cfg);
}

// conv(k, c_in->c_out, stride) + BN + act, then conv(k, c_out->c_out) + BN + act.
template <class S>
class ScbBlock : public Layer<S> {
 public:
  ScbBlock(const std::string& name, int64_t c_in, int64_t c_out, int64_t h, int64_t w, int kernel,
           int stride, const NeuronConfig& cfg, bool ann, Rng& rng)
      : Layer<S>(name) {
    const int pad = (kernel - 1) / 2;
    const int64_t ho = h / stride, wo = w / stride;
    conv1_ = std::make_unique<Conv2dLayer<S>>(name + ".conv1", c_in, c_out, kernel, stride, pad, 1, rng);
    bn1_ = std::make_unique<BatchNormLayer<S>>(name + ".bn1", c_out);
    act1_ = make_activation<S>(name + ".n1", c_out * ho * wo, cfg, ann);
    conv2_ = std::make_unique<Conv2dLayer<S>>(name + ".conv2", c_out, c_out, kernel, 1, pad, 1, rng);
    bn2_ = std::make_unique<BatchNormLayer<S>>(name + ".bn2", c_out);
    act2_ = make_activation<S>(name + ".n2", c_out * ho * wo, cfg, ann);
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    auto y = act1_->forward(bn1_->forward(conv1_->forward(x, ctx), ctx), ctx);
    return act2_->forward(bn2_->forward(conv2_->forward(y, ctx), ctx), ctx);
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    auto g = conv2_->backward(bn2_->backward(act2_->backward(grad_out, ctx), ctx), ctx);
    return conv1_->backward(bn1_->backward(act1_->backward(g, ctx), ctx), ctx);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    for (auto* l : members()) l->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<S>>& out) override {
    for (auto* l : members()) l->collect_state(out);
  }
  void zero_grads() override {
    for (auto* l : members()) l->zero_grads();
  }
  void clear_cache() override {
    for (auto* l : members()) l->clear_cache();
  }
  int64_t neuron_sites() const override { return act1_->neuron_sites() + act2_->neuron_sites(); }

 private:
  std::vector<Layer<S>*> members() {
    return {conv1_.get(), bn1_.get(), act1_.get(), conv2_.get(), bn2_.get(), act2_.get()};
  }

  std::unique_ptr<Conv2dLayer<S>> conv1_, conv2_;
  std::unique_ptr<BatchNormLayer<S>> bn1_, bn2_;
  std::unique_ptr<Layer<S>> act1_, act2_;
};

// SCB topology plus a shortcut from the block input added to the second
// stage's pre-neuron current. The shortcut is the identity when shapes agree
// and a 1x1 projection conv (no extra neuron stage) otherwise.
template <class S>
class SrbBlock : public Layer<S> {
 public:
  SrbBlock(const std::string& name, int64_t c_in, int64_t c_out, int64_t h, int64_t w, int kernel,
           int stride, const NeuronConfig& cfg, bool ann, Rng& rng)
      : Layer<S>(name) {
    const int pad = (kernel - 1) / 2;
    const int64_t ho = h / stride, wo = w / stride;
    conv1_ = std::make_unique<Conv2dLayer<S>>(name + ".conv1", c_in, c_out, kernel, stride, pad, 1, rng);
    bn1_ = std::make_unique<BatchNormLayer<S>>(name + ".bn1", c_out);
    act1_ = make_activation<S>(name + ".n1", c_out * ho * wo, cfg, ann);
    conv2_ = std::make_unique<Conv2dLayer<S>>(name + ".conv2", c_out, c_out, kernel, 1, pad, 1, rng);
    bn2_ = std::make_unique<BatchNormLayer<S>>(name + ".bn2", c_out);
    act2_ = make_activation<S>(name + ".n2", c_out * ho * wo, cfg, ann);
    if (c_in != c_out || stride != 1)
      proj_ = std::make_unique<Conv2dLayer<S>>(name + ".proj", c_in, c_out, 1, stride, 0, 1, rng);
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    auto y = act1_->forward(bn1_->forward(conv1_->forward(x, ctx), ctx), ctx);
    auto z = bn2_->forward(conv2_->forward(y, ctx), ctx);
    if (proj_) {
      z.add_scaled(proj_->forward(x, ctx), S(1));
    } else {
      z.add_scaled(x, S(1));
    }
    return act2_->forward(z, ctx);
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    auto gz = act2_->backward(grad_out, ctx);
    auto gx = conv1_->backward(
        bn1_->backward(act1_->backward(conv2_->backward(bn2_->backward(gz, ctx), ctx), ctx), ctx),
        ctx);
    if (proj_) {
      gx.add_scaled(proj_->backward(gz, ctx), S(1));
    } else {
      gx.add_scaled(gz, S(1));
    }
    return gx;
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    for (auto* l : members()) l->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<S>>& out) override {
    for (auto* l : members()) l->collect_state(out);
  }
  void zero_grads() override {
    for (auto* l : members()) l->zero_grads();
  }
  void clear_cache() override {
    for (auto* l : members()) l->clear_cache();
  }
  int64_t neuron_sites() const override { return act1_->neuron_sites() + act2_->neuron_sites(); }

 private:
  std::vector<Layer<S>*> members() {
    std::vector<Layer<S>*> m = {conv1_.get(), bn1_.get(), act1_.get(),
                                conv2_.get(), bn2_.get(), act2_.get()};
    if (proj_) m.push_back(proj_.get());
    return m;
  }

  std::unique_ptr<Conv2dLayer<S>> conv1_, conv2_, proj_;
  std::unique_ptr<BatchNormLayer<S>> bn1_, bn2_;
  std::unique_ptr<Layer<S>> act1_, act2_;
};

// Inverted bottleneck: 1x1 expand, depthwise kxk (carries the stride),
// 1x1 project; each stage has BN and a neuron layer.
template <class S>
class SibBlock : public Layer<S> {
 public:
  SibBlock(const std::string& name, int64_t c_in, int64_t c_out, int64_t h, int64_t w, int kernel,
           int expand, int stride, const NeuronConfig& cfg, bool ann, Rng& rng)
      : Layer<S>(name) {
    const int64_t ce = c_in * expand;
    const int pad = (kernel - 1) / 2;
    const int64_t ho = h / stride, wo = w / stride;
    conv1_ = std::make_unique<Conv2dLayer<S>>(name + ".expand", c_in, ce, 1, 1, 0, 1, rng);
    bn1_ = std::make_unique<BatchNormLayer<S>>(name + ".bn1", ce);
    act1_ = make_activation<S>(name + ".n1", ce * h * w, cfg, ann);
    dconv_ = std::make_unique<Conv2dLayer<S>>(name + ".depthwise", ce, ce, kernel, stride, pad,
                                              static_cast<int>(ce), rng);
    bn2_ = std::make_unique<BatchNormLayer<S>>(name + ".bn2", ce);
    act2_ = make_activation<S>(name + ".n2", ce * ho * wo, cfg, ann);
    conv3_ = std::make_unique<Conv2dLayer<S>>(name + ".project", ce, c_out, 1, 1, 0, 1, rng);
    bn3_ = std::make_unique<BatchNormLayer<S>>(name + ".bn3", c_out);
    act3_ = make_activation<S>(name + ".n3", c_out * ho * wo, cfg, ann);
  }

  TensorT<S> forward(const TensorT<S>& x, RunCtx& ctx) override {
    auto y = act1_->forward(bn1_->forward(conv1_->forward(x, ctx), ctx), ctx);
    y = act2_->forward(bn2_->forward(dconv_->forward(y, ctx), ctx), ctx);
    return act3_->forward(bn3_->forward(conv3_->forward(y, ctx), ctx), ctx);
  }

  TensorT<S> backward(const TensorT<S>& grad_out, RunCtx& ctx) override {
    auto g = conv3_->backward(bn3_->backward(act3_->backward(grad_out, ctx), ctx), ctx);
    g = dconv_->backward(bn2_->backward(act2_->backward(g, ctx), ctx), ctx);
    return conv1_->backward(bn1_->backward(act1_->backward(g, ctx), ctx), ctx);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    for (auto* l : members()) l->collect_params(out);
  }
  void collect_state(std::vector<ParamRef<S>>& out) override {
    for (auto* l : members()) l->collect_state(out);
  }
  void zero_grads() override {
    for (auto* l : members()) l->zero_grads();
  }
  void clear_cache() override {
    for (auto* l : members()) l->clear_cache();
  }
  int64_t neuron_sites() const override {
    return act1_->neuron_sites() + act2_->neuron_sites() + act3_->neuron_sites();
  }

 private:
  std::vector<Layer<S>*> members() {
    return {conv1_.get(), bn1_.get(), act1_.get(), dconv_.get(), bn2_.get(),
            act2_.get(),  conv3_.get(), bn3_.get(), act3_.get()};
  }

  std::unique_ptr<Conv2dLayer<S>> conv1_, dconv_, conv3_;
  std::unique_ptr<BatchNormLayer<S>> bn1_, bn2_, bn3_;
  std::unique_ptr<Layer<S>> act1_, act2_, act3_;
};

// Instantiates one block for a slot or down-sampling position. h, w are the
// input resolution of the block.
template <class S>
std::unique_ptr<Layer<S>> build_block(const BlockKind& kind, const std::string& name, int64_t c_in,
                                      int64_t c_out, int64_t h, int64_t w, int stride,
                                      const NeuronConfig& cfg, bool ann, Rng& rng) {
  switch (kind.tag) {
    case BlockTag::skip:
      require(c_in == c_out, "skip block requires matching channels");
      require(stride == 1, "skip block cannot down-sample");
      return std::make_unique<IdentityLayer<S>>(name);
    case BlockTag::channel_dup:
      return std::make_unique<ChannelDupLayer<S>>(name, c_in, c_out);
    case BlockTag::scb:
      return std::make_unique<ScbBlock<S>>(name, c_in, c_out, h, w, kind.kernel, stride, cfg, ann, rng);
    case BlockTag::srb:
      return std::make_unique<SrbBlock<S>>(name, c_in, c_out, h, w, kind.kernel, stride, cfg, ann, rng);
    case BlockTag::sib:
      return std::make_unique<SibBlock<S>>(name, c_in, c_out, h, w, kind.kernel, kind.expand, stride,
                                           cfg, ann, rng);
    case BlockTag::maxpool_ds:
      require(c_in == c_out && stride == 2, "maxpool_ds: invalid configuration");
      return std::make_unique<MaxPoolLayer<S>>(name, c_out * (h / 2) * (w / 2));
    case BlockTag::avgpool_ds:
      require(c_in == c_out && stride == 2, "avgpool_ds: invalid configuration");
      return std::make_unique<AvgPoolLayer<S>>(name, c_out * (h / 2) * (w / 2), !ann);
    default:
      throw ShapeError("build_block: unsupported block kind");
  }
}

}  // namespace spikenas
