#include "spikenas/supernet.hpp"

#include <algorithm>

namespace spikenas {

SuperNet SuperNet::build(const MacroArch& macro, const std::vector<BlockKind>& candidates,
                         const NeuronConfig& neuron_cfg, int timesteps, uint64_t seed) {
  if (candidates.empty()) throw ConfigError("supernet: empty candidate set");
  SuperNet sn;
  sn.macro = macro;
  sn.candidates = candidates;
  sn.neuron_cfg = neuron_cfg;
  sn.timesteps = timesteps;

  Genotype scaffold;
  scaffold.slots.assign(static_cast<size_t>(slot_count(macro)), candidates[0]);
  sn.ref_plan_ = assemble(macro, scaffold);

  Rng rng(seed);
  sn.banks_.resize(static_cast<size_t>(slot_count(macro)));
  for (const auto& u : sn.ref_plan_.units) {
    if (u.slot < 0) {
      sn.shared_units_.push_back(build_unit<float>(u, sn.ref_plan_, neuron_cfg, rng));
      continue;
    }
    sn.shared_units_.push_back(nullptr);
    auto& bank = sn.banks_[static_cast<size_t>(u.slot)];
    for (const auto& cand : candidates) {
      // realize the candidate for this slot's shape, named per candidate so
      // parameters stay distinct across the bank
      PlanUnit cu = u;
      cu.block = cand;
      if (cand.tag == BlockTag::skip) {
        if (u.stride != 1)
          cu.block = BlockKind::MaxPoolDs();
        else if (u.c_in != u.c_out)
          cu.block = BlockKind{BlockTag::channel_dup};
      }
      cu.label = u.label + "." + block_to_string(cand);
      cu.neurons = neuron_count(cu.block, u.h_in, u.w_in, u.c_in, u.c_out, u.stride);
      bank.push_back(build_unit<float>(cu, sn.ref_plan_, neuron_cfg, rng));
    }
  }
  return sn;
}

Genotype SuperNet::sample_path(Rng& rng) const {
  Genotype g;
  const int slots = slot_count(macro);
  for (int i = 0; i < slots; ++i)
    g.slots.push_back(
        candidates[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(candidates.size())))]);
  return g;
}

int SuperNet::candidate_index(const BlockKind& kind) const {
  for (size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i] == kind) return static_cast<int>(i);
  throw ConfigError("genotype tag '" + block_to_string(kind) + "' is not in the candidate set");
}

Network SuperNet::subnet(const Genotype& genotype) const {
  Network net;
  net.plan = assemble(macro, genotype);
  net.timesteps = timesteps;
  for (size_t i = 0; i < net.plan.units.size(); ++i) {
    const auto& u = net.plan.units[i];
    if (u.slot < 0) {
      net.units.push_back(shared_units_[i]);
    } else {
      const int ci = candidate_index(genotype.slots[static_cast<size_t>(u.slot)]);
      net.units.push_back(banks_[static_cast<size_t>(u.slot)][static_cast<size_t>(ci)]);
    }
  }
  return net;
}

double SuperNet::n_avg() const {
  if (path_samples_ == 0) throw DataError("supernet: N_avg undefined before any sampled path");
  return spike_accum_ / static_cast<double>(path_samples_);
}

std::vector<ParamRef<float>> SuperNet::all_state() {
  std::vector<ParamRef<float>> out;
  for (auto& u : shared_units_)
    if (u) u->collect_state(out);
  for (auto& bank : banks_)
    for (auto& layer : bank) layer->collect_state(out);
  return out;
}

TrainHistory train_supernet(SuperNet& supernet, const ImageDataset& dtrain,
                            const ImageDataset& dval, const TrainConfig& cfg) {
  if (dtrain.size() == 0) throw DataError("train_supernet: empty training split");
  Rng rng(cfg.seed);
  Rng path_rng = rng.fork(0x70617468ULL);  // the path stream is its own fork
  AdamOptimizer opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

  const int64_t n = dtrain.size();
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  TrainHistory history;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng = rng.fork(0x5A5A0000ULL + static_cast<uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double loss_acc = 0.0;
    int64_t batches = 0, train_hits = 0;

    for (int64_t start = 0; start < n; start += cfg.batch_size) {
      const int64_t end = std::min(n, start + cfg.batch_size);
      std::vector<int64_t> idx(order.begin() + start, order.begin() + end);
      auto [x, labels] = assemble_batch(dtrain, idx);
      Rng aug_rng = rng.fork((static_cast<uint64_t>(epoch) << 24) | static_cast<uint64_t>(batches));
      augment(x, cfg.augment, aug_rng);

      const Genotype path = supernet.sample_path(path_rng);
      Network net = supernet.subnet(path);

      SpikeLedger ledger;  // per-path ledger: unit censuses differ across paths
      net.zero_grads();
      auto o = net.forward_T(x, Mode::train, &ledger);
      auto y = one_hot<float>(labels, net.num_classes());

      double loss = mse_loss(o, y);
      if (cfg.lambda_reg != 0.0) loss += spike_reg_term(ledger, cfg.lambda_reg);
      if (!std::isfinite(loss))
        throw NumericError("supernet training diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches));

      const double seed =
          spike_reg_seed(cfg.lambda_reg, ledger.census(), net.timesteps, x.dim(0));
      net.backward_T(mse_loss_grad(o, y), seed);
      opt.step(net.params());
      net.clear_caches();

      supernet.record_path_spikes(ledger.spikes_per_sample());
      loss_acc += loss;
      ++batches;
      for (int64_t i = 0; i < o.dim(0); ++i)
        if (argmax_row(o, i) == labels[static_cast<size_t>(i)]) ++train_hits;
    }

    // epoch-end check on one freshly sampled path
    Rng val_rng = rng.fork(0x76616CULL + static_cast<uint64_t>(epoch));
    Network val_net = supernet.subnet(supernet.sample_path(val_rng));
    EvalResult val = dval.size() > 0 ? evaluate(val_net, dval, cfg.batch_size) : EvalResult{};

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_acc / static_cast<double>(batches);
    stats.train_acc = static_cast<double>(train_hits) / static_cast<double>(n);
    stats.val_acc = val.accuracy;
    stats.total_spikes = val.spikes_per_sample;
    history.epochs.push_back(stats);
  }
  return history;
}

}  // namespace spikenas
