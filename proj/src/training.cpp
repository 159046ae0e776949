#include "spikenas/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace spikenas {

void TrainHistory::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write history " + path);
  f << "epoch,loss,train_acc,val_acc,total_spikes\n";
  char line[256];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof(line), "%d,%.8f,%.6f,%.6f,%.4f\n", e.epoch, e.loss, e.train_acc,
                  e.val_acc, e.total_spikes);
    f << line;
  }
}

EvalResult evaluate(Network& net, const ImageDataset& ds, int batch_size, SpikeLedger* ledger_out) {
  SpikeLedger local;
  SpikeLedger& ledger = ledger_out ? *ledger_out : local;
  const int64_t n = ds.size();
  int64_t hits = 0;
  for (int64_t start = 0; start < n; start += batch_size) {
    const int64_t end = std::min(n, start + batch_size);
    std::vector<int64_t> idx;
    for (int64_t i = start; i < end; ++i) idx.push_back(i);
    auto [x, labels] = assemble_batch(ds, idx);
    auto o = net.forward_T(x, Mode::eval, &ledger);
    for (int64_t i = 0; i < o.dim(0); ++i)
      if (argmax_row(o, i) == labels[static_cast<size_t>(i)]) ++hits;
  }
  EvalResult r;
  r.accuracy = static_cast<double>(hits) / static_cast<double>(n);
  r.spikes_per_sample = ledger.census() > 0 ? ledger.spikes_per_sample() : 0.0;
  return r;
}

TrainHistory train(Network& net, const ImageDataset& dtrain, const ImageDataset& dval,
                   const TrainConfig& cfg) {
  if (net.plan.ann && cfg.lambda_reg != 0.0)
    throw ConfigError("spike regularization is undefined without spiking neurons");

  Rng rng(cfg.seed);
  AdamOptimizer opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  auto params = net.params();

  const int64_t n = dtrain.size();
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  SpikeLedger batch_ledger;
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

      batch_ledger.reset_counts();
      net.zero_grads();
      auto o = net.forward_T(x, Mode::train, &batch_ledger);
      auto y = one_hot<float>(labels, net.num_classes());

      double loss = mse_loss(o, y);
      if (cfg.lambda_reg != 0.0) loss += spike_reg_term(batch_ledger, cfg.lambda_reg);
      if (!std::isfinite(loss))
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + " (loss is not finite)");

      const double seed = net.plan.ann ? 0.0
                                       : spike_reg_seed(cfg.lambda_reg, batch_ledger.census(),
                                                        net.timesteps, x.dim(0));
      net.backward_T(mse_loss_grad(o, y), seed);
      opt.step(params);

      loss_acc += loss;
      ++batches;
      for (int64_t i = 0; i < o.dim(0); ++i)
        if (argmax_row(o, i) == labels[static_cast<size_t>(i)]) ++train_hits;
    }

    EvalResult val = evaluate(net, dval, cfg.batch_size);
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_acc / static_cast<double>(batches);
    stats.train_acc = static_cast<double>(train_hits) / static_cast<double>(n);
    stats.val_acc = val.accuracy;
    stats.total_spikes = val.spikes_per_sample;
    history.epochs.push_back(stats);
  }
  net.clear_caches();
  return history;
}

}  // namespace spikenas
