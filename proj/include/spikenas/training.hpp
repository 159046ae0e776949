#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "spikenas/adam.hpp"
#include "spikenas/datasets.hpp"
#include "spikenas/loss.hpp"
#include "spikenas/network.hpp"

namespace spikenas {

struct TrainConfig {
  int timesteps = 8;
  int epochs = 600;
  int batch_size = 96;
  double lr = 1e-3;
  double lambda_reg = 0.0;
  AugmentConfig augment;
  uint64_t seed = 0;
  NeuronConfig neuron;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double total_spikes = 0.0;  // per-sample spikes on the validation pass
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  void write_csv(const std::string& path) const;
};

struct EvalResult {
  double accuracy = 0.0;
  double spikes_per_sample = 0.0;
};

// Adam states keyed by parameter name; only the parameters passed to step()
// move, each with its own bias-correction counter.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const AdamConfig& cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef<float>>& params) {
    for (const auto& p : params) {
      auto it = states_.find(p.name);
      if (it == states_.end())
        it = states_.emplace(p.name, AdamState::make(p.value->dims())).first;
      adam_step(*p.value, *p.grad, it->second, cfg_, p.name);
    }
  }

 private:
  AdamConfig cfg_;
  std::unordered_map<std::string, AdamState> states_;
};

// Full-dataset forward in eval mode; accuracy plus per-sample spike count.
EvalResult evaluate(Network& net, const ImageDataset& ds, int batch_size,
                    SpikeLedger* ledger_out = nullptr);

// Direct supervised training: T-step forward, MSE on the time-averaged voted
// output, optional spike regularization, full BPTT, Adam. Deterministic under
// a fixed config seed. Throws NumericError when the loss diverges.
TrainHistory train(Network& net, const ImageDataset& dtrain, const ImageDataset& dval,
                   const TrainConfig& cfg);

}  // namespace spikenas
