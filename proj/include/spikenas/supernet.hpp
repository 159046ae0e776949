#pragma once

#include <memory>
#include <vector>

#include "spikenas/network.hpp"
#include "spikenas/training.hpp"

namespace spikenas {

// One-shot weight-sharing super-network: every candidate block of every slot
// is instantiated once; subnets borrow those instances, so an extracted
// subnet's weights are the supernet's (no copies). BN statistics are
// per-candidate-per-slot by construction.
class SuperNet {
 public:
  MacroArch macro;
  std::vector<BlockKind> candidates;
  NeuronConfig neuron_cfg;
  int timesteps = 8;

  static SuperNet build(const MacroArch& macro, const std::vector<BlockKind>& candidates,
                        const NeuronConfig& neuron_cfg, int timesteps, uint64_t seed);

  // Uniform i.i.d. candidate per slot.
  Genotype sample_path(Rng& rng) const;

  // Assembles a network view sharing this supernet's layer instances.
  // Throws ConfigError when the genotype uses a tag outside the candidate set.
  Network subnet(const Genotype& genotype) const;

  // Average per-sample spike count over the paths sampled so far.
  double n_avg() const;
  int64_t sampled_paths() const { return path_samples_; }

  void record_path_spikes(double spikes_per_sample) {
    spike_accum_ += spikes_per_sample;
    ++path_samples_;
  }
  void set_spike_stats(double accum, int64_t samples) {
    spike_accum_ = accum;
    path_samples_ = samples;
  }
  double spike_accum() const { return spike_accum_; }

  // All persistent tensors (shared units plus every candidate bank entry).
  std::vector<ParamRef<float>> all_state();

 private:
  int candidate_index(const BlockKind& kind) const;

  NetworkPlan ref_plan_;  // unit scaffold; slot entries are realized per view
  std::vector<std::shared_ptr<Layer<float>>> shared_units_;  // null at slot positions
  std::vector<std::vector<std::shared_ptr<Layer<float>>>> banks_;  // [slot][candidate]
  double spike_accum_ = 0.0;
  int64_t path_samples_ = 0;
};

// Single-path uniform-sampling training: each mini-batch trains one sampled
// subnet; only that path's parameters (plus the shared ones) step. Per-path
// per-sample spike counts accumulate into N_avg.
TrainHistory train_supernet(SuperNet& supernet, const ImageDataset& dtrain,
                            const ImageDataset& dval, const TrainConfig& cfg);

}  // namespace spikenas
