#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "spikenas/errors.hpp"

namespace spikenas {

// Per-unit, per-timestep spike accounting. A "unit" is one labelled stage of
// the network (Stem, TBD1, DS1, ..., FC); every spiking layer registers its
// neuron sites under its unit and records popcounts as it fires. In ANN mode
// the same machinery accumulates activation sums instead, with the unit
// marked non-spiking so spike totals stay zero.
class SpikeLedger {
 public:
  struct Unit {
    std::string label;
    int64_t neurons = 0;                // sites per sample
    bool spiking = true;
    std::vector<double> per_timestep;   // accumulated spike counts (or activation sums)
  };

  void configure(int timesteps) {
    timesteps_ = timesteps;
    for (auto& u : units_) u.per_timestep.assign(static_cast<size_t>(timesteps), 0.0);
  }

  int register_unit(const std::string& label, int64_t neurons_per_sample, bool spiking = true) {
    auto it = index_.find(label);
    if (it != index_.end()) {
      units_[static_cast<size_t>(it->second)].neurons += neurons_per_sample;
      return it->second;
    }
    Unit u;
    u.label = label;
    u.neurons = neurons_per_sample;
    u.spiking = spiking;
    u.per_timestep.assign(static_cast<size_t>(timesteps_ > 0 ? timesteps_ : 1), 0.0);
    units_.push_back(std::move(u));
    const int id = static_cast<int>(units_.size()) - 1;
    index_[label] = id;
    return id;
  }

  void record(int unit_id, int t, double count) {
    if (unit_id < 0 || unit_id >= static_cast<int>(units_.size()))
      throw DataError("ledger: unregistered unit id");
    auto& steps = units_[static_cast<size_t>(unit_id)].per_timestep;
    if (t < 0 || t >= static_cast<int>(steps.size()))
      throw DataError("ledger: timestep out of range");
    steps[static_cast<size_t>(t)] += count;
  }

  void add_samples(int64_t n) { samples_ += n; }

  void reset_counts() {
    samples_ = 0;
    for (auto& u : units_) std::fill(u.per_timestep.begin(), u.per_timestep.end(), 0.0);
  }

  int64_t samples() const { return samples_; }
  int timesteps() const { return timesteps_; }
  const std::vector<Unit>& units() const { return units_; }

  bool has_unit(const std::string& label) const { return index_.count(label) > 0; }

  int unit_id(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw DataError("ledger: unknown unit '" + label + "'");
    return it->second;
  }

  double unit_spikes(const std::string& label) const {
    const auto& u = units_[static_cast<size_t>(unit_id(label))];
    double s = 0.0;
    for (double v : u.per_timestep) s += v;
    return s;
  }

  // spikes / (neurons * timesteps * samples)
  double firing_rate(const std::string& label) const {
    if (samples_ == 0) throw DataError("ledger: no samples recorded");
    const auto& u = units_[static_cast<size_t>(unit_id(label))];
    if (u.neurons == 0) return 0.0;
    return unit_spikes(label) /
           (static_cast<double>(u.neurons) * static_cast<double>(timesteps_) *
            static_cast<double>(samples_));
  }

  // Mean per-unit output value per site and timestep; used for the ANN-mode
  // activation profile where "spikes" are real-valued activations.
  double mean_activation(const std::string& label) const { return firing_rate(label); }

  // Spiking neuron census per sample (non-spiking units excluded).
  int64_t census() const {
    int64_t n = 0;
    for (const auto& u : units_)
      if (u.spiking) n += u.neurons;
    return n;
  }

  // Total spikes per sample across all spiking units and timesteps.
  double spikes_per_sample() const {
    if (samples_ == 0) throw DataError("ledger: no samples recorded");
    double s = 0.0;
    for (const auto& u : units_)
      if (u.spiking)
        for (double v : u.per_timestep) s += v;
    return s / static_cast<double>(samples_);
  }

 private:
  int timesteps_ = 0;
  int64_t samples_ = 0;
  std::vector<Unit> units_;
  std::unordered_map<std::string, int> index_;
};

// census * firing_rate: the closed-form spike count estimate.
inline double estimate_spikes(double census, double firing_rate) { return census * firing_rate; }

}  // namespace spikenas
