#include "spikenas/report.hpp"

#include <cstdio>
#include <sstream>

namespace spikenas {

std::string spike_report_csv(const SpikeLedger& ledger) {
  std::ostringstream os;
  os << "layer,neurons,spikes_per_sample,firing_rate\n";
  char line[256];
  const double samples = static_cast<double>(ledger.samples());
  double total_spikes = 0.0;
  int64_t total_neurons = 0;
  for (const auto& u : ledger.units()) {
    double spikes = 0.0;
    for (double v : u.per_timestep) spikes += v;
    const double per_sample = samples > 0 ? spikes / samples : 0.0;
    const double rate =
        u.neurons > 0 && samples > 0
            ? spikes / (static_cast<double>(u.neurons) * ledger.timesteps() * samples)
            : 0.0;
    std::snprintf(line, sizeof(line), "%s,%lld,%.4f,%.6f\n", u.label.c_str(),
                  static_cast<long long>(u.neurons), per_sample, rate);
    os << line;
    if (u.spiking) {
      total_spikes += per_sample;
      total_neurons += u.neurons;
    }
  }
  const double total_rate =
      total_neurons > 0 ? total_spikes / (static_cast<double>(total_neurons) * ledger.timesteps())
                        : 0.0;
  std::snprintf(line, sizeof(line), "total,%lld,%.4f,%.6f\n",
                static_cast<long long>(total_neurons), total_spikes, total_rate);
  os << line;
  return os.str();
}

nlohmann::json spike_report_json(const SpikeLedger& ledger) {
  nlohmann::json j;
  nlohmann::json units = nlohmann::json::array();
  const double samples = static_cast<double>(ledger.samples());
  for (const auto& u : ledger.units()) {
    double spikes = 0.0;
    for (double v : u.per_timestep) spikes += v;
    nlohmann::json uj;
    uj["layer"] = u.label;
    uj["neurons"] = u.neurons;
    uj["spiking"] = u.spiking;
    uj["spikes_per_sample"] = samples > 0 ? spikes / samples : 0.0;
    uj["firing_rate"] =
        u.neurons > 0 && samples > 0
            ? spikes / (static_cast<double>(u.neurons) * ledger.timesteps() * samples)
            : 0.0;
    units.push_back(uj);
  }
  j["units"] = units;
  j["samples"] = ledger.samples();
  j["timesteps"] = ledger.timesteps();
  j["census"] = ledger.census();
  j["spikes_per_sample"] = ledger.samples() > 0 && ledger.census() > 0
                               ? ledger.spikes_per_sample()
                               : 0.0;
  return j;
}

std::string census_report_csv(const NetworkPlan& plan) {
  std::ostringstream os;
  os << "layer,block,c_in,c_out,h_out,params,neurons\n";
  char line[256];
  for (const auto& u : plan.units) {
    std::snprintf(line, sizeof(line), "%s,%s,%lld,%lld,%lld,%lld,%lld\n", u.label.c_str(),
                  block_to_string(u.block).c_str(), static_cast<long long>(u.c_in),
                  static_cast<long long>(u.c_out), static_cast<long long>(u.h_out),
                  static_cast<long long>(u.params), static_cast<long long>(u.neurons));
    os << line;
  }
  std::snprintf(line, sizeof(line), "total,,,,,%lld,%lld\n",
                static_cast<long long>(plan.total_params()),
                static_cast<long long>(plan.census(true)));
  os << line;
  std::snprintf(line, sizeof(line), "total_excl_head,,,,,,%lld\n",
                static_cast<long long>(plan.census(false)));
  os << line;
  return os.str();
}

}  // namespace spikenas
