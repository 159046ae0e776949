#pragma once

#include <string>

#include "json.hpp"
#include "spikenas/archspace.hpp"
#include "spikenas/ledger.hpp"

namespace spikenas {

// Per-unit spike table: layer, neurons, spikes_per_sample, firing_rate, with
// a trailing total row equal to the N the fitness consumes.
std::string spike_report_csv(const SpikeLedger& ledger);
nlohmann::json spike_report_json(const SpikeLedger& ledger);

// Analytic census table computed from a plan (no simulation).
std::string census_report_csv(const NetworkPlan& plan);

}  // namespace spikenas
