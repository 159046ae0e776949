#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spikenas/blocks.hpp"
#include "spikenas/rng.hpp"

namespace spikenas {

// Ordered assignment of candidate blocks to the macro architecture's slots.
struct Genotype {
  std::vector<BlockKind> slots;

  std::string to_string() const;
  static Genotype from_string(const std::string& s);

  bool operator==(const Genotype& o) const { return slots == o.slots; }
  size_t size() const { return slots.size(); }
};

enum class MacroVariant {
  snn1,            // max-pool down-sampling, no GAP
  snn2,            // snn1 plus GAP with spiking neurons before the FC layer
  snn3,            // trainable stride-2 blocks at the down-sampling positions
  snn4,            // average-pool down-sampling
  snn1_ds_slots,   // 8 slots: the three DS positions become searchable
  snn1_pre_ds_slots  // 8 slots: an extra slot before each max pool
};

enum class StemKind { standard32, deep64, deep128 };

std::string macro_to_string(MacroVariant v);
MacroVariant macro_from_string(const std::string& s);
std::string stem_to_string(StemKind s);
StemKind stem_from_string(const std::string& s);

struct MacroArch {
  MacroVariant variant = MacroVariant::snn1;
  StemKind stem = StemKind::standard32;
  int initial_channels = 16;
  int num_classes = 10;
  int voting_k = 10;
  int input_channels = 3;
  BlockKind ds_fill = BlockKind::Scb(3);  // snn3 only: block used at DS positions

  int input_hw() const {
    switch (stem) {
      case StemKind::standard32: return 32;
      case StemKind::deep64: return 64;
      case StemKind::deep128: return 128;
    }
    return 32;
  }
};

// Number of searchable slots of the macro.
int slot_count(const MacroArch& macro);

// |candidates| ^ slots
int64_t space_cardinality(const MacroArch& macro, int64_t num_candidates = 5);

// Uniform i.i.d. slot assignment.
Genotype random_genotype(const MacroArch& macro, const std::vector<BlockKind>& candidates, Rng& rng);

enum class UnitRole { stem, stem_ds, tbd, ds, gap, fc_head, voting };

std::string unit_role_to_string(UnitRole r);

// One labelled stage of the assembled network.
struct PlanUnit {
  std::string label;
  UnitRole role = UnitRole::tbd;
  BlockKind block;        // realized kind (skip at a widening slot becomes dup, etc.)
  int slot = -1;          // genotype slot index for searchable units
  int64_t c_in = 0, c_out = 0;
  int64_t h_in = 0, w_in = 0, h_out = 0, w_out = 0;
  int stride = 1;
  int64_t params = 0;
  int64_t neurons = 0;
};

// Fully resolved layer sequence plus censuses; the unit of JSON export.
struct NetworkPlan {
  MacroArch macro;
  Genotype genotype;
  bool ann = false;
  std::vector<PlanUnit> units;

  int64_t census(bool include_head = true) const;
  int64_t total_params() const;
  nlohmann::json to_json() const;
};

nlohmann::json macro_to_json(const MacroArch& macro);
MacroArch macro_from_json(const nlohmann::json& j);

// Expands macro + genotype into the concrete unit sequence. Skip at a
// channel-widening slot is realized as channel duplication; skip at a
// down-sampling slot is realized as a max pool.
NetworkPlan assemble(const MacroArch& macro, const Genotype& genotype);

// Same plan with spiking neurons replaced by ReLU (run at a single timestep).
NetworkPlan ann_variant(const NetworkPlan& plan);

}  // namespace spikenas
