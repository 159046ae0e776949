#include "spikenas/archspace.hpp"

#include <sstream>

namespace spikenas {

std::string Genotype::to_string() const {
  std::ostringstream os;
  for (size_t i = 0; i < slots.size(); ++i) os << (i ? "," : "") << block_to_string(slots[i]);
  return os.str();
}

Genotype Genotype::from_string(const std::string& s) {
  Genotype g;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) g.slots.push_back(block_from_string(tok));
  }
  if (g.slots.empty()) throw ConfigError("empty genotype string");
  return g;
}

std::string macro_to_string(MacroVariant v) {
  switch (v) {
    case MacroVariant::snn1: return "snn1";
    case MacroVariant::snn2: return "snn2";
    case MacroVariant::snn3: return "snn3";
    case MacroVariant::snn4: return "snn4";
    case MacroVariant::snn1_ds_slots: return "snn1_ds_slots";
    case MacroVariant::snn1_pre_ds_slots: return "snn1_pre_ds_slots";
  }
  return "?";
}

MacroVariant macro_from_string(const std::string& s) {
  if (s == "snn1") return MacroVariant::snn1;
  if (s == "snn2") return MacroVariant::snn2;
  if (s == "snn3") return MacroVariant::snn3;
  if (s == "snn4") return MacroVariant::snn4;
  if (s == "snn1_ds_slots") return MacroVariant::snn1_ds_slots;
  if (s == "snn1_pre_ds_slots") return MacroVariant::snn1_pre_ds_slots;
  throw ConfigError("unknown macro variant '" + s + "'");
}

std::string stem_to_string(StemKind s) {
  switch (s) {
    case StemKind::standard32: return "standard32";
    case StemKind::deep64: return "deep64";
    case StemKind::deep128: return "deep128";
  }
  return "?";
}

StemKind stem_from_string(const std::string& s) {
  if (s == "standard32") return StemKind::standard32;
  if (s == "deep64") return StemKind::deep64;
  if (s == "deep128") return StemKind::deep128;
  throw ConfigError("unknown stem kind '" + s + "'");
}

int slot_count(const MacroArch& macro) {
  switch (macro.variant) {
    case MacroVariant::snn1_ds_slots:
    case MacroVariant::snn1_pre_ds_slots:
      return 8;
    default:
      return 5;
  }
}

int64_t space_cardinality(const MacroArch& macro, int64_t num_candidates) {
  int64_t n = 1;
  for (int i = 0; i < slot_count(macro); ++i) n *= num_candidates;
  return n;
}

Genotype random_genotype(const MacroArch& macro, const std::vector<BlockKind>& candidates,
                         Rng& rng) {
  Genotype g;
  const int slots = slot_count(macro);
  g.slots.reserve(static_cast<size_t>(slots));
  for (int i = 0; i < slots; ++i)
    g.slots.push_back(candidates[static_cast<size_t>(rng.uniform_int(
        static_cast<int64_t>(candidates.size())))]);
  return g;
}

std::string unit_role_to_string(UnitRole r) {
  switch (r) {
    case UnitRole::stem: return "stem";
    case UnitRole::stem_ds: return "stem_ds";
    case UnitRole::tbd: return "tbd";
    case UnitRole::ds: return "ds";
    case UnitRole::gap: return "gap";
    case UnitRole::fc_head: return "fc_head";
    case UnitRole::voting: return "voting";
  }
  return "?";
}

int64_t NetworkPlan::census(bool include_head) const {
  int64_t n = 0;
  for (const auto& u : units) {
    if (!include_head && (u.role == UnitRole::fc_head || u.role == UnitRole::voting)) continue;
    n += u.neurons;
  }
  return n;
}

int64_t NetworkPlan::total_params() const {
  int64_t n = 0;
  for (const auto& u : units) n += u.params;
  return n;
}

nlohmann::json NetworkPlan::to_json() const {
  nlohmann::json j;
  j["macro"] = macro_to_string(macro.variant);
  j["stem"] = stem_to_string(macro.stem);
  j["initial_channels"] = macro.initial_channels;
  j["num_classes"] = macro.num_classes;
  j["voting_k"] = macro.voting_k;
  j["genotype"] = genotype.to_string();
  j["ann"] = ann;
  j["census"] = census(true);
  j["census_excl_head"] = census(false);
  j["total_params"] = total_params();
  nlohmann::json units_j = nlohmann::json::array();
  for (const auto& u : units) {
    nlohmann::json uj;
    uj["label"] = u.label;
    uj["role"] = unit_role_to_string(u.role);
    uj["block"] = block_to_string(u.block);
    uj["slot"] = u.slot;
    uj["c_in"] = u.c_in;
    uj["c_out"] = u.c_out;
    uj["h_in"] = u.h_in;
    uj["h_out"] = u.h_out;
    uj["stride"] = u.stride;
    uj["params"] = u.params;
    uj["neurons"] = u.neurons;
    units_j.push_back(uj);
  }
  j["units"] = units_j;
  return j;
}

nlohmann::json macro_to_json(const MacroArch& macro) {
  nlohmann::json j;
  j["variant"] = macro_to_string(macro.variant);
  j["stem"] = stem_to_string(macro.stem);
  j["initial_channels"] = macro.initial_channels;
  j["num_classes"] = macro.num_classes;
  j["voting_k"] = macro.voting_k;
  j["input_channels"] = macro.input_channels;
  j["ds_fill"] = block_to_string(macro.ds_fill);
  return j;
}

MacroArch macro_from_json(const nlohmann::json& j) {
  MacroArch m;
  m.variant = macro_from_string(j.at("variant"));
  m.stem = stem_from_string(j.at("stem"));
  m.initial_channels = j.at("initial_channels");
  m.num_classes = j.at("num_classes");
  m.voting_k = j.at("voting_k");
  m.input_channels = j.at("input_channels");
  m.ds_fill = block_from_string(j.at("ds_fill"));
  return m;
}

namespace {

struct PlanBuilder {
  NetworkPlan plan;
  int64_t h = 0, c = 0;

  PlanUnit& push(const std::string& label, UnitRole role, BlockKind block, int64_t c_out,
                 int stride, int slot = -1) {
    PlanUnit u;
    u.label = label;
    u.role = role;
    u.block = block;
    u.slot = slot;
    u.c_in = c;
    u.c_out = c_out;
    u.h_in = h;
    u.w_in = h;
    u.stride = stride;
    u.h_out = block.tag == BlockTag::gap ? 1 : h / stride;
    u.w_out = u.h_out;
    u.neurons = neuron_count(block, h, h, c, c_out, stride);
    u.params = block_param_count(block, c, c_out, stride, plan.ann);
    plan.units.push_back(u);
    h = u.h_out;
    c = c_out;
    return plan.units.back();
  }

  // Realizes a genotype slot: skip degrades gracefully at positions where an
  // identity is not shape-legal.
  void push_slot(const std::string& label, UnitRole role, BlockKind kind, int64_t c_out, int stride,
                 int slot) {
    BlockKind realized = kind;
    if (kind.tag == BlockTag::skip) {
      if (stride != 1)
        realized = BlockKind::MaxPoolDs();
      else if (c != c_out)
        realized = BlockKind{BlockTag::channel_dup};
    }
    push(label, role, realized, c_out, stride, slot);
  }
};

}  // namespace

namespace {

NetworkPlan assemble_impl(const MacroArch& macro, const Genotype& genotype, bool ann) {
  const int slots = slot_count(macro);
  if (static_cast<int>(genotype.size()) != slots)
    throw ConfigError("genotype has " + std::to_string(genotype.size()) + " slots, macro needs " +
                      std::to_string(slots));

  PlanBuilder b;
  b.plan.macro = macro;
  b.plan.genotype = genotype;
  b.plan.ann = ann;
  b.h = macro.input_hw();
  b.c = macro.input_channels;
  const int64_t C = macro.initial_channels;

  // Stem: always ends at 32x32 with C channels. Deeper stems interleave
  // max pools to step the resolution down.
  b.push("Stem", UnitRole::stem, BlockKind{BlockTag::stem_conv}, C, 1);
  if (macro.stem == StemKind::deep64 || macro.stem == StemKind::deep128) {
    b.push("StemDS1", UnitRole::stem_ds, BlockKind::MaxPoolDs(), C, 2);
    b.push("Stem2", UnitRole::stem, BlockKind{BlockTag::stem_conv}, C, 1);
  }
  if (macro.stem == StemKind::deep128) {
    b.push("StemDS2", UnitRole::stem_ds, BlockKind::MaxPoolDs(), C, 2);
    b.push("Stem3", UnitRole::stem, BlockKind{BlockTag::stem_conv}, C, 1);
  }

  const BlockKind pool_ds =
      macro.variant == MacroVariant::snn4 ? BlockKind::AvgPoolDs() : BlockKind::MaxPoolDs();

  // Channel schedule: C until DS1, 2C until DS2, 4C after; widening happens
  // in the first slot after each pool.
  int slot = 0;
  int tbd = 0;
  auto next_tbd_label = [&]() { return "TBD" + std::to_string(++tbd); };

  auto push_ds = [&](const std::string& label) {
    switch (macro.variant) {
      case MacroVariant::snn3:
        b.push(label, UnitRole::ds, macro.ds_fill, b.c, 2);
        break;
      case MacroVariant::snn1_ds_slots:
        b.push_slot(label, UnitRole::ds, genotype.slots[static_cast<size_t>(slot)], b.c, 2, slot);
        ++slot;
        break;
      default:
        b.push(label, UnitRole::ds, pool_ds, b.c, 2);
        break;
    }
  };
  auto push_tbd = [&](int64_t c_out) {
    b.push_slot(next_tbd_label(), UnitRole::tbd, genotype.slots[static_cast<size_t>(slot)], c_out, 1,
                slot);
    ++slot;
  };
  const bool extra_pre_ds = macro.variant == MacroVariant::snn1_pre_ds_slots;

  push_tbd(C);
  if (extra_pre_ds) push_tbd(C);
  push_ds("DS1");
  push_tbd(2 * C);
  push_tbd(2 * C);
  if (extra_pre_ds) push_tbd(2 * C);
  push_ds("DS2");
  push_tbd(4 * C);
  push_tbd(4 * C);
  if (extra_pre_ds) push_tbd(4 * C);
  push_ds("DS3");

  if (macro.variant == MacroVariant::snn2)
    b.push("GAP", UnitRole::gap, BlockKind{BlockTag::gap}, 4 * C, 1);

  // Spiking FC head: classes * K sites feeding the voting layer. The linear
  // fan-in is c_in * h_in * w_in (GAP paths arrive with h = w = 1).
  const int64_t fc_in = b.c * b.h * b.h;
  const int64_t fc_out = static_cast<int64_t>(macro.num_classes) * macro.voting_k;
  {
    PlanUnit u;
    u.label = "FC";
    u.role = UnitRole::fc_head;
    u.block = BlockKind{BlockTag::fc_head};
    u.c_in = b.c;
    u.c_out = fc_out;
    u.h_in = b.h;
    u.w_in = b.h;
    u.h_out = 1;
    u.w_out = 1;
    u.neurons = neuron_count(u.block, 1, 1, fc_in, fc_out);
    u.params = block_param_count(u.block, fc_in, fc_out, 1, b.plan.ann, fc_in);
    b.plan.units.push_back(u);
  }
  {
    PlanUnit u;
    u.label = "Voting";
    u.role = UnitRole::voting;
    u.block = BlockKind{BlockTag::voting};
    u.c_in = fc_out;
    u.c_out = macro.num_classes;
    u.h_in = u.w_in = u.h_out = u.w_out = 1;
    b.plan.units.push_back(u);
  }
  return b.plan;
}

}  // namespace

NetworkPlan assemble(const MacroArch& macro, const Genotype& genotype) {
  return assemble_impl(macro, genotype, false);
}

NetworkPlan ann_variant(const NetworkPlan& plan) {
  return assemble_impl(plan.macro, plan.genotype, true);
}

}  // namespace spikenas
