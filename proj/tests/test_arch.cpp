#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "spikenas/archspace.hpp"
#include "spikenas/network.hpp"
#include "testutil.hpp"

using namespace spikenas;

namespace {

MacroArch make_macro(MacroVariant v, int channels) {
  MacroArch m;
  m.variant = v;
  m.initial_channels = channels;
  return m;
}

Genotype uniform_fill(const MacroArch& macro, const BlockKind& kind) {
  Genotype g;
  g.slots.assign(static_cast<size_t>(slot_count(macro)), kind);
  return g;
}

}  // namespace

TEST_CASE("block tags round-trip and the candidate set is exactly five") {
  const auto cands = default_candidates();
  REQUIRE(cands.size() == 5);
  std::set<std::string> tags;
  for (const auto& c : cands) {
    tags.insert(block_to_string(c));
    CHECK(block_from_string(block_to_string(c)) == c);
  }
  CHECK(tags == std::set<std::string>{"skip", "SCB_k3", "SCB_k5", "SRB_k3", "SRB_k5"});
}

TEST_CASE("genotype string format") {
  const std::string s = "SCB_k3,SRB_k5,skip,SCB_k5,SRB_k3";
  Genotype g = Genotype::from_string(s);
  CHECK(g.size() == 5);
  CHECK(g.to_string() == s);
  CHECK_THROWS_AS(Genotype::from_string("SCB_k7"), ConfigError);
}

TEST_CASE("neuron_count closed forms") {
  CHECK(neuron_count(BlockKind::Scb(3), 32, 32, 16, 16) == 32768);  // 2hwc
  CHECK(neuron_count(BlockKind::Sib(3, 3), 32, 32, 16, 16) == 114688);  // hw(6c_in+c_out)
  CHECK(neuron_count(BlockKind::Sib(3, 1), 32, 32, 16, 16) == 32 * 32 * (2 * 16 + 16));
  CHECK(neuron_count(BlockKind::Skip(), 32, 32, 16, 16) == 0);
  CHECK(neuron_count(BlockKind::MaxPoolDs(), 32, 32, 16, 16, 2) == 16 * 16 * 16);
}

TEST_CASE("SRB and SCB have identical neuron counts everywhere") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const int64_t h = 2 * (1 + rng.uniform_int(16));
    const int64_t c_in = 1 + rng.uniform_int(64);
    const int64_t c_out = 1 + rng.uniform_int(64);
    const int k = rng.bernoulli(0.5) ? 3 : 5;
    const int stride = rng.bernoulli(0.2) ? 2 : 1;
    CHECK(neuron_count(BlockKind::Srb(k), h, h, c_in, c_out, stride) ==
          neuron_count(BlockKind::Scb(k), h, h, c_in, c_out, stride));
  }
}

TEST_CASE("SIB e=3 dominates SCB at equal channels across the macro grid") {
  for (int64_t h : {32, 16, 8})
    for (int64_t c : {8, 16, 32, 64})
      CHECK(neuron_count(BlockKind::Sib(3, 3), h, h, c, c) >
            neuron_count(BlockKind::Scb(3), h, h, c, c));
}

TEST_CASE("build_block structure: stage and site counts") {
  Rng rng(7);
  NeuronConfig cfg;

  auto scb = build_block<float>(BlockKind::Scb(3), "b", 16, 16, 8, 8, 1, cfg, false, rng);
  std::vector<ParamRef<float>> params;
  scb->collect_params(params);
  int convs = 0, alphas = 0;
  for (const auto& p : params) {
    if (p.name.find(".conv") != std::string::npos && p.name.find("weight") != std::string::npos)
      ++convs;
    if (p.name.find(".alpha") != std::string::npos) ++alphas;
  }
  CHECK(convs == 2);   // two conv stages
  CHECK(alphas == 2);  // two neuron stages
  CHECK(scb->neuron_sites() == 2 * 8 * 8 * 16);

  auto skip = build_block<float>(BlockKind::Skip(), "s", 16, 16, 8, 8, 1, cfg, false, rng);
  params.clear();
  skip->collect_params(params);
  CHECK(params.empty());
  CHECK(skip->neuron_sites() == 0);

  CHECK_THROWS_AS(build_block<float>(BlockKind::Skip(), "s", 16, 32, 8, 8, 1, cfg, false, rng),
                  ShapeError);

  auto sib = build_block<float>(BlockKind::Sib(3, 3), "i", 4, 4, 8, 8, 1, cfg, false, rng);
  params.clear();
  sib->collect_params(params);
  alphas = 0;
  for (const auto& p : params)
    if (p.name.find(".alpha") != std::string::npos) ++alphas;
  CHECK(alphas == 3);  // widths 3c, 3c, c
  CHECK(sib->neuron_sites() == 8 * 8 * (12 + 12 + 4));
}

TEST_CASE("binary inputs stay binary through skip and maxpool blocks") {
  Rng rng(11);
  NeuronConfig cfg;
  RunCtx ctx;
  ctx.timesteps = 1;
  TensorT<float> x({2, 4, 8, 8});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.bernoulli(0.3) ? 1.0f : 0.0f;

  auto skip = build_block<float>(BlockKind::Skip(), "s", 4, 4, 8, 8, 1, cfg, false, rng);
  auto y1 = skip->forward(x, ctx);
  for (int64_t i = 0; i < y1.numel(); ++i) CHECK((y1[i] == 0.0f || y1[i] == 1.0f));

  auto mp = build_block<float>(BlockKind::MaxPoolDs(), "m", 4, 4, 8, 8, 2, cfg, false, rng);
  auto y2 = mp->forward(x, ctx);
  for (int64_t i = 0; i < y2.numel(); ++i) CHECK((y2[i] == 0.0f || y2[i] == 1.0f));
}

TEST_CASE("voting layer averages class groups") {
  VotingLayer<float> voting("v", 3, 10);
  RunCtx ctx;
  TensorT<float> x({1, 30});
  // class 0: all fire; class 1: 3 of 10; class 2: none
  for (int i = 0; i < 10; ++i) x.at2(0, i) = 1.0f;
  for (int i = 10; i < 13; ++i) x.at2(0, i) = 1.0f;
  auto y = voting.forward(x, ctx);
  CHECK(y.at2(0, 0) == doctest::Approx(1.0));
  CHECK(y.at2(0, 1) == doctest::Approx(0.3));
  CHECK(y.at2(0, 2) == doctest::Approx(0.0));

  TensorT<float> bad({1, 31});
  CHECK_THROWS_AS(voting.forward(bad, ctx), ShapeError);
}

TEST_CASE("gap feeds a spiking stage: mean current then threshold") {
  NeuronConfig cfg;
  cfg.alpha_init = 100.0;  // decay == 1: H equals the instantaneous current
  GapNeuron<float> gap("g", 1, cfg, false);
  RunCtx ctx;
  ctx.timesteps = 1;

  TensorT<float> ones = TensorT<float>::full({1, 1, 4, 4}, 1.0f);
  auto y = gap.forward(ones, ctx);
  CHECK(y.at2(0, 0) == 1.0f);  // current 1.0 reaches threshold

  TensorT<float> one_spike({1, 1, 4, 4});
  one_spike[5] = 1.0f;
  auto y2 = gap.forward(one_spike, ctx);
  CHECK(y2.at2(0, 0) == 0.0f);  // current 1/16 stays sub-threshold

  TensorT<float> silent({1, 1, 4, 4});
  auto y3 = gap.forward(silent, ctx);
  CHECK(y3.at2(0, 0) == 0.0f);
}

TEST_CASE("census oracle: homogeneous fills against the closed-form totals") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 16);
  const double hwc = 32.0 * 32.0 * 16.0;

  auto census_of = [&](const BlockKind& kind) {
    return static_cast<double>(assemble(macro, uniform_fill(macro, kind)).census(false));
  };
  CHECK(census_of(BlockKind::Scb(3)) / (6.4 * hwc) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(census_of(BlockKind::Sib(3, 1)) / (8.0 * hwc) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(census_of(BlockKind::Sib(3, 3)) / (16.5 * hwc) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("space cardinality") {
  CHECK(space_cardinality(make_macro(MacroVariant::snn1, 16)) == 3125);
  CHECK(space_cardinality(make_macro(MacroVariant::snn1_ds_slots, 16)) == 390625);
  CHECK(space_cardinality(make_macro(MacroVariant::snn1_pre_ds_slots, 16)) == 390625);
  CHECK(space_cardinality(make_macro(MacroVariant::snn1, 16), 1) == 1);
}

TEST_CASE("random genotypes: reproducible, uniform, degenerate set") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 8);
  const auto cands = default_candidates();

  Rng a(99), b(99);
  CHECK(random_genotype(macro, cands, a) == random_genotype(macro, cands, b));

  // per-slot frequencies within 5 sigma of 1/5
  const int draws = 10000;
  Rng rng(5);
  std::vector<std::array<int, 5>> counts(5, {0, 0, 0, 0, 0});
  for (int d = 0; d < draws; ++d) {
    auto g = random_genotype(macro, cands, rng);
    for (size_t s = 0; s < 5; ++s)
      for (size_t c = 0; c < 5; ++c)
        if (g.slots[s] == cands[c]) counts[s][c]++;
  }
  const double expect = draws / 5.0;
  const double sigma = std::sqrt(draws * 0.2 * 0.8);
  for (const auto& slot : counts)
    for (int c : slot) CHECK(std::abs(c - expect) < 5.0 * sigma);

  Rng r2(1);
  auto constant = random_genotype(macro, {BlockKind::Scb(3)}, r2);
  for (const auto& s : constant.slots) CHECK(s == BlockKind::Scb(3));
}

TEST_CASE("assemble rejects slot-count mismatches") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 8);
  Genotype g;
  g.slots.assign(4, BlockKind::Scb(3));
  CHECK_THROWS_AS(assemble(macro, g), ConfigError);
}

TEST_CASE("skip realization: duplication at widening slots, max pool at DS slots") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 8);
  auto plan = assemble(macro, uniform_fill(macro, BlockKind::Skip()));
  for (const auto& u : plan.units) {
    if (u.role != UnitRole::tbd) continue;
    if (u.c_in != u.c_out) {
      CHECK(u.block.tag == BlockTag::channel_dup);
      CHECK(u.params == 0);
      CHECK(u.neurons == 0);
    } else {
      CHECK(u.block.tag == BlockTag::skip);
    }
  }

  const MacroArch big = make_macro(MacroVariant::snn1_ds_slots, 8);
  auto plan8 = assemble(big, uniform_fill(big, BlockKind::Skip()));
  int ds_pools = 0;
  for (const auto& u : plan8.units)
    if (u.role == UnitRole::ds) {
      CHECK(u.block.tag == BlockTag::maxpool_ds);
      ++ds_pools;
    }
  CHECK(ds_pools == 3);
}

TEST_CASE("snn variants change only what they should") {
  const auto fill = BlockKind::Scb(3);

  auto p1 = assemble(make_macro(MacroVariant::snn1, 8), uniform_fill(make_macro(MacroVariant::snn1, 8), fill));
  auto p2 = assemble(make_macro(MacroVariant::snn2, 8), uniform_fill(make_macro(MacroVariant::snn2, 8), fill));
  auto p4 = assemble(make_macro(MacroVariant::snn4, 8), uniform_fill(make_macro(MacroVariant::snn4, 8), fill));

  auto has_gap = [](const NetworkPlan& p) {
    for (const auto& u : p.units)
      if (u.role == UnitRole::gap) return true;
    return false;
  };
  CHECK(!has_gap(p1));
  CHECK(has_gap(p2));
  // GAP shrinks the FC fan-in from 4*4*4C to 4C
  for (const auto& u : p2.units)
    if (u.role == UnitRole::fc_head) CHECK(u.c_in == 4 * 8);
  for (const auto& u : p1.units)
    if (u.role == UnitRole::fc_head) CHECK(u.c_in * u.h_in * u.w_in == 4 * 4 * 4 * 8);

  for (const auto& u : p4.units)
    if (u.role == UnitRole::ds) CHECK(u.block.tag == BlockTag::avgpool_ds);

  const auto m3 = make_macro(MacroVariant::snn3, 8);
  auto p3 = assemble(m3, uniform_fill(m3, fill));
  for (const auto& u : p3.units)
    if (u.role == UnitRole::ds) {
      CHECK(u.block.tag == BlockTag::scb);
      CHECK(u.stride == 2);
      CHECK(u.neurons == 2 * (u.h_in / 2) * (u.w_in / 2) * u.c_out);
    }
}

TEST_CASE("spatial schedule: dims halve exactly at DS and end at 4x4x4C") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 16);
  auto plan = assemble(macro, uniform_fill(macro, BlockKind::Srb(5)));
  int64_t h = 32;
  for (const auto& u : plan.units) {
    if (u.role == UnitRole::ds) {
      CHECK(u.h_in == h);
      CHECK(u.h_out == h / 2);
      h /= 2;
    }
  }
  CHECK(h == 4);
  for (const auto& u : plan.units)
    if (u.role == UnitRole::fc_head) {
      CHECK(u.h_in == 4);
      CHECK(u.c_in == 64);  // 4C
    }
}

TEST_CASE("ann variant: same parameter count, no spiking census") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 8);
  auto plan = assemble(macro, uniform_fill(macro, BlockKind::Srb(3)));
  auto ann = ann_variant(plan);
  CHECK(ann.ann);
  CHECK(ann.total_params() == plan.total_params());
  CHECK(ann.units.size() == plan.units.size());
}

TEST_CASE("deep stems reduce to the 32x32 pipeline") {
  MacroArch m64 = make_macro(MacroVariant::snn1, 8);
  m64.stem = StemKind::deep64;
  auto p64 = assemble(m64, uniform_fill(m64, BlockKind::Scb(3)));
  MacroArch m128 = make_macro(MacroVariant::snn1, 8);
  m128.stem = StemKind::deep128;
  auto p128 = assemble(m128, uniform_fill(m128, BlockKind::Scb(3)));

  auto first_tbd_h = [](const NetworkPlan& p) {
    for (const auto& u : p.units)
      if (u.role == UnitRole::tbd) return u.h_in;
    return int64_t{0};
  };
  CHECK(first_tbd_h(p64) == 32);
  CHECK(first_tbd_h(p128) == 32);

  // constructible end to end on synthetic inputs
  Rng rng(1);
  NeuronConfig cfg;
  auto net = NetworkT<float>::build(p128, cfg, 2, rng);
  TensorT<float> x({1, 3, 128, 128});
  auto o = net.forward_T(x, Mode::eval);
  CHECK(o.dim(1) == 10);
}

TEST_CASE("smoke sweep: every genotype of the default space assembles, runs, and matches its census") {
  MacroArch macro = make_macro(MacroVariant::snn1, 4);
  const auto cands = default_candidates();
  NeuronConfig cfg;
  TensorT<float> x({1, 3, 32, 32});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = static_cast<float>((i % 7) - 3) * 0.2f;

  int64_t count = 0;
  Rng rng(123);
  for (int64_t code = 0; code < 3125; ++code) {
    int64_t rem = code;
    Genotype g;
    for (int s = 0; s < 5; ++s) {
      g.slots.push_back(cands[static_cast<size_t>(rem % 5)]);
      rem /= 5;
    }
    auto plan = assemble(macro, g);
    auto net = NetworkT<float>::build(plan, cfg, 1, rng);
    CHECK(net.runtime_census(true) == plan.census(true));
    auto o = net.forward_T(x, Mode::eval);
    REQUIRE(o.dim(1) == 10);
    CHECK(o.all_finite());
    ++count;
  }
  CHECK(count == 3125);
}

TEST_CASE("parameter magnitude for the base configuration") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 16);
  auto plan = assemble(macro, uniform_fill(macro, BlockKind::Scb(3)));
  CHECK(plan.total_params() > 100000);
  CHECK(plan.total_params() < 1000000);
}

TEST_CASE("plan JSON export carries the layer list and censuses") {
  const MacroArch macro = make_macro(MacroVariant::snn1, 8);
  auto plan = assemble(macro, Genotype::from_string("SCB_k3,SRB_k5,skip,SCB_k5,SRB_k3"));
  auto j = plan.to_json();
  CHECK(j.at("genotype") == "SCB_k3,SRB_k5,skip,SCB_k5,SRB_k3");
  CHECK(j.at("census") == plan.census(true));
  CHECK(j.at("units").size() == plan.units.size());
}
