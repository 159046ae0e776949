// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criterion 9 trains desk-scale networks and dominates the
// runtime; it uses the CIFAR-10 binaries when a dataset directory is present
// (SPIKENAS_DATA or ./data/cifar-10-batches-bin) and otherwise falls back to
// the synthetic surrogate dataset, reporting which one it used.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "spikenas/checkpoint.hpp"
#include "spikenas/commands.hpp"
#include "spikenas/evosearch.hpp"
#include "spikenas/loss.hpp"
#include "spikenas/supernet.hpp"
#include "spikenas/training.hpp"

using namespace spikenas;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
  std::cout << "criterion " << criterion << " [" << name << "]: " << (pass ? "PASS" : "FAIL")
            << " — " << detail << "\n"
            << std::flush;
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Genotype fill_genotype(const MacroArch& m, const BlockKind& kind) {
  Genotype g;
  g.slots.assign(static_cast<size_t>(slot_count(m)), kind);
  return g;
}

// ---------------------------------------------------------------------------

void criterion_1_census() {
  MacroArch macro;
  macro.initial_channels = 16;
  const double hwc = 32.0 * 32.0 * 16.0;
  struct Case {
    BlockKind kind;
    double target, tol;
  };
  const std::vector<Case> cases = {{BlockKind::Scb(3), 6.4, 0.01},
                                   {BlockKind::Sib(3, 1), 8.0, 0.03},
                                   {BlockKind::Sib(3, 3), 16.5, 0.03}};
  bool pass = true;
  std::ostringstream detail;
  for (const auto& c : cases) {
    const auto plan = assemble(macro, fill_genotype(macro, c.kind));
    const double ratio = static_cast<double>(plan.census(false)) / (c.target * hwc);
    const bool ok = std::abs(ratio - 1.0) <= c.tol;
    pass = pass && ok;
    detail << block_to_string(c.kind) << "=" << plan.census(false) << " ("
           << ratio * c.target << "*HWC, target " << c.target << "*HWC) ";
  }
  report(1, "neuron-census oracle", pass, detail.str());
}

void criterion_2_spike_estimate() {
  struct Case {
    double census, rate, target;
  };
  const std::vector<Case> cases = {{6.4, 0.18, 1.17}, {8.0, 0.23, 1.84}, {16.5, 0.17, 2.81}};
  bool pass = true;
  std::ostringstream detail;
  for (const auto& c : cases) {
    const double got = estimate_spikes(c.census, c.rate);
    const bool ok = std::abs(got - c.target) <= 0.02;  // within rounding
    pass = pass && ok;
    detail << c.census << "*" << c.rate << "=" << got << " (target " << c.target << ") ";
  }
  report(2, "spike-estimate arithmetic", pass, detail.str());
}

void criterion_3_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(31415);
  double worst = 0.0;
  int configs = 0, tensors = 0;
  for (int rep = 0; rep < 24; ++rep) {
    auto chain = gradcheck::random_chain(rng);
    if (rep % 3 == 0) chain.reg_seed = 0.05;
    auto outcome = gradcheck::check_chain(chain, rng);
    worst = std::max(worst, outcome.worst_rel_err);
    tensors += outcome.checked_tensors;
    ++configs;
  }
  std::ostringstream detail;
  detail << configs << " configs, " << tensors << " tensors, max rel err " << worst << ", "
         << seconds_since(t0) << "s";
  report(3, "gradient correctness", configs >= 20 && worst < 1e-4, detail.str());
}

// Deterministic synthetic landscape shared by criteria 4 and 10.
class TableEvaluator : public Evaluator {
 public:
  TableEvaluator(int slots, const std::vector<BlockKind>& candidates, uint64_t seed) {
    build(slots, candidates, {}, seed);
  }
  std::pair<double, double> evaluate(const Genotype& g) override { return table_.at(g.to_string()); }
  std::string argmax(double lambda, double n_avg) const {
    std::string best;
    double best_v = -1e300;
    for (const auto& [k, v] : table_) {
      const double f = fitness(v.first, v.second, n_avg, lambda);
      if (f > best_v) {
        best_v = f;
        best = k;
      }
    }
    return best;
  }
  size_t size() const { return table_.size(); }

 private:
  void build(int slots, const std::vector<BlockKind>& cands, std::vector<BlockKind> prefix,
             uint64_t seed) {
    if (static_cast<int>(prefix.size()) == slots) {
      Genotype g;
      g.slots = prefix;
      Rng r(seed ^ std::hash<std::string>{}(g.to_string()));
      table_[g.to_string()] = {r.uniform(0.2, 0.95), r.uniform(1000.0, 20000.0)};
      return;
    }
    for (const auto& c : cands) {
      auto next = prefix;
      next.push_back(c);
      build(slots, cands, next, seed);
    }
  }
  std::map<std::string, std::pair<double, double>> table_;
};

void criterion_4_search_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cands = default_candidates();
  int evolve_hits = 0, random_hits = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    TableEvaluator table(2, cands, 2718);
    const std::string want = table.argmax(-0.08, 8000.0);
    SearchConfig cfg;
    cfg.lambda = -0.08;
    cfg.seed = seed;
    if (evolve(table, 2, cands, 8000.0, cfg).best.to_string() == want) ++evolve_hits;
    cfg.budget = static_cast<int>(table.size());
    if (random_search(table, 2, cands, 8000.0, cfg).best.to_string() == want) ++random_hits;
  }
  std::ostringstream detail;
  detail << "evolve " << evolve_hits << "/10, random-search " << random_hits << "/10, "
         << seconds_since(t0) << "s";
  report(4, "search optimality oracle", evolve_hits == 10 && random_hits == 10, detail.str());
}

void criterion_5_fitness_contracts() {
  bool pass = true;
  // lambda = 0: ranking equals accuracy ranking on a grid
  for (double acc = 0.1; acc < 0.9; acc += 0.1)
    for (double n : {10.0, 1000.0, 99999.0})
      pass = pass && fitness(acc, n, 500.0, 0.0) == acc;
  // N = N_avg: fitness equals accuracy for every lambda
  for (double lambda : {0.0, -0.04, -0.08, -0.16, -0.24, -1.0})
    for (double n : {1.0, 123.0, 5e6})
      pass = pass && std::abs(fitness(0.77, n, n, lambda) - 0.77) < 1e-12;
  // lambda < 0: strictly decreasing in N at fixed accuracy
  for (double lambda : {-0.04, -0.08, -0.16, -0.24}) {
    double prev = 1e300;
    for (double n = 50.0; n <= 5000.0; n += 50.0) {
      const double f = fitness(0.9, n, 800.0, lambda);
      pass = pass && f < prev;
      prev = f;
    }
  }
  report(5, "fitness contracts", pass, "lambda=0 identity, N=N_avg identity, monotone grids");
}

void criterion_6_cardinality() {
  MacroArch m5;
  MacroArch m8a = m5, m8b = m5;
  m8a.variant = MacroVariant::snn1_ds_slots;
  m8b.variant = MacroVariant::snn1_pre_ds_slots;
  const bool pass = space_cardinality(m5) == 3125 && space_cardinality(m8a) == 390625 &&
                    space_cardinality(m8b) == 390625;
  std::ostringstream detail;
  detail << "5-slot=" << space_cardinality(m5) << ", 8-slot=" << space_cardinality(m8a);
  report(6, "space cardinality", pass, detail.str());
}

void criterion_7_recurrence() {
  bool pass = true;
  auto r1 = neuron_step(2.4, 0.0, 0.5, 1.0, 0.0, false);
  pass = pass && std::abs(r1.h - 1.2) < 1e-12 && r1.spike == 1.0 && r1.v_next == 0.0;
  auto r2 = neuron_step(0.8, 0.0, 0.5, 1.0, 0.0, false);
  pass = pass && std::abs(r2.h - 0.4) < 1e-12 && r2.spike == 0.0 &&
         std::abs(r2.v_next - 0.4) < 1e-12;
  auto r3 = neuron_step(0.8, r2.v_next, 0.5, 1.0, 0.0, false);
  pass = pass && std::abs(r3.h - 0.6) < 1e-12 && r3.spike == 0.0;
  report(7, "membrane recurrence traces", pass, "H=1.2 fire/reset; H=0.4 hold; H2=0.6");
}

void criterion_8_budget_dedup() {
  const auto t0 = std::chrono::steady_clock::now();
  // a real (toy-scale) supernet evaluator: frozen weights, validation split
  MacroArch macro;
  macro.initial_channels = 4;
  macro.num_classes = 2;
  auto supernet = SuperNet::build(macro, default_candidates(), NeuronConfig{}, 2, 7);
  auto ds = make_synthetic(2, 40, 32, 99);
  auto [dtrain, dval] = split_train_val(ds, 0.8, 3);
  normalize_with_train_stats(dtrain, {&dval});

  class SubnetEval : public Evaluator {
   public:
    SubnetEval(const SuperNet& sn, const ImageDataset& val) : sn_(sn), val_(val) {}
    std::pair<double, double> evaluate(const Genotype& g) override {
      Network net = sn_.subnet(g);
      auto r = spikenas::evaluate(net, val_, 16);
      return {r.accuracy, std::max(r.spikes_per_sample, 1e-9)};
    }
   private:
    const SuperNet& sn_;
    const ImageDataset& val_;
  } evaluator(supernet, dval);

  SearchConfig cfg;  // paper defaults: T=10, p=20, p_m=p_c=10, k=10, B=200
  cfg.seed = 11;
  auto result = evolve(evaluator, slot_count(macro), default_candidates(), 2000.0, cfg);

  std::set<std::string> distinct;
  for (const auto& rec : result.log) distinct.insert(rec.genotype.to_string());
  const double secs = seconds_since(t0);
  const bool pass = result.log.size() <= 200 && result.log.size() == 200 &&
                    distinct.size() == result.log.size() && secs < 300.0;
  std::ostringstream detail;
  detail << result.log.size() << " unique evaluations (budget 200), " << secs << "s";
  report(8, "budget and dedup", pass, detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 9: desk-scale trend reproductions.

struct TrendData {
  ImageDataset train, val;
  std::string source;
};

TrendData load_trend_data() {
  TrendData td;
  std::string cifar_dir;
  if (const char* env = std::getenv("SPIKENAS_DATA")) {
    const auto p = fs::path(env) / "cifar-10-batches-bin";
    if (fs::exists(p)) cifar_dir = p.string();
  }
  if (cifar_dir.empty() && fs::exists("data/cifar-10-batches-bin"))
    cifar_dir = "data/cifar-10-batches-bin";

  ImageDataset raw;
  if (!cifar_dir.empty()) {
    raw = load_cifar_dir(cifar_dir);
    td.source = "cifar10";
  } else {
    raw = make_synthetic(10, 250, 32, 4242);
    td.source = "synthetic surrogate (CIFAR-10 binaries not present)";
  }
  raw = stratified_subset(raw, 200, 7777);
  auto [train, val] = split_train_val(raw, 0.8, 7777);
  normalize_with_train_stats(train, {&val});
  td.train = std::move(train);
  td.val = std::move(val);
  return td;
}

struct TrendRun {
  double spikes = 0.0;
  double acc = 0.0;
  double tbd5_rate = 0.0;
  double ds3_rate = 0.0;
};

TrendRun run_trend(const TrendData& data, MacroVariant variant, double lambda_reg, uint64_t seed,
                   int epochs) {
  MacroArch macro;
  macro.variant = variant;
  macro.initial_channels = 8;
  macro.num_classes = 10;
  Genotype g = fill_genotype(macro, BlockKind::Scb(3));
  Rng init_rng = Rng(seed).fork(0x696E6974ULL);
  Network net = Network::build(assemble(macro, g), NeuronConfig{}, 4, init_rng);

  TrainConfig cfg;
  cfg.timesteps = 4;
  cfg.epochs = epochs;
  cfg.batch_size = 50;
  cfg.lambda_reg = lambda_reg;
  cfg.seed = seed;
  cfg.augment.pad_crop = true;
  cfg.augment.flip_prob = 0.5;
  cfg.augment.cutout_length = 16;
  train(net, data.train, data.val, cfg);

  SpikeLedger ledger;
  EvalResult r = evaluate(net, data.val, cfg.batch_size, &ledger);
  TrendRun out;
  out.spikes = r.spikes_per_sample;
  out.acc = r.accuracy;
  out.tbd5_rate = ledger.firing_rate("TBD5");
  out.ds3_rate = ledger.firing_rate("DS3");
  return out;
}

void criterion_9_trends() {
  const auto t0 = std::chrono::steady_clock::now();
  TrendData data = load_trend_data();
  const std::vector<uint64_t> seeds = {101, 202, 303};
  const int epochs = 10;

  int a_hits = 0, b_hits = 0, c_hits = 0;
  std::ostringstream detail;
  for (uint64_t seed : seeds) {
    const TrendRun snn1 = run_trend(data, MacroVariant::snn1, 0.0, seed, epochs);
    const TrendRun snn4 = run_trend(data, MacroVariant::snn4, 0.0, seed, epochs);
    const TrendRun snn2 = run_trend(data, MacroVariant::snn2, 0.0, seed, epochs);
    const TrendRun reg1 = run_trend(data, MacroVariant::snn1, 1.0, seed, epochs);

    if (snn4.spikes > snn1.spikes) ++a_hits;
    if (snn2.tbd5_rate + snn2.ds3_rate > snn1.tbd5_rate + snn1.ds3_rate) ++b_hits;
    if (reg1.spikes < snn1.spikes) ++c_hits;
    detail << "[seed " << seed << ": snn1=" << static_cast<int64_t>(snn1.spikes)
           << " snn4=" << static_cast<int64_t>(snn4.spikes) << " snn2.rate="
           << snn2.tbd5_rate + snn2.ds3_rate << " vs " << snn1.tbd5_rate + snn1.ds3_rate
           << " reg=" << static_cast<int64_t>(reg1.spikes) << "] ";
  }
  const bool pass = a_hits >= 2 && b_hits >= 2 && c_hits >= 2;
  detail << "(a) avg-pool DS spikes " << a_hits << "/3, (b) GAP late-layer rates " << b_hits
         << "/3, (c) spike-reg reduction " << c_hits << "/3; dataset=" << data.source << "; "
         << seconds_since(t0) << "s";
  report(9, "desk-scale trend reproductions", pass, detail.str());
}

void criterion_10_determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = fs::temp_directory_path() / "spikenas_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);

  RunConfig cfg;
  cfg.preset = "none";
  cfg.dataset = "synthetic";
  cfg.synth_classes = 2;
  cfg.synth_per_class = 25;
  cfg.num_classes = 2;
  cfg.channels = 4;
  cfg.timesteps = 2;
  cfg.epochs = 2;
  cfg.batch_size = 10;
  cfg.seed = 12;
  cfg.seed_set = true;

  bool pass = true;

  // train twice
  RunConfig t1 = cfg, t2 = cfg;
  t1.command = t2.command = "train";
  t1.out_dir = (base / "t1").string();
  t2.out_dir = (base / "t2").string();
  cmd_train(t1);
  cmd_train(t2);
  pass = pass && fnv1a64_file(t1.out_dir + "/history.csv") ==
                     fnv1a64_file(t2.out_dir + "/history.csv");
  pass = pass &&
         fnv1a64_file(t1.out_dir + "/model.ckpt") == fnv1a64_file(t2.out_dir + "/model.ckpt");

  // supernet + search twice against the same checkpoint
  RunConfig sn = cfg;
  sn.command = "train-supernet";
  sn.epochs = 1;
  sn.out_dir = (base / "sn").string();
  cmd_train_supernet(sn);
  RunConfig s1 = cfg, s2 = cfg;
  s1.command = s2.command = "search";
  s1.checkpoint = s2.checkpoint = sn.out_dir + "/supernet.ckpt";
  s1.budget = s2.budget = 20;
  s1.rounds = s2.rounds = 2;
  s1.pool_size = s2.pool_size = 10;
  s1.num_mutation = s2.num_mutation = 4;
  s1.num_crossover = s2.num_crossover = 4;
  s1.out_dir = (base / "s1").string();
  s2.out_dir = (base / "s2").string();
  auto w1 = cmd_search(s1);
  auto w2 = cmd_search(s2);
  pass = pass && fnv1a64_file(s1.out_dir + "/search_log.jsonl") ==
                     fnv1a64_file(s2.out_dir + "/search_log.jsonl");
  pass = pass && w1.at("genotype") == w2.at("genotype");

  std::ostringstream detail;
  detail << "train histories, checkpoints, search logs and winners byte-identical; "
         << seconds_since(t0) << "s";
  report(10, "determinism", pass, detail.str());
}

}  // namespace

int main() {
  criterion_1_census();
  criterion_2_spike_estimate();
  criterion_3_gradients();
  criterion_4_search_oracle();
  criterion_5_fitness_contracts();
  criterion_6_cardinality();
  criterion_7_recurrence();
  criterion_8_budget_dedup();
  criterion_9_trends();
  criterion_10_determinism();
  std::cout << (g_failures == 0 ? "acceptance: all criteria passed"
                                : "acceptance: " + std::to_string(g_failures) + " criteria failed")
            << "\n";
  return g_failures == 0 ? 0 : 1;
}
