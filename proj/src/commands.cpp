#include "spikenas/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "spikenas/checkpoint.hpp"
#include "spikenas/report.hpp"
#include "spikenas/supernet.hpp"
#include "spikenas/training.hpp"

namespace spikenas {

namespace fs = std::filesystem;

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["preset"] = preset;
  j["dataset"] = dataset;
  j["dataset_dir"] = dataset_dir;
  j["subset_per_class"] = subset_per_class;
  j["split_seed"] = split_seed;
  j["synth_classes"] = synth_classes;
  j["synth_per_class"] = synth_per_class;
  j["synth_hw"] = synth_hw;
  j["synth_seed"] = synth_seed;
  j["macro"] = macro;
  j["stem"] = stem;
  j["channels"] = channels;
  j["num_classes"] = num_classes;
  j["voting_k"] = voting_k;
  j["genotype"] = genotype;
  j["ds_fill"] = ds_fill;
  j["ann"] = ann;
  j["v_threshold"] = v_threshold;
  j["v_reset"] = v_reset;
  j["alpha_init"] = alpha_init;
  j["timesteps"] = timesteps;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["lambda_reg"] = lambda_reg;
  j["augment_enabled"] = augment_enabled;
  j["cutout_length"] = cutout_length;
  j["lambda"] = lambda;
  j["linear_fitness"] = linear_fitness;
  j["lambda_linear"] = lambda_linear;
  j["budget"] = budget;
  j["rounds"] = rounds;
  j["num_mutation"] = num_mutation;
  j["num_crossover"] = num_crossover;
  j["top_k"] = top_k;
  j["pool_size"] = pool_size;
  j["mutation_ratio"] = mutation_ratio;
  j["use_random_search"] = use_random_search;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["checkpoint"] = checkpoint;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.value("command", "");
  c.preset = j.value("preset", "desk");
  c.dataset = j.value("dataset", "synthetic");
  c.dataset_dir = j.value("dataset_dir", "");
  c.subset_per_class = j.value("subset_per_class", 0);
  c.split_seed = j.value("split_seed", uint64_t{7777});
  c.synth_classes = j.value("synth_classes", 10);
  c.synth_per_class = j.value("synth_per_class", 250);
  c.synth_hw = j.value("synth_hw", 32);
  c.synth_seed = j.value("synth_seed", uint64_t{4242});
  c.macro = j.value("macro", "snn1");
  c.stem = j.value("stem", "standard32");
  c.channels = j.value("channels", 16);
  c.num_classes = j.value("num_classes", 10);
  c.voting_k = j.value("voting_k", 10);
  c.genotype = j.value("genotype", "");
  c.ds_fill = j.value("ds_fill", "SCB_k3");
  c.ann = j.value("ann", false);
  c.v_threshold = j.value("v_threshold", 1.0);
  c.v_reset = j.value("v_reset", 0.0);
  c.alpha_init = j.value("alpha_init", 0.0);
  c.timesteps = j.value("timesteps", 8);
  c.epochs = j.value("epochs", 600);
  c.batch_size = j.value("batch_size", 96);
  c.lr = j.value("lr", 1e-3);
  c.lambda_reg = j.value("lambda_reg", 0.0);
  c.augment_enabled = j.value("augment_enabled", true);
  c.cutout_length = j.value("cutout_length", 16);
  c.lambda = j.value("lambda", -0.08);
  c.linear_fitness = j.value("linear_fitness", false);
  c.lambda_linear = j.value("lambda_linear", 0.0);
  c.budget = j.value("budget", 200);
  c.rounds = j.value("rounds", 10);
  c.num_mutation = j.value("num_mutation", 10);
  c.num_crossover = j.value("num_crossover", 10);
  c.top_k = j.value("top_k", 10);
  c.pool_size = j.value("pool_size", 20);
  c.mutation_ratio = j.value("mutation_ratio", 0.2);
  c.use_random_search = j.value("use_random_search", false);
  c.seed = j.value("seed", uint64_t{0});
  c.seed_set = j.contains("seed");
  c.out_dir = j.value("out_dir", "runs/out");
  c.checkpoint = j.value("checkpoint", "");
  return c;
}

MacroArch RunConfig::make_macro() const {
  MacroArch m;
  m.variant = macro_from_string(macro);
  m.stem = stem_from_string(stem);
  m.initial_channels = channels;
  m.num_classes = num_classes;
  m.voting_k = voting_k;
  m.input_channels = 3;
  m.ds_fill = block_from_string(ds_fill);
  return m;
}

NeuronConfig RunConfig::make_neuron() const {
  NeuronConfig n;
  n.v_threshold = v_threshold;
  n.v_reset = v_reset;
  n.alpha_init = alpha_init;
  return n;
}

SearchConfig RunConfig::make_search() const {
  SearchConfig s;
  s.lambda = lambda;
  s.linear_fitness = linear_fitness;
  s.lambda_linear = lambda_linear;
  s.max_rounds = rounds;
  s.mutation_ratio = mutation_ratio;
  s.num_mutation = num_mutation;
  s.num_crossover = num_crossover;
  s.top_k = top_k;
  s.pool_size = pool_size;
  s.budget = budget;
  s.seed = seed;
  return s;
}

void apply_preset(RunConfig& cfg) {
  if (cfg.preset == "none") return;
  if (cfg.preset == "paper") {
    cfg.timesteps = 8;
    cfg.channels = 16;
    cfg.epochs = 600;
    cfg.batch_size = 96;
    cfg.subset_per_class = 0;
    return;
  }
  if (cfg.preset == "desk") {
    cfg.timesteps = 4;
    cfg.channels = 8;
    cfg.epochs = cfg.command == "train-supernet" ? 8 : 12;
    cfg.batch_size = 50;
    cfg.subset_per_class = 200;
    cfg.synth_per_class = 250;
    return;
  }
  throw ConfigError("unknown preset '" + cfg.preset + "'");
}

DataBundle prepare_data(const RunConfig& cfg) {
  ImageDataset raw;
  if (cfg.dataset == "synthetic") {
    raw = make_synthetic(cfg.synth_classes, cfg.synth_per_class, cfg.synth_hw, cfg.synth_seed);
  } else if (cfg.dataset == "cifar10") {
    std::string dir = cfg.dataset_dir;
    if (dir.empty()) {
      const char* env = std::getenv("SPIKENAS_DATA");
      if (env) dir = std::string(env) + "/cifar-10-batches-bin";
    }
    if (dir.empty())
      throw DataError("cifar10 requires --data-dir or the SPIKENAS_DATA environment variable");
    raw = load_cifar_dir(dir);
  } else if (cfg.dataset == "idx") {
    std::string dir = cfg.dataset_dir;
    if (dir.empty()) {
      const char* env = std::getenv("SPIKENAS_DATA");
      if (env) dir = env;
    }
    if (dir.empty())
      throw DataError("idx dataset requires --data-dir or SPIKENAS_DATA");
    raw = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
  } else {
    throw ConfigError("unknown dataset kind '" + cfg.dataset + "'");
  }

  if (cfg.subset_per_class > 0)
    raw = stratified_subset(raw, cfg.subset_per_class, cfg.split_seed);
  auto [train, val] = split_train_val(raw, 0.8, cfg.split_seed);
  normalize_with_train_stats(train, {&val});
  return {std::move(train), std::move(val)};
}

namespace {

void require_seed(const RunConfig& cfg) {
  if (!cfg.seed_set)
    throw ConfigError("command '" + cfg.command + "' requires an explicit --seed");
}

void ensure_out_dir(const RunConfig& cfg) { fs::create_directories(cfg.out_dir); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

void write_resolved_config(const RunConfig& cfg) {
  write_text(cfg.out_dir + "/resolved_config.json", cfg.to_json().dump(2) + "\n");
}

void write_manifest(const RunConfig& cfg, const std::vector<std::string>& names) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& name : names) {
    const std::string path = cfg.out_dir + "/" + name;
    nlohmann::json f;
    f["name"] = name;
    f["bytes"] = static_cast<int64_t>(fs::file_size(path));
    f["fnv1a64"] = fnv1a64_file(path);
    files.push_back(f);
  }
  nlohmann::json m;
  m["files"] = files;
  write_text(cfg.out_dir + "/manifest.json", m.dump(2) + "\n");
}

Genotype resolve_genotype(const RunConfig& cfg, const MacroArch& macro) {
  if (!cfg.genotype.empty()) return Genotype::from_string(cfg.genotype);
  Genotype g;
  g.slots.assign(static_cast<size_t>(slot_count(macro)), BlockKind::Scb(3));
  return g;
}

TrainConfig make_train_config(const RunConfig& cfg, bool with_cutout) {
  TrainConfig t;
  t.timesteps = cfg.timesteps;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch_size;
  t.lr = cfg.lr;
  t.lambda_reg = cfg.lambda_reg;
  t.seed = cfg.seed;
  t.neuron = cfg.make_neuron();
  if (cfg.augment_enabled) {
    t.augment.pad_crop = true;
    t.augment.flip_prob = 0.5;
    t.augment.cutout_length = with_cutout ? cfg.cutout_length : 0;
  }
  return t;
}

nlohmann::json neuron_json(const NeuronConfig& n) {
  nlohmann::json j;
  j["v_threshold"] = n.v_threshold;
  j["v_reset"] = n.v_reset;
  j["alpha_init"] = n.alpha_init;
  return j;
}

NeuronConfig neuron_from_json(const nlohmann::json& j) {
  NeuronConfig n;
  n.v_threshold = j.at("v_threshold");
  n.v_reset = j.at("v_reset");
  n.alpha_init = j.at("alpha_init");
  return n;
}

nlohmann::json dataset_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["dataset"] = cfg.dataset;
  j["dataset_dir"] = cfg.dataset_dir;
  j["subset_per_class"] = cfg.subset_per_class;
  j["split_seed"] = cfg.split_seed;
  j["synth_classes"] = cfg.synth_classes;
  j["synth_per_class"] = cfg.synth_per_class;
  j["synth_hw"] = cfg.synth_hw;
  j["synth_seed"] = cfg.synth_seed;
  return j;
}

void dataset_from_json(RunConfig& cfg, const nlohmann::json& j) {
  cfg.dataset = j.at("dataset");
  cfg.dataset_dir = j.at("dataset_dir");
  cfg.subset_per_class = j.at("subset_per_class");
  cfg.split_seed = j.at("split_seed");
  cfg.synth_classes = j.at("synth_classes");
  cfg.synth_per_class = j.at("synth_per_class");
  cfg.synth_hw = j.at("synth_hw");
  cfg.synth_seed = j.at("synth_seed");
}

// Scores genotypes against a frozen supernet on the validation split.
class SupernetEvaluator : public Evaluator {
 public:
  SupernetEvaluator(const SuperNet& supernet, const ImageDataset& dval, int batch_size)
      : supernet_(supernet), dval_(dval), batch_size_(batch_size) {}

  std::pair<double, double> evaluate(const Genotype& genotype) override {
    Network net = supernet_.subnet(genotype);
    EvalResult r = spikenas::evaluate(net, dval_, batch_size_);
    return {r.accuracy, r.spikes_per_sample};
  }

 private:
  const SuperNet& supernet_;
  const ImageDataset& dval_;
  int batch_size_;
};

}  // namespace

nlohmann::json cmd_train_supernet(const RunConfig& cfg) {
  require_seed(cfg);
  ensure_out_dir(cfg);
  write_resolved_config(cfg);

  DataBundle data = prepare_data(cfg);
  const MacroArch macro = cfg.make_macro();
  SuperNet supernet =
      SuperNet::build(macro, default_candidates(), cfg.make_neuron(), cfg.timesteps,
                      Rng(cfg.seed).fork(0x696E6974ULL).seed());

  TrainConfig tc = make_train_config(cfg, /*with_cutout=*/false);
  TrainHistory history = train_supernet(supernet, data.train, data.val, tc);
  history.write_csv(cfg.out_dir + "/history.csv");

  nlohmann::json meta;
  meta["kind"] = "supernet";
  meta["macro"] = macro_to_json(macro);
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : default_candidates()) cands.push_back(block_to_string(c));
  meta["candidates"] = cands;
  meta["timesteps"] = cfg.timesteps;
  meta["neuron"] = neuron_json(cfg.make_neuron());
  meta["n_avg"] = supernet.n_avg();
  meta["spike_accum"] = supernet.spike_accum();
  meta["sampled_paths"] = supernet.sampled_paths();
  meta["seed"] = cfg.seed;
  meta["data"] = dataset_json(cfg);
  save_checkpoint(cfg.out_dir + "/supernet.ckpt", meta, supernet.all_state());

  nlohmann::json navg;
  navg["n_avg"] = supernet.n_avg();
  navg["sampled_paths"] = supernet.sampled_paths();
  write_text(cfg.out_dir + "/navg.json", navg.dump(2) + "\n");

  write_manifest(cfg, {"resolved_config.json", "history.csv", "supernet.ckpt", "navg.json"});

  nlohmann::json summary;
  summary["n_avg"] = supernet.n_avg();
  summary["final_loss"] = history.epochs.back().loss;
  summary["checkpoint"] = cfg.out_dir + "/supernet.ckpt";
  std::cout << "supernet trained: N_avg=" << supernet.n_avg() << " over "
            << supernet.sampled_paths() << " sampled paths\n";
  return summary;
}

namespace {

SuperNet load_supernet(const std::string& path, RunConfig& data_cfg, double* n_avg_out) {
  nlohmann::json meta = peek_checkpoint(path);
  if (meta.value("kind", "") != "supernet")
    throw DataError(path + ": not a supernet checkpoint");
  const MacroArch macro = macro_from_json(meta.at("macro"));
  std::vector<BlockKind> candidates;
  for (const auto& c : meta.at("candidates")) candidates.push_back(block_from_string(c));
  SuperNet sn = SuperNet::build(macro, candidates, neuron_from_json(meta.at("neuron")),
                                meta.at("timesteps"), 0);
  load_checkpoint(path, sn.all_state());
  sn.set_spike_stats(meta.at("spike_accum"), meta.at("sampled_paths"));
  dataset_from_json(data_cfg, meta.at("data"));
  if (n_avg_out) *n_avg_out = meta.at("n_avg");
  return sn;
}

}  // namespace

nlohmann::json cmd_search(const RunConfig& cfg) {
  require_seed(cfg);
  if (cfg.checkpoint.empty()) throw ConfigError("search requires --checkpoint");
  ensure_out_dir(cfg);
  write_resolved_config(cfg);

  RunConfig data_cfg = cfg;
  double n_avg = 0.0;
  SuperNet supernet = load_supernet(cfg.checkpoint, data_cfg, &n_avg);
  if (cfg.macro != "snn1" && cfg.macro != macro_to_string(supernet.macro.variant))
    throw ConfigError("checkpoint macro is " + macro_to_string(supernet.macro.variant) +
                      " but --macro asked for " + cfg.macro);

  DataBundle data = prepare_data(data_cfg);
  SupernetEvaluator evaluator(supernet, data.val, cfg.batch_size);
  const SearchConfig sc = cfg.make_search();
  SearchResult result =
      cfg.use_random_search
          ? random_search(evaluator, slot_count(supernet.macro), supernet.candidates, n_avg, sc)
          : evolve(evaluator, slot_count(supernet.macro), supernet.candidates, n_avg, sc);

  std::ostringstream log;
  for (const auto& rec : result.log) {
    nlohmann::json line;
    line["round"] = rec.round;
    line["genotype"] = rec.genotype.to_string();
    line["accuracy"] = rec.accuracy;
    line["spikes"] = rec.spikes;
    line["fitness"] = rec.fitness;
    line["provenance"] = rec.provenance;
    log << line.dump() << "\n";
  }
  write_text(cfg.out_dir + "/search_log.jsonl", log.str());

  nlohmann::json winner;
  winner["genotype"] = result.best.to_string();
  winner["fitness"] = result.best_fitness;
  winner["n_avg"] = n_avg;
  winner["lambda"] = cfg.lambda;
  winner["evaluations"] = result.log.size();
  for (const auto& rec : result.log)
    if (rec.genotype == result.best) {
      winner["accuracy"] = rec.accuracy;
      winner["spikes"] = rec.spikes;
      break;
    }
  write_text(cfg.out_dir + "/winner.json", winner.dump(2) + "\n");
  write_manifest(cfg, {"resolved_config.json", "search_log.jsonl", "winner.json"});

  std::cout << "search done: best=" << result.best.to_string() << " fitness=" << result.best_fitness
            << " (" << result.log.size() << " evaluations)\n";
  return winner;
}

nlohmann::json cmd_train(const RunConfig& cfg) {
  require_seed(cfg);
  ensure_out_dir(cfg);
  write_resolved_config(cfg);

  DataBundle data = prepare_data(cfg);
  const MacroArch macro = cfg.make_macro();
  const Genotype genotype = resolve_genotype(cfg, macro);
  NetworkPlan plan = assemble(macro, genotype);
  if (cfg.ann) plan = ann_variant(plan);

  Rng init_rng = Rng(cfg.seed).fork(0x696E6974ULL);
  Network net = Network::build(plan, cfg.make_neuron(), cfg.timesteps, init_rng);
  TrainConfig tc = make_train_config(cfg, /*with_cutout=*/true);
  TrainHistory history = train(net, data.train, data.val, tc);
  history.write_csv(cfg.out_dir + "/history.csv");

  SpikeLedger ledger;
  EvalResult final_eval = evaluate(net, data.val, cfg.batch_size, &ledger);
  write_text(cfg.out_dir + "/spike_report.csv", spike_report_csv(ledger));

  nlohmann::json meta;
  meta["kind"] = "model";
  meta["macro"] = macro_to_json(macro);
  meta["genotype"] = genotype.to_string();
  meta["ann"] = cfg.ann;
  meta["timesteps"] = net.timesteps;
  meta["neuron"] = neuron_json(cfg.make_neuron());
  meta["seed"] = cfg.seed;
  meta["data"] = dataset_json(cfg);
  save_checkpoint(cfg.out_dir + "/model.ckpt", meta, net.state());
  write_manifest(cfg, {"resolved_config.json", "history.csv", "spike_report.csv", "model.ckpt"});

  nlohmann::json summary;
  summary["val_acc"] = final_eval.accuracy;
  summary["spikes_per_sample"] = final_eval.spikes_per_sample;
  summary["census"] = plan.census(true);
  summary["params"] = plan.total_params();
  std::cout << "train done: val_acc=" << final_eval.accuracy
            << " spikes/sample=" << final_eval.spikes_per_sample << "\n";
  return summary;
}

nlohmann::json cmd_eval(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("eval requires --checkpoint");
  ensure_out_dir(cfg);
  write_resolved_config(cfg);

  nlohmann::json meta = peek_checkpoint(cfg.checkpoint);
  if (meta.value("kind", "") != "model")
    throw DataError(cfg.checkpoint + ": not a model checkpoint");
  const MacroArch macro = macro_from_json(meta.at("macro"));
  NetworkPlan plan = assemble(macro, Genotype::from_string(meta.at("genotype")));
  if (meta.value("ann", false)) plan = ann_variant(plan);

  Rng dummy_rng(0);
  Network net = Network::build(plan, neuron_from_json(meta.at("neuron")), meta.at("timesteps"),
                               dummy_rng);
  load_checkpoint(cfg.checkpoint, net.state());

  RunConfig data_cfg = cfg;
  dataset_from_json(data_cfg, meta.at("data"));
  DataBundle data = prepare_data(data_cfg);

  SpikeLedger ledger;
  EvalResult r = evaluate(net, data.val, cfg.batch_size, &ledger);
  write_text(cfg.out_dir + "/spike_report.csv", spike_report_csv(ledger));

  nlohmann::json summary;
  summary["accuracy"] = r.accuracy;
  summary["spikes_per_sample"] = r.spikes_per_sample;
  summary["census"] = ledger.census();
  summary["report"] = spike_report_json(ledger);
  write_text(cfg.out_dir + "/eval.json", summary.dump(2) + "\n");
  write_manifest(cfg, {"resolved_config.json", "spike_report.csv", "eval.json"});
  std::cout << "eval: accuracy=" << r.accuracy << " spikes/sample=" << r.spikes_per_sample << "\n";
  return summary;
}

nlohmann::json cmd_census(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  write_resolved_config(cfg);

  const MacroArch macro = cfg.make_macro();
  const Genotype genotype = resolve_genotype(cfg, macro);
  NetworkPlan plan = assemble(macro, genotype);
  if (cfg.ann) plan = ann_variant(plan);

  write_text(cfg.out_dir + "/census.csv", census_report_csv(plan));
  write_text(cfg.out_dir + "/plan.json", plan.to_json().dump(2) + "\n");
  write_manifest(cfg, {"resolved_config.json", "census.csv", "plan.json"});

  const double hwc = static_cast<double>(macro.input_hw()) * macro.input_hw() *
                     macro.initial_channels;
  nlohmann::json summary;
  summary["census"] = plan.census(true);
  summary["census_excl_head"] = plan.census(false);
  summary["census_excl_head_over_hwc"] = static_cast<double>(plan.census(false)) / hwc;
  summary["params"] = plan.total_params();
  summary["space_cardinality"] = space_cardinality(macro);
  std::cout << census_report_csv(plan);
  std::cout << "census/HWC (excl head) = " << summary["census_excl_head_over_hwc"] << "\n";
  std::cout << "search space size = " << summary["space_cardinality"] << "\n";
  return summary;
}

nlohmann::json cmd_ablate_macro(const RunConfig& cfg) {
  require_seed(cfg);
  ensure_out_dir(cfg);
  write_resolved_config(cfg);

  DataBundle data = prepare_data(cfg);
  std::ostringstream csv;
  csv << "macro,fill,val_acc,spikes_per_sample,census\n";
  nlohmann::json rows = nlohmann::json::array();

  for (const std::string& variant : {"snn1", "snn2", "snn3", "snn4"}) {
    RunConfig vc = cfg;
    vc.macro = variant;
    const MacroArch macro = vc.make_macro();
    Genotype fill;
    fill.slots.assign(static_cast<size_t>(slot_count(macro)), block_from_string(cfg.ds_fill));
    NetworkPlan plan = assemble(macro, fill);

    Rng init_rng = Rng(cfg.seed).fork(std::hash<std::string>{}(variant));
    Network net = Network::build(plan, cfg.make_neuron(), cfg.timesteps, init_rng);
    TrainConfig tc = make_train_config(cfg, /*with_cutout=*/true);
    train(net, data.train, data.val, tc);
    EvalResult r = evaluate(net, data.val, cfg.batch_size);

    char line[256];
    std::snprintf(line, sizeof(line), "%s,%s,%.6f,%.4f,%lld\n", variant.c_str(),
                  cfg.ds_fill.c_str(), r.accuracy, r.spikes_per_sample,
                  static_cast<long long>(plan.census(true)));
    csv << line;
    nlohmann::json row;
    row["macro"] = variant;
    row["val_acc"] = r.accuracy;
    row["spikes_per_sample"] = r.spikes_per_sample;
    rows.push_back(row);
    std::cout << line;
  }
  write_text(cfg.out_dir + "/ablate.csv", csv.str());
  write_manifest(cfg, {"resolved_config.json", "ablate.csv"});
  nlohmann::json summary;
  summary["rows"] = rows;
  return summary;
}

}  // namespace spikenas
