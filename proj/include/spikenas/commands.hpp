#pragma once

#include <string>

#include "json.hpp"
#include "spikenas/archspace.hpp"
#include "spikenas/datasets.hpp"
#include "spikenas/evosearch.hpp"
#include "spikenas/neuron.hpp"

namespace spikenas {

// Every run is fully described by one of these; a resolved snapshot is
// written into the run directory so reruns reproduce bit-identical outputs.
struct RunConfig {
  std::string command;
  std::string preset = "desk";  // desk | paper | none

  // dataset
  std::string dataset = "synthetic";  // synthetic | cifar10 | idx
  std::string dataset_dir;            // cifar10/idx root; env SPIKENAS_DATA as fallback
  int subset_per_class = 0;           // 0 = full dataset
  uint64_t split_seed = 7777;         // train/val split and subset selection
  int synth_classes = 10;
  int synth_per_class = 250;
  int synth_hw = 32;
  uint64_t synth_seed = 4242;

  // architecture
  std::string macro = "snn1";
  std::string stem = "standard32";
  int channels = 16;
  int num_classes = 10;
  int voting_k = 10;
  std::string genotype;  // train/eval/census; empty means all-SCB_k3
  std::string ds_fill = "SCB_k3";
  bool ann = false;

  // neuron
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double alpha_init = 0.0;

  // training
  int timesteps = 8;
  int epochs = 600;
  int batch_size = 96;
  double lr = 1e-3;
  double lambda_reg = 0.0;
  bool augment_enabled = true;
  int cutout_length = 16;

  // search
  double lambda = -0.08;
  bool linear_fitness = false;
  double lambda_linear = 0.0;
  int budget = 200;
  int rounds = 10;
  int num_mutation = 10;
  int num_crossover = 10;
  int top_k = 10;
  int pool_size = 20;
  double mutation_ratio = 0.2;
  bool use_random_search = false;

  // io
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = "runs/out";
  std::string checkpoint;  // input checkpoint for search/eval

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  MacroArch make_macro() const;
  NeuronConfig make_neuron() const;
  SearchConfig make_search() const;
};

// Fills command-appropriate defaults for the named preset; explicit flags are
// applied on top by the CLI.
void apply_preset(RunConfig& cfg);

struct DataBundle {
  ImageDataset train, val;
};

// Loads, optionally subsets, splits 8:2 and normalizes with train statistics.
DataBundle prepare_data(const RunConfig& cfg);

// Command entry points. Each writes its artifacts plus resolved_config.json
// and manifest.json under cfg.out_dir and returns a machine-readable summary.
nlohmann::json cmd_train_supernet(const RunConfig& cfg);
nlohmann::json cmd_search(const RunConfig& cfg);
nlohmann::json cmd_train(const RunConfig& cfg);
nlohmann::json cmd_eval(const RunConfig& cfg);
nlohmann::json cmd_census(const RunConfig& cfg);
nlohmann::json cmd_ablate_macro(const RunConfig& cfg);

}  // namespace spikenas
