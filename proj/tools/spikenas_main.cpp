#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "spikenas/commands.hpp"

using namespace spikenas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliState {
  RunConfig cfg;
  std::string config_path;
  bool config_loaded = false;

  // options whose desk/paper defaults apply only when not set explicitly
  CLI::Option* opt_timesteps = nullptr;
  CLI::Option* opt_channels = nullptr;
  CLI::Option* opt_epochs = nullptr;
  CLI::Option* opt_batch = nullptr;
  CLI::Option* opt_subset = nullptr;
  CLI::Option* opt_seed = nullptr;
};

void add_common_options(CLI::App* cmd, CliState& st) {
  cmd->add_option("--config", st.config_path, "load a resolved config JSON as the base");
  cmd->add_option("--preset", st.cfg.preset, "desk | paper | none");
  cmd->add_option("--dataset", st.cfg.dataset, "synthetic | cifar10 | idx");
  cmd->add_option("--data-dir", st.cfg.dataset_dir, "dataset directory");
  st.opt_subset = cmd->add_option("--subset-per-class", st.cfg.subset_per_class,
                                  "stratified subsample size (0 = full)");
  cmd->add_option("--split-seed", st.cfg.split_seed, "train/val split seed");
  cmd->add_option("--synth-classes", st.cfg.synth_classes);
  cmd->add_option("--synth-per-class", st.cfg.synth_per_class);
  cmd->add_option("--synth-seed", st.cfg.synth_seed);
  cmd->add_option("--macro", st.cfg.macro, "snn1 | snn2 | snn3 | snn4 | snn1_ds_slots | snn1_pre_ds_slots");
  cmd->add_option("--stem", st.cfg.stem, "standard32 | deep64 | deep128");
  st.opt_channels = cmd->add_option("--channels", st.cfg.channels, "initial channel count C");
  cmd->add_option("--classes", st.cfg.num_classes);
  cmd->add_option("--voting-k", st.cfg.voting_k);
  cmd->add_option("--genotype", st.cfg.genotype, "comma-separated block tags");
  cmd->add_option("--ds-fill", st.cfg.ds_fill, "snn3 down-sampling block");
  cmd->add_flag("--ann", st.cfg.ann, "replace spiking neurons with ReLU");
  cmd->add_option("--v-threshold", st.cfg.v_threshold);
  cmd->add_option("--v-reset", st.cfg.v_reset);
  st.opt_timesteps = cmd->add_option("--timesteps", st.cfg.timesteps);
  st.opt_epochs = cmd->add_option("--epochs", st.cfg.epochs);
  st.opt_batch = cmd->add_option("--batch-size", st.cfg.batch_size);
  cmd->add_option("--lr", st.cfg.lr);
  cmd->add_option("--lambda-reg", st.cfg.lambda_reg, "spike regularization strength");
  cmd->add_option("--cutout", st.cfg.cutout_length);
  cmd->add_flag("!--no-augment", st.cfg.augment_enabled, "disable augmentation");
  cmd->add_option("--lambda", st.cfg.lambda, "spike-aware fitness exponent (<= 0)");
  cmd->add_flag("--linear-fitness", st.cfg.linear_fitness);
  cmd->add_option("--lambda-linear", st.cfg.lambda_linear);
  cmd->add_option("--budget", st.cfg.budget);
  cmd->add_option("--rounds", st.cfg.rounds);
  cmd->add_option("--mutation-ratio", st.cfg.mutation_ratio);
  cmd->add_flag("--random-search", st.cfg.use_random_search, "budget-matched random baseline");
  st.opt_seed = cmd->add_option("--seed", st.cfg.seed, "run seed (required for training/search)");
  cmd->add_option("--out", st.cfg.out_dir, "run directory");
  cmd->add_option("--checkpoint", st.cfg.checkpoint, "input checkpoint path");
}

RunConfig resolve(CliState& st, const std::string& command) {
  RunConfig cfg;
  if (!st.config_path.empty()) {
    std::ifstream f(st.config_path);
    if (!f) throw ConfigError("cannot open config " + st.config_path);
    cfg = RunConfig::from_json(nlohmann::json::parse(f));
    cfg.command = command;
  } else {
    cfg = st.cfg;
    cfg.command = command;
    apply_preset(cfg);
    // explicit flags win over preset values
    if (st.opt_timesteps->count()) cfg.timesteps = st.cfg.timesteps;
    if (st.opt_channels->count()) cfg.channels = st.cfg.channels;
    if (st.opt_epochs->count()) cfg.epochs = st.cfg.epochs;
    if (st.opt_batch->count()) cfg.batch_size = st.cfg.batch_size;
    if (st.opt_subset->count()) cfg.subset_per_class = st.cfg.subset_per_class;
  }
  if (st.opt_seed->count()) {
    cfg.seed = st.cfg.seed;
    cfg.seed_set = true;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking-network architecture search"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    CliState st;
    std::string name;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  for (const std::string& name :
       {"train-supernet", "search", "train", "eval", "census", "ablate-macro"}) {
    auto sub = std::make_unique<Sub>();
    sub->name = name;
    sub->cmd = app.add_subcommand(name);
    add_common_options(sub->cmd, sub->st);
    subs.push_back(std::move(sub));
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& sub : subs) {
      if (!sub->cmd->parsed()) continue;
      RunConfig cfg = resolve(sub->st, sub->name);
      if (sub->name == "train-supernet") cmd_train_supernet(cfg);
      else if (sub->name == "search") cmd_search(cfg);
      else if (sub->name == "train") cmd_train(cfg);
      else if (sub->name == "eval") cmd_eval(cfg);
      else if (sub->name == "census") cmd_census(cfg);
      else if (sub->name == "ablate-macro") cmd_ablate_macro(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}
