#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "spikenas/checkpoint.hpp"
#include "spikenas/commands.hpp"
#include "spikenas/network.hpp"

using namespace spikenas;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "spikenas_cmd" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

RunConfig tiny_base() {
  RunConfig cfg;
  cfg.preset = "none";
  cfg.dataset = "synthetic";
  cfg.synth_classes = 2;
  cfg.synth_per_class = 30;
  cfg.synth_hw = 32;
  cfg.num_classes = 2;
  cfg.channels = 4;
  cfg.timesteps = 2;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.seed = 5;
  cfg.seed_set = true;
  return cfg;
}

uint64_t file_hash(const std::string& path) { return fnv1a64_file(path); }

}  // namespace

TEST_CASE("census command reports the closed-form ratios and cardinality") {
  RunConfig cfg = tiny_base();
  cfg.command = "census";
  cfg.channels = 16;
  cfg.num_classes = 10;
  cfg.out_dir = fresh_dir("census");
  auto summary = cmd_census(cfg);
  CHECK(summary.at("census_excl_head_over_hwc").get<double>() ==
        doctest::Approx(6.4).epsilon(0.01));
  CHECK(summary.at("space_cardinality") == 3125);
  CHECK(fs::exists(cfg.out_dir + "/census.csv"));
  CHECK(fs::exists(cfg.out_dir + "/plan.json"));
  CHECK(fs::exists(cfg.out_dir + "/manifest.json"));
}

TEST_CASE("pipeline: supernet -> two searches -> train -> eval") {
  // supernet
  RunConfig sn_cfg = tiny_base();
  sn_cfg.command = "train-supernet";
  sn_cfg.out_dir = fresh_dir("supernet");
  auto sn_summary = cmd_train_supernet(sn_cfg);
  CHECK(sn_summary.at("n_avg").get<double>() > 0.0);
  const std::string ckpt = sn_cfg.out_dir + "/supernet.ckpt";
  REQUIRE(fs::exists(ckpt));

  // identical rerun gives an identical checkpoint
  RunConfig sn_cfg2 = sn_cfg;
  sn_cfg2.out_dir = fresh_dir("supernet2");
  cmd_train_supernet(sn_cfg2);
  CHECK(file_hash(ckpt) == file_hash(sn_cfg2.out_dir + "/supernet.ckpt"));

  // two lambda values against one frozen checkpoint, no retraining
  std::string dir_s1, dir_s1b;
  auto search_with = [&](double lambda, const std::string& dir, bool random) {
    RunConfig cfg = tiny_base();
    cfg.command = "search";
    cfg.checkpoint = ckpt;
    cfg.lambda = lambda;
    cfg.budget = 30;
    cfg.rounds = 3;
    cfg.pool_size = 10;
    cfg.num_mutation = 4;
    cfg.num_crossover = 4;
    cfg.use_random_search = random;
    cfg.out_dir = fresh_dir(dir);
    auto summary = cmd_search(cfg);
    summary["__dir"] = cfg.out_dir;
    return summary;
  };
  auto w0 = search_with(0.0, "search0", false);
  auto w1 = search_with(-0.08, "search1", false);
  dir_s1 = w1.at("__dir");
  CHECK(w0.at("evaluations").get<int>() <= 30);
  CHECK(w1.at("spikes").get<double>() <= w0.at("spikes").get<double>());

  auto wr = search_with(-0.08, "search_rand", true);
  CHECK(wr.at("evaluations").get<int>() <= 30);

  // search log lines are valid JSON with the full record schema
  std::ifstream real_log(dir_s1 + "/search_log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(real_log, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("round"));
    CHECK(j.contains("genotype"));
    CHECK(j.contains("accuracy"));
    CHECK(j.contains("spikes"));
    CHECK(j.contains("fitness"));
    CHECK(j.contains("provenance"));
    ++lines;
  }
  CHECK(lines == w1.at("evaluations").get<int>());

  // deterministic search rerun
  auto w1b = search_with(-0.08, "search1b", false);
  dir_s1b = w1b.at("__dir");
  CHECK(w1b.at("genotype") == w1.at("genotype"));
  CHECK(file_hash(dir_s1 + "/search_log.jsonl") == file_hash(dir_s1b + "/search_log.jsonl"));

  // train the winner, then eval the checkpoint
  RunConfig tr_cfg = tiny_base();
  tr_cfg.command = "train";
  tr_cfg.genotype = w1.at("genotype");
  tr_cfg.out_dir = fresh_dir("train");
  auto tr_summary = cmd_train(tr_cfg);
  CHECK(fs::exists(tr_cfg.out_dir + "/model.ckpt"));
  CHECK(fs::exists(tr_cfg.out_dir + "/history.csv"));

  RunConfig ev_cfg = tiny_base();
  ev_cfg.command = "eval";
  ev_cfg.checkpoint = tr_cfg.out_dir + "/model.ckpt";
  ev_cfg.out_dir = fresh_dir("eval");
  auto ev_summary = cmd_eval(ev_cfg);
  CHECK(ev_summary.at("accuracy").get<double>() ==
        doctest::Approx(tr_summary.at("val_acc").get<double>()));
}

TEST_CASE("training reruns and config round-trips are byte-identical") {
  RunConfig cfg = tiny_base();
  cfg.command = "train";
  cfg.out_dir = fresh_dir("det1");
  cmd_train(cfg);

  RunConfig cfg2 = cfg;
  cfg2.out_dir = fresh_dir("det2");
  cmd_train(cfg2);
  CHECK(file_hash(cfg.out_dir + "/history.csv") == file_hash(cfg2.out_dir + "/history.csv"));
  CHECK(file_hash(cfg.out_dir + "/model.ckpt") == file_hash(cfg2.out_dir + "/model.ckpt"));

  // resolved-config snapshot reproduces the run exactly
  std::ifstream f(cfg.out_dir + "/resolved_config.json");
  RunConfig from_snapshot = RunConfig::from_json(nlohmann::json::parse(f));
  from_snapshot.out_dir = fresh_dir("det3");
  cmd_train(from_snapshot);
  CHECK(file_hash(cfg.out_dir + "/history.csv") ==
        file_hash(from_snapshot.out_dir + "/history.csv"));
  CHECK(file_hash(cfg.out_dir + "/model.ckpt") == file_hash(from_snapshot.out_dir + "/model.ckpt"));
}

TEST_CASE("eval of a silent checkpoint gives chance accuracy and zero spikes") {
  RunConfig cfg = tiny_base();
  cfg.command = "train";
  cfg.out_dir = fresh_dir("silent");

  // build the same model the train command would, but zero every tensor
  const MacroArch macro = cfg.make_macro();
  Genotype g;
  g.slots.assign(static_cast<size_t>(slot_count(macro)), BlockKind::Scb(3));
  Rng rng(1);
  Network net = Network::build(assemble(macro, g), cfg.make_neuron(), cfg.timesteps, rng);
  for (auto& p : net.state()) p.value->zero();

  nlohmann::json meta;
  meta["kind"] = "model";
  meta["macro"] = macro_to_json(macro);
  meta["genotype"] = g.to_string();
  meta["ann"] = false;
  meta["timesteps"] = cfg.timesteps;
  meta["neuron"] = {{"v_threshold", 1.0}, {"v_reset", 0.0}, {"alpha_init", 0.0}};
  meta["seed"] = cfg.seed;
  meta["data"] = {{"dataset", "synthetic"},      {"dataset_dir", ""},
                  {"subset_per_class", 0},       {"split_seed", cfg.split_seed},
                  {"synth_classes", 2},          {"synth_per_class", 30},
                  {"synth_hw", 32},              {"synth_seed", cfg.synth_seed}};
  const std::string ckpt = cfg.out_dir;
  fs::create_directories(ckpt);
  save_checkpoint(ckpt + "/model.ckpt", meta, net.state());

  RunConfig ev = tiny_base();
  ev.command = "eval";
  ev.checkpoint = ckpt + "/model.ckpt";
  ev.out_dir = fresh_dir("silent_eval");
  auto summary = cmd_eval(ev);
  CHECK(summary.at("spikes_per_sample").get<double>() == 0.0);
  // silent output ties every class; argmax resolves to class 0
  CHECK(summary.at("accuracy").get<double>() == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("config errors: missing dataset, missing seed, macro mismatch") {
  RunConfig cfg = tiny_base();
  cfg.command = "train";
  cfg.dataset = "cifar10";
  cfg.dataset_dir = "";
  cfg.out_dir = fresh_dir("missing_data");
  unsetenv("SPIKENAS_DATA");
  CHECK_THROWS_AS(cmd_train(cfg), DataError);

  RunConfig noseed = tiny_base();
  noseed.command = "train";
  noseed.seed_set = false;
  noseed.out_dir = fresh_dir("noseed");
  CHECK_THROWS_AS(cmd_train(noseed), ConfigError);

  // supernet checkpoint with a different macro than requested
  RunConfig sn_cfg = tiny_base();
  sn_cfg.command = "train-supernet";
  sn_cfg.epochs = 1;
  sn_cfg.out_dir = fresh_dir("sn_mismatch");
  cmd_train_supernet(sn_cfg);
  RunConfig s = tiny_base();
  s.command = "search";
  s.checkpoint = sn_cfg.out_dir + "/supernet.ckpt";
  s.macro = "snn2";
  s.out_dir = fresh_dir("mismatch");
  CHECK_THROWS_AS(cmd_search(s), ConfigError);
}

#ifdef SPIKENAS_CLI_PATH
TEST_CASE("cli binary: exit codes and artifact emission") {
  const std::string cli = SPIKENAS_CLI_PATH;
  const std::string out = fresh_dir("cli_census");
  // census is config-light and fast
  const std::string cmd = cli + " census --preset none --channels 16 --out " + out + " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(out + "/census.csv"));

  // config error -> exit 2 (unknown macro)
  const std::string bad = cli + " census --preset none --macro nope --out " +
                          fresh_dir("cli_bad") + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(bad.c_str())) == 2);

  // data error -> exit 3 (cifar10 without a directory)
  const std::string nodata = cli + " train --preset none --dataset cifar10 --seed 1 --out " +
                             fresh_dir("cli_nodata") + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(nodata.c_str())) == 3);

  // missing seed -> exit 2
  const std::string noseed = cli + " train --preset none --dataset synthetic --out " +
                             fresh_dir("cli_noseed") + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(noseed.c_str())) == 2);
}
#endif
