#include "spikenas/evosearch.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "spikenas/errors.hpp"

namespace spikenas {

double fitness(double accuracy, double spikes, double spikes_avg, double lambda) {
  if (lambda == 0.0) return accuracy;
  if (spikes <= 0.0) throw DataError("fitness: spike count must be positive");
  if (spikes_avg <= 0.0) throw DataError("fitness: N_avg must be positive");
  return accuracy * std::pow(spikes / spikes_avg, lambda);
}

double fitness_linear(double accuracy, double spikes, double spikes_avg, double lambda_prime) {
  if (lambda_prime == 0.0) return accuracy;
  if (spikes <= 0.0) throw DataError("fitness: spike count must be positive");
  if (spikes_avg <= 0.0) throw DataError("fitness: N_avg must be positive");
  return accuracy - lambda_prime * (spikes / spikes_avg);
}

Genotype mutate(const Genotype& parent, double rho, const std::vector<BlockKind>& candidates,
                Rng& rng) {
  Genotype child = parent;
  for (auto& slot : child.slots)
    if (rng.bernoulli(rho))
      slot = candidates[static_cast<size_t>(
          rng.uniform_int(static_cast<int64_t>(candidates.size())))];
  return child;
}

Genotype crossover(const Genotype& m1, const Genotype& m2, Rng& rng) {
  if (m1.size() != m2.size()) throw ConfigError("crossover: genotype length mismatch");
  const int64_t len = static_cast<int64_t>(m1.size());
  const int64_t x = 1 + rng.uniform_int(len - 1);  // {1..L-1}
  Genotype child;
  child.slots.assign(m1.slots.begin(), m1.slots.begin() + x);
  child.slots.insert(child.slots.end(), m2.slots.begin() + x, m2.slots.end());
  return child;
}

namespace {

struct SearchState {
  std::unordered_set<std::string> evaluated;
  std::vector<FitnessRecord> log;
  std::vector<int> top;  // indices into log, sorted best-first

  bool seen(const Genotype& g) const { return evaluated.count(g.to_string()) > 0; }

  double score(Evaluator& ev, const Genotype& g, double spikes_avg, const SearchConfig& cfg,
               int round, const std::string& provenance) {
    auto [acc, spikes] = ev.evaluate(g);
    FitnessRecord rec;
    rec.round = round;
    rec.genotype = g;
    rec.accuracy = acc;
    rec.spikes = spikes;
    rec.fitness = cfg.linear_fitness ? fitness_linear(acc, spikes, spikes_avg, cfg.lambda_linear)
                                     : fitness(acc, spikes, spikes_avg, cfg.lambda);
    rec.provenance = provenance;
    evaluated.insert(g.to_string());
    log.push_back(rec);
    return rec.fitness;
  }

  // Global top-k, ties resolved by evaluation order.
  void update_top(int k) {
    std::vector<int> idx(log.size());
    for (size_t i = 0; i < log.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return log[static_cast<size_t>(a)].fitness > log[static_cast<size_t>(b)].fitness;
    });
    if (static_cast<int>(idx.size()) > k) idx.resize(static_cast<size_t>(k));
    top = idx;
  }

  const Genotype& top_parent(Rng& rng) const {
    const int pick = static_cast<int>(rng.uniform_int(static_cast<int64_t>(top.size())));
    return log[static_cast<size_t>(top[static_cast<size_t>(pick)])].genotype;
  }

  SearchResult result() const {
    SearchResult r;
    require(!log.empty(), "search produced no evaluations");
    int best = 0;
    for (size_t i = 1; i < log.size(); ++i)
      if (log[i].fitness > log[static_cast<size_t>(best)].fitness) best = static_cast<int>(i);
    r.best = log[static_cast<size_t>(best)].genotype;
    r.best_fitness = log[static_cast<size_t>(best)].fitness;
    r.log = log;
    return r;
  }
};

}  // namespace

Genotype random_genotype(int slots, const std::vector<BlockKind>& candidates, Rng& rng) {
  Genotype g;
  g.slots.reserve(static_cast<size_t>(slots));
  for (int i = 0; i < slots; ++i)
    g.slots.push_back(candidates[static_cast<size_t>(
        rng.uniform_int(static_cast<int64_t>(candidates.size())))]);
  return g;
}

SearchResult evolve(Evaluator& evaluator, int slots, const std::vector<BlockKind>& candidates,
                    double spikes_avg, const SearchConfig& cfg) {
  if (cfg.num_mutation + cfg.num_crossover > cfg.pool_size)
    throw ConfigError("evolve: p_m + p_c must not exceed the evaluation pool size");

  Rng rng(cfg.seed);
  SearchState state;

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    const int remaining = cfg.budget - static_cast<int>(state.log.size());
    if (remaining <= 0) break;
    const int pool_target = std::min(cfg.pool_size, remaining);

    std::vector<std::pair<Genotype, std::string>> pool;
    std::unordered_set<std::string> in_pool;
    auto offer = [&](const Genotype& g, const std::string& provenance) {
      if (static_cast<int>(pool.size()) >= pool_target) return;
      const std::string key = g.to_string();
      if (state.evaluated.count(key) || in_pool.count(key)) return;
      in_pool.insert(key);
      pool.emplace_back(g, provenance);
    };

    if (round == 1) {
      int attempts = 0;
      while (static_cast<int>(pool.size()) < pool_target && attempts < 1000 * pool_target) {
        offer(random_genotype(slots, candidates, rng), "random");
        ++attempts;
      }
    } else {
      for (int i = 0; i < cfg.num_mutation; ++i)
        offer(mutate(state.top_parent(rng), cfg.mutation_ratio, candidates, rng), "mutation");
      for (int i = 0; i < cfg.num_crossover; ++i)
        offer(crossover(state.top_parent(rng), state.top_parent(rng), rng), "crossover");
      // top up with random samples when evolution stops producing new genotypes
      int attempts = 0;
      while (static_cast<int>(pool.size()) < pool_target && attempts < 1000 * pool_target) {
        offer(random_genotype(slots, candidates, rng), "random");
        ++attempts;
      }
    }
    if (pool.empty()) break;  // search space exhausted

    for (const auto& [g, provenance] : pool)
      state.score(evaluator, g, spikes_avg, cfg, round, provenance);
    state.update_top(cfg.top_k);
  }
  return state.result();
}

SearchResult random_search(Evaluator& evaluator, int slots,
                           const std::vector<BlockKind>& candidates, double spikes_avg,
                           const SearchConfig& cfg) {
  Rng rng(cfg.seed);
  SearchState state;
  int attempts = 0;
  const int attempt_cap = std::max(1000, 1000 * cfg.budget);
  while (static_cast<int>(state.log.size()) < cfg.budget && attempts < attempt_cap) {
    const Genotype g = random_genotype(slots, candidates, rng);
    ++attempts;
    if (state.seen(g)) continue;
    state.score(evaluator, g, spikes_avg, cfg, 1, "random");
  }
  return state.result();
}

}  // namespace spikenas
