#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spikenas/archspace.hpp"

namespace spikenas {

struct SearchConfig {
  double lambda = -0.08;        // exponent of the spike discount; <= 0
  bool linear_fitness = false;  // use accuracy - lambda' * (N / N_avg) instead
  double lambda_linear = 0.0;
  int max_rounds = 10;
  double mutation_ratio = 0.2;
  int num_mutation = 10;   // p_m
  int num_crossover = 10;  // p_c
  int top_k = 10;
  int pool_size = 20;  // p
  int budget = 200;    // B, unique evaluations
  uint64_t seed = 0;
};

// accuracy * (N / N_avg)^lambda. With lambda == 0 the discount vanishes and
// N is not consulted; otherwise N and N_avg must be positive.
double fitness(double accuracy, double spikes, double spikes_avg, double lambda);

// accuracy - lambda' * (N / N_avg)
double fitness_linear(double accuracy, double spikes, double spikes_avg, double lambda_prime);

// Each slot is independently resampled from the candidates with probability
// rho (possibly redrawing the same tag).
Genotype mutate(const Genotype& parent, double rho, const std::vector<BlockKind>& candidates,
                Rng& rng);

// First X slots from m1, the rest from m2, X uniform in {1..L-1}.
Genotype crossover(const Genotype& m1, const Genotype& m2, Rng& rng);

struct FitnessRecord {
  int round = 0;
  Genotype genotype;
  double accuracy = 0.0;
  double spikes = 0.0;  // per-sample N
  double fitness = 0.0;
  std::string provenance;  // random | mutation | crossover
};

// Anything that can score a genotype: (accuracy, per-sample spike count).
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::pair<double, double> evaluate(const Genotype& genotype) = 0;
};

struct SearchResult {
  Genotype best;
  double best_fitness = 0.0;
  std::vector<FitnessRecord> log;  // one record per unique evaluation
};

// Uniform i.i.d. genotype over an abstract slot grid.
Genotype random_genotype(int slots, const std::vector<BlockKind>& candidates, Rng& rng);

// Evolutionary search over a frozen evaluator: round 1 seeds the pool with
// random genotypes; later rounds propose mutants and crossovers of the top-k
// pool, top up with random samples, and never evaluate a genotype twice.
SearchResult evolve(Evaluator& evaluator, int slots, const std::vector<BlockKind>& candidates,
                    double spikes_avg, const SearchConfig& cfg);

// Budget-matched baseline: B distinct random genotypes, best fitness wins.
SearchResult random_search(Evaluator& evaluator, int slots,
                           const std::vector<BlockKind>& candidates, double spikes_avg,
                           const SearchConfig& cfg);

}  // namespace spikenas
