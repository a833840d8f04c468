#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "amporder/reconfig.hpp"
#include "amporder/rng.hpp"

namespace amporder {

struct GaParams {
  int pop_size = 64;
  double p_crossover = 0.8;
  double p_mutation = 0.1;
  int patience_generations = 20;   // stop after this many stagnant generations
  int max_generations = 500;
  int elitism = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Individual {
  ReconfigOrder order;
  FitnessValue fitness;
};

struct GaResult {
  Individual best;
  int generations_run = 0;
  std::vector<double> history;     // best-so-far fitness per generation
  std::int64_t evaluations = 0;    // fitness function calls (cache misses)
};

using FitnessFn = std::function<FitnessValue(const ReconfigOrder&)>;

// pop_size uniformly random permutations of {1..n_steps}.
std::vector<ReconfigOrder> init_population(const GaParams& params, int n_steps, Rng& rng);

// Truncation selection: indices of the top half by fitness value, earlier
// index winning ties; result is ordered best-first.
std::vector<std::size_t> select_parents(const std::vector<double>& fitness_values);

// Partially matched crossover on the segment [cut1, cut2). Values landing on
// a duplicate are corrected through the segment's a<->b mapping, so both
// children are valid permutations.
std::pair<ReconfigOrder, ReconfigOrder> pmx(const ReconfigOrder& parent_a,
                                            const ReconfigOrder& parent_b, int cut1, int cut2);

// With probability p_mutation, swaps two distinct random positions.
ReconfigOrder mutate(ReconfigOrder order, double p_mutation, Rng& rng);

// Generation loop: evaluate, keep the top half, refill with PMX offspring of
// uniformly paired survivors, mutate everything but the elite. Stops when the
// best fitness has not moved by more than 1e-9 for patience_generations
// generations, or at max_generations. Returns the best ever seen.
GaResult optimize(const FitnessFn& fitness_fn, const GaParams& params, int n_steps,
                  std::ostream* log_csv = nullptr);

// Exhaustive search over all n_steps! orders; refuses n_steps > 8. Returns the
// lexicographically first maximizer.
std::pair<ReconfigOrder, FitnessValue> brute_force_best(const FitnessFn& fitness_fn, int n_steps);

}  // namespace amporder
