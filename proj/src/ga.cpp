#include "amporder/ga.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace amporder {

namespace {

constexpr double kConvergenceTolDb = 1e-9;

std::string order_key(const ReconfigOrder& order) {
  std::string key;
  key.reserve(order.size());
  for (int id : order) key.push_back(static_cast<char>(id));
  return key;
}

}  // namespace

void GaParams::validate() const {
  if (pop_size < 4 || pop_size % 2 != 0)
    throw std::invalid_argument("pop_size: must be even and >= 4");
  if (p_crossover < 0 || p_crossover > 1)
    throw std::invalid_argument("p_crossover: must be in [0,1]");
  if (p_mutation < 0 || p_mutation > 1)
    throw std::invalid_argument("p_mutation: must be in [0,1]");
  if (patience_generations < 1) throw std::invalid_argument("patience_generations: must be >= 1");
  if (max_generations < 1) throw std::invalid_argument("max_generations: must be >= 1");
  if (elitism < 0 || elitism > pop_size / 2)
    throw std::invalid_argument("elitism: must be in [0, pop_size/2]");
}

std::vector<ReconfigOrder> init_population(const GaParams& params, int n_steps, Rng& rng) {
  if (n_steps < 2) throw std::invalid_argument("n_steps: must be >= 2");
  ReconfigOrder base(n_steps);
  std::iota(base.begin(), base.end(), 1);
  std::vector<ReconfigOrder> pop;
  pop.reserve(params.pop_size);
  for (int i = 0; i < params.pop_size; ++i) {
    ReconfigOrder order = base;
    rng.shuffle(order);
    pop.push_back(std::move(order));
  }
  return pop;
}

std::vector<std::size_t> select_parents(const std::vector<double>& fitness_values) {
  std::vector<std::size_t> idx(fitness_values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return fitness_values[a] > fitness_values[b];
  });
  idx.resize(fitness_values.size() / 2);
  return idx;
}

std::pair<ReconfigOrder, ReconfigOrder> pmx(const ReconfigOrder& parent_a,
                                            const ReconfigOrder& parent_b, int cut1, int cut2) {
  const int n = static_cast<int>(parent_a.size());
  if (static_cast<int>(parent_b.size()) != n)
    throw std::invalid_argument("pmx: parents must have equal length");
  if (cut1 < 0 || cut2 > n || cut1 >= cut2)
    throw std::invalid_argument("pmx: cuts must satisfy 0 <= cut1 < cut2 <= n");

  auto make_child = [&](const ReconfigOrder& a, const ReconfigOrder& b) {
    ReconfigOrder child(n);
    // position of each value in a, and which values the copied segment holds
    std::vector<int> pos_in_a(n + 1);
    std::vector<bool> in_segment(n + 1, false);
    for (int i = 0; i < n; ++i) pos_in_a[a[i]] = i;
    for (int i = cut1; i < cut2; ++i) {
      child[i] = a[i];
      in_segment[a[i]] = true;
    }
    for (int i = 0; i < n; ++i) {
      if (i >= cut1 && i < cut2) continue;
      int v = b[i];
      while (in_segment[v]) v = b[pos_in_a[v]];  // follow the a->b mapping
      child[i] = v;
    }
    return child;
  };
  return {make_child(parent_a, parent_b), make_child(parent_b, parent_a)};
}

ReconfigOrder mutate(ReconfigOrder order, double p_mutation, Rng& rng) {
  if (rng.uniform01() < p_mutation && order.size() >= 2) {
    const std::size_t i = rng.uniform_below(order.size());
    std::size_t j = rng.uniform_below(order.size() - 1);
    if (j >= i) ++j;
    std::swap(order[i], order[j]);
  }
  return order;
}

GaResult optimize(const FitnessFn& fitness_fn, const GaParams& params, int n_steps,
                  std::ostream* log_csv) {
  params.validate();
  Rng rng(params.seed);
  std::vector<ReconfigOrder> pop = init_population(params, n_steps, rng);

  std::unordered_map<std::string, FitnessValue> cache;
  std::int64_t evaluations = 0;
  auto evaluate = [&](const ReconfigOrder& order) -> FitnessValue {
    const std::string key = order_key(order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    FitnessValue f = fitness_fn(order);
    if (!std::isfinite(f.value))
      throw std::runtime_error("optimize: fitness function returned a non-finite value");
    ++evaluations;
    cache.emplace(std::move(key), f);
    return f;
  };

  GaResult result;
  result.best.fitness.value = -std::numeric_limits<double>::infinity();
  std::vector<double> values(pop.size());
  int stagnant = 0;

  if (log_csv) *log_csv << "generation,best_fitness,mean_fitness\n";
  auto log_generation = [&](int gen) {
    if (!log_csv) return;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    char line[96];
    std::snprintf(line, sizeof(line), "%d,%.12g,%.12g\n", gen, result.best.fitness.value, mean);
    *log_csv << line;
  };

  for (int gen = 1; gen <= params.max_generations; ++gen) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      const FitnessValue f = evaluate(pop[i]);
      values[i] = f.value;
      if (f.value > result.best.fitness.value) result.best = {pop[i], f};
    }
    result.generations_run = gen;
    const double prev_best = result.history.empty() ? -std::numeric_limits<double>::infinity()
                                                    : result.history.back();
    result.history.push_back(result.best.fitness.value);
    log_generation(gen);
    if (result.best.fitness.value - prev_best < kConvergenceTolDb) {
      if (++stagnant >= params.patience_generations) break;
    } else {
      stagnant = 0;
    }
    if (gen == params.max_generations) break;

    // survivors, best first
    const std::vector<std::size_t> keep = select_parents(values);
    std::vector<ReconfigOrder> next;
    next.reserve(pop.size());
    for (std::size_t i : keep) next.push_back(pop[i]);

    const std::size_t n_survivors = next.size();
    while (next.size() < pop.size()) {
      std::size_t i = rng.uniform_below(n_survivors);
      std::size_t j = rng.uniform_below(n_survivors - 1);
      if (j >= i) ++j;
      ReconfigOrder child_a = next[i], child_b = next[j];
      if (rng.uniform01() < params.p_crossover) {
        int cut1 = static_cast<int>(rng.uniform_below(n_steps + 1));
        int cut2 = static_cast<int>(rng.uniform_below(n_steps));
        if (cut2 >= cut1) ++cut2;
        if (cut1 > cut2) std::swap(cut1, cut2);
        std::tie(child_a, child_b) = pmx(next[i], next[j], cut1, cut2);
      }
      next.push_back(std::move(child_a));
      if (next.size() < pop.size()) next.push_back(std::move(child_b));
    }
    for (std::size_t i = params.elitism; i < next.size(); ++i)
      next[i] = mutate(std::move(next[i]), params.p_mutation, rng);
    pop = std::move(next);
  }

  result.evaluations = evaluations;
  return result;
}

std::pair<ReconfigOrder, FitnessValue> brute_force_best(const FitnessFn& fitness_fn,
                                                        int n_steps) {
  if (n_steps < 1 || n_steps > 8)
    throw std::invalid_argument("brute_force_best: n_steps must be in 1..8");
  ReconfigOrder order(n_steps);
  std::iota(order.begin(), order.end(), 1);
  ReconfigOrder best_order;
  FitnessValue best;
  best.value = -std::numeric_limits<double>::infinity();
  do {
    const FitnessValue f = fitness_fn(order);
    if (f.value > best.value) {
      best = f;
      best_order = order;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return {best_order, best};
}

}  // namespace amporder
