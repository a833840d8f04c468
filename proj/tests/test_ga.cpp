#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "amporder/ga.hpp"

using namespace amporder;

namespace {

// Rearrangement-inequality fitness: maximized by the ascending order.
FitnessValue weighted_fitness(const ReconfigOrder& order) {
  double v = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) v += static_cast<double>(i + 1) * order[i];
  return {v, v, 0.0};
}

}  // namespace

TEST_SUITE("ga") {

TEST_CASE("population initialization") {
  GaParams params;
  Rng rng(5);
  const auto pop = init_population(params, 14, rng);
  REQUIRE(pop.size() == 64);
  for (const auto& order : pop) CHECK(is_permutation_of_steps(order, 14));

  Rng a(9), b(9);
  CHECK(init_population(params, 14, a) == init_population(params, 14, b));

  Rng c(1);
  CHECK_THROWS(init_population(params, 1, c));
}

TEST_CASE("truncation selection keeps the top half, ties by index") {
  std::vector<double> distinct(64);
  std::iota(distinct.begin(), distinct.end(), 1.0);
  const auto survivors = select_parents(distinct);
  REQUIRE(survivors.size() == 32);
  CHECK(survivors[0] == 63);  // highest value first
  for (std::size_t i : survivors) CHECK(distinct[i] >= 33.0);

  const std::vector<double> equal(64, 5.0);
  const auto first_half = select_parents(equal);
  for (std::size_t i = 0; i < first_half.size(); ++i) CHECK(first_half[i] == i);

  std::vector<double> with_best(10, 1.0);
  with_best[7] = 9.0;
  const auto keep = select_parents(with_best);
  CHECK(std::find(keep.begin(), keep.end(), 7) != keep.end());
}

TEST_CASE("pmx hand example and identity") {
  const ReconfigOrder a{1, 2, 3, 4, 5};
  const ReconfigOrder b{5, 4, 3, 2, 1};
  const auto [child_a, child_b] = pmx(a, b, 2, 4);
  CHECK(child_a == ReconfigOrder{5, 2, 3, 4, 1});
  CHECK(child_b == ReconfigOrder{1, 4, 3, 2, 5});
  CHECK(child_a[2] == a[2]);
  CHECK(child_a[3] == a[3]);

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    int c1 = static_cast<int>(rng.uniform_below(6));
    int c2 = static_cast<int>(rng.uniform_below(5));
    if (c2 >= c1) ++c2;
    if (c1 > c2) std::swap(c1, c2);
    const auto [ia, ib] = pmx(a, a, c1, c2);
    CHECK(ia == a);
    CHECK(ib == a);
  }

  CHECK_THROWS(pmx(a, b, 2, 2));
  CHECK_THROWS(pmx(a, b, -1, 3));
  CHECK_THROWS(pmx(a, b, 1, 6));
}

TEST_CASE("pmx always yields valid permutations") {
  Rng rng(11);
  const int n = 14;
  ReconfigOrder base(n);
  std::iota(base.begin(), base.end(), 1);
  for (int trial = 0; trial < 2000; ++trial) {
    ReconfigOrder a = base, b = base;
    rng.shuffle(a);
    rng.shuffle(b);
    int c1 = static_cast<int>(rng.uniform_below(n + 1));
    int c2 = static_cast<int>(rng.uniform_below(n));
    if (c2 >= c1) ++c2;
    if (c1 > c2) std::swap(c1, c2);
    const auto [ca, cb] = pmx(a, b, c1, c2);
    CHECK(is_permutation_of_steps(ca, n));
    CHECK(is_permutation_of_steps(cb, n));
  }
}

TEST_CASE("mutation is a single random transposition") {
  const ReconfigOrder order{1, 2, 3, 4, 5, 6, 7, 8};

  Rng none(4);
  CHECK(mutate(order, 0.0, none) == order);

  Rng always(4);
  for (int trial = 0; trial < 50; ++trial) {
    const ReconfigOrder mutated = mutate(order, 1.0, always);
    CHECK(is_permutation_of_steps(mutated, 8));
    std::vector<std::size_t> diff;
    for (std::size_t i = 0; i < order.size(); ++i)
      if (mutated[i] != order[i]) diff.push_back(i);
    REQUIRE(diff.size() == 2);
    CHECK(mutated[diff[0]] == order[diff[1]]);
    CHECK(mutated[diff[1]] == order[diff[0]]);

    // swapping back restores the original
    ReconfigOrder restored = mutated;
    std::swap(restored[diff[0]], restored[diff[1]]);
    CHECK(restored == order);
  }
}

TEST_CASE("optimizer converges after the stagnation patience on a flat landscape") {
  const FitnessFn constant = [](const ReconfigOrder&) { return FitnessValue{4.0, 2.0, 2.0}; };
  GaParams params;
  params.seed = 31;
  const GaResult res = optimize(constant, params, 14);
  CHECK(res.generations_run == params.patience_generations + 1);
  CHECK(res.best.fitness.value == 4.0);
}

TEST_CASE("optimizer is deterministic and monotone") {
  GaParams params;
  params.seed = 17;
  const GaResult a = optimize(weighted_fitness, params, 10);
  const GaResult b = optimize(weighted_fitness, params, 10);
  CHECK(a.best.order == b.best.order);
  CHECK(a.best.fitness.value == b.best.fitness.value);
  CHECK(a.generations_run == b.generations_run);
  CHECK(a.evaluations == b.evaluations);

  for (std::size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i] >= a.history[i - 1]);
  CHECK(a.history.back() == a.best.fitness.value);
  CHECK(a.evaluations <= static_cast<std::int64_t>(params.pop_size) * a.generations_run);
}

TEST_CASE("optimizer finds the known optimum of a separable objective") {
  GaParams params;
  params.seed = 23;
  const GaResult res = optimize(weighted_fitness, params, 6);
  const auto [bf_order, bf_value] = brute_force_best(weighted_fitness, 6);
  CHECK(bf_order == ReconfigOrder{1, 2, 3, 4, 5, 6});
  CHECK(res.best.fitness.value == bf_value.value);
}

TEST_CASE("optimizer writes a generation log") {
  GaParams params;
  params.seed = 2;
  std::ostringstream log;
  const GaResult res = optimize(weighted_fitness, params, 8, &log);
  std::istringstream in(log.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == res.generations_run + 1);  // header + one line per generation
  CHECK(log.str().rfind("generation,best_fitness,mean_fitness", 0) == 0);
}

TEST_CASE("brute force enumeration") {
  int calls = 0;
  const FitnessFn counting = [&](const ReconfigOrder& order) {
    ++calls;
    return weighted_fitness(order);
  };
  brute_force_best(counting, 2);
  CHECK(calls == 2);
  calls = 0;
  brute_force_best(counting, 6);
  CHECK(calls == 720);

  // lexicographically-first maximizer under a constant fitness
  const FitnessFn constant = [](const ReconfigOrder&) { return FitnessValue{1.0, 0.5, 0.5}; };
  const auto [order, value] = brute_force_best(constant, 4);
  CHECK(order == ReconfigOrder{1, 2, 3, 4});

  CHECK_THROWS(brute_force_best(constant, 9));
}

}  // TEST_SUITE
