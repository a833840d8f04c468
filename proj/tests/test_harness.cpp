#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "amporder/harness.hpp"

using namespace amporder;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const char* name) {
  return (fs::path(AMPORDER_SCENARIO_DIR) / name).string();
}

// A shrunk pipeline configuration: same structure, fast enough for unit tests.
Scenario small_scenario() {
  Scenario s = load_scenario(scenario_path("case1.json"));
  s.link = make_link(2, 80.0, 0.2, 5.0, 193.4, 1000.0, {15.0, 17.0}, {-1.2, 1.2});
  s.plan.n_batches = 2;
  s.plan.channels_per_batch = 7;
  s.initial_loading = {0};
  s.current_loading = {0, 1};
  s.candidate_count = 40;
  s.baseline_count = 25;
  s.dataset_count = 150;
  s.train_cfg.hidden_width = 16;
  s.train_cfg.max_epochs = 200;
  s.train_cfg.patience = 200;
  s.validate();
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("bundled scenarios load with the documented loading pattern") {
  const Scenario c1 = load_scenario(scenario_path("case1.json"));
  CHECK(c1.case_id == "case1");
  CHECK(c1.initial_loading.size() == 1);
  CHECK(c1.current_loading.size() == 6);
  CHECK(c1.candidate_count == 500);
  CHECK(c1.baseline_count == 100);
  CHECK(c1.dataset_count == 1000);
  CHECK(c1.ga_params.pop_size == 64);
  CHECK(c1.ga_params.p_crossover == 0.8);
  CHECK(c1.ga_params.p_mutation == 0.1);
  CHECK(c1.ga_params.patience_generations == 20);
  CHECK(c1.link.n_oa() == 7);

  const Scenario c2 = load_scenario(scenario_path("case2.json"));
  CHECK(c2.initial_loading.size() == 2);
}

TEST_CASE("scenario errors name the offending field") {
  const auto tmp = fs::temp_directory_path() / "amporder_bad_scenario.json";
  {
    std::ofstream f(tmp);
    f << R"({"case_id": "bad", "link": {"gain_bounds_db": [15,17], "tilt_bounds_db": [-1,1]},
          "initial_loading": [0]})";
  }
  try {
    load_scenario(tmp.string());
    FAIL("expected a validation error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("spans") != std::string::npos);
  }
  fs::remove(tmp);

  CHECK_THROWS(load_scenario("/nonexistent/amporder.json"));
}

TEST_CASE("master seed override reseeds every stage") {
  Scenario s = load_scenario(scenario_path("case2.json"));
  const StageSeeds before = s.seeds;
  apply_master_seed(s, 42);
  CHECK(s.seeds.sampling != before.sampling);
  CHECK(s.seeds.training != before.training);
  CHECK(s.seeds.ga != before.ga);
  CHECK(s.seeds.baseline != before.baseline);
  CHECK(s.train_cfg.seed == s.seeds.training);
  CHECK(s.ga_params.seed == s.seeds.ga);

  Scenario t = load_scenario(scenario_path("case2.json"));
  apply_master_seed(t, 42);
  CHECK(t.seeds.sampling == s.seeds.sampling);
}

TEST_CASE("percentile rank counts strictly smaller samples") {
  std::vector<double> samples(100);
  std::iota(samples.begin(), samples.end(), 0.0);
  CHECK(percentile_rank(1000.0, samples) == 1.0);
  CHECK(percentile_rank(-5.0, samples) == 0.0);
  CHECK(percentile_rank(0.0, samples) == 0.0);  // ties are not "below"

  // a value exceeding 197 of 200 samples ranks at 0.985
  std::vector<double> two_hundred(200);
  std::iota(two_hundred.begin(), two_hundred.end(), 0.0);
  CHECK(percentile_rank(196.5, two_hundred) == doctest::Approx(0.985));

  CHECK_THROWS(percentile_rank(1.0, {}));
}

TEST_CASE("baseline replay statistics") {
  const Scenario s = small_scenario();
  const ChannelPlan plan = s.plan_with_loading(s.current_loading);
  Rng sampler(402);
  const auto configs = sample_configs(s.link, 2, sampler);
  TransitionScenario tr{configs[0], configs[1], s.initial_loading, plan};

  Rng rng_a(7);
  const BaselineStats stats = run_baseline(s.link, tr, 25, rng_a);
  REQUIRE(stats.records.size() == 25);
  for (const auto& r : stats.records) {
    CHECK(is_permutation_of_steps(r.order, 6));
    CHECK(r.min_q_db <= r.mean_q_db);
  }
  const auto mins = stats.sorted_min();
  CHECK(std::is_sorted(mins.begin(), mins.end()));

  Rng rng_b(7);
  const BaselineStats again = run_baseline(s.link, tr, 25, rng_b);
  for (std::size_t i = 0; i < stats.records.size(); ++i) {
    CHECK(stats.records[i].order == again.records[i].order);
    CHECK(stats.records[i].min_q_db == again.records[i].min_q_db);
  }

  // flat transition: every record collapses onto the shared constant
  TransitionScenario flat{configs[0], configs[0], s.initial_loading, plan};
  Rng rng_c(8);
  const BaselineStats fstats = run_baseline(s.link, flat, 10, rng_c);
  for (const auto& r : fstats.records) {
    CHECK(r.min_q_db == fstats.step0_scalar_db);
    CHECK(r.mean_q_db == doctest::Approx(fstats.step0_scalar_db).epsilon(1e-12));
  }
}

TEST_CASE("experiment pipeline produces a consistent report") {
  const Scenario s = small_scenario();
  const ExperimentReport r = run_experiment(s);

  CHECK(r.scenario.initial_loading.size() == 1);
  CHECK(is_permutation_of_steps(r.ga_order, 6));
  CHECK(r.min_q_percentile >= 0.0);
  CHECK(r.min_q_percentile <= 1.0);
  CHECK(r.mean_q_percentile >= 0.0);
  CHECK(r.mean_q_percentile <= 1.0);
  CHECK(r.replay_trajectory.states.size() == 7);
  CHECK(r.dt_trajectory.states.size() == 7);
  CHECK(r.replay_trajectory.states.front() == r.initial_config);
  CHECK(r.replay_trajectory.states.back() == r.target_config);

  // endpoint agreement with every baseline replay
  const QVector q0 = evaluate_q(s.link, s.plan_with_loading(s.current_loading), r.initial_config);
  double scalar0 = q0.q_db[s.initial_loading[0]];
  CHECK(r.replay_trajectory.scalar_per_state.front() == scalar0);
  CHECK(r.baseline.step0_scalar_db == scalar0);
}

TEST_CASE("report export is complete and byte-stable") {
  const Scenario s = small_scenario();
  const ExperimentArtifacts art = run_experiment_with_artifacts(s);

  const auto dir_a = fs::temp_directory_path() / "amporder_report_a";
  const auto dir_b = fs::temp_directory_path() / "amporder_report_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  export_report(art.report, art.dataset, art.model, dir_a.string());

  const char* files[] = {"summary.json",  "dt_trajectory.csv", "replay_trajectory.csv",
                         "baseline.csv",  "baseline_cdf.csv",  "ga_log.csv",
                         "dataset.csv",   "model.json"};
  for (const char* name : files) CHECK(fs::exists(dir_a / name));

  // trajectory CSV: header + one row per state
  CHECK(count_lines(read_file((dir_a / "replay_trajectory.csv").string())) == 8);

  // CDF reaches exactly 1 on its last row
  const std::string cdf = read_file((dir_a / "baseline_cdf.csv").string());
  std::istringstream in(cdf);
  std::string line, last;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  CHECK(last.find(",1,") != std::string::npos);

  // seeds echoed into the summary
  const std::string summary = read_file((dir_a / "summary.json").string());
  CHECK(summary.find("\"seeds\"") != std::string::npos);
  CHECK(summary.find("\"sampling\"") != std::string::npos);

  // a rerun of the same pipeline exports identical bytes
  const ExperimentArtifacts again = run_experiment_with_artifacts(s);
  export_report(again.report, again.dataset, again.model, dir_b.string());
  for (const char* name : files)
    CHECK(read_file((dir_a / name).string()) == read_file((dir_b / name).string()));

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("distinct initial configurations with a shared target are all protected") {
  // oracle-backed variant of the multi-scenario protocol, for both cases
  for (const char* name : {"case1.json", "case2.json"}) {
    Scenario s = load_scenario(scenario_path(name));
    const ChannelPlan plan_c = s.plan_with_loading(s.current_loading);
    const ChannelPlan plan_i = s.plan_with_loading(s.initial_loading);
    Rng target_rng(derive_seed(s.seeds.sampling, 2));
    const OaConfig target = select_best_config(s.link, plan_c, s.candidate_count, target_rng);

    const QModel oracle = [&](const OaConfig& c) { return evaluate_q(s.link, plan_c, c); };
    for (std::uint64_t variant = 1; variant <= 3; ++variant) {
      Rng init_rng(derive_seed(s.seeds.sampling + variant, 1));
      const OaConfig initial = select_best_config(s.link, plan_i, s.candidate_count, init_rng);
      const TransitionScenario tr{initial, target, s.initial_loading, plan_c};
      const FitnessFn fit = [&](const ReconfigOrder& o) {
        return fitness(trajectory(oracle, tr, o));
      };
      GaParams params = s.ga_params;
      params.seed = s.seeds.ga + variant;
      const GaResult res = optimize(fit, params, 2 * s.link.n_oa());
      const Trajectory traj = trajectory(oracle, tr, res.best.order);
      const double step0 = traj.scalar_per_state.front();
      const double min_q = fitness(traj).min_q;
      CHECK(min_q >= step0 - 0.1);
    }
  }
}

}  // TEST_SUITE
