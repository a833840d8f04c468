#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amporder/digital_twin.hpp"
#include "amporder/ga.hpp"
#include "amporder/link_model.hpp"
#include "amporder/reconfig.hpp"

namespace amporder {

struct StageSeeds {
  std::uint64_t sampling = 1;
  std::uint64_t training = 2;
  std::uint64_t ga = 3;
  std::uint64_t baseline = 4;
};

// One experiment definition, read from a JSON scenario file. Field names
// carry units; omitted fields take the defaults below and are echoed back
// into the report.
struct Scenario {
  std::string case_id;
  LinkSpec link;
  ChannelPlan plan;                   // loading fields filled per stage
  std::vector<int> initial_loading;   // batches carrying traffic before the change
  std::vector<int> current_loading;   // loading the transition happens under
  int candidate_count = 500;
  int baseline_count = 100;
  int dataset_count = 1000;
  TrainConfig train_cfg;
  GaParams ga_params;
  StageSeeds seeds;

  ChannelPlan plan_with_loading(const std::vector<int>& loaded) const;
  void validate() const;
};

Scenario load_scenario(const std::string& path);
// Re-seeds all stage streams from one master seed.
void apply_master_seed(Scenario& scenario, std::uint64_t master);

struct BaselineRecord {
  ReconfigOrder order;
  double min_q_db = 0.0;
  double mean_q_db = 0.0;
};

// Random orders replayed on the oracle; the empirical reference the GA result
// is ranked against.
struct BaselineStats {
  std::vector<BaselineRecord> records;
  double step0_scalar_db = 0.0;

  std::vector<double> sorted_min() const;
  std::vector<double> sorted_mean() const;
};

BaselineStats run_baseline(const LinkSpec& link, const TransitionScenario& transition, int count,
                           Rng& rng);

// Fraction of samples strictly below value.
double percentile_rank(double value, const std::vector<double>& samples);

struct ExperimentReport {
  Scenario scenario;                 // defaults resolved
  OaConfig initial_config;
  OaConfig target_config;
  ValidationReport dt_validation;
  ReconfigOrder ga_order;
  FitnessValue ga_fitness_dt;        // fitness of the best order under the DT
  int ga_generations = 0;
  std::int64_t ga_evaluations = 0;
  std::vector<double> ga_history;
  std::string ga_log_csv;
  Trajectory dt_trajectory;
  Trajectory replay_trajectory;      // oracle replay: source of truth
  BaselineStats baseline;
  double min_q_percentile = 0.0;
  double mean_q_percentile = 0.0;
  bool degradation_prevented = false;

  FitnessValue replay_fitness() const { return fitness(replay_trajectory); }
};

// The full pipeline: select initial/target configs, build + train the twin,
// GA search on the twin, oracle replay, random baseline, percentile ranks.
ExperimentReport run_experiment(const Scenario& scenario);

// Writes summary.json, trajectory CSVs, baseline CSVs, the GA log, the
// dataset and model checkpoint into dir. Byte-stable for fixed seeds.
void export_report(const ExperimentReport& report, const Dataset& dataset,
                   const MlpModel& model, const std::string& dir);

// run_experiment + export_report with the artifacts kept together.
struct ExperimentArtifacts {
  ExperimentReport report;
  Dataset dataset;
  MlpModel model;
};
ExperimentArtifacts run_experiment_with_artifacts(const Scenario& scenario);

}  // namespace amporder
