#include "amporder/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace amporder {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kDegradationTolDb = 0.1;

[[noreturn]] void scenario_error(const std::string& field, const std::string& why) {
  throw std::runtime_error("scenario: field '" + field + "' " + why);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) scenario_error(path.empty() ? key : path + "." + key, "is missing");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<std::array<double, 2>> parse_bounds(const json& j, int n_oa, const std::string& path) {
  if (!j.is_array() || j.empty()) scenario_error(path, "must be [min,max] or a list of pairs");
  if (j.size() == 2 && j[0].is_number())
    return std::vector<std::array<double, 2>>(n_oa, {j[0].get<double>(), j[1].get<double>()});
  if (static_cast<int>(j.size()) != n_oa)
    scenario_error(path, "must list one [min,max] pair per OA");
  std::vector<std::array<double, 2>> out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

std::string order_to_string(const ReconfigOrder& order) {
  std::string s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) s += "-";
    s += std::to_string(order[i]);
  }
  return s;
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

ChannelPlan Scenario::plan_with_loading(const std::vector<int>& loaded) const {
  ChannelPlan p = plan;
  p.loaded_batches = loaded;
  std::sort(p.loaded_batches.begin(), p.loaded_batches.end());
  p.existing_batches = initial_loading;
  p.validate();
  return p;
}

void Scenario::validate() const {
  link.validate();
  if (initial_loading.empty()) scenario_error("initial_loading", "must be nonempty");
  if (current_loading.empty()) scenario_error("current_loading", "must be nonempty");
  for (int b : initial_loading)
    if (std::find(current_loading.begin(), current_loading.end(), b) == current_loading.end())
      scenario_error("initial_loading", "must be a subset of current_loading");
  if (initial_loading.size() >= current_loading.size())
    scenario_error("initial_loading", "must be a strict subset of current_loading");
  if (candidate_count < 1) scenario_error("candidate_count", "must be >= 1");
  if (baseline_count < 1) scenario_error("baseline_count", "must be >= 1");
  if (dataset_count < 10) scenario_error("dataset_count", "must be >= 10");
  plan_with_loading(initial_loading);
  plan_with_loading(current_loading);
  train_cfg.validate();
  ga_params.validate();
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("scenario: cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario: parse error in " + path + ": " + e.what());
  }

  Scenario s;
  s.case_id = get_or<std::string>(j, "case_id", "unnamed");

  const json& link = require(j, "link", "");
  const json& spans = require(link, "spans", "link");
  if (spans.is_object()) {
    const int count = require(spans, "count", "link.spans").get<int>();
    FiberSpan span;
    span.length_km = get_or(spans, "length_km", span.length_km);
    span.loss_db_per_km = get_or(spans, "loss_db_per_km", span.loss_db_per_km);
    span.nli_coeff_w2 = get_or(spans, "nli_coeff_w2", span.nli_coeff_w2);
    s.link.spans.assign(count, span);
  } else if (spans.is_array()) {
    for (const auto& sj : spans) {
      FiberSpan span;
      span.length_km = get_or(sj, "length_km", span.length_km);
      span.loss_db_per_km = get_or(sj, "loss_db_per_km", span.loss_db_per_km);
      span.nli_coeff_w2 = get_or(sj, "nli_coeff_w2", span.nli_coeff_w2);
      s.link.spans.push_back(span);
    }
  } else {
    scenario_error("link.spans", "must be a list of spans or {count, ...}");
  }
  const int n_oa = static_cast<int>(s.link.spans.size()) + 1;
  s.link.oa_roles.assign(n_oa, OaRole::Inline);
  s.link.oa_roles.front() = OaRole::Booster;
  s.link.oa_roles.back() = OaRole::Preamp;
  s.link.nf_db = get_or(link, "nf_db", 5.0);
  s.link.center_freq_thz = get_or(link, "center_freq_thz", 193.4);
  s.link.gain_bounds_db = parse_bounds(require(link, "gain_bounds_db", "link"), n_oa, "link.gain_bounds_db");
  s.link.tilt_bounds_db = parse_bounds(require(link, "tilt_bounds_db", "link"), n_oa, "link.tilt_bounds_db");

  const json plan = j.value("plan", json::object());
  s.plan.n_batches = get_or(plan, "n_batches", 6);
  s.plan.channels_per_batch = get_or(plan, "channels_per_batch", 7);
  s.plan.spacing_ghz = get_or(plan, "spacing_ghz", 75.0);
  s.plan.symbol_rate_gbaud = get_or(plan, "symbol_rate_gbaud", 63.9);
  s.plan.launch_power_dbm = get_or(plan, "launch_power_dbm", -16.0);

  s.initial_loading = require(j, "initial_loading", "").get<std::vector<int>>();
  std::vector<int> all_batches(s.plan.n_batches);
  std::iota(all_batches.begin(), all_batches.end(), 0);
  s.current_loading = get_or(j, "current_loading", all_batches);
  s.candidate_count = get_or(j, "candidate_count", 500);
  s.baseline_count = get_or(j, "baseline_count", 100);
  s.dataset_count = get_or(j, "dataset_count", 1000);

  const json train = j.value("train", json::object());
  s.train_cfg.hidden_width = get_or(train, "hidden_width", s.train_cfg.hidden_width);
  s.train_cfg.learning_rate = get_or(train, "learning_rate", s.train_cfg.learning_rate);
  s.train_cfg.max_epochs = get_or(train, "max_epochs", s.train_cfg.max_epochs);
  s.train_cfg.batch_size = get_or(train, "batch_size", s.train_cfg.batch_size);
  s.train_cfg.patience = get_or(train, "patience", s.train_cfg.patience);

  const json ga = j.value("ga", json::object());
  s.ga_params.pop_size = get_or(ga, "pop_size", s.ga_params.pop_size);
  s.ga_params.p_crossover = get_or(ga, "p_crossover", s.ga_params.p_crossover);
  s.ga_params.p_mutation = get_or(ga, "p_mutation", s.ga_params.p_mutation);
  s.ga_params.patience_generations = get_or(ga, "patience_generations", s.ga_params.patience_generations);
  s.ga_params.max_generations = get_or(ga, "max_generations", s.ga_params.max_generations);

  const json seeds = j.value("seeds", json::object());
  s.seeds.sampling = get_or<std::uint64_t>(seeds, "sampling", 1);
  s.seeds.training = get_or<std::uint64_t>(seeds, "training", 2);
  s.seeds.ga = get_or<std::uint64_t>(seeds, "ga", 3);
  s.seeds.baseline = get_or<std::uint64_t>(seeds, "baseline", 4);
  s.train_cfg.seed = s.seeds.training;
  s.ga_params.seed = s.seeds.ga;

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("scenario: " + std::string(e.what()));
  }
  return s;
}

void apply_master_seed(Scenario& scenario, std::uint64_t master) {
  scenario.seeds.sampling = derive_seed(master, 1);
  scenario.seeds.training = derive_seed(master, 2);
  scenario.seeds.ga = derive_seed(master, 3);
  scenario.seeds.baseline = derive_seed(master, 4);
  scenario.train_cfg.seed = scenario.seeds.training;
  scenario.ga_params.seed = scenario.seeds.ga;
}

std::vector<double> BaselineStats::sorted_min() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.min_q_db);
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<double> BaselineStats::sorted_mean() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.mean_q_db);
  std::sort(v.begin(), v.end());
  return v;
}

BaselineStats run_baseline(const LinkSpec& link, const TransitionScenario& transition, int count,
                           Rng& rng) {
  if (count < 1) throw std::invalid_argument("count: must be >= 1");
  const int n_steps = 2 * static_cast<int>(transition.initial.gains_db.size());
  const QModel oracle = [&](const OaConfig& c) { return evaluate_q(link, transition.plan, c); };

  BaselineStats stats;
  stats.records.reserve(count);
  ReconfigOrder base(n_steps);
  std::iota(base.begin(), base.end(), 1);
  for (int i = 0; i < count; ++i) {
    ReconfigOrder order = base;
    rng.shuffle(order);
    const Trajectory traj = trajectory(oracle, transition, order);
    const FitnessValue f = fitness(traj);
    if (i == 0) stats.step0_scalar_db = traj.scalar_per_state.front();
    stats.records.push_back({std::move(order), f.min_q, f.mean_q});
  }
  return stats;
}

double percentile_rank(double value, const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("samples: must be nonempty");
  std::size_t below = 0;
  for (double s : samples)
    if (s < value) ++below;
  return static_cast<double>(below) / static_cast<double>(samples.size());
}

namespace {

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + std::string(name) + ": " + e.what());
  }
}

}  // namespace

ExperimentArtifacts run_experiment_with_artifacts(const Scenario& scenario) {
  scenario.validate();
  const LinkSpec& link = scenario.link;
  const ChannelPlan plan_initial = scenario.plan_with_loading(scenario.initial_loading);
  const ChannelPlan plan_current = scenario.plan_with_loading(scenario.current_loading);

  ExperimentArtifacts art;
  ExperimentReport& rep = art.report;
  rep.scenario = scenario;

  rep.initial_config = run_stage("select_initial", [&] {
    Rng rng(derive_seed(scenario.seeds.sampling, 1));
    return select_best_config(link, plan_initial, scenario.candidate_count, rng);
  });
  rep.target_config = run_stage("select_target", [&] {
    Rng rng(derive_seed(scenario.seeds.sampling, 2));
    return select_best_config(link, plan_current, scenario.candidate_count, rng);
  });
  art.dataset = run_stage("sample_dataset", [&] {
    Rng rng(derive_seed(scenario.seeds.sampling, 3));
    return build_dataset(link, plan_current, scenario.dataset_count, rng);
  });
  run_stage("train_twin", [&] {
    auto [model, report] = train(art.dataset, scenario.train_cfg);
    art.model = std::move(model);
    rep.dt_validation = report;
    return 0;
  });

  const TransitionScenario transition{rep.initial_config, rep.target_config,
                                      scenario.initial_loading, plan_current};
  const int n_steps = 2 * link.n_oa();

  run_stage("ga_search", [&] {
    const FitnessFn dt_fitness = [&](const ReconfigOrder& order) {
      return fitness(trajectory([&](const OaConfig& c) { return predict(art.model, c); },
                                transition, order));
    };
    std::ostringstream log;
    const GaResult res = optimize(dt_fitness, scenario.ga_params, n_steps, &log);
    rep.ga_order = res.best.order;
    rep.ga_fitness_dt = res.best.fitness;
    rep.ga_generations = res.generations_run;
    rep.ga_evaluations = res.evaluations;
    rep.ga_history = res.history;
    rep.ga_log_csv = log.str();
    return 0;
  });

  run_stage("replay", [&] {
    rep.dt_trajectory = trajectory(
        [&](const OaConfig& c) { return predict(art.model, c); }, transition, rep.ga_order);
    rep.replay_trajectory = trajectory(
        [&](const OaConfig& c) { return evaluate_q(link, plan_current, c); }, transition,
        rep.ga_order);
    return 0;
  });

  rep.baseline = run_stage("baseline", [&] {
    Rng rng(scenario.seeds.baseline);
    return run_baseline(link, transition, scenario.baseline_count, rng);
  });

  run_stage("rank", [&] {
    const FitnessValue replay = rep.replay_fitness();
    rep.min_q_percentile = percentile_rank(replay.min_q, rep.baseline.sorted_min());
    rep.mean_q_percentile = percentile_rank(replay.mean_q, rep.baseline.sorted_mean());
    rep.degradation_prevented =
        replay.min_q >= rep.replay_trajectory.scalar_per_state.front() - kDegradationTolDb;
    return 0;
  });

  return art;
}

ExperimentReport run_experiment(const Scenario& scenario) {
  return run_experiment_with_artifacts(scenario).report;
}

namespace {

ordered_json scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["case_id"] = s.case_id;
  ordered_json spans = ordered_json::array();
  for (const auto& sp : s.link.spans)
    spans.push_back({{"length_km", sp.length_km},
                     {"loss_db_per_km", sp.loss_db_per_km},
                     {"nli_coeff_w2", sp.nli_coeff_w2}});
  j["link"] = {{"spans", spans},
               {"nf_db", s.link.nf_db},
               {"center_freq_thz", s.link.center_freq_thz},
               {"gain_bounds_db", s.link.gain_bounds_db},
               {"tilt_bounds_db", s.link.tilt_bounds_db}};
  j["plan"] = {{"n_batches", s.plan.n_batches},
               {"channels_per_batch", s.plan.channels_per_batch},
               {"spacing_ghz", s.plan.spacing_ghz},
               {"symbol_rate_gbaud", s.plan.symbol_rate_gbaud},
               {"launch_power_dbm", s.plan.launch_power_dbm}};
  j["initial_loading"] = s.initial_loading;
  j["current_loading"] = s.current_loading;
  j["candidate_count"] = s.candidate_count;
  j["baseline_count"] = s.baseline_count;
  j["dataset_count"] = s.dataset_count;
  j["train"] = {{"hidden_width", s.train_cfg.hidden_width},
                {"learning_rate", s.train_cfg.learning_rate},
                {"max_epochs", s.train_cfg.max_epochs},
                {"batch_size", s.train_cfg.batch_size},
                {"patience", s.train_cfg.patience}};
  j["ga"] = {{"pop_size", s.ga_params.pop_size},
             {"p_crossover", s.ga_params.p_crossover},
             {"p_mutation", s.ga_params.p_mutation},
             {"patience_generations", s.ga_params.patience_generations},
             {"max_generations", s.ga_params.max_generations}};
  j["seeds"] = {{"sampling", s.seeds.sampling},
                {"training", s.seeds.training},
                {"ga", s.seeds.ga},
                {"baseline", s.seeds.baseline}};
  return j;
}

ordered_json config_to_json(const OaConfig& c) {
  return {{"gains_db", c.gains_db}, {"tilts_db", c.tilts_db}};
}

}  // namespace

void export_report(const ExperimentReport& report, const Dataset& dataset,
                   const MlpModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

  write_trajectory_csv(report.dt_trajectory, report.scenario.initial_loading,
                       path("dt_trajectory.csv"));
  write_trajectory_csv(report.replay_trajectory, report.scenario.initial_loading,
                       path("replay_trajectory.csv"));

  {
    std::ofstream f(path("baseline.csv"));
    if (!f) throw std::runtime_error("export_report: cannot open baseline.csv");
    f << "index,order,min_q_db,mean_q_db\n";
    for (std::size_t i = 0; i < report.baseline.records.size(); ++i) {
      const auto& r = report.baseline.records[i];
      f << i << "," << order_to_string(r.order) << "," << fmt_num(r.min_q_db) << ","
        << fmt_num(r.mean_q_db) << "\n";
    }
  }
  {
    const auto mins = report.baseline.sorted_min();
    const auto means = report.baseline.sorted_mean();
    std::ofstream f(path("baseline_cdf.csv"));
    if (!f) throw std::runtime_error("export_report: cannot open baseline_cdf.csv");
    f << "rank,min_q_db,min_cdf,mean_q_db,mean_cdf\n";
    const double n = static_cast<double>(mins.size());
    for (std::size_t i = 0; i < mins.size(); ++i)
      f << (i + 1) << "," << fmt_num(mins[i]) << "," << fmt_num((i + 1) / n) << ","
        << fmt_num(means[i]) << "," << fmt_num((i + 1) / n) << "\n";
  }
  {
    std::ofstream f(path("ga_log.csv"));
    if (!f) throw std::runtime_error("export_report: cannot open ga_log.csv");
    f << report.ga_log_csv;
  }
  write_dataset_csv(dataset, path("dataset.csv"));
  save_model(model, path("model.json"));

  const FitnessValue replay = report.replay_fitness();
  ordered_json j;
  j["scenario"] = scenario_to_json(report.scenario);
  j["initial_config"] = config_to_json(report.initial_config);
  j["target_config"] = config_to_json(report.target_config);
  j["dt_validation"] = {{"train_mse", report.dt_validation.train_mse},
                        {"val_mse", report.dt_validation.val_mse},
                        {"val_rmse_db", report.dt_validation.val_rmse_db},
                        {"val_max_abs_err_db", report.dt_validation.val_max_abs_err_db},
                        {"epochs_run", report.dt_validation.epochs_run},
                        {"best_epoch", report.dt_validation.best_epoch}};
  j["ga"] = {{"order", report.ga_order},
             {"order_string", order_to_string(report.ga_order)},
             {"fitness_dt", {{"value", report.ga_fitness_dt.value},
                             {"mean_q_db", report.ga_fitness_dt.mean_q},
                             {"min_q_db", report.ga_fitness_dt.min_q}}},
             {"generations", report.ga_generations},
             {"evaluations", report.ga_evaluations}};
  j["replay"] = {{"mean_q_db", replay.mean_q},
                 {"min_q_db", replay.min_q},
                 {"step0_scalar_db", report.replay_trajectory.scalar_per_state.front()},
                 {"final_scalar_db", report.replay_trajectory.scalar_per_state.back()}};
  j["baseline"] = {{"count", report.baseline.records.size()},
                   {"step0_scalar_db", report.baseline.step0_scalar_db}};
  j["min_q_percentile"] = report.min_q_percentile;
  j["mean_q_percentile"] = report.mean_q_percentile;
  j["degradation_prevented"] = report.degradation_prevented;
  j["files"] = {"dt_trajectory.csv", "replay_trajectory.csv", "baseline.csv",
                "baseline_cdf.csv",  "ga_log.csv",            "dataset.csv",
                "model.json"};
  std::ofstream f(path("summary.json"));
  if (!f) throw std::runtime_error("export_report: cannot open summary.json");
  f << j.dump(1) << "\n";
}

}  // namespace amporder
