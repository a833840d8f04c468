// amporder: amplifier reconfiguration order optimizer.
//
// Subcommands mirror the pipeline stages: simulate (one-shot oracle Q),
// sample (labeled dataset), train (digital twin), optimize (GA order search),
// baseline (random-order reference), report (pipeline reusing cached
// artifacts), run (full pipeline from scratch).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "amporder/digital_twin.hpp"
#include "amporder/ga.hpp"
#include "amporder/harness.hpp"
#include "amporder/link_model.hpp"
#include "amporder/reconfig.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = "amporder_out";
  std::optional<std::uint64_t> master_seed;
};

amporder::Scenario load(const CommonArgs& args) {
  amporder::Scenario s = amporder::load_scenario(args.scenario_path);
  if (args.master_seed) amporder::apply_master_seed(s, *args.master_seed);
  return s;
}

std::string out_path(const CommonArgs& args, const char* name) {
  fs::create_directories(args.out_dir);
  return (fs::path(args.out_dir) / name).string();
}

amporder::OaConfig mid_bounds_config(const amporder::LinkSpec& link) {
  amporder::OaConfig c;
  for (const auto& b : link.gain_bounds_db)
    c.gains_db.push_back(amporder::quantize_db((b[0] + b[1]) / 2.0));
  for (const auto& b : link.tilt_bounds_db)
    c.tilts_db.push_back(amporder::quantize_db((b[0] + b[1]) / 2.0));
  return c;
}

amporder::OaConfig read_config_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  f >> j;
  amporder::OaConfig c;
  c.gains_db = j.at("gains_db").get<std::vector<double>>();
  c.tilts_db = j.at("tilts_db").get<std::vector<double>>();
  return c;
}

// Recomputes the seeded artifacts a stage needs, reusing files when allowed.
struct Stages {
  const amporder::Scenario& s;
  const CommonArgs& args;
  bool reuse;

  amporder::Dataset dataset() const {
    const std::string path = out_path(args, "dataset.csv");
    if (reuse && fs::exists(path)) return amporder::read_dataset_csv(path);
    amporder::Rng rng(amporder::derive_seed(s.seeds.sampling, 3));
    auto d = amporder::build_dataset(s.link, s.plan_with_loading(s.current_loading),
                                     s.dataset_count, rng);
    amporder::write_dataset_csv(d, path);
    return d;
  }

  std::pair<amporder::MlpModel, amporder::ValidationReport> model(
      const amporder::Dataset& d) const {
    const std::string path = out_path(args, "model.json");
    if (reuse && fs::exists(path)) return {amporder::load_model(path), {}};
    auto [m, rep] = amporder::train(d, s.train_cfg);
    amporder::save_model(m, path);
    return {std::move(m), rep};
  }

  std::pair<amporder::OaConfig, amporder::OaConfig> endpoints() const {
    amporder::Rng rng_a(amporder::derive_seed(s.seeds.sampling, 1));
    amporder::Rng rng_b(amporder::derive_seed(s.seeds.sampling, 2));
    auto initial = amporder::select_best_config(s.link, s.plan_with_loading(s.initial_loading),
                                                s.candidate_count, rng_a);
    auto target = amporder::select_best_config(s.link, s.plan_with_loading(s.current_loading),
                                               s.candidate_count, rng_b);
    return {initial, target};
  }

  amporder::TransitionScenario transition(const amporder::OaConfig& initial,
                                          const amporder::OaConfig& target) const {
    return {initial, target, s.initial_loading, s.plan_with_loading(s.current_loading)};
  }
};

int cmd_simulate(const CommonArgs& args, const std::string& config_path,
                 const std::string& loading) {
  const amporder::Scenario s = load(args);
  const auto plan =
      s.plan_with_loading(loading == "initial" ? s.initial_loading : s.current_loading);
  const amporder::OaConfig config =
      config_path.empty() ? mid_bounds_config(s.link) : read_config_json(config_path);
  const amporder::QVector q = amporder::evaluate_q(s.link, plan, config);
  ordered_json out;
  out["case_id"] = s.case_id;
  out["loading"] = loading;
  out["config"] = {{"gains_db", config.gains_db}, {"tilts_db", config.tilts_db}};
  ordered_json qj;
  for (int b : plan.loaded_batches) qj[std::to_string(b)] = q.q_db[b];
  out["q_db"] = qj;
  std::cout << out.dump(1) << "\n";
  return 0;
}

int cmd_sample(const CommonArgs& args) {
  const amporder::Scenario s = load(args);
  Stages st{s, args, false};
  const auto d = st.dataset();
  std::cout << "wrote " << d.size() << " labeled configurations to "
            << out_path(args, "dataset.csv") << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const amporder::Scenario s = load(args);
  Stages st{s, args, true};
  const auto d = st.dataset();
  auto [model, rep] = amporder::train(d, s.train_cfg);
  amporder::save_model(model, out_path(args, "model.json"));
  ordered_json out;
  out["train_mse"] = rep.train_mse;
  out["val_mse"] = rep.val_mse;
  out["val_rmse_db"] = rep.val_rmse_db;
  out["val_max_abs_err_db"] = rep.val_max_abs_err_db;
  out["epochs_run"] = rep.epochs_run;
  out["best_epoch"] = rep.best_epoch;
  std::cout << out.dump(1) << "\n";
  return 0;
}

int cmd_optimize(const CommonArgs& args) {
  const amporder::Scenario s = load(args);
  Stages st{s, args, true};
  const auto d = st.dataset();
  auto [model, rep] = st.model(d);
  const auto [initial, target] = st.endpoints();
  const auto transition = st.transition(initial, target);
  const int n_steps = 2 * s.link.n_oa();

  const amporder::FitnessFn dt_fitness = [&](const amporder::ReconfigOrder& order) {
    return amporder::fitness(amporder::trajectory(
        [&](const amporder::OaConfig& c) { return amporder::predict(model, c); }, transition,
        order));
  };
  std::ofstream log(out_path(args, "ga_log.csv"));
  const amporder::GaResult res = amporder::optimize(dt_fitness, s.ga_params, n_steps, &log);

  const auto dt_traj = amporder::trajectory(
      [&](const amporder::OaConfig& c) { return amporder::predict(model, c); }, transition,
      res.best.order);
  amporder::write_trajectory_csv(dt_traj, s.initial_loading, out_path(args, "dt_trajectory.csv"));

  ordered_json out;
  out["order"] = res.best.order;
  out["fitness_dt"] = {{"value", res.best.fitness.value},
                       {"mean_q_db", res.best.fitness.mean_q},
                       {"min_q_db", res.best.fitness.min_q}};
  out["generations"] = res.generations_run;
  out["evaluations"] = res.evaluations;
  out["initial_config"] = {{"gains_db", initial.gains_db}, {"tilts_db", initial.tilts_db}};
  out["target_config"] = {{"gains_db", target.gains_db}, {"tilts_db", target.tilts_db}};
  std::ofstream f(out_path(args, "optimize.json"));
  f << out.dump(1) << "\n";
  std::cout << out.dump(1) << "\n";
  return 0;
}

int cmd_baseline(const CommonArgs& args) {
  const amporder::Scenario s = load(args);
  Stages st{s, args, true};
  const auto [initial, target] = st.endpoints();
  const auto transition = st.transition(initial, target);
  amporder::Rng rng(s.seeds.baseline);
  const auto stats = amporder::run_baseline(s.link, transition, s.baseline_count, rng);

  std::ofstream f(out_path(args, "baseline.csv"));
  f << "index,order,min_q_db,mean_q_db\n";
  for (std::size_t i = 0; i < stats.records.size(); ++i) {
    const auto& r = stats.records[i];
    f << i << ",";
    for (std::size_t k = 0; k < r.order.size(); ++k) f << (k ? "-" : "") << r.order[k];
    char buf[64];
    std::snprintf(buf, sizeof(buf), ",%.12g,%.12g\n", r.min_q_db, r.mean_q_db);
    f << buf;
  }
  const auto mins = stats.sorted_min();
  std::cout << "baseline orders: " << stats.records.size()
            << "  step0 scalar: " << stats.step0_scalar_db
            << " dB  worst min: " << mins.front() << " dB  best min: " << mins.back() << " dB\n";
  return 0;
}

int cmd_run(const CommonArgs& args, bool reuse) {
  amporder::Scenario s = load(args);
  if (reuse) {
    // report: rebuild the full report but reuse dataset/model files if present
    Stages st{s, args, true};
    const auto d = st.dataset();
    auto [model, rep] = st.model(d);
    const auto [initial, target] = st.endpoints();
    const auto transition = st.transition(initial, target);
    const int n_steps = 2 * s.link.n_oa();

    amporder::ExperimentReport r;
    r.scenario = s;
    r.initial_config = initial;
    r.target_config = target;
    r.dt_validation = rep;
    const amporder::FitnessFn dt_fitness = [&](const amporder::ReconfigOrder& order) {
      return amporder::fitness(amporder::trajectory(
          [&](const amporder::OaConfig& c) { return amporder::predict(model, c); }, transition,
          order));
    };
    std::ostringstream log;
    const amporder::GaResult res = amporder::optimize(dt_fitness, s.ga_params, n_steps, &log);
    r.ga_order = res.best.order;
    r.ga_fitness_dt = res.best.fitness;
    r.ga_generations = res.generations_run;
    r.ga_evaluations = res.evaluations;
    r.ga_history = res.history;
    r.ga_log_csv = log.str();
    r.dt_trajectory = amporder::trajectory(
        [&](const amporder::OaConfig& c) { return amporder::predict(model, c); }, transition,
        res.best.order);
    r.replay_trajectory = amporder::trajectory(
        [&](const amporder::OaConfig& c) {
          return amporder::evaluate_q(s.link, transition.plan, c);
        },
        transition, res.best.order);
    amporder::Rng rng(s.seeds.baseline);
    r.baseline = amporder::run_baseline(s.link, transition, s.baseline_count, rng);
    const amporder::FitnessValue replay = r.replay_fitness();
    r.min_q_percentile = amporder::percentile_rank(replay.min_q, r.baseline.sorted_min());
    r.mean_q_percentile = amporder::percentile_rank(replay.mean_q, r.baseline.sorted_mean());
    r.degradation_prevented = replay.min_q >= r.replay_trajectory.scalar_per_state.front() - 0.1;
    amporder::export_report(r, d, model, args.out_dir);
  } else {
    const auto art = amporder::run_experiment_with_artifacts(s);
    amporder::export_report(art.report, art.dataset, art.model, args.out_dir);
  }
  std::ifstream f((fs::path(args.out_dir) / "summary.json").string());
  std::cout << f.rdbuf();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical amplifier reconfiguration order optimizer"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string config_path, loading = "current";

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--scenario", args.scenario_path, "Scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.master_seed,
                    "Master seed overriding the scenario's stage seeds");
    if (needs_out) cmd->add_option("--out", args.out_dir, "Output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "Evaluate oracle Q-factors for one config");
  add_common(simulate, false);
  simulate->add_option("--config", config_path, "Config JSON (gains_db, tilts_db)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--loading", loading, "initial or current")
      ->check(CLI::IsMember({"initial", "current"}));

  auto* sample = app.add_subcommand("sample", "Sample and label a training dataset");
  add_common(sample, true);
  auto* train = app.add_subcommand("train", "Train the digital twin");
  add_common(train, true);
  auto* optimize = app.add_subcommand("optimize", "GA search for the best order");
  add_common(optimize, true);
  auto* baseline = app.add_subcommand("baseline", "Replay random orders on the oracle");
  add_common(baseline, true);
  auto* report = app.add_subcommand("report", "Full report, reusing cached artifacts");
  add_common(report, true);
  auto* run = app.add_subcommand("run", "Full pipeline from scratch");
  add_common(run, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(args, config_path, loading);
    if (sample->parsed()) return cmd_sample(args);
    if (train->parsed()) return cmd_train(args);
    if (optimize->parsed()) return cmd_optimize(args);
    if (baseline->parsed()) return cmd_baseline(args);
    if (report->parsed()) return cmd_run(args, true);
    if (run->parsed()) return cmd_run(args, false);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
