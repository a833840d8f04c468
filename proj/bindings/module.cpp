#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "amporder/digital_twin.hpp"
#include "amporder/ga.hpp"
#include "amporder/harness.hpp"
#include "amporder/link_model.hpp"
#include "amporder/reconfig.hpp"
#include "amporder/rng.hpp"

namespace py = pybind11;
using namespace amporder;

PYBIND11_MODULE(amporder, m) {
  m.doc() = "Digital-twin assisted search for optical amplifier reconfiguration orders";

  // link model
  py::class_<FiberSpan>(m, "FiberSpan")
      .def(py::init<>())
      .def(py::init([](double length_km, double loss_db_per_km, double nli_coeff_w2) {
             return FiberSpan{length_km, loss_db_per_km, nli_coeff_w2};
           }),
           py::arg("length_km"), py::arg("loss_db_per_km"), py::arg("nli_coeff_w2"))
      .def_readwrite("length_km", &FiberSpan::length_km)
      .def_readwrite("loss_db_per_km", &FiberSpan::loss_db_per_km)
      .def_readwrite("nli_coeff_w2", &FiberSpan::nli_coeff_w2)
      .def("loss_db", &FiberSpan::loss_db);

  py::enum_<OaRole>(m, "OaRole")
      .value("Booster", OaRole::Booster)
      .value("Inline", OaRole::Inline)
      .value("Preamp", OaRole::Preamp);

  py::class_<LinkSpec>(m, "LinkSpec")
      .def(py::init<>())
      .def_readwrite("spans", &LinkSpec::spans)
      .def_readwrite("oa_roles", &LinkSpec::oa_roles)
      .def_readwrite("nf_db", &LinkSpec::nf_db)
      .def_readwrite("center_freq_thz", &LinkSpec::center_freq_thz)
      .def_readwrite("gain_bounds_db", &LinkSpec::gain_bounds_db)
      .def_readwrite("tilt_bounds_db", &LinkSpec::tilt_bounds_db)
      .def_property_readonly("n_oa", &LinkSpec::n_oa)
      .def("validate", &LinkSpec::validate);

  m.def("make_link", &make_link, py::arg("n_spans"), py::arg("span_km"),
        py::arg("loss_db_per_km"), py::arg("nf_db"), py::arg("center_freq_thz"),
        py::arg("nli_coeff_w2"), py::arg("gain_bounds_db"), py::arg("tilt_bounds_db"));

  py::class_<ChannelPlan>(m, "ChannelPlan")
      .def(py::init<>())
      .def_readwrite("n_batches", &ChannelPlan::n_batches)
      .def_readwrite("channels_per_batch", &ChannelPlan::channels_per_batch)
      .def_readwrite("spacing_ghz", &ChannelPlan::spacing_ghz)
      .def_readwrite("symbol_rate_gbaud", &ChannelPlan::symbol_rate_gbaud)
      .def_readwrite("launch_power_dbm", &ChannelPlan::launch_power_dbm)
      .def_readwrite("loaded_batches", &ChannelPlan::loaded_batches)
      .def_readwrite("existing_batches", &ChannelPlan::existing_batches)
      .def("validate", &ChannelPlan::validate);

  py::class_<OaConfig>(m, "OaConfig")
      .def(py::init<>())
      .def(py::init([](std::vector<double> gains, std::vector<double> tilts) {
             return OaConfig{std::move(gains), std::move(tilts)};
           }),
           py::arg("gains_db"), py::arg("tilts_db"))
      .def_readwrite("gains_db", &OaConfig::gains_db)
      .def_readwrite("tilts_db", &OaConfig::tilts_db)
      .def("__eq__", [](const OaConfig& a, const OaConfig& b) { return a == b; });

  py::class_<QVector>(m, "QVector").def_readonly("q_db", &QVector::q_db);

  py::class_<GridChannel>(m, "GridChannel")
      .def_readonly("batch", &GridChannel::batch)
      .def_readonly("channel", &GridChannel::channel)
      .def_readonly("freq_thz", &GridChannel::freq_thz);

  py::class_<StagePowers>(m, "StagePowers")
      .def_readonly("stage", &StagePowers::stage)
      .def_readonly("power_dbm", &StagePowers::power_dbm);

  m.def("channel_grid", &channel_grid, py::arg("plan"), py::arg("center_freq_thz"));
  m.def("band_limits", &band_limits, py::arg("plan"), py::arg("center_freq_thz"));
  m.def("per_channel_gain", &per_channel_gain, py::arg("config"), py::arg("oa_index"),
        py::arg("freq_thz"), py::arg("band"));
  m.def("propagate", &propagate, py::arg("link"), py::arg("plan"), py::arg("config"));
  m.def("ase_injection_w", &ase_injection_w, py::arg("nf_db"), py::arg("gain_db"),
        py::arg("freq_thz"), py::arg("symbol_rate_gbaud"));
  m.def("accumulate_ase", &accumulate_ase, py::arg("link"), py::arg("plan"), py::arg("config"));
  m.def("estimate_nli", &estimate_nli, py::arg("link"), py::arg("plan"), py::arg("config"));
  m.def("evaluate_q", &evaluate_q, py::arg("link"), py::arg("plan"), py::arg("config"));

  // digital twin
  py::class_<Dataset>(m, "Dataset")
      .def_readwrite("features", &Dataset::features)
      .def_readwrite("targets", &Dataset::targets)
      .def_readwrite("feature_bounds", &Dataset::feature_bounds)
      .def_readwrite("target_batches", &Dataset::target_batches)
      .def_readwrite("n_batches_total", &Dataset::n_batches_total)
      .def_readwrite("train_count", &Dataset::train_count)
      .def_property_readonly("size", &Dataset::size);

  py::class_<MlpModel>(m, "MlpModel")
      .def_property_readonly("input_width", &MlpModel::input_width)
      .def_property_readonly("hidden_width", &MlpModel::hidden_width)
      .def_property_readonly("output_width", &MlpModel::output_width)
      .def_readonly("output_batches", &MlpModel::output_batches)
      .def("forward", &MlpModel::forward, py::arg("features"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("hidden_width", &TrainConfig::hidden_width)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("train_mse", &ValidationReport::train_mse)
      .def_readonly("val_mse", &ValidationReport::val_mse)
      .def_readonly("val_rmse_db", &ValidationReport::val_rmse_db)
      .def_readonly("val_max_abs_err_db", &ValidationReport::val_max_abs_err_db)
      .def_readonly("epochs_run", &ValidationReport::epochs_run)
      .def_readonly("best_epoch", &ValidationReport::best_epoch);

  m.def(
      "sample_configs",
      [](const LinkSpec& link, int n, std::uint64_t seed) {
        Rng rng(seed);
        return sample_configs(link, n, rng);
      },
      py::arg("link"), py::arg("n"), py::arg("seed"));
  m.def("feature_bounds_of", &feature_bounds_of, py::arg("link"));
  m.def("normalize", &normalize, py::arg("config"), py::arg("bounds"));
  m.def("denormalize", &denormalize, py::arg("features"), py::arg("bounds"));
  m.def(
      "build_dataset",
      [](const LinkSpec& link, const ChannelPlan& plan, int n, std::uint64_t seed,
         double train_fraction) {
        Rng rng(seed);
        return build_dataset(link, plan, n, rng, train_fraction);
      },
      py::arg("link"), py::arg("plan"), py::arg("n"), py::arg("seed"),
      py::arg("train_fraction") = 0.7);
  m.def("train", &train, py::arg("dataset"), py::arg("config"));
  m.def("predict", &predict, py::arg("model"), py::arg("config"));
  m.def("grad_check", &grad_check, py::arg("model"), py::arg("x"), py::arg("y"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("write_dataset_csv", &write_dataset_csv, py::arg("dataset"), py::arg("path"));
  m.def("read_dataset_csv", &read_dataset_csv, py::arg("path"));

  // reconfiguration process
  py::enum_<StepParam>(m, "StepParam")
      .value("Gain", StepParam::Gain)
      .value("Tilt", StepParam::Tilt);

  py::class_<ReconfigStep>(m, "ReconfigStep")
      .def_readonly("oa_index", &ReconfigStep::oa_index)
      .def_readonly("param", &ReconfigStep::param)
      .def_readonly("step_id", &ReconfigStep::step_id);

  py::class_<TransitionScenario>(m, "TransitionScenario")
      .def(py::init<>())
      .def(py::init([](OaConfig initial, OaConfig target, std::vector<int> monitored,
                       ChannelPlan plan) {
             return TransitionScenario{std::move(initial), std::move(target),
                                       std::move(monitored), std::move(plan)};
           }),
           py::arg("initial"), py::arg("target"), py::arg("monitored"), py::arg("plan"))
      .def_readwrite("initial", &TransitionScenario::initial)
      .def_readwrite("target", &TransitionScenario::target)
      .def_readwrite("monitored", &TransitionScenario::monitored)
      .def_readwrite("plan", &TransitionScenario::plan);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("states", &Trajectory::states)
      .def_readonly("q_per_state", &Trajectory::q_per_state)
      .def_readonly("scalar_per_state", &Trajectory::scalar_per_state);

  py::class_<FitnessValue>(m, "FitnessValue")
      .def(py::init<>())
      .def(py::init([](double mean_q, double min_q) {
             return FitnessValue{mean_q + min_q, mean_q, min_q};
           }),
           py::arg("mean_q"), py::arg("min_q"))
      .def_readwrite("value", &FitnessValue::value)
      .def_readwrite("mean_q", &FitnessValue::mean_q)
      .def_readwrite("min_q", &FitnessValue::min_q)
      .def("__repr__", [](const FitnessValue& f) {
        std::ostringstream ss;
        ss << "FitnessValue(value=" << f.value << ", mean_q=" << f.mean_q
           << ", min_q=" << f.min_q << ")";
        return ss.str();
      });

  m.def("step_catalog", &step_catalog, py::arg("n_oa"));
  m.def("step_for_id", &step_for_id, py::arg("step_id"), py::arg("n_oa"));
  m.def("is_permutation_of_steps", &is_permutation_of_steps, py::arg("order"),
        py::arg("n_steps"));
  m.def("intermediate_config", &intermediate_config, py::arg("scenario"), py::arg("order"),
        py::arg("k"));
  m.def("trajectory", &trajectory, py::arg("q_model"), py::arg("scenario"), py::arg("order"));
  m.def("fitness", &fitness, py::arg("trajectory"));
  m.def(
      "select_best_config",
      [](const LinkSpec& link, const ChannelPlan& plan, int n_candidates, std::uint64_t seed) {
        Rng rng(seed);
        return select_best_config(link, plan, n_candidates, rng);
      },
      py::arg("link"), py::arg("plan"), py::arg("n_candidates"), py::arg("seed"));

  // genetic algorithm
  py::class_<GaParams>(m, "GaParams")
      .def(py::init<>())
      .def_readwrite("pop_size", &GaParams::pop_size)
      .def_readwrite("p_crossover", &GaParams::p_crossover)
      .def_readwrite("p_mutation", &GaParams::p_mutation)
      .def_readwrite("patience_generations", &GaParams::patience_generations)
      .def_readwrite("max_generations", &GaParams::max_generations)
      .def_readwrite("elitism", &GaParams::elitism)
      .def_readwrite("seed", &GaParams::seed);

  py::class_<Individual>(m, "Individual")
      .def_readonly("order", &Individual::order)
      .def_readonly("fitness", &Individual::fitness);

  py::class_<GaResult>(m, "GaResult")
      .def_readonly("best", &GaResult::best)
      .def_readonly("generations_run", &GaResult::generations_run)
      .def_readonly("history", &GaResult::history)
      .def_readonly("evaluations", &GaResult::evaluations);

  m.def(
      "init_population",
      [](const GaParams& params, int n_steps, std::uint64_t seed) {
        Rng rng(seed);
        return init_population(params, n_steps, rng);
      },
      py::arg("params"), py::arg("n_steps"), py::arg("seed"));
  m.def("select_parents", &select_parents, py::arg("fitness_values"));
  m.def("pmx", &pmx, py::arg("parent_a"), py::arg("parent_b"), py::arg("cut1"), py::arg("cut2"));
  m.def(
      "mutate",
      [](ReconfigOrder order, double p_mutation, std::uint64_t seed) {
        Rng rng(seed);
        return mutate(std::move(order), p_mutation, rng);
      },
      py::arg("order"), py::arg("p_mutation"), py::arg("seed"));
  m.def(
      "optimize",
      [](const FitnessFn& fitness_fn, const GaParams& params, int n_steps) {
        return optimize(fitness_fn, params, n_steps, nullptr);
      },
      py::arg("fitness_fn"), py::arg("params"), py::arg("n_steps"));
  m.def("brute_force_best", &brute_force_best, py::arg("fitness_fn"), py::arg("n_steps"));

  // harness
  py::class_<StageSeeds>(m, "StageSeeds")
      .def_readwrite("sampling", &StageSeeds::sampling)
      .def_readwrite("training", &StageSeeds::training)
      .def_readwrite("ga", &StageSeeds::ga)
      .def_readwrite("baseline", &StageSeeds::baseline);

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("case_id", &Scenario::case_id)
      .def_readwrite("link", &Scenario::link)
      .def_readwrite("plan", &Scenario::plan)
      .def_readwrite("initial_loading", &Scenario::initial_loading)
      .def_readwrite("current_loading", &Scenario::current_loading)
      .def_readwrite("candidate_count", &Scenario::candidate_count)
      .def_readwrite("baseline_count", &Scenario::baseline_count)
      .def_readwrite("dataset_count", &Scenario::dataset_count)
      .def_readwrite("train_cfg", &Scenario::train_cfg)
      .def_readwrite("ga_params", &Scenario::ga_params)
      .def_readwrite("seeds", &Scenario::seeds)
      .def("plan_with_loading", &Scenario::plan_with_loading)
      .def("validate", &Scenario::validate);

  py::class_<BaselineRecord>(m, "BaselineRecord")
      .def_readonly("order", &BaselineRecord::order)
      .def_readonly("min_q_db", &BaselineRecord::min_q_db)
      .def_readonly("mean_q_db", &BaselineRecord::mean_q_db);

  py::class_<BaselineStats>(m, "BaselineStats")
      .def_readonly("records", &BaselineStats::records)
      .def_readonly("step0_scalar_db", &BaselineStats::step0_scalar_db)
      .def("sorted_min", &BaselineStats::sorted_min)
      .def("sorted_mean", &BaselineStats::sorted_mean);

  py::class_<ExperimentReport>(m, "ExperimentReport")
      .def_readonly("scenario", &ExperimentReport::scenario)
      .def_readonly("initial_config", &ExperimentReport::initial_config)
      .def_readonly("target_config", &ExperimentReport::target_config)
      .def_readonly("dt_validation", &ExperimentReport::dt_validation)
      .def_readonly("ga_order", &ExperimentReport::ga_order)
      .def_readonly("ga_fitness_dt", &ExperimentReport::ga_fitness_dt)
      .def_readonly("ga_generations", &ExperimentReport::ga_generations)
      .def_readonly("ga_evaluations", &ExperimentReport::ga_evaluations)
      .def_readonly("dt_trajectory", &ExperimentReport::dt_trajectory)
      .def_readonly("replay_trajectory", &ExperimentReport::replay_trajectory)
      .def_readonly("baseline", &ExperimentReport::baseline)
      .def_readonly("min_q_percentile", &ExperimentReport::min_q_percentile)
      .def_readonly("mean_q_percentile", &ExperimentReport::mean_q_percentile)
      .def_readonly("degradation_prevented", &ExperimentReport::degradation_prevented)
      .def("replay_fitness", &ExperimentReport::replay_fitness);

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("apply_master_seed", &apply_master_seed, py::arg("scenario"), py::arg("master"));
  m.def(
      "run_baseline",
      [](const LinkSpec& link, const TransitionScenario& transition, int count,
         std::uint64_t seed) {
        Rng rng(seed);
        return run_baseline(link, transition, count, rng);
      },
      py::arg("link"), py::arg("transition"), py::arg("count"), py::arg("seed"));
  m.def("percentile_rank", &percentile_rank, py::arg("value"), py::arg("samples"));
  m.def("run_experiment", &run_experiment, py::arg("scenario"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "run_and_export",
      [](const Scenario& scenario, const std::string& dir) {
        ExperimentArtifacts art;
        {
          py::gil_scoped_release release;
          art = run_experiment_with_artifacts(scenario);
          export_report(art.report, art.dataset, art.model, dir);
        }
        return art.report;
      },
      py::arg("scenario"), py::arg("out_dir"));
}
