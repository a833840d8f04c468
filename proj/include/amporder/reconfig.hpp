#pragma once

#include <functional>
#include <vector>

#include "amporder/link_model.hpp"
#include "amporder/rng.hpp"

namespace amporder {

// With N amplifiers, a full reconfiguration is 2N atomic steps: gains are
// step ids 1..N (one per OA), tilts are N+1..2N.
enum class StepParam { Gain, Tilt };

struct ReconfigStep {
  int oa_index = 0;
  StepParam param = StepParam::Gain;
  int step_id = 0;
};

// A reconfiguration order is a permutation of the step ids 1..2N.
using ReconfigOrder = std::vector<int>;

std::vector<ReconfigStep> step_catalog(int n_oa);
ReconfigStep step_for_id(int step_id, int n_oa);
bool is_permutation_of_steps(const ReconfigOrder& order, int n_steps);

// One transition: where the amps start, where they must end, which batches
// carry live traffic (and are therefore watched), under which loading the
// transition happens.
struct TransitionScenario {
  OaConfig initial;
  OaConfig target;
  std::vector<int> monitored;  // existing batch ids
  ChannelPlan plan;            // current loading
};

// The 2N+1 states visited by an order, their Q-vectors, and the per-state
// minimum over the monitored batches.
struct Trajectory {
  std::vector<OaConfig> states;
  std::vector<QVector> q_per_state;
  std::vector<double> scalar_per_state;
};

struct FitnessValue {
  double value = 0.0;   // mean_q + min_q
  double mean_q = 0.0;
  double min_q = 0.0;
};

// State after the first k steps of the order: parameters named by those steps
// hold target values, all others still hold initial values.
OaConfig intermediate_config(const TransitionScenario& scenario, const ReconfigOrder& order,
                             int k);

// Any Q predictor with the oracle's shape; used with both the digital twin
// (search) and the link oracle (replay).
using QModel = std::function<QVector(const OaConfig&)>;

Trajectory trajectory(const QModel& q_model, const TransitionScenario& scenario,
                      const ReconfigOrder& order);

FitnessValue fitness(const Trajectory& traj);

// Draws n_candidates random configs and keeps the one with the best minimum
// Q over the loaded batches (first occurrence wins ties).
OaConfig select_best_config(const LinkSpec& link, const ChannelPlan& plan, int n_candidates,
                            Rng& rng);

void write_trajectory_csv(const Trajectory& traj, const std::vector<int>& monitored,
                          const std::string& path);

}  // namespace amporder
