#include "amporder/reconfig.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "amporder/digital_twin.hpp"

namespace amporder {

std::vector<ReconfigStep> step_catalog(int n_oa) {
  if (n_oa < 1) throw std::invalid_argument("n_oa: must be >= 1");
  std::vector<ReconfigStep> steps;
  steps.reserve(2 * n_oa);
  for (int i = 0; i < n_oa; ++i) steps.push_back({i, StepParam::Gain, i + 1});
  for (int i = 0; i < n_oa; ++i) steps.push_back({i, StepParam::Tilt, n_oa + i + 1});
  return steps;
}

ReconfigStep step_for_id(int step_id, int n_oa) {
  if (step_id < 1 || step_id > 2 * n_oa)
    throw std::invalid_argument("step_id: outside 1..2N");
  if (step_id <= n_oa) return {step_id - 1, StepParam::Gain, step_id};
  return {step_id - n_oa - 1, StepParam::Tilt, step_id};
}

bool is_permutation_of_steps(const ReconfigOrder& order, int n_steps) {
  if (static_cast<int>(order.size()) != n_steps) return false;
  std::vector<bool> seen(n_steps + 1, false);
  for (int id : order) {
    if (id < 1 || id > n_steps || seen[id]) return false;
    seen[id] = true;
  }
  return true;
}

namespace {

void apply_step(OaConfig& config, const TransitionScenario& scenario, int step_id) {
  const int n_oa = static_cast<int>(config.gains_db.size());
  const ReconfigStep s = step_for_id(step_id, n_oa);
  if (s.param == StepParam::Gain)
    config.gains_db[s.oa_index] = scenario.target.gains_db[s.oa_index];
  else
    config.tilts_db[s.oa_index] = scenario.target.tilts_db[s.oa_index];
}

double monitored_min(const QVector& q, const std::vector<int>& monitored) {
  double m = std::numeric_limits<double>::infinity();
  for (int b : monitored) {
    if (!std::isfinite(q.q_db[b]))
      throw std::runtime_error("trajectory: monitored batch " + std::to_string(b) +
                               " has no finite Q value");
    m = std::min(m, q.q_db[b]);
  }
  return m;
}

}  // namespace

OaConfig intermediate_config(const TransitionScenario& scenario, const ReconfigOrder& order,
                             int k) {
  const int n_steps = static_cast<int>(order.size());
  if (k < 0 || k > n_steps) throw std::invalid_argument("k: outside 0..2N");
  OaConfig config = scenario.initial;
  for (int i = 0; i < k; ++i) apply_step(config, scenario, order[i]);
  return config;
}

Trajectory trajectory(const QModel& q_model, const TransitionScenario& scenario,
                      const ReconfigOrder& order) {
  const int n_steps = static_cast<int>(order.size());
  if (scenario.monitored.empty())
    throw std::invalid_argument("monitored: must be nonempty");
  if (!is_permutation_of_steps(order, n_steps))
    throw std::invalid_argument("order: not a valid permutation of step ids");

  Trajectory traj;
  traj.states.reserve(n_steps + 1);
  traj.q_per_state.reserve(n_steps + 1);
  traj.scalar_per_state.reserve(n_steps + 1);

  OaConfig state = scenario.initial;
  for (int k = 0; k <= n_steps; ++k) {
    if (k > 0) apply_step(state, scenario, order[k - 1]);
    QVector q = q_model(state);
    traj.scalar_per_state.push_back(monitored_min(q, scenario.monitored));
    traj.states.push_back(state);
    traj.q_per_state.push_back(std::move(q));
  }
  return traj;
}

FitnessValue fitness(const Trajectory& traj) {
  if (traj.scalar_per_state.empty()) throw std::invalid_argument("trajectory: empty");
  double sum = 0.0;
  double min_q = std::numeric_limits<double>::infinity();
  for (double v : traj.scalar_per_state) {
    sum += v;
    min_q = std::min(min_q, v);
  }
  FitnessValue f;
  f.mean_q = sum / static_cast<double>(traj.scalar_per_state.size());
  f.min_q = min_q;
  f.value = f.mean_q + f.min_q;
  return f;
}

OaConfig select_best_config(const LinkSpec& link, const ChannelPlan& plan, int n_candidates,
                            Rng& rng) {
  if (n_candidates < 1) throw std::invalid_argument("n_candidates: must be >= 1");
  const auto candidates = sample_configs(link, n_candidates, rng);
  double best_score = -std::numeric_limits<double>::infinity();
  const OaConfig* best = nullptr;
  for (const auto& c : candidates) {
    const QVector q = evaluate_q(link, plan, c);
    double score = std::numeric_limits<double>::infinity();
    for (int b : plan.loaded_batches) score = std::min(score, q.q_db[b]);
    if (score > best_score) {
      best_score = score;
      best = &c;
    }
  }
  return *best;
}

void write_trajectory_csv(const Trajectory& traj, const std::vector<int>& monitored,
                          const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  f << "step,scalar_q_db";
  for (int b : monitored) f << ",q_batch" << b << "_db";
  f << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    f << "," << buf;
  };
  for (std::size_t k = 0; k < traj.scalar_per_state.size(); ++k) {
    f << k;
    put(traj.scalar_per_state[k]);
    for (int b : monitored) put(traj.q_per_state[k].q_db[b]);
    f << "\n";
  }
}

}  // namespace amporder
