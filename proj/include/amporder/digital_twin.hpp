#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "amporder/link_model.hpp"
#include "amporder/rng.hpp"

namespace amporder {

// Labeled training data: min-max normalized amplifier settings against the
// Q-factors the oracle reports for them. Rows are shuffled; the first
// train_count rows are the training split, the rest validate.
struct Dataset {
  std::vector<std::vector<double>> features;        // n x (2 * n_oa), in [0, 1]
  std::vector<std::vector<double>> targets;         // n x n_outputs, raw dB
  std::vector<std::array<double, 2>> feature_bounds;
  std::vector<int> target_batches;                  // batch id per output column
  int n_batches_total = 0;
  int train_count = 0;

  int size() const { return static_cast<int>(features.size()); }
};

// Single-hidden-layer feed-forward surrogate.
struct MlpModel {
  enum class Activation { Tanh, Identity };

  std::vector<std::vector<double>> w1;  // [in][hidden]
  std::vector<double> b1;               // [hidden]
  std::vector<std::vector<double>> w2;  // [hidden][out]
  std::vector<double> b2;               // [out]
  Activation activation = Activation::Tanh;
  std::vector<std::array<double, 2>> feature_bounds;
  std::vector<int> output_batches;
  int n_batches_total = 0;

  int input_width() const { return static_cast<int>(w1.size()); }
  int hidden_width() const { return static_cast<int>(b1.size()); }
  int output_width() const { return static_cast<int>(b2.size()); }

  std::vector<double> forward(const std::vector<double>& x) const;
};

struct TrainConfig {
  int hidden_width = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_epochs = 2000;
  int batch_size = 32;
  int patience = 100;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;

  void validate() const;
};

struct ValidationReport {
  double train_mse = 0.0;
  double val_mse = 0.0;
  double val_rmse_db = 0.0;
  double val_max_abs_err_db = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
};

// Draws n amplifier configurations uniformly within the link bounds,
// quantized to the 0.1 dB setting grid.
std::vector<OaConfig> sample_configs(const LinkSpec& link, int n, Rng& rng);

// Feature layout is [g_1..g_N, t_1..t_N]. Zero-width bounds map to 0.5.
std::vector<std::array<double, 2>> feature_bounds_of(const LinkSpec& link);
std::vector<double> normalize(const OaConfig& config,
                              const std::vector<std::array<double, 2>>& bounds);
OaConfig denormalize(const std::vector<double>& features,
                     const std::vector<std::array<double, 2>>& bounds);

// Samples configs, labels them with the oracle under the plan's loading, and
// shuffles before the train/validation split (train_fraction of the rows).
Dataset build_dataset(const LinkSpec& link, const ChannelPlan& plan, int n, Rng& rng,
                      double train_fraction = 0.7);

// Minibatch Adam on MSE; returns the weights with the lowest validation MSE.
// Deterministic for a given config seed. Throws on non-finite loss.
std::pair<MlpModel, ValidationReport> train(const Dataset& dataset, const TrainConfig& cfg);

// Forward pass on the normalized config; batches the model was not trained
// on come back as NaN.
QVector predict(const MlpModel& model, const OaConfig& config);

// Max relative disagreement between backprop and central finite differences
// of the per-sample MSE loss, over every parameter.
double grad_check(const MlpModel& model, const std::vector<double>& x,
                  const std::vector<double>& y);

// Checkpoint and dataset persistence.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);
void write_dataset_csv(const Dataset& dataset, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace amporder
