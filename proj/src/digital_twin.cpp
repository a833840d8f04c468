#include "amporder/digital_twin.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace amporder {

namespace {

double activate(MlpModel::Activation a, double z) {
  return a == MlpModel::Activation::Tanh ? std::tanh(z) : z;
}

// Derivative expressed through the activation output.
double activate_grad(MlpModel::Activation a, double h) {
  return a == MlpModel::Activation::Tanh ? 1.0 - h * h : 1.0;
}

}  // namespace

std::vector<double> MlpModel::forward(const std::vector<double>& x) const {
  const int in = input_width(), hid = hidden_width(), out = output_width();
  std::vector<double> h(hid), y(b2);
  for (int j = 0; j < hid; ++j) {
    double z = b1[j];
    for (int i = 0; i < in; ++i) z += w1[i][j] * x[i];
    h[j] = activate(activation, z);
  }
  for (int k = 0; k < out; ++k)
    for (int j = 0; j < hid; ++j) y[k] += w2[j][k] * h[j];
  return y;
}

void TrainConfig::validate() const {
  if (hidden_width < 1) throw std::invalid_argument("hidden_width: must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate: must be > 0");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs: must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size: must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience: must be >= 1");
}

std::vector<OaConfig> sample_configs(const LinkSpec& link, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("n: must be >= 1");
  link.validate();
  std::vector<OaConfig> out;
  out.reserve(n);
  const int n_oa = link.n_oa();
  for (int s = 0; s < n; ++s) {
    OaConfig c;
    c.gains_db.resize(n_oa);
    c.tilts_db.resize(n_oa);
    // quantization can land one ulp outside the bound; clamp back onto it
    for (int i = 0; i < n_oa; ++i) {
      const auto& b = link.gain_bounds_db[i];
      c.gains_db[i] = std::clamp(quantize_db(rng.uniform(b[0], b[1])), b[0], b[1]);
    }
    for (int i = 0; i < n_oa; ++i) {
      const auto& b = link.tilt_bounds_db[i];
      c.tilts_db[i] = std::clamp(quantize_db(rng.uniform(b[0], b[1])), b[0], b[1]);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::array<double, 2>> feature_bounds_of(const LinkSpec& link) {
  std::vector<std::array<double, 2>> bounds;
  bounds.reserve(2 * link.n_oa());
  for (const auto& b : link.gain_bounds_db) bounds.push_back(b);
  for (const auto& b : link.tilt_bounds_db) bounds.push_back(b);
  return bounds;
}

std::vector<double> normalize(const OaConfig& config,
                              const std::vector<std::array<double, 2>>& bounds) {
  const std::size_t n_oa = config.gains_db.size();
  if (bounds.size() != 2 * n_oa)
    throw std::invalid_argument("bounds: expected one [min,max] pair per gain and tilt");
  std::vector<double> f(2 * n_oa);
  for (std::size_t i = 0; i < 2 * n_oa; ++i) {
    const double v = i < n_oa ? config.gains_db[i] : config.tilts_db[i - n_oa];
    const double width = bounds[i][1] - bounds[i][0];
    f[i] = width > 0 ? std::clamp((v - bounds[i][0]) / width, 0.0, 1.0) : 0.5;
  }
  return f;
}

OaConfig denormalize(const std::vector<double>& features,
                     const std::vector<std::array<double, 2>>& bounds) {
  if (features.size() != bounds.size())
    throw std::invalid_argument("features: size mismatch with bounds");
  const std::size_t n_oa = features.size() / 2;
  OaConfig c;
  c.gains_db.resize(n_oa);
  c.tilts_db.resize(n_oa);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double width = bounds[i][1] - bounds[i][0];
    const double v = width > 0 ? bounds[i][0] + features[i] * width : bounds[i][0];
    (i < n_oa ? c.gains_db[i] : c.tilts_db[i - n_oa]) = v;
  }
  return c;
}

Dataset build_dataset(const LinkSpec& link, const ChannelPlan& plan, int n, Rng& rng,
                      double train_fraction) {
  Dataset d;
  d.feature_bounds = feature_bounds_of(link);
  d.target_batches = plan.loaded_batches;
  d.n_batches_total = plan.n_batches;

  const auto configs = sample_configs(link, n, rng);
  d.features.reserve(n);
  d.targets.reserve(n);
  for (const auto& c : configs) {
    d.features.push_back(normalize(c, d.feature_bounds));
    const QVector q = evaluate_q(link, plan, c);
    std::vector<double> row;
    row.reserve(plan.loaded_batches.size());
    for (int b : plan.loaded_batches) row.push_back(q.q_db[b]);
    d.targets.push_back(std::move(row));
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<std::vector<double>> f(n), t(n);
  for (int i = 0; i < n; ++i) {
    f[i] = std::move(d.features[perm[i]]);
    t[i] = std::move(d.targets[perm[i]]);
  }
  d.features = std::move(f);
  d.targets = std::move(t);
  d.train_count = static_cast<int>(std::lround(train_fraction * n));
  d.train_count = std::clamp(d.train_count, 1, n);
  return d;
}

namespace {

// Flat view over all trainable parameters, in a fixed order.
struct ParamRefs {
  std::vector<double*> p;

  explicit ParamRefs(MlpModel& m) {
    for (auto& col : m.w1)
      for (auto& v : col) p.push_back(&v);
    for (auto& v : m.b1) p.push_back(&v);
    for (auto& col : m.w2)
      for (auto& v : col) p.push_back(&v);
    for (auto& v : m.b2) p.push_back(&v);
  }
};

// Gradient of the mean-over-(rows x outputs) squared error for a set of rows.
// Returns the loss; grads are laid out like ParamRefs.
double mse_and_grad(const MlpModel& m, const Dataset& d, const std::vector<std::size_t>& rows,
                    std::vector<double>* grad) {
  const int in = m.input_width(), hid = m.hidden_width(), out = m.output_width();
  const std::size_t nw1 = static_cast<std::size_t>(in) * hid;
  const std::size_t nb1 = hid;
  const std::size_t nw2 = static_cast<std::size_t>(hid) * out;
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);

  double loss = 0.0;
  const double denom = static_cast<double>(rows.size()) * out;
  std::vector<double> h(hid), y(out), dy(out), dh(hid);
  for (std::size_t r : rows) {
    const auto& x = d.features[r];
    const auto& t = d.targets[r];
    for (int j = 0; j < hid; ++j) {
      double z = m.b1[j];
      for (int i = 0; i < in; ++i) z += m.w1[i][j] * x[i];
      h[j] = activate(m.activation, z);
    }
    for (int k = 0; k < out; ++k) {
      double v = m.b2[k];
      for (int j = 0; j < hid; ++j) v += m.w2[j][k] * h[j];
      y[k] = v;
      const double err = v - t[k];
      loss += err * err / denom;
      dy[k] = 2.0 * err / denom;
    }
    if (!grad) continue;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (int k = 0; k < out; ++k) {
      for (int j = 0; j < hid; ++j) {
        (*grad)[nw1 + nb1 + static_cast<std::size_t>(j) * out + k] += dy[k] * h[j];
        dh[j] += dy[k] * m.w2[j][k];
      }
      (*grad)[nw1 + nb1 + nw2 + k] += dy[k];
    }
    for (int j = 0; j < hid; ++j) {
      const double dz = dh[j] * activate_grad(m.activation, h[j]);
      for (int i = 0; i < in; ++i)
        (*grad)[static_cast<std::size_t>(i) * hid + j] += dz * x[i];
      (*grad)[nw1 + j] += dz;
    }
  }
  return loss;
}

double mse_over(const MlpModel& m, const Dataset& d, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return mse_and_grad(m, d, rows, nullptr);
}

}  // namespace

std::pair<MlpModel, ValidationReport> train(const Dataset& dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.size() < 2 || dataset.train_count < 1 || dataset.train_count > dataset.size())
    throw std::invalid_argument("dataset: invalid train/validation split");
  const int in = static_cast<int>(dataset.features.front().size());
  const int out = static_cast<int>(dataset.targets.front().size());
  const int hid = cfg.hidden_width;

  MlpModel m;
  m.activation = MlpModel::Activation::Tanh;
  m.feature_bounds = dataset.feature_bounds;
  m.output_batches = dataset.target_batches;
  m.n_batches_total = dataset.n_batches_total;
  m.w1.assign(in, std::vector<double>(hid, 0.0));
  m.b1.assign(hid, 0.0);
  m.w2.assign(hid, std::vector<double>(out, 0.0));
  m.b2.assign(out, 0.0);

  Rng rng(cfg.seed);
  const double lim1 = std::sqrt(6.0 / (in + hid));
  for (auto& col : m.w1)
    for (auto& v : col) v = rng.uniform(-lim1, lim1);
  const double lim2 = std::sqrt(6.0 / (hid + out));
  for (auto& col : m.w2)
    for (auto& v : col) v = rng.uniform(-lim2, lim2);

  ParamRefs params(m);
  const std::size_t n_params = params.p.size();
  std::vector<double> grad(n_params), adam_m(n_params, 0.0), adam_v(n_params, 0.0);
  std::int64_t step = 0;

  const std::size_t n_train = dataset.train_count;
  const bool has_val = dataset.size() > dataset.train_count;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  MlpModel best = m;
  double best_val = std::numeric_limits<double>::infinity();
  double best_train = 0.0;
  int best_epoch = 0, epochs_since_best = 0, epoch = 0;

  for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t ofs = 0; ofs < n_train; ofs += cfg.batch_size) {
      const std::size_t end = std::min(ofs + cfg.batch_size, n_train);
      std::vector<std::size_t> batch(order.begin() + ofs, order.begin() + end);
      const double loss = mse_and_grad(m, dataset, batch, &grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      ++step;
      const double corr1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n_params; ++i) {
        adam_m[i] = cfg.adam_beta1 * adam_m[i] + (1.0 - cfg.adam_beta1) * grad[i];
        adam_v[i] = cfg.adam_beta2 * adam_v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
        *params.p[i] -= cfg.learning_rate * (adam_m[i] / corr1) /
                        (std::sqrt(adam_v[i] / corr2) + cfg.adam_epsilon);
      }
    }
    const double train_mse = mse_over(m, dataset, 0, n_train);
    const double val_mse = has_val ? mse_over(m, dataset, n_train, dataset.size()) : train_mse;
    if (!std::isfinite(val_mse))
      throw std::runtime_error("train: non-finite validation loss at epoch " + std::to_string(epoch));
    if (val_mse < best_val) {
      best_val = val_mse;
      best_train = train_mse;
      best = m;
      best_epoch = epoch;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= cfg.patience) {
      break;
    }
  }

  ValidationReport report;
  report.train_mse = best_train;
  report.val_mse = best_val;
  report.val_rmse_db = std::sqrt(best_val);
  report.epochs_run = std::min(epoch, cfg.max_epochs);
  report.best_epoch = best_epoch;
  double max_abs = 0.0;
  for (int r = dataset.train_count; r < dataset.size(); ++r) {
    const auto y = best.forward(dataset.features[r]);
    for (int k = 0; k < out; ++k)
      max_abs = std::max(max_abs, std::abs(y[k] - dataset.targets[r][k]));
  }
  report.val_max_abs_err_db = max_abs;
  return {std::move(best), report};
}

QVector predict(const MlpModel& model, const OaConfig& config) {
  const auto y = model.forward(normalize(config, model.feature_bounds));
  QVector q;
  q.q_db.assign(model.n_batches_total, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < model.output_batches.size(); ++k)
    q.q_db[model.output_batches[k]] = y[k];
  return q;
}

double grad_check(const MlpModel& model, const std::vector<double>& x,
                  const std::vector<double>& y) {
  Dataset d;
  d.features = {x};
  d.targets = {y};
  d.train_count = 1;
  const std::vector<std::size_t> rows = {0};

  MlpModel work = model;
  ParamRefs params(work);
  std::vector<double> analytic(params.p.size());
  mse_and_grad(work, d, rows, &analytic);

  const double step = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.p.size(); ++i) {
    const double saved = *params.p[i];
    *params.p[i] = saved + step;
    const double up = mse_and_grad(work, d, rows, nullptr);
    *params.p[i] = saved - step;
    const double dn = mse_and_grad(work, d, rows, nullptr);
    *params.p[i] = saved;
    const double fd = (up - dn) / (2.0 * step);
    const double rel = std::abs(analytic[i] - fd) /
                       std::max(1e-8, std::abs(analytic[i]) + std::abs(fd));
    worst = std::max(worst, rel);
  }
  return worst;
}

void save_model(const MlpModel& model, const std::string& path) {
  nlohmann::ordered_json j;
  j["format"] = "amporder-mlp-v1";
  j["activation"] = model.activation == MlpModel::Activation::Tanh ? "tanh" : "identity";
  j["input_width"] = model.input_width();
  j["hidden_width"] = model.hidden_width();
  j["output_width"] = model.output_width();
  j["n_batches_total"] = model.n_batches_total;
  j["output_batches"] = model.output_batches;
  j["feature_bounds"] = model.feature_bounds;
  j["w1"] = model.w1;
  j["b1"] = model.b1;
  j["w2"] = model.w2;
  j["b2"] = model.b2;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_model: cannot open " + path);
  f << j.dump(1) << "\n";
}

MlpModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_model: cannot open " + path);
  nlohmann::json j;
  f >> j;
  if (j.value("format", "") != "amporder-mlp-v1")
    throw std::runtime_error("load_model: unknown checkpoint format");
  MlpModel m;
  m.activation = j.at("activation") == "tanh" ? MlpModel::Activation::Tanh
                                              : MlpModel::Activation::Identity;
  m.n_batches_total = j.at("n_batches_total").get<int>();
  m.output_batches = j.at("output_batches").get<std::vector<int>>();
  m.feature_bounds = j.at("feature_bounds").get<std::vector<std::array<double, 2>>>();
  m.w1 = j.at("w1").get<std::vector<std::vector<double>>>();
  m.b1 = j.at("b1").get<std::vector<double>>();
  m.w2 = j.at("w2").get<std::vector<std::vector<double>>>();
  m.b2 = j.at("b2").get<std::vector<double>>();
  if (m.w1.empty() || m.w2.size() != m.b1.size() || m.w2.front().size() != m.b2.size())
    throw std::runtime_error("load_model: inconsistent weight shapes");
  return m;
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  const std::size_t n_oa = dataset.feature_bounds.size() / 2;
  char num[32];
  auto fmt = [&](double v) {
    std::snprintf(num, sizeof(num), "%.17g", v);
    return std::string(num);
  };
  f << "train_count=" << dataset.train_count << ",n_batches=" << dataset.n_batches_total;
  for (std::size_t i = 0; i < dataset.feature_bounds.size(); ++i)
    f << ",bound" << i << "=" << fmt(dataset.feature_bounds[i][0]) << ":"
      << fmt(dataset.feature_bounds[i][1]);
  f << "\n";
  for (std::size_t i = 0; i < n_oa; ++i) f << "gain" << i << ",";
  for (std::size_t i = 0; i < n_oa; ++i) f << "tilt" << i << ",";
  for (std::size_t k = 0; k < dataset.target_batches.size(); ++k)
    f << "q_batch" << dataset.target_batches[k] << (k + 1 < dataset.target_batches.size() ? "," : "");
  f << "\n";
  char buf[32];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    f << buf << (last ? "\n" : ",");
  };
  for (int r = 0; r < dataset.size(); ++r) {
    for (std::size_t i = 0; i < dataset.features[r].size(); ++i) put(dataset.features[r][i], false);
    for (std::size_t k = 0; k < dataset.targets[r].size(); ++k)
      put(dataset.targets[r][k], k + 1 == dataset.targets[r].size());
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  Dataset d;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("read_dataset_csv: empty file");
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "train_count") d.train_count = std::stoi(val);
      else if (key == "n_batches") d.n_batches_total = std::stoi(val);
      else if (key.rfind("bound", 0) == 0) {
        const auto colon = val.find(':');
        d.feature_bounds.push_back({std::stod(val.substr(0, colon)), std::stod(val.substr(colon + 1))});
      }
    }
  }
  if (!std::getline(f, line)) throw std::runtime_error("read_dataset_csv: missing header");
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (tok.rfind("q_batch", 0) == 0) d.target_batches.push_back(std::stoi(tok.substr(7)));
  }
  const std::size_t n_features = d.feature_bounds.size();
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    if (row.size() != n_features + d.target_batches.size())
      throw std::runtime_error("read_dataset_csv: row width mismatch");
    d.features.emplace_back(row.begin(), row.begin() + n_features);
    d.targets.emplace_back(row.begin() + n_features, row.end());
  }
  if (d.train_count < 1 || d.train_count > d.size())
    throw std::runtime_error("read_dataset_csv: bad train_count");
  return d;
}

}  // namespace amporder
