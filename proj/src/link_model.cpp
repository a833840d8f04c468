#include "amporder/link_model.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace amporder {

namespace {

constexpr double kPlanckJs = 6.62607015e-34;
constexpr double kQOffset16QamDb = 3.0;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw std::invalid_argument(field + ": " + why);
}

}  // namespace

void LinkSpec::validate() const {
  if (spans.empty()) bad_field("spans", "must contain at least one fiber span");
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    const std::string p = "spans[" + std::to_string(i) + "].";
    if (!(s.length_km > 0)) bad_field(p + "length_km", "must be > 0");
    if (!(s.loss_db_per_km > 0)) bad_field(p + "loss_db_per_km", "must be > 0");
    if (!(s.nli_coeff_w2 >= 0)) bad_field(p + "nli_coeff_w2", "must be >= 0");
  }
  const int n = n_oa();
  if (static_cast<int>(oa_roles.size()) != n)
    bad_field("oa_roles", "must have one role per OA (spans + 1)");
  if (oa_roles.front() != OaRole::Booster) bad_field("oa_roles", "first OA must be the booster");
  if (oa_roles.back() != OaRole::Preamp) bad_field("oa_roles", "last OA must be the preamp");
  if (!(center_freq_thz > 0)) bad_field("center_freq_thz", "must be > 0");
  if (static_cast<int>(gain_bounds_db.size()) != n)
    bad_field("gain_bounds_db", "must have one [min,max] pair per OA");
  if (static_cast<int>(tilt_bounds_db.size()) != n)
    bad_field("tilt_bounds_db", "must have one [min,max] pair per OA");
  for (int i = 0; i < n; ++i) {
    if (gain_bounds_db[i][0] > gain_bounds_db[i][1])
      bad_field("gain_bounds_db[" + std::to_string(i) + "]", "min exceeds max");
    if (tilt_bounds_db[i][0] > tilt_bounds_db[i][1])
      bad_field("tilt_bounds_db[" + std::to_string(i) + "]", "min exceeds max");
  }
}

LinkSpec make_link(int n_spans, double span_km, double loss_db_per_km, double nf_db,
                   double center_freq_thz, double nli_coeff_w2,
                   std::array<double, 2> gain_bounds_db, std::array<double, 2> tilt_bounds_db) {
  LinkSpec link;
  link.spans.assign(n_spans, FiberSpan{span_km, loss_db_per_km, nli_coeff_w2});
  link.oa_roles.assign(n_spans + 1, OaRole::Inline);
  link.oa_roles.front() = OaRole::Booster;
  link.oa_roles.back() = OaRole::Preamp;
  link.nf_db = nf_db;
  link.center_freq_thz = center_freq_thz;
  link.gain_bounds_db.assign(n_spans + 1, gain_bounds_db);
  link.tilt_bounds_db.assign(n_spans + 1, tilt_bounds_db);
  link.validate();
  return link;
}

void ChannelPlan::validate() const {
  if (n_batches < 1) bad_field("n_batches", "must be >= 1");
  if (channels_per_batch < 1) bad_field("channels_per_batch", "must be >= 1");
  if (!(spacing_ghz > 0)) bad_field("spacing_ghz", "must be > 0");
  if (!(symbol_rate_gbaud > 0)) bad_field("symbol_rate_gbaud", "must be > 0");
  if (loaded_batches.empty()) bad_field("loaded_batches", "must be nonempty");
  std::set<int> loaded;
  for (int b : loaded_batches) {
    if (b < 0 || b >= n_batches) bad_field("loaded_batches", "batch id out of range");
    if (!loaded.insert(b).second) bad_field("loaded_batches", "duplicate batch id");
  }
  if (!std::is_sorted(loaded_batches.begin(), loaded_batches.end()))
    bad_field("loaded_batches", "must be sorted");
  for (int b : existing_batches)
    if (!loaded.count(b)) bad_field("existing_batches", "must be a subset of loaded_batches");
}

void validate_config(const LinkSpec& link, const OaConfig& config) {
  const int n = link.n_oa();
  if (static_cast<int>(config.gains_db.size()) != n)
    bad_field("gains_db", "must have one value per OA");
  if (static_cast<int>(config.tilts_db.size()) != n)
    bad_field("tilts_db", "must have one value per OA");
  for (int i = 0; i < n; ++i) {
    if (config.gains_db[i] < link.gain_bounds_db[i][0] - 1e-9 ||
        config.gains_db[i] > link.gain_bounds_db[i][1] + 1e-9)
      bad_field("gains_db[" + std::to_string(i) + "]", "outside gain bounds");
    if (config.tilts_db[i] < link.tilt_bounds_db[i][0] - 1e-9 ||
        config.tilts_db[i] > link.tilt_bounds_db[i][1] + 1e-9)
      bad_field("tilts_db[" + std::to_string(i) + "]", "outside tilt bounds");
    if (!on_setting_grid(config.gains_db[i]))
      bad_field("gains_db[" + std::to_string(i) + "]", "not a multiple of 0.1 dB");
    if (!on_setting_grid(config.tilts_db[i]))
      bad_field("tilts_db[" + std::to_string(i) + "]", "not a multiple of 0.1 dB");
  }
}

std::vector<GridChannel> channel_grid(const ChannelPlan& plan, double center_freq_thz) {
  plan.validate();
  const double spacing_thz = plan.spacing_ghz * 1e-3;
  const int total_slots = plan.n_batches * plan.channels_per_batch;
  const double mid_slot = (total_slots - 1) / 2.0;
  std::vector<GridChannel> grid;
  grid.reserve(plan.loaded_batches.size() * plan.channels_per_batch);
  for (int b : plan.loaded_batches) {
    for (int c = 0; c < plan.channels_per_batch; ++c) {
      const int slot = b * plan.channels_per_batch + c;
      grid.push_back({b, c, center_freq_thz + (slot - mid_slot) * spacing_thz});
    }
  }
  return grid;
}

std::array<double, 2> band_limits(const ChannelPlan& plan, double center_freq_thz) {
  const auto grid = channel_grid(plan, center_freq_thz);
  return {grid.front().freq_thz, grid.back().freq_thz};
}

double per_channel_gain(const OaConfig& config, int oa_index, double freq_thz,
                        const std::array<double, 2>& band) {
  if (band[0] > band[1]) throw std::invalid_argument("band: f_min must not exceed f_max");
  if (freq_thz < band[0] - 1e-9 || freq_thz > band[1] + 1e-9)
    throw std::invalid_argument("freq_thz: outside amplifier band");
  const double mid = (band[0] + band[1]) / 2.0;
  const double half = band[1] - mid;
  const double rel = half > 0 ? (freq_thz - mid) / half : 0.0;
  return config.gains_db[oa_index] + config.tilts_db[oa_index] * rel;
}

namespace {

// Everything the noise/Q computations need about one (link, plan, config):
// per-amp per-channel linear gains, per-span linear transmission, and the
// per-channel signal power entering each span and reaching the receiver.
struct LinkEvaluation {
  std::vector<GridChannel> grid;
  std::vector<std::vector<double>> amp_gain_lin;  // [amp][channel]
  std::vector<double> span_trans_lin;             // [span], < 1
  std::vector<std::vector<double>> span_input_w;  // [span][channel]
  std::vector<double> receiver_w;                 // [channel]
};

LinkEvaluation evaluate_link(const LinkSpec& link, const ChannelPlan& plan,
                             const OaConfig& config) {
  link.validate();
  validate_config(link, config);
  LinkEvaluation ev;
  ev.grid = channel_grid(plan, link.center_freq_thz);
  const auto band = band_limits(plan, link.center_freq_thz);
  const int n_ch = static_cast<int>(ev.grid.size());
  const int n_amp = link.n_oa();
  const int n_span = static_cast<int>(link.spans.size());

  ev.amp_gain_lin.assign(n_amp, std::vector<double>(n_ch));
  for (int a = 0; a < n_amp; ++a)
    for (int c = 0; c < n_ch; ++c)
      ev.amp_gain_lin[a][c] = db_to_lin(per_channel_gain(config, a, ev.grid[c].freq_thz, band));

  ev.span_trans_lin.resize(n_span);
  for (int s = 0; s < n_span; ++s) ev.span_trans_lin[s] = db_to_lin(-link.spans[s].loss_db());

  ev.span_input_w.assign(n_span, std::vector<double>(n_ch));
  ev.receiver_w.resize(n_ch);
  const double launch_w = dbm_to_watt(plan.launch_power_dbm);
  for (int c = 0; c < n_ch; ++c) {
    double p = launch_w * ev.amp_gain_lin[0][c];  // booster output
    for (int s = 0; s < n_span; ++s) {
      ev.span_input_w[s][c] = p;
      p *= ev.span_trans_lin[s];
      p *= ev.amp_gain_lin[s + 1][c];
    }
    ev.receiver_w[c] = p;
  }
  return ev;
}

// Linear transmission from the output of amp a to the receiver.
double downstream_from_amp(const LinkEvaluation& ev, int amp, int channel) {
  double t = 1.0;
  for (std::size_t s = amp; s < ev.span_trans_lin.size(); ++s) {
    t *= ev.span_trans_lin[s];
    t *= ev.amp_gain_lin[s + 1][channel];
  }
  return t;
}

}  // namespace

StagePowers propagate(const LinkSpec& link, const ChannelPlan& plan, const OaConfig& config) {
  const auto ev = evaluate_link(link, plan, config);
  const int n_ch = static_cast<int>(ev.grid.size());
  const int n_span = static_cast<int>(link.spans.size());
  StagePowers out;
  const double launch_w = dbm_to_watt(plan.launch_power_dbm);

  std::vector<double> p(n_ch);
  for (int c = 0; c < n_ch; ++c) p[c] = launch_w * ev.amp_gain_lin[0][c];
  auto push = [&](const std::string& label) {
    out.stage.push_back(label);
    std::vector<double> dbm(n_ch);
    for (int c = 0; c < n_ch; ++c) dbm[c] = watt_to_dbm(p[c]);
    out.power_dbm.push_back(std::move(dbm));
  };
  push("booster_out");
  for (int s = 0; s < n_span; ++s) {
    for (int c = 0; c < n_ch; ++c) p[c] *= ev.span_trans_lin[s];
    push("span" + std::to_string(s + 1) + "_out");
    for (int c = 0; c < n_ch; ++c) p[c] *= ev.amp_gain_lin[s + 1][c];
    push(s + 1 == n_span ? "preamp_out" : "amp" + std::to_string(s + 1) + "_out");
  }
  return out;
}

double ase_injection_w(double nf_db, double gain_db, double freq_thz, double symbol_rate_gbaud) {
  const double g_lin = db_to_lin(gain_db);
  if (g_lin <= 1.0) return 0.0;
  return db_to_lin(nf_db) * kPlanckJs * freq_thz * 1e12 * (g_lin - 1.0) * symbol_rate_gbaud * 1e9;
}

std::vector<double> accumulate_ase(const LinkSpec& link, const ChannelPlan& plan,
                                   const OaConfig& config) {
  const auto ev = evaluate_link(link, plan, config);
  const int n_ch = static_cast<int>(ev.grid.size());
  std::vector<double> ase(n_ch, 0.0);
  for (int a = 0; a < link.n_oa(); ++a) {
    for (int c = 0; c < n_ch; ++c) {
      const double g_lin = ev.amp_gain_lin[a][c];
      if (g_lin <= 1.0) continue;
      const double inj = db_to_lin(link.nf_db) * kPlanckJs * ev.grid[c].freq_thz * 1e12 *
                         (g_lin - 1.0) * plan.symbol_rate_gbaud * 1e9;
      ase[c] += inj * downstream_from_amp(ev, a, c);
    }
  }
  return ase;
}

std::vector<double> estimate_nli(const LinkSpec& link, const ChannelPlan& plan,
                                 const OaConfig& config) {
  const auto ev = evaluate_link(link, plan, config);
  const int n_ch = static_cast<int>(ev.grid.size());
  const int n_span = static_cast<int>(link.spans.size());
  std::vector<double> nli(n_ch, 0.0);
  for (int s = 0; s < n_span; ++s) {
    for (int c = 0; c < n_ch; ++c) {
      const double p_in = ev.span_input_w[s][c];
      const double generated = link.spans[s].nli_coeff_w2 * p_in * p_in * p_in;
      // The contribution rides from the span input through the span's own
      // loss and everything downstream, incoherent sum over spans.
      double t = ev.span_trans_lin[s] * ev.amp_gain_lin[s + 1][c];
      for (int u = s + 1; u < n_span; ++u) t *= ev.span_trans_lin[u] * ev.amp_gain_lin[u + 1][c];
      nli[c] += generated * t;
    }
  }
  return nli;
}

QVector evaluate_q(const LinkSpec& link, const ChannelPlan& plan, const OaConfig& config) {
  const auto ev = evaluate_link(link, plan, config);
  const auto ase = accumulate_ase(link, plan, config);
  const auto nli = estimate_nli(link, plan, config);
  QVector q;
  q.q_db.assign(plan.n_batches, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < ev.grid.size(); ++c) {
    if (ev.grid[c].channel != plan.central_channel()) continue;
    const double snr = ev.receiver_w[c] / (ase[c] + nli[c]);
    q.q_db[ev.grid[c].batch] = lin_to_db(snr) - kQOffset16QamDb;
  }
  return q;
}

}  // namespace amporder
