#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace amporder {

// dB / linear conversions.
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }

// Amplifier settings move on a 0.1 dB grid.
constexpr double kSettingStepDb = 0.1;
inline double quantize_db(double v) { return std::round(v / kSettingStepDb) * kSettingStepDb; }
inline bool on_setting_grid(double v) {
  return std::abs(v / kSettingStepDb - std::round(v / kSettingStepDb)) < 1e-6;
}

struct FiberSpan {
  double length_km = 80.0;
  double loss_db_per_km = 0.2;
  double nli_coeff_w2 = 1000.0;  // eta in P_nli = eta * P^3, P in W

  double loss_db() const { return length_km * loss_db_per_km; }
};

enum class OaRole { Booster, Inline, Preamp };

// One amplified line: booster -> (span -> amp) x n_spans, last amp is the preamp.
struct LinkSpec {
  std::vector<FiberSpan> spans;
  std::vector<OaRole> oa_roles;                      // size spans + 1
  double nf_db = 5.0;                                // same noise figure for all amps
  double center_freq_thz = 193.4;
  std::vector<std::array<double, 2>> gain_bounds_db; // per OA, [min, max]
  std::vector<std::array<double, 2>> tilt_bounds_db;

  int n_oa() const { return static_cast<int>(spans.size()) + 1; }
  void validate() const;  // throws std::invalid_argument naming the bad field
};

// Makes a link with uniform spans and bounds shared by all amps.
LinkSpec make_link(int n_spans, double span_km, double loss_db_per_km, double nf_db,
                   double center_freq_thz, double nli_coeff_w2,
                   std::array<double, 2> gain_bounds_db, std::array<double, 2> tilt_bounds_db);

// Channel layout: n_batches x channels_per_batch slots on a fixed grid centered
// on the link's center frequency. Loading controls which batches exist on the
// fiber; existing batches are the ones that carried traffic before the change.
struct ChannelPlan {
  int n_batches = 6;
  int channels_per_batch = 7;
  double spacing_ghz = 75.0;
  double symbol_rate_gbaud = 63.9;
  double launch_power_dbm = -16.0;   // per channel, at the booster input
  std::vector<int> loaded_batches;
  std::vector<int> existing_batches;

  int central_channel() const { return channels_per_batch / 2; }
  void validate() const;
};

// Gains and tilts of every OA, in dB on the 0.1 dB grid.
struct OaConfig {
  std::vector<double> gains_db;
  std::vector<double> tilts_db;

  bool operator==(const OaConfig&) const = default;
};

void validate_config(const LinkSpec& link, const OaConfig& config);

// Per-batch Q-factor in dB; NaN for batches that are not loaded.
struct QVector {
  std::vector<double> q_db;
};

struct GridChannel {
  int batch = 0;
  int channel = 0;      // index within the batch
  double freq_thz = 0.0;
};

// Channels of the loaded batches in increasing frequency order.
std::vector<GridChannel> channel_grid(const ChannelPlan& plan, double center_freq_thz);

// Occupied-spectrum extent [f_min, f_max]; amplifier tilt pivots on its middle.
std::array<double, 2> band_limits(const ChannelPlan& plan, double center_freq_thz);

// gain + tilt * (f - f_mid) / (f_max - f_mid): the tilt value is the gain
// half-excursion at the band edges, positive tilt favoring high frequencies.
double per_channel_gain(const OaConfig& config, int oa_index, double freq_thz,
                        const std::array<double, 2>& band);

// Per-channel signal power (dBm) at each stage boundary:
// booster output, then span/amp outputs alternating, 1 + 2*n_spans stages.
struct StagePowers {
  std::vector<std::string> stage;
  std::vector<std::vector<double>> power_dbm;  // [stage][channel]
};

StagePowers propagate(const LinkSpec& link, const ChannelPlan& plan, const OaConfig& config);

// ASE power injected by one amp into one channel, in W.
double ase_injection_w(double nf_db, double gain_db, double freq_thz, double symbol_rate_gbaud);

// Per-channel accumulated ASE / NLI power (W) at the receiver, same channel
// order as channel_grid.
std::vector<double> accumulate_ase(const LinkSpec& link, const ChannelPlan& plan,
                                   const OaConfig& config);
std::vector<double> estimate_nli(const LinkSpec& link, const ChannelPlan& plan,
                                 const OaConfig& config);

// Q-factor of each loaded batch, read on the batch's central channel:
// 10*log10(P_sig / (P_ase + P_nli)) - 3 dB (fixed 16QAM offset).
QVector evaluate_q(const LinkSpec& link, const ChannelPlan& plan, const OaConfig& config);

}  // namespace amporder
