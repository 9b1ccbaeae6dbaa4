#pragma once

#include "hrvprv/session_io.hpp"
#include "hrvprv/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hrvprv {

// Two-tone-plus-noise RR model. Every parameter blends first-order from its
// supine to its standing value after stand-up (time constant
// transition_tau_s), which encodes the expected autonomic shift: faster
// rate, more low-frequency, less high-frequency variability when upright.
struct AutonomicScenario {
  double supine_mean_rr_ms = 1000.0;
  double standing_mean_rr_ms = 750.0;
  double lf_amp_supine_ms = 25.0;
  double lf_amp_standing_ms = 35.0;
  double hf_amp_supine_ms = 40.0;
  double hf_amp_standing_ms = 12.0;
  double lf_freq_hz = 0.10;
  double hf_freq_hz = 0.25;
  double rr_noise_sd_ms = 15.0;
  double transition_tau_s = 10.0;

  // Means in (400, 1500) ms, amplitudes and noise non-negative, tone
  // frequencies inside their bands, positive time constant.
  void validate() const;
};

// Pulse-arrival-time dynamics layered between ECG beats and PPG pulses.
// The posture step and the per-beat jitter both follow the first-order
// posture activation (0 while supine, approaching 1 after stand-up), so a
// supine recording has clean pulse timing and an upright one carries both
// a shifted and a noisier PAT. bp_coupling_gain adds PAT movement
// proportional to the RR deviation from its running mean.
struct PatModel {
  double base_pat_ms = 250.0;
  double posture_step_ms = 30.0;
  double posture_tau_s = 15.0;
  double beat_jitter_sd_ms = 6.0;
  double bp_coupling_gain = 0.0;  // ms PAT per ms RR deviation

  void validate() const;  // base in (100, 400) ms, jitter >= 0, tau > 0

  // Fixed transmission delay: no step, no jitter, no coupling. PPI then
  // differs from RRI only by detection error.
  static PatModel constant_delay();
};

// Double-exponential pulse wave w(t) = exp(-t/decay) - exp(-t/rise) for
// t >= 0. The steep rise keeps the half-rise fiducial sharp.
struct PulseShape {
  double rise_tau_s = 0.05;
  double decay_tau_s = 0.30;

  void validate() const;  // 0 < rise < decay

  double value(double t_s) const;
  double peak_offset_s() const;     // onset-to-peak delay
  double peak_amplitude() const;
  double half_rise_offset_s() const;  // onset to 50%-amplitude on the rise
};

// Ground-truth beat instants: RR(t) = mean(t) + lf(t) sin(2 pi f_lf t)
// + hf(t) sin(2 pi f_hf t) + gaussian noise, accumulated from t = 0 until
// meta.session_end_s. Deterministic per seed. Throws when a drawn RR
// leaves (250, 3000) ms.
ArrayXd generate_rr_beats(const AutonomicScenario& scenario, const SessionMeta& meta,
                          std::uint64_t seed);

// QRS-like template (Gaussian P, Q, R, S, T lobes) at each beat time plus
// white noise scaled for the requested SNR (infinite snr_db = no noise).
ArrayXd render_ecg(const ArrayXd& beat_times_s, double rate, double duration_s,
                   double snr_db, std::uint64_t seed);

struct PpgRender {
  ArrayXd samples;
  ArrayXd onset_times_s;     // beat time + PAT (pulse foot)
  ArrayXd midpoint_times_s;  // onset + half-rise offset: the detector's target
  ArrayXd pat_ms;            // realized PAT per beat
};

// One pulse per beat at beat_time + PAT(t) with the PatModel dynamics;
// stand_time_s anchors the posture response. Throws when the PAT sequence
// would reorder pulses. Deterministic per seed. The default pulse decay
// leaves a visible diastolic tail under the next pulse, as real PPG does;
// pass a shorter decay for strictly isolated pulses.
PpgRender render_ppg(const ArrayXd& beat_times_s, const PatModel& pat, double rate,
                     double duration_s, double stand_time_s, double snr_db,
                     std::uint64_t seed, const PulseShape& shape = {});

// A whole benchmark corpus: per-session seeds and mild between-subject
// parameter spread derived deterministically from master_seed.
struct CorpusConfig {
  int n_sessions = 20;
  std::uint64_t master_seed = 7;
  AutonomicScenario scenario;
  PatModel pat;
  PulseShape pulse;
  double ecg_rate_hz = 300.0;
  double ppg_rate_hz = 1000.0;
  double ecg_snr_db = 20.0;
  double ppg_snr_db = 20.0;
  double supine_start_s = 0.0;
  double supine_end_s = 300.0;
  double session_end_s = 480.0;
  double heterogeneity = 0.05;  // relative between-subject spread

  void validate() const;
};

struct SyntheticSession {
  Session session;
  std::uint64_t seed = 0;
  AutonomicScenario scenario;  // realized per-subject parameters
  PatModel pat;
  ArrayXd beat_times_s;          // ECG ground truth
  ArrayXd ppg_midpoint_times_s;  // PPG ground truth
};

SyntheticSession make_synthetic_session(const CorpusConfig& cfg, int index);

// Writes n_sessions session directories (synth-001, synth-002, ...) plus
// manifest.json recording every seed and realized parameter set.
void write_corpus(const std::filesystem::path& dir, const CorpusConfig& cfg);

}  // namespace hrvprv
