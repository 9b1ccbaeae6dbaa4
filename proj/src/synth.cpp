#include "hrvprv/synth.hpp"

#include "hrvprv/intervals.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace hrvprv {

namespace {

// All randomness goes through this: mt19937_64 output mapped to doubles by
// hand so the generated corpora are byte-identical on every platform
// (std::normal_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() {  // (0, 1)
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
  return x ^ (x >> 31);
}

// First-order activation of the standing state: 0 before stand-up,
// 1 - exp(-dt/tau) after.
double activation(double t, double stand_time, double tau) {
  if (t <= stand_time) return 0.0;
  return 1.0 - std::exp(-(t - stand_time) / tau);
}

double blend(double supine_value, double standing_value, double u) {
  return supine_value + (standing_value - supine_value) * u;
}

void add_gaussian_lobe(ArrayXd& x, double rate, double center_s, double amp,
                       double sigma_s) {
  const Index n = x.size();
  const Index lo = std::max<Index>(0, static_cast<Index>(std::floor((center_s - 4.0 * sigma_s) * rate)));
  const Index hi = std::min<Index>(n - 1, static_cast<Index>(std::ceil((center_s + 4.0 * sigma_s) * rate)));
  for (Index i = lo; i <= hi; ++i) {
    const double dt = static_cast<double>(i) / rate - center_s;
    x[i] += amp * std::exp(-0.5 * dt * dt / (sigma_s * sigma_s));
  }
}

void add_noise_for_snr(ArrayXd& x, double snr_db, Rng& rng) {
  if (!std::isfinite(snr_db)) return;
  const double var = (x - x.mean()).square().mean();
  const double sd = std::sqrt(var / std::pow(10.0, snr_db / 10.0));
  for (Index i = 0; i < x.size(); ++i) x[i] += sd * rng.gaussian();
}

}  // namespace

void AutonomicScenario::validate() const {
  auto check_mean = [](double v, const char* name) {
    if (!(v > 400.0 && v < 1500.0))
      throw std::invalid_argument(std::string("AutonomicScenario: ") + name +
                                  " must be in (400, 1500) ms, got " + std::to_string(v));
  };
  check_mean(supine_mean_rr_ms, "supine_mean_rr_ms");
  check_mean(standing_mean_rr_ms, "standing_mean_rr_ms");
  if (lf_amp_supine_ms < 0 || lf_amp_standing_ms < 0 || hf_amp_supine_ms < 0 ||
      hf_amp_standing_ms < 0 || rr_noise_sd_ms < 0)
    throw std::invalid_argument("AutonomicScenario: amplitudes must be non-negative");
  if (!(lf_freq_hz > 0.04 && lf_freq_hz < 0.15))
    throw std::invalid_argument("AutonomicScenario: lf_freq_hz must lie in (0.04, 0.15)");
  if (!(hf_freq_hz > 0.15 && hf_freq_hz < 0.40))
    throw std::invalid_argument("AutonomicScenario: hf_freq_hz must lie in (0.15, 0.40)");
  if (!(transition_tau_s > 0))
    throw std::invalid_argument("AutonomicScenario: transition_tau_s must be positive");
}

void PatModel::validate() const {
  if (!(base_pat_ms > 100.0 && base_pat_ms < 400.0))
    throw std::invalid_argument("PatModel: base_pat_ms must be in (100, 400), got " +
                                std::to_string(base_pat_ms));
  if (beat_jitter_sd_ms < 0)
    throw std::invalid_argument("PatModel: beat_jitter_sd_ms must be non-negative");
  if (!(posture_tau_s > 0))
    throw std::invalid_argument("PatModel: posture_tau_s must be positive");
}

PatModel PatModel::constant_delay() {
  PatModel m;
  m.posture_step_ms = 0.0;
  m.beat_jitter_sd_ms = 0.0;
  m.bp_coupling_gain = 0.0;
  return m;
}

void PulseShape::validate() const {
  if (!(rise_tau_s > 0.0) || !(decay_tau_s > rise_tau_s))
    throw std::invalid_argument("PulseShape: need 0 < rise_tau_s < decay_tau_s");
}

double PulseShape::value(double t_s) const {
  if (t_s < 0.0) return 0.0;
  return std::exp(-t_s / decay_tau_s) - std::exp(-t_s / rise_tau_s);
}

double PulseShape::peak_offset_s() const {
  return std::log(decay_tau_s / rise_tau_s) / (1.0 / rise_tau_s - 1.0 / decay_tau_s);
}

double PulseShape::peak_amplitude() const { return value(peak_offset_s()); }

double PulseShape::half_rise_offset_s() const {
  const double target = 0.5 * peak_amplitude();
  double lo = 0.0, hi = peak_offset_s();
  for (int it = 0; it < 60; ++it) {  // value() rises monotonically to the peak
    const double mid = 0.5 * (lo + hi);
    (value(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ArrayXd generate_rr_beats(const AutonomicScenario& scenario, const SessionMeta& meta,
                          std::uint64_t seed) {
  scenario.validate();
  meta.validate();
  Rng rng(seed);

  std::vector<double> beats{0.0};
  double t = 0.0;
  while (true) {
    const double u = activation(t, meta.supine_end_s, scenario.transition_tau_s);
    const double mean = blend(scenario.supine_mean_rr_ms, scenario.standing_mean_rr_ms, u);
    const double lf_amp = blend(scenario.lf_amp_supine_ms, scenario.lf_amp_standing_ms, u);
    const double hf_amp = blend(scenario.hf_amp_supine_ms, scenario.hf_amp_standing_ms, u);
    const double rr = mean + lf_amp * std::sin(2.0 * M_PI * scenario.lf_freq_hz * t) +
                      hf_amp * std::sin(2.0 * M_PI * scenario.hf_freq_hz * t) +
                      scenario.rr_noise_sd_ms * rng.gaussian();
    if (rr <= kMinIntervalMs || rr >= kMaxIntervalMs) {
      char msg[128];
      std::snprintf(msg, sizeof(msg),
                    "generate_rr_beats: RR %.1f ms at t=%.1f s leaves (250, 3000) ms", rr, t);
      throw std::invalid_argument(msg);
    }
    const double next = t + rr / 1000.0;
    if (next > meta.session_end_s) break;
    beats.push_back(next);
    t = next;
  }
  return Eigen::Map<const ArrayXd>(beats.data(), static_cast<Index>(beats.size()));
}

ArrayXd render_ecg(const ArrayXd& beat_times_s, double rate, double duration_s,
                   double snr_db, std::uint64_t seed) {
  if (rate <= 0.0) throw std::invalid_argument("render_ecg: rate must be positive");
  const Index n = static_cast<Index>(std::llround(duration_s * rate));
  ArrayXd x = ArrayXd::Zero(n);

  for (Index b = 0; b < beat_times_s.size(); ++b) {
    if (b > 0 && beat_times_s[b] <= beat_times_s[b - 1])
      throw std::invalid_argument("render_ecg: beat times must be strictly increasing");
    const double tb = beat_times_s[b];
    add_gaussian_lobe(x, rate, tb - 0.170, 0.12, 0.022);   // P
    add_gaussian_lobe(x, rate, tb - 0.025, -0.12, 0.008);  // Q
    add_gaussian_lobe(x, rate, tb, 1.00, 0.012);           // R
    add_gaussian_lobe(x, rate, tb + 0.028, -0.20, 0.010);  // S
    add_gaussian_lobe(x, rate, tb + 0.240, 0.30, 0.045);   // T
  }

  Rng rng(seed);
  add_noise_for_snr(x, snr_db, rng);
  return x;
}

PpgRender render_ppg(const ArrayXd& beat_times_s, const PatModel& pat, double rate,
                     double duration_s, double stand_time_s, double snr_db,
                     std::uint64_t seed, const PulseShape& shape) {
  pat.validate();
  shape.validate();
  if (rate <= 0.0) throw std::invalid_argument("render_ppg: rate must be positive");
  const Index n_beats = beat_times_s.size();
  if (n_beats < 2)
    throw std::invalid_argument("render_ppg: need at least 2 beats");

  Rng rng(seed);
  PpgRender out;
  out.onset_times_s.resize(n_beats);
  out.midpoint_times_s.resize(n_beats);
  out.pat_ms.resize(n_beats);

  // Running RR mean for the blood-pressure-like coupling term.
  double ema_ms = (beat_times_s[1] - beat_times_s[0]) * 1000.0;
  const double half_rise = shape.half_rise_offset_s();

  for (Index b = 0; b < n_beats; ++b) {
    if (b > 0 && beat_times_s[b] <= beat_times_s[b - 1])
      throw std::invalid_argument("render_ppg: beat times must be strictly increasing");
    const double tb = beat_times_s[b];
    const double rr_ms = (b == 0 ? ema_ms : (tb - beat_times_s[b - 1]) * 1000.0);
    ema_ms = 0.9 * ema_ms + 0.1 * rr_ms;

    const double u = activation(tb, stand_time_s, pat.posture_tau_s);
    const double pat_ms = pat.base_pat_ms + pat.posture_step_ms * u +
                          pat.bp_coupling_gain * (rr_ms - ema_ms) +
                          pat.beat_jitter_sd_ms * u * rng.gaussian();
    out.pat_ms[b] = pat_ms;
    out.onset_times_s[b] = tb + pat_ms / 1000.0;
    out.midpoint_times_s[b] = out.onset_times_s[b] + half_rise;
    if (b > 0 && out.onset_times_s[b] <= out.onset_times_s[b - 1])
      throw std::runtime_error("render_ppg: PAT sequence reorders pulses at beat " +
                               std::to_string(b));
  }

  const Index n = static_cast<Index>(std::llround(duration_s * rate));
  ArrayXd x = ArrayXd::Zero(n);
  constexpr double kPulseSpan = 1.5;  // seconds of tail rendered per pulse
  for (Index b = 0; b < n_beats; ++b) {
    const double onset = out.onset_times_s[b];
    const Index lo = std::max<Index>(0, static_cast<Index>(std::ceil(onset * rate)));
    const Index hi = std::min<Index>(n - 1, static_cast<Index>(std::floor((onset + kPulseSpan) * rate)));
    for (Index i = lo; i <= hi; ++i)
      x[i] += shape.value(static_cast<double>(i) / rate - onset);
  }
  add_noise_for_snr(x, snr_db, rng);
  out.samples = std::move(x);
  return out;
}

void CorpusConfig::validate() const {
  scenario.validate();
  pat.validate();
  pulse.validate();
  if (n_sessions < 1) throw std::invalid_argument("CorpusConfig: n_sessions must be >= 1");
  if (ecg_rate_hz < 100.0)
    throw std::invalid_argument("CorpusConfig: ecg_rate_hz must be at least 100");
  if (ppg_rate_hz < 20.0)
    throw std::invalid_argument("CorpusConfig: ppg_rate_hz must be at least 20");
  if (!(supine_start_s < supine_end_s && supine_end_s < session_end_s))
    throw std::invalid_argument("CorpusConfig: session times must be ordered");
  if (heterogeneity < 0.0 || heterogeneity > 0.3)
    throw std::invalid_argument("CorpusConfig: heterogeneity must lie in [0, 0.3]");
}

namespace {

// Mild multiplicative spread, clipped so realized parameters stay inside
// their validity ranges.
double vary(double center, double rel_sd, Rng& rng, double lo, double hi) {
  const double z = std::clamp(rng.gaussian(), -2.5, 2.5);
  return std::clamp(center * (1.0 + rel_sd * z), lo, hi);
}

}  // namespace

SyntheticSession make_synthetic_session(const CorpusConfig& cfg, int index) {
  cfg.validate();
  if (index < 0 || index >= cfg.n_sessions)
    throw std::invalid_argument("make_synthetic_session: index out of range");

  SyntheticSession s;
  s.seed = splitmix64(cfg.master_seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));

  char id[32];
  std::snprintf(id, sizeof(id), "synth-%03d", index + 1);
  s.session.meta.subject_id = id;
  s.session.meta.supine_start_s = cfg.supine_start_s;
  s.session.meta.supine_end_s = cfg.supine_end_s;
  s.session.meta.session_end_s = cfg.session_end_s;

  // Between-subject spread. The standing/supine RR ratio varies less than
  // the level so the population keeps its direction of change.
  Rng prng(splitmix64(s.seed ^ 0xa5a5a5a5ULL));
  const double h = cfg.heterogeneity;
  s.scenario = cfg.scenario;
  s.scenario.supine_mean_rr_ms =
      vary(cfg.scenario.supine_mean_rr_ms, h, prng, 600.0, 1400.0);
  const double center_ratio =
      cfg.scenario.standing_mean_rr_ms / cfg.scenario.supine_mean_rr_ms;
  const double ratio = vary(center_ratio, 0.4 * h, prng, 0.55, 0.95);
  s.scenario.standing_mean_rr_ms =
      std::clamp(s.scenario.supine_mean_rr_ms * ratio, 450.0, 1400.0);
  s.scenario.lf_amp_supine_ms = vary(cfg.scenario.lf_amp_supine_ms, 2.0 * h, prng, 0.0, 80.0);
  s.scenario.lf_amp_standing_ms =
      vary(cfg.scenario.lf_amp_standing_ms, 2.0 * h, prng, 0.0, 80.0);
  s.scenario.hf_amp_supine_ms = vary(cfg.scenario.hf_amp_supine_ms, 2.0 * h, prng, 0.0, 80.0);
  s.scenario.hf_amp_standing_ms =
      vary(cfg.scenario.hf_amp_standing_ms, 2.0 * h, prng, 0.0, 80.0);
  s.scenario.rr_noise_sd_ms = vary(cfg.scenario.rr_noise_sd_ms, h, prng, 0.0, 60.0);

  s.pat = cfg.pat;
  s.pat.base_pat_ms = vary(cfg.pat.base_pat_ms, 0.5 * h, prng, 150.0, 350.0);
  if (cfg.pat.posture_step_ms != 0.0)
    s.pat.posture_step_ms = vary(cfg.pat.posture_step_ms, h, prng, -80.0, 80.0);
  if (cfg.pat.beat_jitter_sd_ms != 0.0)
    s.pat.beat_jitter_sd_ms = vary(cfg.pat.beat_jitter_sd_ms, h, prng, 0.5, 30.0);

  s.beat_times_s =
      generate_rr_beats(s.scenario, s.session.meta, splitmix64(s.seed ^ 1));
  s.session.recording.ecg_rate = cfg.ecg_rate_hz;
  s.session.recording.ecg = render_ecg(s.beat_times_s, cfg.ecg_rate_hz, cfg.session_end_s,
                                       cfg.ecg_snr_db, splitmix64(s.seed ^ 2));
  PpgRender ppg =
      render_ppg(s.beat_times_s, s.pat, cfg.ppg_rate_hz, cfg.session_end_s,
                 cfg.supine_end_s, cfg.ppg_snr_db, splitmix64(s.seed ^ 3), cfg.pulse);
  s.session.recording.ppg_rate = cfg.ppg_rate_hz;
  s.session.recording.ppg = std::move(ppg.samples);
  s.ppg_midpoint_times_s = std::move(ppg.midpoint_times_s);
  s.session.recording.start_time = 0.0;
  return s;
}

namespace {

nlohmann::json scenario_json(const AutonomicScenario& s) {
  return {{"supine_mean_rr_ms", s.supine_mean_rr_ms},
          {"standing_mean_rr_ms", s.standing_mean_rr_ms},
          {"lf_amp_supine_ms", s.lf_amp_supine_ms},
          {"lf_amp_standing_ms", s.lf_amp_standing_ms},
          {"hf_amp_supine_ms", s.hf_amp_supine_ms},
          {"hf_amp_standing_ms", s.hf_amp_standing_ms},
          {"lf_freq_hz", s.lf_freq_hz},
          {"hf_freq_hz", s.hf_freq_hz},
          {"rr_noise_sd_ms", s.rr_noise_sd_ms},
          {"transition_tau_s", s.transition_tau_s}};
}

nlohmann::json pat_json(const PatModel& p) {
  return {{"base_pat_ms", p.base_pat_ms},
          {"posture_step_ms", p.posture_step_ms},
          {"posture_tau_s", p.posture_tau_s},
          {"beat_jitter_sd_ms", p.beat_jitter_sd_ms},
          {"bp_coupling_gain", p.bp_coupling_gain}};
}

}  // namespace

void write_corpus(const std::filesystem::path& dir, const CorpusConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["master_seed"] = cfg.master_seed;
  manifest["n_sessions"] = cfg.n_sessions;
  manifest["ecg_rate_hz"] = cfg.ecg_rate_hz;
  manifest["ppg_rate_hz"] = cfg.ppg_rate_hz;
  manifest["ecg_snr_db"] = cfg.ecg_snr_db;
  manifest["ppg_snr_db"] = cfg.ppg_snr_db;
  manifest["heterogeneity"] = cfg.heterogeneity;
  manifest["scenario"] = scenario_json(cfg.scenario);
  manifest["pat"] = pat_json(cfg.pat);
  manifest["pulse"] = {{"rise_tau_s", cfg.pulse.rise_tau_s},
                       {"decay_tau_s", cfg.pulse.decay_tau_s}};
  manifest["sessions"] = nlohmann::json::array();

  for (int i = 0; i < cfg.n_sessions; ++i) {
    const SyntheticSession s = make_synthetic_session(cfg, i);
    write_session(dir / s.session.meta.subject_id, s.session.recording, s.session.meta);
    nlohmann::json entry;
    entry["subject_id"] = s.session.meta.subject_id;
    entry["seed"] = s.seed;
    entry["n_beats"] = s.beat_times_s.size();
    entry["scenario"] = scenario_json(s.scenario);
    entry["pat"] = pat_json(s.pat);
    manifest["sessions"].push_back(std::move(entry));
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

}  // namespace hrvprv
