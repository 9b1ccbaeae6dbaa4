#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>

namespace hrvprv {

using Eigen::ArrayXd;
using Eigen::Index;

// Raw paired ECG/PPG measurement of one supine-to-stand session.
// Channels may have different sampling rates; sample k of a channel with
// rate fs sits at start_time + k / fs.
struct Recording {
  ArrayXd ecg;
  double ecg_rate = 0.0;  // samples/second
  ArrayXd ppg;
  double ppg_rate = 0.0;  // samples/second
  double start_time = 0.0;  // seconds, session-relative

  double ecg_duration() const { return ecg.size() / ecg_rate; }
  double ppg_duration() const { return ppg.size() / ppg_rate; }
  // Throws std::invalid_argument on empty channels, non-positive rates,
  // or non-finite samples (reported with sample index).
  void validate() const;
};

struct SessionMeta {
  std::string subject_id;
  double supine_start_s = 0.0;
  double supine_end_s = 0.0;   // moment the subject begins to stand
  double session_end_s = 0.0;

  double supine_duration() const { return supine_end_s - supine_start_s; }
  double standing_duration() const { return session_end_s - supine_end_s; }
  // Ordering only; phase-duration policy is enforced by segment_phases.
  void validate() const;
};

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  double length() const { return t1 - t0; }
  bool contains(double t) const { return t >= t0 && t <= t1; }
};

enum class Phase { Supine, Transition, Standing };
const char* phase_name(Phase p);          // machine key: "supine", ...
const char* phase_display_name(Phase p);  // report heading: "Supine", ...

// Analysis windows of the supine-to-stand protocol. The transition window
// deliberately overlaps the other two.
struct PhaseWindows {
  TimeWindow supine;
  TimeWindow transition;
  TimeWindow standing;
  const TimeWindow& operator[](Phase p) const;
};

enum class BeatSource { EcgRPeak, PpgMidpoint };

// Fiducial instants of one channel, strictly increasing, in seconds.
struct BeatSeries {
  ArrayXd timestamps;
  BeatSource source = BeatSource::EcgRPeak;
  Index size() const { return timestamps.size(); }
};

// Sample indices of systolic peaks and diastolic troughs on the PPG channel.
// Pairing (one trough, the immediately following peak) happens in midpoints().
struct PeakTroughSet {
  std::vector<Index> peaks;
  std::vector<Index> troughs;
};

enum class IntervalKind { Rri, Ppi };

// Inter-beat intervals. durations_ms[i] is the interval terminating at
// end_times_s[i]; at construction durations match consecutive end-time
// differences, after outlier filtering survivors keep their original
// timestamps so the difference identity no longer holds across gaps.
struct IntervalSeries {
  ArrayXd durations_ms;
  ArrayXd end_times_s;
  IntervalKind kind = IntervalKind::Rri;
  Index size() const { return durations_ms.size(); }
};

// Evenly sampled tachogram, values in ms, sample j at t0_s + j / rate_hz.
struct UniformSeries {
  ArrayXd values_ms;
  double rate_hz = 0.0;
  double t0_s = 0.0;
  Index size() const { return values_ms.size(); }
};

// One-sided power spectral density of a tachogram, ms^2/Hz over an
// ascending frequency grid.
struct PsdEstimate {
  ArrayXd freqs_hz;
  ArrayXd power;
};

// Session-level PPG quality verdict: cluster-based good ratio plus mean SQI.
struct QualityReport {
  double good_ratio = 0.0;  // percent
  double mean_sqi = 0.0;
  Index n_good = 0;
  Index n_total = 0;
  bool accepted = false;
  double centroid_low = 0.0;
  double centroid_high = 0.0;
  bool degenerate_split = false;  // all SQI values identical
};

// The 15 variability features for one interval series in one phase window.
// Ratio features with a zero denominator are reported as undefined
// (std::nullopt) instead of NaN so downstream statistics can exclude them
// explicitly. apen/sampen carry a degenerate flag for constant input.
struct FeatureSet {
  double ahr = 0.0;    // bpm
  double rmssd = 0.0;  // ms
  double sdnn = 0.0;   // ms
  double sdsd = 0.0;   // ms
  double pnn50 = 0.0;  // percent
  double lf = 0.0;     // ms^2
  double hf = 0.0;     // ms^2
  std::optional<double> nlf;
  std::optional<double> nhf;
  std::optional<double> lf_hf;
  double sd1 = 0.0;  // ms
  double sd2 = 0.0;  // ms
  std::optional<double> sd2_sd1;
  double apen = 0.0;
  std::optional<double> sampen;
  bool apen_degenerate = false;
  bool sampen_degenerate = false;

  static constexpr int kCount = 15;
  // Column names in report order (AHR ... SampEn).
  static const std::array<const char*, kCount>& names();
  // Feature i in report order; nullopt when flagged undefined.
  std::optional<double> value(int i) const;
};

enum class PairedTest { PairedT, Wilcoxon };

// Aligned per-session values of one feature from both sources.
struct PairedSample {
  std::string feature_name;
  std::vector<double> hrv_values;
  std::vector<double> prv_values;
  Index n_excluded = 0;  // pairs dropped because either side was undefined
};

struct ComparisonResult {
  std::string feature_name;
  std::optional<double> normality_p;  // on paired differences; nullopt when degenerate
  PairedTest test_used = PairedTest::PairedT;
  double p_value = 1.0;
  bool significant = false;
  double alpha_corrected = 0.0;
  Index n_pairs = 0;
  Index n_excluded = 0;
  std::string error;  // non-empty when this feature could not be tested
};

}  // namespace hrvprv
