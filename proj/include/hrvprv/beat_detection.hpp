#pragma once

#include "hrvprv/types.hpp"

#include <vector>

namespace hrvprv {

// Pan-Tompkins style R-peak detector. Stages: zero-phase Butterworth
// band-pass 5-15 Hz, centered five-point derivative, squaring, 150 ms
// centered moving-window integration, adaptive dual thresholds with a
// 200 ms refractory period and search-back at 1.66x the running RR
// average. Detections are refined to the raw-signal maximum within
// +/-25 ms. All stages are zero-phase, so timestamps carry no systematic
// filter delay. Timestamps are relative to the first sample (index/rate).
//
// Throws std::invalid_argument below 100 Hz or 5 s of signal and
// std::runtime_error("no beats detected") when nothing crosses threshold.
BeatSeries detect_r_peaks(const ArrayXd& ecg, double rate);

struct PanTompkinsConfig {
  double band_lo_hz = 5.0;
  double band_hi_hz = 15.0;
  double integration_window_s = 0.150;
  double refractory_s = 0.200;
  double searchback_factor = 1.66;
  double refine_radius_s = 0.025;
};
BeatSeries detect_r_peaks(const ArrayXd& ecg, double rate, const PanTompkinsConfig& cfg);

// Multi-scale local-maxima-scalogram PPG extremum detector, windowed.
struct MsptdConfig {
  double window_s = 6.0;
  double overlap_s = 2.0;
  double downsample_target_hz = 30.0;  // block-average decimation ceiling
  double min_pulse_bpm = 30.0;         // slowest plausible rate; caps the scale range
  double refine_radius_s = 0.050;      // full-rate refinement half-width
};

struct MsptdDiagnostics {
  Index n_windows = 0;
  std::vector<Index> window_kstar;  // selected scale per window
};

// Per 6 s window (2 s overlap): block-average to <= 30 Hz, count local
// maxima at every scale k (x[i] > x[i-k] and x[i] >= x[i+k]); k* is the
// scale with the highest count; a sample is a peak when it is a local
// maximum at every scale <= k* that its position allows testing (at least
// one). Troughs are peaks of the negated signal. Each window only reports
// extrema from its own slice of the overlap, and every detection is
// refined on the full-rate signal within +/-50 ms.
//
// Throws std::invalid_argument below 20 Hz or 5 s, std::runtime_error
// when no alternating peak/trough pairing is possible (e.g. constant
// input).
PeakTroughSet detect_ppg_peaks_troughs(const ArrayXd& ppg, double rate,
                                       MsptdDiagnostics* diag = nullptr);
PeakTroughSet detect_ppg_peaks_troughs(const ArrayXd& ppg, double rate,
                                       const MsptdConfig& cfg,
                                       MsptdDiagnostics* diag = nullptr);

struct MidpointResult {
  BeatSeries beats;         // source = PpgMidpoint, strictly increasing
  Index skipped_extrema = 0;  // peaks/troughs left out of any trough->peak pair
};

// For every trough followed directly by a peak, the fiducial is the first
// sample on the rising edge whose amplitude reaches the mean of the trough
// and peak amplitudes. Unpairable extrema are skipped and counted; throws
// when no pair exists at all.
MidpointResult midpoints(const PeakTroughSet& pt, const ArrayXd& ppg, double rate);

}  // namespace hrvprv
