#include "hrvprv/beat_detection.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

namespace hrvprv {

namespace {

// Order-2 Butterworth band-pass (bilinear transform with prewarped edges).
struct Biquad {
  double b0, b1, b2, a1, a2;
};

Biquad design_bandpass(double lo_hz, double hi_hz, double rate) {
  const double k = 2.0 * rate;
  const double w1 = k * std::tan(M_PI * lo_hz / rate);
  const double w2 = k * std::tan(M_PI * hi_hz / rate);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  const double d = k * k + bw * k + w0sq;
  return {bw * k / d, 0.0, -bw * k / d, (2.0 * w0sq - 2.0 * k * k) / d,
          (k * k - bw * k + w0sq) / d};
}

ArrayXd filter_once(const Biquad& f, const ArrayXd& x) {
  ArrayXd y(x.size());
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double yi = f.b0 * x[i] + f.b1 * x1 + f.b2 * x2 - f.a1 * y1 - f.a2 * y2;
    x2 = x1;
    x1 = x[i];
    y2 = y1;
    y1 = yi;
    y[i] = yi;
  }
  return y;
}

// Forward-backward filtering with odd-reflection padding (about one second)
// so start-up transients die outside the signal.
ArrayXd filtfilt(const Biquad& f, const ArrayXd& x, double rate) {
  const Index n = x.size();
  const Index pad = std::min<Index>(n - 1, static_cast<Index>(std::lround(rate)));
  ArrayXd ext(n + 2 * pad);
  for (Index i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  ext.segment(pad, n) = x;
  for (Index i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  ArrayXd y = filter_once(f, ext);
  y.reverseInPlace();
  y = filter_once(f, y);
  y.reverseInPlace();
  return y.segment(pad, n);
}

// Centered five-point derivative; zero phase. Scale is irrelevant to the
// adaptive thresholds and is left out.
ArrayXd five_point_derivative(const ArrayXd& x) {
  const Index n = x.size();
  ArrayXd y(n);
  auto at = [&](Index i) { return x[std::clamp<Index>(i, 0, n - 1)]; };
  for (Index i = 0; i < n; ++i)
    y[i] = (2.0 * at(i + 1) + at(i + 2) - 2.0 * at(i - 1) - at(i - 2)) / 8.0;
  return y;
}

// Centered moving-window integration via prefix sums; edges use the actual
// sample count so the envelope does not droop at the ends.
ArrayXd moving_window_integral(const ArrayXd& x, Index half) {
  const Index n = x.size();
  std::vector<double> prefix(static_cast<size_t>(n) + 1, 0.0);
  for (Index i = 0; i < n; ++i) prefix[static_cast<size_t>(i) + 1] = prefix[static_cast<size_t>(i)] + x[i];
  ArrayXd y(n);
  for (Index i = 0; i < n; ++i) {
    const Index a = std::max<Index>(0, i - half);
    const Index b = std::min<Index>(n - 1, i + half);
    y[i] = (prefix[static_cast<size_t>(b) + 1] - prefix[static_cast<size_t>(a)]) /
           static_cast<double>(b - a + 1);
  }
  return y;
}

struct EnvelopePeak {
  Index idx;
  double amp;
};

// Envelope local maxima, thinned so that each integration ridge yields one
// candidate. The centered window turns a compact QRS burst into a near-flat
// plateau whose noise ripple is all local maxima; without suppression the
// first ripple above threshold would fire well before the R wave.
std::vector<EnvelopePeak> envelope_peaks(const ArrayXd& e, Index radius) {
  const Index n = e.size();
  std::vector<EnvelopePeak> out;
  for (Index i = 1; i + 1 < n; ++i) {
    if (!(e[i] > e[i - 1] && e[i] >= e[i + 1])) continue;
    const Index a = std::max<Index>(0, i - radius);
    const Index b = std::min<Index>(n - 1, i + radius);
    bool keep = true;
    for (Index j = a; j < i && keep; ++j) keep = e[i] > e[j];
    for (Index j = i + 1; j <= b && keep; ++j) keep = e[i] >= e[j];
    if (keep) out.push_back({i, e[i]});
  }
  return out;
}

}  // namespace

BeatSeries detect_r_peaks(const ArrayXd& ecg, double rate) {
  return detect_r_peaks(ecg, rate, PanTompkinsConfig{});
}

BeatSeries detect_r_peaks(const ArrayXd& ecg, double rate, const PanTompkinsConfig& cfg) {
  if (rate < 100.0)
    throw std::invalid_argument("detect_r_peaks: rate must be at least 100 Hz, got " +
                                std::to_string(rate));
  const Index n = ecg.size();
  if (static_cast<double>(n) < 5.0 * rate)
    throw std::invalid_argument("detect_r_peaks: need at least 5 s of signal");

  const Biquad bp = design_bandpass(cfg.band_lo_hz, cfg.band_hi_hz, rate);
  const ArrayXd filtered = filtfilt(bp, ecg, rate);
  const ArrayXd deriv = five_point_derivative(filtered);
  const ArrayXd squared = deriv * deriv;
  const Index mwi_half = std::max<Index>(1, static_cast<Index>(std::lround(cfg.integration_window_s * rate / 2.0)));
  const ArrayXd mwi = moving_window_integral(squared, mwi_half);

  // Suppression and localization radii: half the refractory span merges one
  // QRS ridge without reaching a neighbouring beat.
  const Index half_refractory =
      std::max<Index>(1, static_cast<Index>(std::lround(cfg.refractory_s * rate / 2.0)));
  const std::vector<EnvelopePeak> cands = envelope_peaks(mwi, half_refractory);
  if (cands.empty()) throw std::runtime_error("detect_r_peaks: no beats detected");

  // Threshold seeds from the first two seconds of the envelope.
  const Index learn = std::min<Index>(n, static_cast<Index>(std::lround(2.0 * rate)));
  double spki = 0.5 * mwi.head(learn).maxCoeff();
  double npki = 0.5 * mwi.head(learn).mean();
  const Index refractory = static_cast<Index>(std::lround(cfg.refractory_s * rate));

  std::vector<Index> qrs;                 // envelope indices
  std::vector<char> is_qrs(cands.size(), 0);
  std::deque<double> rr_hist;             // last 8 accepted RR intervals, samples
  auto rr_average = [&]() {
    double s = 0.0;
    for (double v : rr_hist) s += v;
    return s / static_cast<double>(rr_hist.size());
  };
  auto record_beat = [&](Index idx) {
    if (!qrs.empty()) {
      rr_hist.push_back(static_cast<double>(idx - qrs.back()));
      if (rr_hist.size() > 8) rr_hist.pop_front();
    }
    qrs.push_back(idx);
  };

  for (size_t c = 0; c < cands.size(); ++c) {
    const auto& [idx, amp] = cands[c];

    // Search-back first: once a beat is overdue by searchback_factor times
    // the running RR average, the best already-skipped candidate between
    // the last beat and here is re-examined at the lower threshold. This
    // runs before classifying the current candidate so that a missed small
    // beat is recovered even when the next candidate is a clean beat.
    if (!qrs.empty() && !rr_hist.empty() &&
        static_cast<double>(idx - qrs.back()) > cfg.searchback_factor * rr_average()) {
      const double thr2 = 0.5 * (npki + 0.25 * (spki - npki));
      size_t best = cands.size();
      for (size_t k = c - 1;; --k) {
        if (!is_qrs[k] && cands[k].idx > qrs.back() + refractory &&
            cands[k].amp >= thr2 &&
            (best == cands.size() || cands[k].amp > cands[best].amp))
          best = k;
        if (k == 0 || cands[k].idx <= qrs.back()) break;
      }
      if (best != cands.size()) {
        spki = 0.25 * cands[best].amp + 0.75 * spki;
        record_beat(cands[best].idx);
        is_qrs[best] = 1;
      }
    }

    const double thr1 = npki + 0.25 * (spki - npki);
    if (!qrs.empty() && idx - qrs.back() < refractory) continue;

    if (amp >= thr1) {
      spki = 0.125 * amp + 0.875 * spki;
      record_beat(idx);
      is_qrs[c] = 1;
      continue;
    }
    npki = 0.125 * amp + 0.875 * npki;
  }
  if (qrs.empty()) throw std::runtime_error("detect_r_peaks: no beats detected");

  // An envelope candidate marks the ridge, not the R wave itself: the
  // integration plateau lets it sit tens of milliseconds off the summit.
  // Locate the R on the band-passed waveform under the ridge, then snap to
  // the raw-signal maximum within the refinement radius.
  const Index r = std::max<Index>(1, static_cast<Index>(std::lround(cfg.refine_radius_s * rate)));
  std::vector<Index> refined;
  refined.reserve(qrs.size());
  for (Index idx : qrs) {
    Index la = std::max<Index>(0, idx - half_refractory);
    Index lb = std::min<Index>(n - 1, idx + half_refractory);
    Index located = la;
    for (Index i = la + 1; i <= lb; ++i)
      if (filtered[i] > filtered[located]) located = i;

    const Index a = std::max<Index>(0, located - r);
    const Index b = std::min<Index>(n - 1, located + r);
    Index best = a;
    for (Index i = a + 1; i <= b; ++i)
      if (ecg[i] > ecg[best]) best = i;
    if (refined.empty() || best > refined.back()) refined.push_back(best);
  }

  BeatSeries out;
  out.source = BeatSource::EcgRPeak;
  out.timestamps.resize(static_cast<Index>(refined.size()));
  for (size_t i = 0; i < refined.size(); ++i)
    out.timestamps[static_cast<Index>(i)] = static_cast<double>(refined[i]) / rate;
  return out;
}

namespace {

// Block-average decimation of one window to at most `target_hz`.
struct Decimated {
  std::vector<double> x;
  Index factor = 1;
};

Decimated block_average(const ArrayXd& full, Index begin, Index end, double rate,
                        double target_hz) {
  Decimated d;
  d.factor = static_cast<Index>(std::ceil(rate / target_hz));
  if (d.factor < 1) d.factor = 1;
  const Index len = end - begin;
  const Index n_ds = len / d.factor;
  d.x.resize(static_cast<size_t>(n_ds));
  for (Index i = 0; i < n_ds; ++i) {
    double s = 0.0;
    for (Index j = 0; j < d.factor; ++j) s += full[begin + i * d.factor + j];
    d.x[static_cast<size_t>(i)] = s / static_cast<double>(d.factor);
  }
  return d;
}

// Scale-k local maximum with a left-biased plateau rule: strictly above the
// left neighbour, at least the right one. Exactly one sample of a symmetric
// pair qualifies.
inline bool scale_max(const std::vector<double>& x, Index i, Index k) {
  return x[static_cast<size_t>(i)] > x[static_cast<size_t>(i - k)] &&
         x[static_cast<size_t>(i)] >= x[static_cast<size_t>(i + k)];
}

// Local-maxima-scalogram peak pick on one decimated window. Returns
// decimated-domain indices; k_star reports the selected scale.
std::vector<Index> lms_peaks(const std::vector<double>& x, Index k_max, Index* k_star) {
  const Index n = static_cast<Index>(x.size());
  k_max = std::min<Index>(k_max, (n - 1) / 2);
  if (k_max < 1 || n < 3) {
    if (k_star) *k_star = 0;
    return {};
  }

  // gamma[k] = how many samples are scale-k maxima; the dominant rhythm's
  // half-period wins because its count grows with k until scales cross
  // into the neighbouring cycle.
  Index best_k = 1;
  Index best_count = -1;
  for (Index k = 1; k <= k_max; ++k) {
    Index count = 0;
    for (Index i = k; i < n - k; ++i)
      if (scale_max(x, i, k)) ++count;
    if (count > best_count) {
      best_count = count;
      best_k = k;
    }
  }
  if (k_star) *k_star = best_k;

  std::vector<Index> peaks;
  for (Index i = 0; i < n; ++i) {
    bool any_testable = false;
    bool ok = true;
    for (Index k = 1; k <= best_k; ++k) {
      if (i - k < 0 || i + k >= n) continue;  // untestable at this position
      any_testable = true;
      if (!scale_max(x, i, k)) {
        ok = false;
        break;
      }
    }
    if (ok && any_testable) peaks.push_back(i);
  }
  return peaks;
}

}  // namespace

PeakTroughSet detect_ppg_peaks_troughs(const ArrayXd& ppg, double rate,
                                       MsptdDiagnostics* diag) {
  return detect_ppg_peaks_troughs(ppg, rate, MsptdConfig{}, diag);
}

PeakTroughSet detect_ppg_peaks_troughs(const ArrayXd& ppg, double rate,
                                       const MsptdConfig& cfg, MsptdDiagnostics* diag) {
  if (rate < 20.0)
    throw std::invalid_argument("detect_ppg_peaks_troughs: rate must be at least 20 Hz, got " +
                                std::to_string(rate));
  const Index n = ppg.size();
  if (static_cast<double>(n) < 5.0 * rate)
    throw std::invalid_argument("detect_ppg_peaks_troughs: need at least 5 s of signal");

  const Index win = static_cast<Index>(std::lround(cfg.window_s * rate));
  const Index step = static_cast<Index>(std::lround((cfg.window_s - cfg.overlap_s) * rate));
  const Index margin = static_cast<Index>(std::lround(cfg.overlap_s * rate / 2.0));

  std::vector<Index> starts;
  for (Index s = 0; s + win <= n; s += step) starts.push_back(s);
  if (starts.empty())
    starts.push_back(0);  // shorter than one window: analyze what there is
  else if (starts.back() + win < n)
    starts.push_back(n - win);  // irregular tail window

  const Index refine = std::max<Index>(1, static_cast<Index>(std::lround(cfg.refine_radius_s * rate)));
  std::vector<Index> peaks, troughs;
  if (diag) {
    diag->n_windows = static_cast<Index>(starts.size());
    diag->window_kstar.clear();
  }

  Index zone_hi_prev = 0;
  for (size_t w = 0; w < starts.size(); ++w) {
    const Index begin = starts[w];
    const Index end = std::min<Index>(begin + win, n);

    // Each instant is judged by exactly one window: the overlap is split
    // between neighbours, the first and last windows take their open edge.
    const Index zone_lo = (w == 0) ? 0 : zone_hi_prev;
    const Index zone_hi = (w + 1 == starts.size()) ? n : end - margin;
    zone_hi_prev = zone_hi;

    const Decimated ds = block_average(ppg, begin, end, rate, cfg.downsample_target_hz);
    if (ds.x.size() < 3) continue;
    const double ds_rate = rate / static_cast<double>(ds.factor);
    const Index k_cap = std::max<Index>(
        1, static_cast<Index>(std::lround(ds_rate * (60.0 / cfg.min_pulse_bpm) / 2.0)));

    Index k_star = 0;
    const std::vector<Index> pk_ds = lms_peaks(ds.x, k_cap, &k_star);
    std::vector<double> neg(ds.x.size());
    for (size_t i = 0; i < ds.x.size(); ++i) neg[i] = -ds.x[i];
    const std::vector<Index> tr_ds = lms_peaks(neg, k_cap, nullptr);
    if (diag) diag->window_kstar.push_back(k_star);

    auto emit = [&](const std::vector<Index>& ds_idx, bool is_peak, std::vector<Index>& out) {
      for (Index i : ds_idx) {
        const Index center = begin + i * ds.factor + (ds.factor - 1) / 2;
        if (center < zone_lo || center >= zone_hi) continue;
        const Index a = std::max<Index>(0, center - refine);
        const Index b = std::min<Index>(n - 1, center + refine);
        Index best = a;
        for (Index s = a + 1; s <= b; ++s) {
          if (is_peak ? ppg[s] > ppg[best] : ppg[s] < ppg[best]) best = s;
        }
        out.push_back(best);
      }
    };
    emit(pk_ds, true, peaks);
    emit(tr_ds, false, troughs);
  }

  auto finish = [](std::vector<Index>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  finish(peaks);
  finish(troughs);

  if (peaks.empty() || troughs.empty())
    throw std::runtime_error(
        "detect_ppg_peaks_troughs: no alternating peak/trough pairing possible");
  return PeakTroughSet{std::move(peaks), std::move(troughs)};
}

MidpointResult midpoints(const PeakTroughSet& pt, const ArrayXd& ppg, double rate) {
  if (rate <= 0.0) throw std::invalid_argument("midpoints: rate must be positive");
  for (Index i : pt.peaks)
    if (i < 0 || i >= ppg.size()) throw std::invalid_argument("midpoints: peak index out of range");
  for (Index i : pt.troughs)
    if (i < 0 || i >= ppg.size())
      throw std::invalid_argument("midpoints: trough index out of range");

  MidpointResult res;
  std::vector<double> times;
  size_t ip = 0;
  Index pending_trough = -1;
  // Merge-walk the two sorted index lists; a trough is paired with the
  // peak that follows it directly, everything else is skipped and counted.
  for (Index tr : pt.troughs) {
    while (ip < pt.peaks.size() && pt.peaks[ip] < tr) {
      ++ip;
      ++res.skipped_extrema;  // peak with no preceding trough
    }
    if (pending_trough >= 0) ++res.skipped_extrema;  // superseded trough
    pending_trough = tr;
    if (ip < pt.peaks.size()) {
      const Index pk = pt.peaks[ip];
      // Pair only if no later trough intervenes before this peak.
      const auto next_tr = std::upper_bound(pt.troughs.begin(), pt.troughs.end(), tr);
      if (next_tr == pt.troughs.end() || *next_tr > pk) {
        const double lo = ppg[tr], hi = ppg[pk];
        if (hi > lo) {
          const double threshold = 0.5 * (lo + hi);
          Index s = tr;
          while (s < pk && ppg[s] < threshold) ++s;
          times.push_back(static_cast<double>(s) / rate);
          pending_trough = -1;
          ++ip;
        } else {
          res.skipped_extrema += 2;  // inverted pair consumes both extrema
          pending_trough = -1;
          ++ip;
        }
      }
    }
  }
  if (pending_trough >= 0) ++res.skipped_extrema;
  res.skipped_extrema += static_cast<Index>(pt.peaks.size() - ip);

  if (times.empty())
    throw std::runtime_error("midpoints: no trough-to-peak pair produced a fiducial");
  res.beats.source = BeatSource::PpgMidpoint;
  res.beats.timestamps =
      Eigen::Map<const ArrayXd>(times.data(), static_cast<Index>(times.size()));
  return res;
}

}  // namespace hrvprv
