#pragma once

#include "hrvprv/types.hpp"

namespace hrvprv {

struct TimeDomainFeatures {
  double ahr = 0.0;
  double rmssd = 0.0;
  double sdnn = 0.0;
  double sdsd = 0.0;
  double pnn50 = 0.0;
};

struct SpectralBands {
  double lf_lo = 0.04;
  double lf_hi = 0.15;
  double hf_lo = 0.15;
  double hf_hi = 0.40;
};

struct SpectralFeatures {
  double lf = 0.0;
  double hf = 0.0;
  std::optional<double> nlf;
  std::optional<double> nhf;
  std::optional<double> lf_hf;
};

struct PoincareFeatures {
  double sd1 = 0.0;
  double sd2 = 0.0;
  std::optional<double> sd2_sd1;
};

struct EntropyValue {
  double value = 0.0;
  bool defined = true;
  bool degenerate = false;  // constant input (zero variance)
};

struct FeatureConfig {
  double resample_hz = 4.0;
  SpectralBands bands;
  int entropy_m = 2;
  double entropy_r_frac = 0.2;
  double min_spectral_span_s = 60.0;
};

// AHR 60000/mean, RMSSD, SDNN (n-1), SDSD (sample sd of successive
// differences), pNN50 with strict > 50 ms. Throws on fewer than 3 intervals.
TimeDomainFeatures time_domain(const IntervalSeries& series);

// Tachogram PSD: cubic-spline resample at resample_hz, mean removal, Hann
// window, single periodogram. Density is scaled so that sum(power)*df equals
// the window-weighted mean square of the detrended tachogram (sum((w*x)^2) /
// sum(w^2)), i.e. the Hann window does not bias integrated power.
PsdEstimate psd(const IntervalSeries& series, const FeatureConfig& cfg = {});

// Trapezoidal band powers over [lf_lo, lf_hi) and [hf_lo, hf_hi]; normalized
// powers and LF/HF flagged undefined when their denominator is zero.
SpectralFeatures spectral_features(const PsdEstimate& p, const SpectralBands& bands = {});

// sd1 = sqrt(var(diff)/2); sd2 = sqrt(2*sdnn^2 - sd1^2), negative radicand
// clamped to zero; ratio undefined when sd1 == 0.
PoincareFeatures poincare(const IntervalSeries& series);

// Approximate entropy, Chebyshev distance, self-matches included,
// tolerance r = r_frac * population standard deviation. Throws on fewer
// than 30 intervals; constant input yields 0 with the degenerate flag.
EntropyValue apen(const IntervalSeries& series, int m = 2, double r_frac = 0.2);

// Sample entropy, self-matches excluded; undefined when either match count
// is zero, except the all-equal case which is 0 with the degenerate flag.
EntropyValue sampen(const IntervalSeries& series, int m = 2, double r_frac = 0.2);

// All 15 features of one window. Hard precondition failures throw with the
// offending operation named; per-feature undefined flags propagate.
FeatureSet compute_feature_set(const IntervalSeries& series, const FeatureConfig& cfg = {});

}  // namespace hrvprv
