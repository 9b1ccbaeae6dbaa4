#include "hrvprv/features.hpp"

#include "hrvprv/intervals.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrvprv {

namespace {

ArrayXd successive_diffs(const ArrayXd& d) {
  return d.tail(d.size() - 1) - d.head(d.size() - 1);
}

double sample_sd(const ArrayXd& v) {
  const Index n = v.size();
  if (n < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v - mean).square().sum() / static_cast<double>(n - 1));
}

double population_sd(const ArrayXd& v) {
  const double mean = v.mean();
  return std::sqrt((v - mean).square().sum() / static_cast<double>(v.size()));
}

}  // namespace

TimeDomainFeatures time_domain(const IntervalSeries& series) {
  const Index n = series.size();
  if (n < 3)
    throw std::invalid_argument("time_domain: need at least 3 intervals, got " +
                                std::to_string(n));
  const ArrayXd& d = series.durations_ms;
  const ArrayXd diffs = successive_diffs(d);

  TimeDomainFeatures f;
  f.ahr = 60000.0 / d.mean();
  f.rmssd = std::sqrt(diffs.square().mean());
  f.sdnn = sample_sd(d);
  f.sdsd = sample_sd(diffs);
  f.pnn50 = 100.0 * static_cast<double>((diffs.abs() > 50.0).count()) /
            static_cast<double>(diffs.size());
  return f;
}

PsdEstimate psd(const IntervalSeries& series, const FeatureConfig& cfg) {
  const Index n = series.size();
  if (n < 4)
    throw std::invalid_argument("psd: need at least 4 intervals, got " + std::to_string(n));
  const double span = series.end_times_s[n - 1] - series.end_times_s[0];
  if (span < cfg.min_spectral_span_s)
    throw std::invalid_argument("psd: span too short (" + std::to_string(span) + " s, need " +
                                std::to_string(cfg.min_spectral_span_s) + " s)");

  const UniformSeries uniform = interpolate_uniform(series, cfg.resample_hz);
  const Index N = uniform.size();
  const double fs = uniform.rate_hz;

  ArrayXd x = uniform.values_ms - uniform.values_ms.mean();
  ArrayXd w(N);
  for (Index j = 0; j < N; ++j)
    w[j] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(j) /
                                 static_cast<double>(N - 1)));
  const double window_power = w.square().sum();

  std::vector<double> y(static_cast<size_t>(N));
  for (Index j = 0; j < N; ++j) y[static_cast<size_t>(j)] = x[j] * w[j];

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, y);

  const Index bins = static_cast<Index>(spectrum.size());
  PsdEstimate out;
  out.freqs_hz.resize(bins);
  out.power.resize(bins);
  const bool even = (N % 2 == 0);
  for (Index k = 0; k < bins; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * fs / static_cast<double>(N);
    const double mag2 = std::norm(spectrum[static_cast<size_t>(k)]);
    const bool one_sided_double = k > 0 && !(even && k == bins - 1);
    out.power[k] = (one_sided_double ? 2.0 : 1.0) * mag2 / (fs * window_power);
  }
  return out;
}

namespace {

// Trapezoidal integral of the piecewise-linear density over [lo, hi],
// with fractional first/last segments.
double integrate_band(const PsdEstimate& p, double lo, double hi) {
  const Index n = p.freqs_hz.size();
  double total = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    const double f0 = p.freqs_hz[i], f1 = p.freqs_hz[i + 1];
    const double a = std::max(f0, lo), b = std::min(f1, hi);
    if (b <= a) continue;
    const double p0 = p.power[i], p1 = p.power[i + 1];
    const double slope = (p1 - p0) / (f1 - f0);
    const double pa = p0 + slope * (a - f0);
    const double pb = p0 + slope * (b - f0);
    total += 0.5 * (pa + pb) * (b - a);
  }
  return total;
}

}  // namespace

SpectralFeatures spectral_features(const PsdEstimate& p, const SpectralBands& bands) {
  if (p.freqs_hz.size() < 2 || p.freqs_hz[p.freqs_hz.size() - 1] < 0.5)
    throw std::invalid_argument("spectral_features: PSD must cover 0-0.5 Hz");
  SpectralFeatures f;
  f.lf = integrate_band(p, bands.lf_lo, bands.lf_hi);
  f.hf = integrate_band(p, bands.hf_lo, bands.hf_hi);
  const double total = f.lf + f.hf;
  if (total > 0.0) {
    f.nlf = f.lf / total;
    f.nhf = f.hf / total;
  }
  if (f.hf > 0.0) f.lf_hf = f.lf / f.hf;
  return f;
}

PoincareFeatures poincare(const IntervalSeries& series) {
  const Index n = series.size();
  if (n < 3)
    throw std::invalid_argument("poincare: need at least 3 intervals, got " + std::to_string(n));
  const ArrayXd diffs = successive_diffs(series.durations_ms);
  const double sdsd = sample_sd(diffs);
  const double sdnn = sample_sd(series.durations_ms);

  PoincareFeatures f;
  f.sd1 = sdsd / std::sqrt(2.0);
  const double radicand = 2.0 * sdnn * sdnn - f.sd1 * f.sd1;
  f.sd2 = radicand > 0.0 ? std::sqrt(radicand) : 0.0;
  if (f.sd1 > 0.0) f.sd2_sd1 = f.sd2 / f.sd1;
  return f;
}

namespace {

void check_entropy_input(const char* op, const IntervalSeries& series, int m, double r_frac) {
  if (series.size() < 30)
    throw std::invalid_argument(std::string(op) + ": need at least 30 intervals, got " +
                                std::to_string(series.size()));
  if (m < 1) throw std::invalid_argument(std::string(op) + ": embedding dimension must be >= 1");
  if (r_frac <= 0.0) throw std::invalid_argument(std::string(op) + ": tolerance fraction must be > 0");
}

// Chebyshev match of windows starting at i and j: max_k |x[i+k]-x[j+k]| <= r.
bool windows_match(const ArrayXd& x, Index i, Index j, int len, double r) {
  for (int k = 0; k < len; ++k)
    if (std::abs(x[i + k] - x[j + k]) > r) return false;
  return true;
}

}  // namespace

EntropyValue apen(const IntervalSeries& series, int m, double r_frac) {
  check_entropy_input("apen", series, m, r_frac);
  const ArrayXd& x = series.durations_ms;
  const Index n = x.size();
  const double sd = population_sd(x);
  if (sd == 0.0) return {0.0, true, true};
  const double r = r_frac * sd;

  auto phi = [&](int len) {
    const Index count = n - len + 1;
    double sum_log = 0.0;
    for (Index i = 0; i < count; ++i) {
      Index matches = 0;  // includes j == i
      for (Index j = 0; j < count; ++j)
        if (windows_match(x, i, j, len, r)) ++matches;
      sum_log += std::log(static_cast<double>(matches) / static_cast<double>(count));
    }
    return sum_log / static_cast<double>(count);
  };

  return {phi(m) - phi(m + 1), true, false};
}

EntropyValue sampen(const IntervalSeries& series, int m, double r_frac) {
  check_entropy_input("sampen", series, m, r_frac);
  const ArrayXd& x = series.durations_ms;
  const Index n = x.size();
  const double sd = population_sd(x);
  if (sd == 0.0) return {0.0, true, true};
  const double r = r_frac * sd;

  // Templates restricted so both the m and m+1 windows exist.
  const Index count = n - m;
  long long b = 0, a = 0;
  for (Index i = 0; i < count; ++i) {
    for (Index j = i + 1; j < count; ++j) {
      if (!windows_match(x, i, j, m, r)) continue;
      ++b;
      if (std::abs(x[i + m] - x[j + m]) <= r) ++a;
    }
  }
  if (a == 0 || b == 0) return {0.0, false, false};
  return {-std::log(static_cast<double>(a) / static_cast<double>(b)), true, false};
}

FeatureSet compute_feature_set(const IntervalSeries& series, const FeatureConfig& cfg) {
  FeatureSet fs;

  const TimeDomainFeatures td = time_domain(series);
  fs.ahr = td.ahr;
  fs.rmssd = td.rmssd;
  fs.sdnn = td.sdnn;
  fs.sdsd = td.sdsd;
  fs.pnn50 = td.pnn50;

  const SpectralFeatures sp = spectral_features(psd(series, cfg), cfg.bands);
  fs.lf = sp.lf;
  fs.hf = sp.hf;
  fs.nlf = sp.nlf;
  fs.nhf = sp.nhf;
  fs.lf_hf = sp.lf_hf;

  const PoincareFeatures pc = poincare(series);
  fs.sd1 = pc.sd1;
  fs.sd2 = pc.sd2;
  fs.sd2_sd1 = pc.sd2_sd1;

  const EntropyValue ae = apen(series, cfg.entropy_m, cfg.entropy_r_frac);
  fs.apen = ae.value;
  fs.apen_degenerate = ae.degenerate;

  const EntropyValue se = sampen(series, cfg.entropy_m, cfg.entropy_r_frac);
  if (se.defined) fs.sampen = se.value;
  fs.sampen_degenerate = se.degenerate;

  return fs;
}

}  // namespace hrvprv
