#include "hrvprv/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace hrvprv {

IntervalSeries build_intervals(const BeatSeries& beats) {
  const Index n = beats.size();
  if (n < 2)
    throw std::invalid_argument("build_intervals: need at least 2 beats, got " +
                                std::to_string(n));
  IntervalSeries out;
  out.durations_ms.resize(n - 1);
  out.end_times_s.resize(n - 1);
  for (Index i = 1; i < n; ++i) {
    const double dt = beats.timestamps[i] - beats.timestamps[i - 1];
    if (dt <= 0.0)
      throw std::invalid_argument("build_intervals: timestamps not strictly increasing at index " +
                                  std::to_string(i));
    out.durations_ms[i - 1] = dt * 1000.0;
    out.end_times_s[i - 1] = beats.timestamps[i];
  }
  out.kind = beats.source == BeatSource::EcgRPeak ? IntervalKind::Rri : IntervalKind::Ppi;
  return out;
}

namespace {

double median_of(std::vector<double>& scratch) {
  const size_t n = scratch.size();
  auto mid = scratch.begin() + n / 2;
  std::nth_element(scratch.begin(), mid, scratch.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(scratch.begin(), mid);
  return 0.5 * (lo + hi);
}

// One sweep of the local-median rule over the surviving indices.
// Returns indices (into `kept`) flagged for removal.
std::vector<size_t> flag_relative_outliers(const ArrayXd& durations,
                                           const std::vector<Index>& kept,
                                           const OutlierFilterConfig& cfg) {
  std::vector<size_t> flagged;
  const Index m = static_cast<Index>(kept.size());
  const Index half = cfg.neighborhood / 2;
  std::vector<double> window;
  for (Index j = 0; j < m; ++j) {
    const Index lo = std::max<Index>(0, j - half);
    const Index hi = std::min<Index>(m - 1, j + half);
    window.clear();
    for (Index k = lo; k <= hi; ++k) window.push_back(durations[kept[k]]);
    const double med = median_of(window);
    if (med <= 0.0) continue;
    if (std::abs(durations[kept[j]] - med) / med > cfg.max_rel_deviation)
      flagged.push_back(static_cast<size_t>(j));
  }
  return flagged;
}

}  // namespace

FilterResult filter_outliers(const IntervalSeries& series, const OutlierFilterConfig& cfg) {
  const Index n = series.size();
  if (n == 0) throw std::invalid_argument("filter_outliers: empty interval series");

  FilterResult res;
  std::vector<Index> kept;
  kept.reserve(n);
  for (Index i = 0; i < n; ++i) {
    const double d = series.durations_ms[i];
    if (d > cfg.min_ms && d < cfg.max_ms)
      kept.push_back(i);
    else
      ++res.removed_absolute;
  }

  // Iterate the relative rule to a fixed point so the filter is idempotent.
  while (!kept.empty()) {
    const auto flagged = flag_relative_outliers(series.durations_ms, kept, cfg);
    if (flagged.empty()) break;
    res.removed_relative += static_cast<Index>(flagged.size());
    std::vector<Index> next;
    next.reserve(kept.size() - flagged.size());
    size_t f = 0;
    for (size_t j = 0; j < kept.size(); ++j) {
      if (f < flagged.size() && flagged[f] == j)
        ++f;
      else
        next.push_back(kept[j]);
    }
    kept.swap(next);
  }

  res.series.kind = series.kind;
  res.series.durations_ms.resize(static_cast<Index>(kept.size()));
  res.series.end_times_s.resize(static_cast<Index>(kept.size()));
  for (size_t j = 0; j < kept.size(); ++j) {
    res.series.durations_ms[static_cast<Index>(j)] = series.durations_ms[kept[j]];
    res.series.end_times_s[static_cast<Index>(j)] = series.end_times_s[kept[j]];
  }
  res.removed_fraction = static_cast<double>(res.removed_total()) / static_cast<double>(n);
  res.reliable = res.removed_fraction <= cfg.unreliable_fraction;
  return res;
}

UniformSeries interpolate_uniform(const IntervalSeries& series, double rate_hz) {
  const Index n = series.size();
  if (n < 4)
    throw std::invalid_argument("interpolate_uniform: need at least 4 intervals, got " +
                                std::to_string(n));
  if (rate_hz <= 0.0) throw std::invalid_argument("interpolate_uniform: non-positive rate");

  const ArrayXd& x = series.end_times_s;
  const ArrayXd& y = series.durations_ms;
  for (Index i = 1; i < n; ++i)
    if (x[i] <= x[i - 1])
      throw std::invalid_argument("interpolate_uniform: end times not strictly increasing");

  // Natural cubic spline: second derivatives from the standard tridiagonal
  // system, zero curvature at both ends.
  ArrayXd h = x.tail(n - 1) - x.head(n - 1);
  ArrayXd m2 = ArrayXd::Zero(n);  // second derivatives at knots
  {
    ArrayXd diag(n - 2), rhs(n - 2), sub(n - 2), sup(n - 2);
    for (Index i = 1; i < n - 1; ++i) {
      diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
      sub[i - 1] = h[i - 1];
      sup[i - 1] = h[i];
      rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // Thomas algorithm
    for (Index i = 1; i < n - 2; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (Index i = n - 3; i >= 0; --i) {
      const double upper = (i == n - 3) ? 0.0 : sup[i] * m2[i + 2];
      m2[i + 1] = (rhs[i] - upper) / diag[i];
    }
  }

  UniformSeries out;
  out.rate_hz = rate_hz;
  out.t0_s = x[0];
  const Index count = static_cast<Index>(std::floor((x[n - 1] - x[0]) * rate_hz)) + 1;
  out.values_ms.resize(count);

  Index seg = 0;
  for (Index j = 0; j < count; ++j) {
    const double t = x[0] + static_cast<double>(j) / rate_hz;
    while (seg < n - 2 && t > x[seg + 1]) ++seg;
    const double dt = t - x[seg];
    const double hs = h[seg];
    const double a = (x[seg + 1] - t) / hs;
    const double b = dt / hs;
    out.values_ms[j] = a * y[seg] + b * y[seg + 1] +
                       ((a * a * a - a) * m2[seg] + (b * b * b - b) * m2[seg + 1]) *
                           (hs * hs) / 6.0;
  }
  return out;
}

void write_intervals_csv(std::ostream& out, const IntervalSeries& series) {
  out << "t_s,duration_ms\n";
  char buf[64];
  for (Index i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", series.end_times_s[i],
                  series.durations_ms[i]);
    out << buf;
  }
}

}  // namespace hrvprv
