#include "hrvprv/signal_quality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hrvprv {

namespace {

constexpr int kPulsePoints = 100;

// Linear interpolation of the channel at a continuous sample position.
double sample_at(const ArrayXd& x, double pos) {
  const Index lo = std::clamp<Index>(static_cast<Index>(std::floor(pos)), 0, x.size() - 1);
  const Index hi = std::min<Index>(lo + 1, x.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

double pearson_clipped(const ArrayXd& a, const ArrayXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const ArrayXd da = a - ma, db = b - mb;
  const double va = (da * da).sum(), vb = (db * db).sum();
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  const double r = (da * db).sum() / std::sqrt(va * vb);
  return std::clamp(r, 0.0, 1.0);
}

}  // namespace

std::vector<double> compute_sqi(const ArrayXd& ppg, double rate, const BeatSeries& beats) {
  if (rate <= 0.0) throw std::invalid_argument("compute_sqi: rate must be positive");
  if (beats.size() < 5)
    throw std::invalid_argument("compute_sqi: need at least 5 beats, got " +
                                std::to_string(beats.size()));

  const Index n_pulses = beats.size() - 1;
  Eigen::MatrixXd pulses(n_pulses, kPulsePoints);
  for (Index p = 0; p < n_pulses; ++p) {
    const double a = beats.timestamps[p] * rate;
    const double b = beats.timestamps[p + 1] * rate;
    for (int j = 0; j < kPulsePoints; ++j) {
      const double pos = a + (b - a) * static_cast<double>(j) / (kPulsePoints - 1);
      pulses(p, j) = sample_at(ppg, pos);
    }
  }

  // Template: pointwise median across pulses, robust to a few bad ones.
  ArrayXd tmpl(kPulsePoints);
  std::vector<double> column(static_cast<size_t>(n_pulses));
  for (int j = 0; j < kPulsePoints; ++j) {
    for (Index p = 0; p < n_pulses; ++p) column[static_cast<size_t>(p)] = pulses(p, j);
    auto mid = column.begin() + n_pulses / 2;
    std::nth_element(column.begin(), mid, column.end());
    double med = *mid;
    if (n_pulses % 2 == 0) {
      const double lower = *std::max_element(column.begin(), mid);
      med = 0.5 * (med + lower);
    }
    tmpl[j] = med;
  }

  std::vector<double> sqi(static_cast<size_t>(n_pulses));
  for (Index p = 0; p < n_pulses; ++p)
    sqi[static_cast<size_t>(p)] = pearson_clipped(pulses.row(p).array().transpose(), tmpl);
  return sqi;
}

SqiSplit split_sqi(const std::vector<double>& sqi) {
  if (sqi.empty()) throw std::invalid_argument("split_sqi: empty input");
  const size_t n = sqi.size();

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return sqi[a] < sqi[b]; });

  SqiSplit res;
  res.high.assign(n, true);
  if (sqi[order.front()] == sqi[order.back()]) {
    res.degenerate = true;
    res.centroid_low = res.centroid_high = sqi[0];
    return res;
  }

  // Prefix sums over the sorted values; in 1-D the optimal 2-means clusters
  // are contiguous, so trying every split point finds the global optimum.
  std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + sqi[order[i]];
    prefix_sq[i + 1] = prefix_sq[i] + sqi[order[i]] * sqi[order[i]];
  }
  auto wcss = [&](size_t lo, size_t hi) {  // [lo, hi)
    const double cnt = static_cast<double>(hi - lo);
    const double s = prefix[hi] - prefix[lo];
    return (prefix_sq[hi] - prefix_sq[lo]) - s * s / cnt;
  };

  size_t best_split = 1;  // low cluster = sorted[0, split)
  double best_cost = std::numeric_limits<double>::infinity();
  for (size_t split = 1; split < n; ++split) {
    const double cost = wcss(0, split) + wcss(split, n);
    if (cost < best_cost) {
      best_cost = cost;
      best_split = split;
    }
  }

  for (size_t i = 0; i < best_split; ++i) res.high[order[i]] = false;
  res.centroid_low = prefix[best_split] / static_cast<double>(best_split);
  res.centroid_high =
      (prefix[n] - prefix[best_split]) / static_cast<double>(n - best_split);
  return res;
}

double good_ratio(Index n_good, Index n_total) {
  if (n_total < 1)
    throw std::invalid_argument("good_ratio: n_total must be at least 1");
  if (n_good < 0 || n_good > n_total)
    throw std::invalid_argument("good_ratio: n_good must be in [0, n_total]");
  return 100.0 * static_cast<double>(n_good) / static_cast<double>(n_total);
}

QualityReport assess_quality(const std::vector<double>& sqi) {
  if (sqi.empty()) throw std::invalid_argument("assess_quality: empty SQI series");
  const SqiSplit split = split_sqi(sqi);

  QualityReport report;
  report.n_total = static_cast<Index>(sqi.size());
  report.n_good =
      static_cast<Index>(std::count(split.high.begin(), split.high.end(), true));
  report.good_ratio = good_ratio(report.n_good, report.n_total);
  report.mean_sqi =
      std::accumulate(sqi.begin(), sqi.end(), 0.0) / static_cast<double>(sqi.size());
  report.centroid_low = split.centroid_low;
  report.centroid_high = split.centroid_high;
  report.degenerate_split = split.degenerate;
  report.accepted = report.good_ratio > 80.0 || report.mean_sqi > 0.8;
  return report;
}

}  // namespace hrvprv
