#pragma once

#include "hrvprv/types.hpp"

#include <vector>

namespace hrvprv {

// One correlation score per inter-beat pulse: the PPG segment between two
// consecutive fiducials, resampled to 100 points, scored by Pearson
// correlation against the pointwise-median template of all pulses and
// clipped to [0, 1]. Zero-variance pulses score 0. Requires at least
// 5 beats; beat timestamps are relative to the first PPG sample.
std::vector<double> compute_sqi(const ArrayXd& ppg, double rate, const BeatSeries& beats);

struct SqiSplit {
  std::vector<bool> high;  // per score, aligned with the input
  double centroid_low = 0.0;
  double centroid_high = 0.0;
  bool degenerate = false;  // all scores identical: everything is "high"
};

// Exact 1-D 2-means: sort, try every split, keep the partition with the
// smallest within-cluster sum of squares. Equal-cost splits resolve to the
// larger high cluster. All-identical input degenerates to one cluster
// reported as high, with the flag set.
SqiSplit split_sqi(const std::vector<double>& sqi);

// 100 * n_good / n_total; throws unless 0 <= n_good <= n_total and n_total >= 1.
double good_ratio(Index n_good, Index n_total);

// Acceptance rule: good_ratio > 80 (percent) or mean SQI > 0.8, both strict.
QualityReport assess_quality(const std::vector<double>& sqi);

}  // namespace hrvprv
