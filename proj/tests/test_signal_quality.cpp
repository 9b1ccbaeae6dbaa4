#include <hrvprv/beat_detection.hpp>
#include <hrvprv/signal_quality.hpp>
#include <hrvprv/synth.hpp>

#include <doctest.h>

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace hrvprv;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Clean periodic pulse train plus the matching midpoint beat series.
struct PulseFixture {
  ArrayXd ppg;
  BeatSeries beats;
  double rate = 100.0;
};

PulseFixture clean_pulses(int n_beats = 30, double step_s = 0.9) {
  PulseFixture f;
  ArrayXd bt(n_beats);
  for (int i = 0; i < n_beats; ++i) bt[i] = 0.3 + step_s * i;
  const double dur = bt[n_beats - 1] + 2.0;
  const PpgRender r =
      render_ppg(bt, PatModel::constant_delay(), f.rate, dur, 1e9, kInf, 11);
  f.ppg = r.samples;
  f.beats.timestamps = r.midpoint_times_s;
  f.beats.source = BeatSource::PpgMidpoint;
  return f;
}

double wcss_of_split(const std::vector<double>& x, const std::vector<bool>& high) {
  double sum_h = 0, sum_l = 0;
  Index n_h = 0, n_l = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (high[i]) { sum_h += x[i]; ++n_h; }
    else { sum_l += x[i]; ++n_l; }
  }
  const double mh = n_h ? sum_h / n_h : 0.0;
  const double ml = n_l ? sum_l / n_l : 0.0;
  double w = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - (high[i] ? mh : ml);
    w += d * d;
  }
  return w;
}

}  // namespace

TEST_CASE("identical pulses all score near 1") {
  const PulseFixture f = clean_pulses();
  const std::vector<double> sqi = compute_sqi(f.ppg, f.rate, f.beats);
  REQUIRE(sqi.size() == static_cast<size_t>(f.beats.size() - 1));
  for (double s : sqi) CHECK(s > 0.999);
}

TEST_CASE("an inverted pulse scores near zero, a noisy one below the clean floor") {
  PulseFixture f = clean_pulses();
  const std::vector<double> clean = compute_sqi(f.ppg, f.rate, f.beats);
  const double clean_min = *std::min_element(clean.begin(), clean.end());

  // Flip segment 10 (between fiducials 10 and 11) around its mean.
  const Index a = static_cast<Index>(f.beats.timestamps[10] * f.rate);
  const Index b = static_cast<Index>(f.beats.timestamps[11] * f.rate);
  ArrayXd flipped = f.ppg;
  const double seg_mean = f.ppg.segment(a, b - a).mean();
  for (Index i = a; i < b; ++i) flipped[i] = 2 * seg_mean - f.ppg[i];
  const std::vector<double> s1 = compute_sqi(flipped, f.rate, f.beats);
  CHECK(s1[10] < 0.05);

  // White noise riding on segment 20.
  const Index c = static_cast<Index>(f.beats.timestamps[20] * f.rate);
  const Index d = static_cast<Index>(f.beats.timestamps[21] * f.rate);
  ArrayXd noisy = f.ppg;
  std::mt19937 gen(99);
  std::normal_distribution<double> nd(0.0, 0.5);
  for (Index i = c; i < d; ++i) noisy[i] += nd(gen);
  const std::vector<double> s2 = compute_sqi(noisy, f.rate, f.beats);
  CHECK(s2[20] < clean_min);
}

TEST_CASE("flat segments have no variance and score zero") {
  ArrayXd flat = ArrayXd::Constant(2000, 1.0);
  BeatSeries beats;
  beats.timestamps.resize(6);
  for (Index i = 0; i < 6; ++i) beats.timestamps[i] = 1.0 + 0.8 * i;
  const std::vector<double> sqi = compute_sqi(flat, 100.0, beats);
  REQUIRE(sqi.size() == 5);
  for (double s : sqi) CHECK(s == 0.0);
}

TEST_CASE("compute_sqi needs at least five beats") {
  const PulseFixture f = clean_pulses();
  BeatSeries few;
  few.timestamps = f.beats.timestamps.head(4).eval();
  CHECK_THROWS_AS(compute_sqi(f.ppg, f.rate, few), std::invalid_argument);
}

TEST_CASE("two-means split on a hand-sized example") {
  const SqiSplit s = split_sqi({0.1, 0.2, 0.9, 0.95});
  CHECK(!s.degenerate);
  CHECK(s.centroid_low == doctest::Approx(0.15));
  CHECK(s.centroid_high == doctest::Approx(0.925));
  const std::vector<bool> want{false, false, true, true};
  CHECK(s.high == want);
}

TEST_CASE("all-identical scores degenerate to a single high cluster") {
  const SqiSplit s = split_sqi({0.5, 0.5, 0.5});
  CHECK(s.degenerate);
  CHECK(s.centroid_high == 0.5);
  for (bool h : s.high) CHECK(h);
}

TEST_CASE("two distinct values split into singletons") {
  const SqiSplit s = split_sqi({1.0, 0.0});
  CHECK(!s.degenerate);
  CHECK(s.centroid_low == 0.0);
  CHECK(s.centroid_high == 1.0);
  CHECK(s.high == std::vector<bool>{true, false});
}

TEST_CASE("split cost matches exhaustive two-partition enumeration") {
  std::mt19937 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(2, 12);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x(static_cast<size_t>(len(gen)));
    for (double& v : x) v = u(gen);
    const SqiSplit s = split_sqi(x);
    if (s.degenerate) continue;
    CHECK(wcss_of_split(x, s.high) ==
          doctest::Approx(oracles::best_two_partition_wcss(x)).epsilon(1e-12));
  }
}

TEST_CASE("every high score is at least every low score") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x(20);
    for (double& v : x) v = u(gen);
    const SqiSplit s = split_sqi(x);
    REQUIRE(!s.degenerate);
    double min_high = 1e9, max_low = -1e9;
    for (size_t i = 0; i < x.size(); ++i) {
      if (s.high[i]) min_high = std::min(min_high, x[i]);
      else max_low = std::max(max_low, x[i]);
    }
    CHECK(min_high >= max_low);
    CHECK(s.centroid_high > s.centroid_low);
  }
}

TEST_CASE("good_ratio arithmetic and guards") {
  CHECK(good_ratio(8, 10) == 80.0);
  CHECK(good_ratio(0, 4) == 0.0);
  CHECK(good_ratio(3, 3) == 100.0);
  CHECK_THROWS_AS(good_ratio(5, 4), std::invalid_argument);
  CHECK_THROWS_AS(good_ratio(-1, 4), std::invalid_argument);
  CHECK_THROWS_AS(good_ratio(0, 0), std::invalid_argument);
}

TEST_CASE("acceptance needs ratio strictly above 80 or mean strictly above 0.8") {
  // Exactly 80% good and mean exactly 0.8: both boundaries, rejected.
  {
    std::vector<double> sqi(10, 1.0);
    sqi[8] = sqi[9] = 0.0;
    const QualityReport q = assess_quality(sqi);
    CHECK(q.good_ratio == 80.0);
    CHECK(q.mean_sqi == doctest::Approx(0.8));
    CHECK(q.n_good == 8);
    CHECK(q.n_total == 10);
    CHECK(!q.accepted);
  }
  // Ratio stuck at 80 but mean above 0.8: accepted through the mean.
  {
    std::vector<double> sqi(10, 1.0);
    sqi[8] = sqi[9] = 0.2;
    const QualityReport q = assess_quality(sqi);
    CHECK(q.good_ratio == 80.0);
    CHECK(q.mean_sqi > 0.8);
    CHECK(q.accepted);
  }
  // Mean only 0.675 but 90% good: accepted through the ratio.
  {
    std::vector<double> sqi(10, 0.75);
    sqi[9] = 0.0;
    const QualityReport q = assess_quality(sqi);
    CHECK(q.good_ratio == 90.0);
    CHECK(q.mean_sqi < 0.8);
    CHECK(q.accepted);
  }
  // Degenerate split is still usable: identical high scores accept.
  {
    const QualityReport q = assess_quality(std::vector<double>(6, 0.9));
    CHECK(q.degenerate_split);
    CHECK(q.good_ratio == 100.0);
    CHECK(q.accepted);
  }
}
