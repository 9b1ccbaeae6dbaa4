#include <hrvprv/stats.hpp>

#include <doctest.h>

#include "oracles.hpp"
#include "reference_arrays.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace hrvprv;

namespace {

// Runs a signed-rank test of d against zero.
double wilcoxon_of(const std::vector<double>& d) {
  const std::vector<double> zeros(d.size(), 0.0);
  return wilcoxon_signed_rank(d, zeros);
}

std::vector<PairedSample> samples_like(
    const std::function<void(PairedSample&, int)>& fill) {
  std::vector<PairedSample> s(15);
  for (int i = 0; i < 15; ++i) {
    s[static_cast<size_t>(i)].feature_name = FeatureSet::names()[static_cast<size_t>(i)];
    fill(s[static_cast<size_t>(i)], i);
  }
  return s;
}

}  // namespace

TEST_CASE("normal quantile and CDF round trip") {
  CHECK(std::abs(normal_ppf(0.975) - 1.959963984540054) < 1e-12);
  CHECK(std::abs(normal_ppf(0.5)) < 1e-15);
  CHECK(normal_ppf(0.025) == doctest::Approx(-normal_ppf(0.975)).epsilon(1e-12));
  for (double p : {0.001, 0.05, 0.3, 0.5, 0.77, 0.999})
    CHECK(normal_cdf(normal_ppf(p)) == doctest::Approx(p).epsilon(1e-10));
  CHECK_THROWS_AS(normal_ppf(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_ppf(1.0), std::invalid_argument);
}

TEST_CASE("two-sided t-distribution tail matches frozen references") {
  CHECK(std::abs(student_t_two_sided_p(2.5, 9) - 0.03386182768298571) < 1e-12);
  CHECK(std::abs(student_t_two_sided_p(0.8, 19) - 0.43359987463826954) < 1e-12);
  CHECK(student_t_two_sided_p(0.0, 7) == 1.0);
  // Symmetry in the statistic.
  CHECK(student_t_two_sided_p(-2.5, 9) == student_t_two_sided_p(2.5, 9));
}

TEST_CASE("Shapiro-Wilk matches frozen references") {
  struct Case {
    const std::vector<double>* x;
    double w, p;
  };
  const Case cases[] = {
      {&refdata::kNorm50, 0.993524350748, 0.994386572213},
      {&refdata::kExpo50, 0.875034879055, 0.000079364249},
      {&refdata::kUnif30, 0.903117486744, 0.010019178669},
      {&refdata::kLogn20, 0.905234798642, 0.051748785818},
  };
  for (const Case& c : cases) {
    const ShapiroWilkResult r = shapiro_wilk(*c.x);
    CHECK(std::abs(r.w - c.w) < 1e-8);
    CHECK(std::abs(r.p - c.p) < 1e-8);
  }
  // Normal data keeps high p, skewed data is flagged: the gate between the
  // two paired tests depends on exactly this separation.
  CHECK(shapiro_wilk(refdata::kNorm50).p > 0.5);
  CHECK(shapiro_wilk(refdata::kExpo50).p < 0.001);
}

TEST_CASE("Shapiro-Wilk input guards") {
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(10, 3.0)), std::invalid_argument);
}

TEST_CASE("paired t on a worked example") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y(5, 0.0);
  CHECK(std::abs(paired_t(x, y) - 0.013235599563682695) < 1e-15);
  // Shift both sides: differences unchanged.
  std::vector<double> xs(5), ys(5, 100.0);
  for (int i = 0; i < 5; ++i) xs[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] + 100.0;
  CHECK(paired_t(xs, ys) == doctest::Approx(paired_t(x, y)).epsilon(1e-12));
}

TEST_CASE("paired t degenerate spreads") {
  const std::vector<double> zeros(6, 0.0);
  CHECK(paired_t(zeros, zeros) == 1.0);
  const std::vector<double> shifted(6, 2.5);
  CHECK(paired_t(shifted, zeros) == 0.0);
  CHECK_THROWS_AS(paired_t(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("exact Wilcoxon worked examples") {
  CHECK(wilcoxon_of({1, 2, 3}) == 0.25);
  CHECK(wilcoxon_of({3, -1, 4, -2, 6, 5, -7, 8}) == 0.3125);
  // Perfectly balanced differences carry no signal.
  CHECK(wilcoxon_of({5, -5}) == 1.0);
  CHECK(wilcoxon_of({1, -1, 1, -1}) == 1.0);
}

TEST_CASE("exact Wilcoxon equals full sign enumeration on random vectors") {
  std::mt19937 gen(90210);
  std::normal_distribution<double> nd(0.3, 1.0);
  std::uniform_int_distribution<int> len(5, 12);
  std::uniform_int_distribution<int> coin(0, 3);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> d(static_cast<size_t>(len(gen)));
    for (double& v : d) v = nd(gen);
    // Sprinkle ties and zeros to exercise midranks and the drop rule.
    if (coin(gen) == 0) d[0] = 0.0;
    if (coin(gen) == 1 && d.size() > 3) d[1] = -d[2];
    const double want = oracles::wilcoxon_enumerated_p(d);
    CHECK(wilcoxon_of(d) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("Wilcoxon p is invariant under positive scaling") {
  std::mt19937 gen(11);
  std::normal_distribution<double> nd(0.5, 1.0);
  std::vector<double> d(10);
  for (double& v : d) v = nd(gen);
  const double base = wilcoxon_of(d);
  for (double c : {0.001, 3.0, 1e6}) {
    std::vector<double> scaled(d);
    for (double& v : scaled) v *= c;
    CHECK(wilcoxon_of(scaled) == base);
  }
}

TEST_CASE("large-sample Wilcoxon uses the tie-corrected normal approximation") {
  // n = 30 exceeds the exact-enumeration cutoff.
  REQUIRE(refdata::kDiff30.size() > static_cast<size_t>(kExactWilcoxonMaxN));
  CHECK(std::abs(wilcoxon_of(refdata::kDiff30) - 0.09570634635719293) < 1e-12);
}

TEST_CASE("Wilcoxon rejects degenerate input") {
  CHECK_THROWS_AS(wilcoxon_of(std::vector<double>(8, 0.0)), std::invalid_argument);
}

TEST_CASE("compare_features requires the full ordered feature list") {
  std::vector<PairedSample> wrong_count(14);
  CHECK_THROWS_AS(compare_features(wrong_count), std::invalid_argument);

  auto swapped = samples_like([](PairedSample& s, int) {
    s.hrv_values = {1, 2, 3, 4, 5};
    s.prv_values = {1, 2, 3, 4, 5};
  });
  std::swap(swapped[0].feature_name, swapped[1].feature_name);
  CHECK_THROWS_AS(compare_features(swapped), std::invalid_argument);
}

TEST_CASE("identical HRV and PRV values produce p = 1 everywhere") {
  std::mt19937 gen(2718);
  std::normal_distribution<double> nd(50.0, 10.0);
  const auto samples = samples_like([&](PairedSample& s, int) {
    s.hrv_values.resize(12);
    for (double& v : s.hrv_values) v = nd(gen);
    s.prv_values = s.hrv_values;
  });
  const auto results = compare_features(samples);
  REQUIRE(results.size() == 15);
  for (const ComparisonResult& r : results) {
    CHECK(r.p_value == 1.0);
    CHECK(!r.significant);
    CHECK(r.test_used == PairedTest::PairedT);
    CHECK(!r.normality_p.has_value());  // the gate never ran
    CHECK(r.error.empty());
    CHECK(r.alpha_corrected == doctest::Approx(0.05 / 15.0).epsilon(1e-15));
    CHECK(r.n_pairs == 12);
  }
}

TEST_CASE("a clear systematic shift is detected") {
  std::mt19937 gen(12);
  std::normal_distribution<double> noise(0.0, 0.5);
  const auto samples = samples_like([&](PairedSample& s, int) {
    s.hrv_values.resize(15);
    s.prv_values.resize(15);
    for (size_t i = 0; i < 15; ++i) {
      const double base = 40.0 + static_cast<double>(i);
      s.hrv_values[i] = base + 5.0 + noise(gen);
      s.prv_values[i] = base;
    }
  });
  const auto results = compare_features(samples);
  for (const ComparisonResult& r : results) {
    CHECK(r.error.empty());
    CHECK(r.p_value < 0.05 / 15.0);
    CHECK(r.significant);
  }
}

TEST_CASE("per-feature failures are recorded, not thrown") {
  auto samples = samples_like([](PairedSample& s, int i) {
    if (i == 3) {
      s.hrv_values = {1, 2, 3};  // too few pairs
      s.prv_values = {1, 2, 3};
      s.n_excluded = 9;
    } else {
      s.hrv_values = {1, 2, 3, 4, 5, 6};
      s.prv_values = {6, 5, 4, 3, 2, 1};
    }
  });
  const auto results = compare_features(samples);
  CHECK(results[3].error == "fewer than 5 pairs after exclusions");
  CHECK(results[3].p_value == 1.0);
  CHECK(!results[3].significant);
  CHECK(results[3].n_excluded == 9);
  for (size_t i = 0; i < 15; ++i)
    if (i != 3) CHECK(results[i].error.empty());
}

TEST_CASE("constant nonzero differences are reported as significant") {
  const auto samples = samples_like([](PairedSample& s, int) {
    s.hrv_values = {10, 11, 12, 13, 14};
    s.prv_values = {8, 9, 10, 11, 12};  // every difference exactly 2
  });
  const auto results = compare_features(samples);
  for (const ComparisonResult& r : results) {
    CHECK(r.p_value == 0.0);
    CHECK(r.significant);
    CHECK(r.test_used == PairedTest::PairedT);
  }
}

TEST_CASE("the normality gate picks the test") {
  // Differences drawn from the frozen arrays: normal ones go to the t-test,
  // the exponential batch to Wilcoxon.
  auto samples = samples_like([&](PairedSample& s, int i) {
    const std::vector<double>& src = (i % 2 == 0) ? refdata::kNorm50 : refdata::kExpo50;
    s.hrv_values = src;
    s.prv_values.assign(src.size(), 0.0);
  });
  const auto results = compare_features(samples);
  for (size_t i = 0; i < 15; ++i) {
    REQUIRE(results[i].normality_p.has_value());
    if (i % 2 == 0) {
      CHECK(results[i].test_used == PairedTest::PairedT);
      CHECK(*results[i].normality_p > 0.05);
    } else {
      CHECK(results[i].test_used == PairedTest::Wilcoxon);
      CHECK(*results[i].normality_p < 0.05);
    }
  }
}

TEST_CASE("report text carries the corrected threshold and stars") {
  const auto samples = samples_like([](PairedSample& s, int) {
    s.hrv_values = {10, 11, 12, 13, 14};
    s.prv_values = {8, 9, 10, 11, 12};
  });
  PhaseResults phase;
  phase.phase = "Supine";
  phase.results = compare_features(samples);
  const std::string text = render_report_text({phase});
  CHECK(text.find("0.0033 (Bonferroni, 15 tests)") != std::string::npos);
  CHECK(text.find("Supine") != std::string::npos);
  CHECK(text.find("*") != std::string::npos);
  CHECK(text.find("AHR") != std::string::npos);
  CHECK(text.find("SampEn") != std::string::npos);

  const std::string json = render_report_json({phase});
  CHECK(json.find("\"Supine\"") != std::string::npos);
  CHECK(json.find("\"significant\"") != std::string::npos);
}
