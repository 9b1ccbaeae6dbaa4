#pragma once

#include "hrvprv/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace hrvprv {

// Standard normal CDF.
double normal_cdf(double z);
// Inverse standard normal CDF (Wichura's PPND16 rational approximation).
double normal_ppf(double p);
// Two-sided p for a Student-t statistic, via the regularized incomplete
// beta function (continued fraction).
double student_t_two_sided_p(double t, double df);

struct ShapiroWilkResult {
  double w = 0.0;
  double p = 0.0;
};

// Royston AS R94 approximation. Requires 3 <= n <= 5000 and a non-constant
// sample; throws otherwise.
ShapiroWilkResult shapiro_wilk(std::span<const double> x);

// Two-sided paired t-test on x - y. All-zero differences return p = 1;
// zero spread with nonzero mean returns p = 0.
double paired_t(std::span<const double> x, std::span<const double> y);

// Wilcoxon signed-rank, two-sided. Zero differences dropped, midranks for
// ties. Exact null distribution for effective n <= 25, normal approximation
// with tie-corrected variance and continuity correction above.
double wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

inline constexpr Index kExactWilcoxonMaxN = 25;

// Shapiro-Wilk at 0.05 on paired differences selects paired t or Wilcoxon
// per feature; significance at alpha / 15 (Bonferroni). Expects all 15
// features in FeatureSet::names() order; per-feature failures are recorded
// in the result instead of aborting the batch.
std::vector<ComparisonResult> compare_features(const std::vector<PairedSample>& samples,
                                               double alpha = 0.05);

struct PhaseResults {
  std::string phase;  // display name, e.g. "Supine"
  std::vector<ComparisonResult> results;
};

// Text table, one row per feature, one column per phase, '*' on significant
// cells, exclusion footnotes.
std::string render_report_text(const std::vector<PhaseResults>& phases, double alpha = 0.05);
// JSON document {phase: {feature: {normality_p, test_used, p_value, significant}}}.
std::string render_report_json(const std::vector<PhaseResults>& phases);

}  // namespace hrvprv
