#include "hrvprv/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace hrvprv {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_ppf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_ppf: p must be in (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.76949722146069140550) * r +
            4.63033784615654529590) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580) * r +
            5.46378491116411436990) * r + 6.65790464350110377720) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

namespace {

// Continued fraction for the regularized incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw std::invalid_argument("student_t_two_sided_p: df must be > 0");
  if (!std::isfinite(t)) return 0.0;
  return reg_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

ShapiroWilkResult shapiro_wilk(std::span<const double> x) {
  const Index n = static_cast<Index>(x.size());
  if (n < 3 || n > 5000)
    throw std::invalid_argument("shapiro_wilk: n must be in [3, 5000], got " +
                                std::to_string(n));
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  if (s.front() == s.back())
    throw std::invalid_argument("shapiro_wilk: constant input");

  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
  double ssq = 0.0;
  for (double v : s) ssq += (v - mean) * (v - mean);

  ShapiroWilkResult res;
  if (n == 3) {
    const double a1 = std::sqrt(0.5);
    const double num = a1 * (s[2] - s[0]);
    res.w = num * num / ssq;
    res.w = std::min(res.w, 1.0);
    const double pi6 = 6.0 / M_PI;
    const double stqr = std::asin(std::sqrt(0.75));
    res.p = res.w >= 0.75 ? pi6 * (std::asin(std::sqrt(res.w)) - stqr) : 0.0;
    res.p = std::clamp(res.p, 0.0, 1.0);
    return res;
  }

  // Royston AS R94 weights.
  std::vector<double> m(static_cast<size_t>(n));
  double m_ssq = 0.0;
  for (Index i = 0; i < n; ++i) {
    m[static_cast<size_t>(i)] =
        normal_ppf((static_cast<double>(i + 1) - 0.375) / (static_cast<double>(n) + 0.25));
    m_ssq += m[static_cast<size_t>(i)] * m[static_cast<size_t>(i)];
  }
  const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
  const double cn = m[static_cast<size_t>(n - 1)] / std::sqrt(m_ssq);
  std::vector<double> a(static_cast<size_t>(n));
  const double an = -2.706056 * std::pow(rsn, 5) + 4.434685 * std::pow(rsn, 4) -
                    2.071190 * std::pow(rsn, 3) - 0.147981 * rsn * rsn + 0.221157 * rsn + cn;
  double phi;
  Index special = 1;
  double an1 = 0.0;
  if (n > 5) {
    const double cn1 = m[static_cast<size_t>(n - 2)] / std::sqrt(m_ssq);
    an1 = -3.582633 * std::pow(rsn, 5) + 5.682633 * std::pow(rsn, 4) -
          1.752461 * std::pow(rsn, 3) - 0.293762 * rsn * rsn + 0.042981 * rsn + cn1;
    phi = (m_ssq - 2.0 * m[static_cast<size_t>(n - 1)] * m[static_cast<size_t>(n - 1)] -
           2.0 * m[static_cast<size_t>(n - 2)] * m[static_cast<size_t>(n - 2)]) /
          (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
    special = 2;
  } else {
    phi = (m_ssq - 2.0 * m[static_cast<size_t>(n - 1)] * m[static_cast<size_t>(n - 1)]) /
          (1.0 - 2.0 * an * an);
  }
  const double sqrt_phi = std::sqrt(phi);
  a[static_cast<size_t>(n - 1)] = an;
  a[0] = -an;
  if (special == 2) {
    a[static_cast<size_t>(n - 2)] = an1;
    a[1] = -an1;
  }
  for (Index i = special; i < n - special; ++i)
    a[static_cast<size_t>(i)] = m[static_cast<size_t>(i)] / sqrt_phi;

  double num = 0.0;
  for (Index i = 0; i < n; ++i) num += a[static_cast<size_t>(i)] * s[static_cast<size_t>(i)];
  res.w = num * num / ssq;
  if (res.w >= 1.0) {
    res.w = 1.0;
    res.p = 1.0;
    return res;
  }

  double z;
  const double dn = static_cast<double>(n);
  if (n <= 11) {
    const double gamma = -2.273 + 0.459 * dn;
    const double wt = -std::log(gamma - std::log(1.0 - res.w));
    const double mu = 0.5440 - 0.39978 * dn + 0.025054 * dn * dn - 0.0006714 * dn * dn * dn;
    const double sigma =
        std::exp(1.3822 - 0.77857 * dn + 0.062767 * dn * dn - 0.0020322 * dn * dn * dn);
    z = (wt - mu) / sigma;
  } else {
    const double u = std::log(dn);
    const double wt = std::log(1.0 - res.w);
    const double mu = -1.5861 - 0.31082 * u - 0.083751 * u * u + 0.0038915 * u * u * u;
    const double sigma = std::exp(-0.4803 - 0.082676 * u + 0.0030302 * u * u);
    z = (wt - mu) / sigma;
  }
  res.p = std::clamp(1.0 - normal_cdf(z), 0.0, 1.0);
  return res;
}

namespace {

std::vector<double> paired_differences(std::span<const double> x, std::span<const double> y,
                                       const char* op) {
  if (x.size() != y.size())
    throw std::invalid_argument(std::string(op) + ": samples must have equal length");
  if (x.size() < 2)
    throw std::invalid_argument(std::string(op) + ": need at least 2 pairs");
  std::vector<double> d(x.size());
  for (size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  return d;
}

// Midranks of |d|, scaled by 2 so ties stay integral. Returns scaled ranks
// aligned with `order` (ascending |d|).
std::vector<long long> scaled_midranks(const std::vector<double>& abs_sorted) {
  const size_t n = abs_sorted.size();
  std::vector<long long> scaled(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && abs_sorted[j + 1] == abs_sorted[i]) ++j;
    const long long lo = static_cast<long long>(i) + 1;  // 1-based positions
    const long long hi = static_cast<long long>(j) + 1;
    for (size_t k = i; k <= j; ++k) scaled[k] = lo + hi;  // 2 * midrank
    i = j + 1;
  }
  return scaled;
}

// Exact null distribution of the scaled signed-rank sum via counting over
// achievable sums; identical to enumerating all 2^n sign assignments.
double exact_wilcoxon_p(const std::vector<long long>& scaled_ranks, long long w_scaled) {
  long long total = 0;
  for (long long r : scaled_ranks) total += r;
  std::vector<double> counts(static_cast<size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long long reached = 0;
  for (long long r : scaled_ranks) {
    for (long long s = reached; s >= 0; --s) {
      if (counts[static_cast<size_t>(s)] > 0.0)
        counts[static_cast<size_t>(s + r)] += counts[static_cast<size_t>(s)];
    }
    reached += r;
  }
  const double denom = std::ldexp(1.0, static_cast<int>(scaled_ranks.size()));
  double cdf_le = 0.0, cdf_ge = 0.0;
  for (long long s = 0; s <= total; ++s) {
    if (s <= w_scaled) cdf_le += counts[static_cast<size_t>(s)];
    if (s >= w_scaled) cdf_ge += counts[static_cast<size_t>(s)];
  }
  return std::min(1.0, 2.0 * std::min(cdf_le, cdf_ge) / denom);
}

}  // namespace

double paired_t(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> d = paired_differences(x, y, "paired_t");
  const double n = static_cast<double>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ssq = 0.0;
  for (double v : d) ssq += (v - mean) * (v - mean);
  const double sd = std::sqrt(ssq / (n - 1.0));
  if (sd == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / (sd / std::sqrt(n));
  return student_t_two_sided_p(t, n - 1.0);
}

double wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> d_all = paired_differences(x, y, "wilcoxon_signed_rank");
  std::vector<double> d;
  for (double v : d_all)
    if (v != 0.0) d.push_back(v);
  if (d.empty())
    throw std::invalid_argument("wilcoxon_signed_rank: all differences are zero");

  std::sort(d.begin(), d.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  std::vector<double> abs_sorted(d.size());
  for (size_t i = 0; i < d.size(); ++i) abs_sorted[i] = std::abs(d[i]);
  const std::vector<long long> scaled = scaled_midranks(abs_sorted);

  long long w_scaled = 0;
  for (size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0.0) w_scaled += scaled[i];

  const Index n = static_cast<Index>(d.size());
  if (n <= kExactWilcoxonMaxN) return exact_wilcoxon_p(scaled, w_scaled);

  // Normal approximation, tie-corrected variance, continuity correction.
  const double dn = static_cast<double>(n);
  const double w_plus = 0.5 * static_cast<double>(w_scaled);
  const double mu = dn * (dn + 1.0) / 4.0;
  double tie_term = 0.0;
  size_t i = 0;
  while (i < abs_sorted.size()) {
    size_t j = i;
    while (j + 1 < abs_sorted.size() && abs_sorted[j + 1] == abs_sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  const double dev = w_plus - mu;
  if (dev == 0.0 || var <= 0.0) return 1.0;
  const double z = (dev - 0.5 * (dev > 0.0 ? 1.0 : -1.0)) / std::sqrt(var);
  return std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
}

std::vector<ComparisonResult> compare_features(const std::vector<PairedSample>& samples,
                                               double alpha) {
  if (samples.size() != static_cast<size_t>(FeatureSet::kCount))
    throw std::invalid_argument("compare_features: expected " +
                                std::to_string(FeatureSet::kCount) + " features, got " +
                                std::to_string(samples.size()));
  const auto& names = FeatureSet::names();
  for (int i = 0; i < FeatureSet::kCount; ++i)
    if (samples[static_cast<size_t>(i)].feature_name != names[static_cast<size_t>(i)])
      throw std::invalid_argument("compare_features: feature " + std::to_string(i) +
                                  " must be '" + names[static_cast<size_t>(i)] + "', got '" +
                                  samples[static_cast<size_t>(i)].feature_name + "'");

  const double alpha_corrected = alpha / static_cast<double>(FeatureSet::kCount);
  std::vector<ComparisonResult> out;
  out.reserve(samples.size());
  for (const PairedSample& s : samples) {
    ComparisonResult r;
    r.feature_name = s.feature_name;
    r.alpha_corrected = alpha_corrected;
    r.n_pairs = static_cast<Index>(s.hrv_values.size());
    r.n_excluded = s.n_excluded;
    try {
      if (s.hrv_values.size() != s.prv_values.size())
        throw std::invalid_argument("paired sample lengths differ");
      if (s.hrv_values.size() < 5)
        throw std::invalid_argument("fewer than 5 pairs after exclusions");

      std::vector<double> d(s.hrv_values.size());
      for (size_t i = 0; i < d.size(); ++i) d[i] = s.hrv_values[i] - s.prv_values[i];
      const bool all_zero = std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
      const bool constant =
          std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); });

      if (all_zero) {
        // Zero spread, zero shift: no evidence of a difference.
        r.test_used = PairedTest::PairedT;
        r.p_value = 1.0;
      } else if (constant) {
        // Zero spread, nonzero shift: the paired-t convention applies.
        r.test_used = PairedTest::PairedT;
        r.p_value = 0.0;
      } else {
        const ShapiroWilkResult sw = shapiro_wilk(d);
        r.normality_p = sw.p;
        if (sw.p >= 0.05) {
          r.test_used = PairedTest::PairedT;
          r.p_value = paired_t(s.hrv_values, s.prv_values);
        } else {
          r.test_used = PairedTest::Wilcoxon;
          r.p_value = wilcoxon_signed_rank(s.hrv_values, s.prv_values);
        }
      }
      r.significant = r.p_value < alpha_corrected;
    } catch (const std::exception& e) {
      r.error = e.what();
      r.p_value = 1.0;
      r.significant = false;
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string format_p(const ComparisonResult& r) {
  if (!r.error.empty()) return "n/a";
  char buf[32];
  if (r.p_value >= 5e-5)
    std::snprintf(buf, sizeof(buf), "%.4f", r.p_value);
  else
    std::snprintf(buf, sizeof(buf), "%.5f", r.p_value);
  std::string s(buf);
  if (r.significant) s += "*";
  return s;
}

}  // namespace

std::string render_report_text(const std::vector<PhaseResults>& phases, double alpha) {
  if (phases.empty()) throw std::invalid_argument("render_report_text: no phases");
  const double corrected = alpha / static_cast<double>(FeatureSet::kCount);
  char line[160];
  std::string out = "HRV vs PRV paired comparison\n";
  std::snprintf(line, sizeof(line), "α = %.4f (Bonferroni, %d tests)\n\n", corrected,
                FeatureSet::kCount);
  out += line;

  std::snprintf(line, sizeof(line), "%-10s", "Feature");
  out += line;
  for (const auto& ph : phases) {
    std::snprintf(line, sizeof(line), "  %-12s", ph.phase.c_str());
    out += line;
  }
  out += "\n";

  const auto& names = FeatureSet::names();
  for (int i = 0; i < FeatureSet::kCount; ++i) {
    std::snprintf(line, sizeof(line), "%-10s", names[static_cast<size_t>(i)]);
    out += line;
    for (const auto& ph : phases) {
      const auto& r = ph.results.at(static_cast<size_t>(i));
      std::snprintf(line, sizeof(line), "  %-12s", format_p(r).c_str());
      out += line;
    }
    out += "\n";
  }

  std::snprintf(line, sizeof(line), "\n* p < %.4f; paired t-test when Shapiro-Wilk p >= 0.05 "
                                    "on differences, Wilcoxon signed-rank otherwise.\n",
                corrected);
  out += line;

  std::string notes;
  for (const auto& ph : phases) {
    for (const auto& r : ph.results) {
      if (r.n_excluded > 0) {
        std::snprintf(line, sizeof(line), "  %s (%s): %lld pair(s) excluded (undefined values)\n",
                      r.feature_name.c_str(), ph.phase.c_str(),
                      static_cast<long long>(r.n_excluded));
        notes += line;
      }
      if (!r.error.empty()) {
        std::snprintf(line, sizeof(line), "  %s (%s): not tested: %s\n", r.feature_name.c_str(),
                      ph.phase.c_str(), r.error.c_str());
        notes += line;
      }
    }
  }
  if (!notes.empty()) out += "Notes:\n" + notes;
  return out;
}

std::string render_report_json(const std::vector<PhaseResults>& phases) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& ph : phases) {
    nlohmann::json phase_obj = nlohmann::json::object();
    for (const auto& r : ph.results) {
      nlohmann::json f;
      if (r.normality_p)
        f["normality_p"] = *r.normality_p;
      else
        f["normality_p"] = nullptr;
      f["test_used"] = r.test_used == PairedTest::PairedT ? "paired_t" : "wilcoxon";
      f["p_value"] = r.p_value;
      f["significant"] = r.significant;
      phase_obj[r.feature_name] = std::move(f);
    }
    doc[ph.phase] = std::move(phase_obj);
  }
  return doc.dump(2);
}

}  // namespace hrvprv
