#include "hrvprv/session_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;

namespace hrvprv {

namespace {

[[noreturn]] void fail(const fs::path& file, const std::string& what) {
  throw std::runtime_error(file.filename().string() + ": " + what);
}

// One two-column CSV channel: fixed header, strictly increasing time column.
struct Channel {
  std::vector<double> t;
  std::vector<double> v;
};

Channel read_channel_csv(const fs::path& file, const std::string& value_column) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing file: " + file.string());

  std::string line;
  if (!std::getline(in, line)) fail(file, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected = "t_s," + value_column;
  if (line != expected)
    fail(file, "malformed header: expected '" + expected + "', got '" + line + "'");

  Channel ch;
  size_t row = 0;  // data row, 0-based; file line = row + 2
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    const double t = std::strtod(p, &end);
    if (end == p || *end != ',')
      fail(file, "malformed row at line " + std::to_string(row + 2));
    p = end + 1;
    const double v = std::strtod(p, &end);
    if (end == p || *end != '\0')
      fail(file, "malformed row at line " + std::to_string(row + 2));
    if (std::isnan(v) || std::isinf(v))
      fail(file, "non-finite sample at index " + std::to_string(row));
    if (!std::isfinite(t))
      fail(file, "non-finite timestamp at index " + std::to_string(row));
    if (!ch.t.empty() && t <= ch.t.back())
      fail(file, "non-monotonic time column at index " + std::to_string(row));
    ch.t.push_back(t);
    ch.v.push_back(v);
    ++row;
  }
  if (ch.v.empty()) fail(file, "empty channel");
  return ch;
}

// The time column is redundant with the declared rate; insist they agree so
// a channel cannot be analyzed under the wrong clock.
void check_rate(const fs::path& file, const Channel& ch, double rate) {
  if (ch.t.size() < 2) return;
  const double span = ch.t.back() - ch.t.front();
  const double expected = static_cast<double>(ch.t.size() - 1) / rate;
  const double tol = std::max(2.0 / rate, 1e-3 * expected);
  if (std::abs(span - expected) > tol)
    fail(file, "time column spans " + std::to_string(span) + " s but " +
                   std::to_string(ch.t.size()) + " samples at the declared rate span " +
                   std::to_string(expected) + " s");
}

double require_number(const nlohmann::json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) fail(file, std::string("missing key '") + key + "'");
  if (!j[key].is_number()) fail(file, std::string("key '") + key + "' must be a number");
  return j[key].get<double>();
}

void write_channel_csv(const fs::path& file, const std::string& value_column,
                       const ArrayXd& samples, double rate, double t0) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "t_s," << value_column << "\n";
  char buf[64];
  for (Index k = 0; k < samples.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", t0 + static_cast<double>(k) / rate,
                  samples[k]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

}  // namespace

Session load_session(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("missing session directory: " + dir.string());

  const fs::path meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw std::runtime_error("missing file: " + meta_path.string());
  nlohmann::json j;
  try {
    meta_in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(meta_path, e.what());
  }

  Session s;
  if (!j.contains("subject_id") || !j["subject_id"].is_string())
    fail(meta_path, "missing key 'subject_id' (string)");
  s.meta.subject_id = j["subject_id"].get<std::string>();
  s.meta.supine_start_s = require_number(j, "supine_start_s", meta_path);
  s.meta.supine_end_s = require_number(j, "supine_end_s", meta_path);
  s.meta.session_end_s = require_number(j, "session_end_s", meta_path);
  s.recording.ecg_rate = require_number(j, "ecg_rate_hz", meta_path);
  s.recording.ppg_rate = require_number(j, "ppg_rate_hz", meta_path);
  s.meta.validate();
  if (s.recording.ecg_rate <= 0.0 || s.recording.ppg_rate <= 0.0)
    fail(meta_path, "sampling rates must be positive");

  const Channel ecg = read_channel_csv(dir / "ecg.csv", "ecg");
  const Channel ppg = read_channel_csv(dir / "ppg.csv", "ppg");
  check_rate(dir / "ecg.csv", ecg, s.recording.ecg_rate);
  check_rate(dir / "ppg.csv", ppg, s.recording.ppg_rate);
  if (std::abs(ecg.t.front() - ppg.t.front()) > 1e-6)
    throw std::runtime_error("ecg.csv and ppg.csv start at different times (" +
                             std::to_string(ecg.t.front()) + " vs " +
                             std::to_string(ppg.t.front()) + " s)");

  s.recording.start_time = ecg.t.front();
  s.recording.ecg = Eigen::Map<const ArrayXd>(ecg.v.data(), static_cast<Index>(ecg.v.size()));
  s.recording.ppg = Eigen::Map<const ArrayXd>(ppg.v.data(), static_cast<Index>(ppg.v.size()));
  s.recording.validate();
  return s;
}

void write_session(const fs::path& dir, const Recording& rec, const SessionMeta& meta) {
  rec.validate();
  meta.validate();
  fs::create_directories(dir);
  write_channel_csv(dir / "ecg.csv", "ecg", rec.ecg, rec.ecg_rate, rec.start_time);
  write_channel_csv(dir / "ppg.csv", "ppg", rec.ppg, rec.ppg_rate, rec.start_time);

  nlohmann::json j;
  j["subject_id"] = meta.subject_id;
  j["supine_start_s"] = meta.supine_start_s;
  j["supine_end_s"] = meta.supine_end_s;
  j["session_end_s"] = meta.session_end_s;
  j["ecg_rate_hz"] = rec.ecg_rate;
  j["ppg_rate_hz"] = rec.ppg_rate;
  std::ofstream out(dir / "meta.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
  out << j.dump(2) << "\n";
}

const PhasePlan::Entry& PhasePlan::operator[](Phase p) const {
  switch (p) {
    case Phase::Supine: return supine;
    case Phase::Transition: return transition;
    case Phase::Standing: return standing;
  }
  throw std::logic_error("PhasePlan: bad phase");
}

PhasePlan segment_phases_partial(const SessionMeta& meta) {
  meta.validate();
  PhasePlan plan;
  char reason[128];

  if (meta.supine_duration() >= kMinPhaseDurationS) {
    plan.supine.window = {meta.supine_start_s + 30.0, meta.supine_end_s - 30.0};
  } else {
    std::snprintf(reason, sizeof(reason),
                  "supine lasts %.1f s, below the %.0f s minimum", meta.supine_duration(),
                  kMinPhaseDurationS);
    plan.supine.reason = reason;
  }
  if (meta.standing_duration() >= kMinPhaseDurationS) {
    plan.standing.window = {meta.supine_end_s + 30.0, meta.session_end_s - 30.0};
  } else {
    std::snprintf(reason, sizeof(reason),
                  "standing lasts %.1f s, below the %.0f s minimum",
                  meta.standing_duration(), kMinPhaseDurationS);
    plan.standing.reason = reason;
  }
  // The transition window needs a minute of data on each side of stand-up.
  if (meta.supine_duration() >= 60.0 && meta.standing_duration() >= 60.0) {
    plan.transition.window = {meta.supine_end_s - 60.0, meta.supine_end_s + 60.0};
  } else {
    std::snprintf(reason, sizeof(reason),
                  "less than 60 s of data on one side of stand-up (supine %.1f s, "
                  "standing %.1f s)",
                  meta.supine_duration(), meta.standing_duration());
    plan.transition.reason = reason;
  }
  return plan;
}

PhaseWindows segment_phases(const SessionMeta& meta) {
  const PhasePlan plan = segment_phases_partial(meta);
  for (Phase p : {Phase::Supine, Phase::Transition, Phase::Standing}) {
    if (!plan[p].window)
      throw std::runtime_error(std::string("session too short for phase ") + phase_name(p) +
                               ": " + plan[p].reason);
  }
  return PhaseWindows{*plan.supine.window, *plan.transition.window, *plan.standing.window};
}

IntervalSeries slice_series(const IntervalSeries& series, const TimeWindow& window) {
  std::vector<Index> keep;
  for (Index i = 0; i < series.size(); ++i)
    if (window.contains(series.end_times_s[i])) keep.push_back(i);
  if (keep.empty()) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "no beats in window [%.1f, %.1f] s", window.t0,
                  window.t1);
    throw std::runtime_error(msg);
  }
  IntervalSeries out;
  out.kind = series.kind;
  out.durations_ms.resize(static_cast<Index>(keep.size()));
  out.end_times_s.resize(static_cast<Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    out.durations_ms[static_cast<Index>(k)] = series.durations_ms[keep[k]];
    out.end_times_s[static_cast<Index>(k)] = series.end_times_s[keep[k]];
  }
  return out;
}

}  // namespace hrvprv
