#include "hrvprv/pipeline.hpp"

#include "hrvprv/beat_detection.hpp"
#include "hrvprv/intervals.hpp"
#include "hrvprv/signal_quality.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <thread>

namespace fs = std::filesystem;

namespace hrvprv {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr std::array<Phase, 3> kPhases = {Phase::Supine, Phase::Transition,
                                          Phase::Standing};

}  // namespace

std::string run_config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["alpha"] = cfg.alpha;
  j["bands"] = {cfg.features.bands.lf_lo, cfg.features.bands.lf_hi,
                cfg.features.bands.hf_lo, cfg.features.bands.hf_hi};
  j["resample_hz"] = cfg.features.resample_hz;
  j["entropy_m"] = cfg.features.entropy_m;
  j["entropy_r"] = cfg.features.entropy_r_frac;
  j["quality_gate"] = cfg.quality_gate;
  j["workers"] = cfg.workers;
  j["seed"] = cfg.seed;
  j["n"] = cfg.n_sessions;
  return j.dump(2);
}

bool SessionAnalysis::complete() const {
  if (rejected || phases.size() != kPhases.size()) return false;
  return std::all_of(phases.begin(), phases.end(),
                     [](const PhaseOutcome& p) { return p.paired(); });
}

SessionAnalysis analyze_session(const Session& session, const RunConfig& cfg,
                                std::string source_path) {
  SessionAnalysis a;
  a.subject_id = session.meta.subject_id;
  a.source_path = std::move(source_path);

  IntervalSeries rri, ppi;
  try {
    session.recording.validate();
    session.meta.validate();
    const Recording& rec = session.recording;

    BeatSeries rbeats = detect_r_peaks(rec.ecg, rec.ecg_rate);
    rbeats.timestamps += rec.start_time;
    FilterResult rfr = filter_outliers(build_intervals(rbeats));
    if (!rfr.reliable) {
      char msg[96];
      std::snprintf(msg, sizeof(msg), "unreliable RRI series: %.1f%% of intervals removed",
                    100.0 * rfr.removed_fraction);
      throw std::runtime_error(msg);
    }
    rri = std::move(rfr.series);
    a.rri_count = rri.size();
    a.rri_removed = rfr.removed_total();

    PeakTroughSet pt = detect_ppg_peaks_troughs(rec.ppg, rec.ppg_rate);
    MidpointResult mp = midpoints(pt, rec.ppg, rec.ppg_rate);
    a.ppg_skipped_extrema = mp.skipped_extrema;

    // SQI template matching runs on channel-relative timestamps.
    a.quality = assess_quality(compute_sqi(rec.ppg, rec.ppg_rate, mp.beats));
    a.quality_evaluated = true;
    if (cfg.quality_gate && !a.quality.accepted) {
      char msg[128];
      std::snprintf(msg, sizeof(msg),
                    "PPG quality rejected: good ratio %.1f%% and mean SQI %.3f "
                    "(needs > 80%% or > 0.8)",
                    a.quality.good_ratio, a.quality.mean_sqi);
      throw std::runtime_error(msg);
    }

    mp.beats.timestamps += rec.start_time;
    FilterResult pfr = filter_outliers(build_intervals(mp.beats));
    if (!pfr.reliable) {
      char msg[96];
      std::snprintf(msg, sizeof(msg), "unreliable PPI series: %.1f%% of intervals removed",
                    100.0 * pfr.removed_fraction);
      throw std::runtime_error(msg);
    }
    ppi = std::move(pfr.series);
    a.ppi_count = ppi.size();
    a.ppi_removed = pfr.removed_total();
  } catch (const std::exception& e) {
    a.rejected = true;
    a.reject_reason = e.what();
    return a;
  }

  const PhasePlan plan = segment_phases_partial(session.meta);
  for (Phase phase : kPhases) {
    PhaseOutcome po;
    po.phase = phase;
    const PhasePlan::Entry& entry = plan[phase];
    if (!entry.window) {
      po.skip_reason = entry.reason;
      a.phases.push_back(std::move(po));
      continue;
    }
    po.window = *entry.window;
    po.has_window = true;

    auto compute = [&](const IntervalSeries& series, const char* label)
        -> std::optional<FeatureSet> {
      try {
        return compute_feature_set(slice_series(series, po.window), cfg.features);
      } catch (const std::exception& e) {
        if (!po.skip_reason.empty()) po.skip_reason += "; ";
        po.skip_reason += std::string(label) + ": " + e.what();
        return std::nullopt;
      }
    };
    po.hrv = compute(rri, "HRV");
    po.prv = compute(ppi, "PRV");
    a.phases.push_back(std::move(po));
  }
  return a;
}

std::vector<fs::path> find_sessions(const fs::path& root) {
  if (!fs::exists(root))
    throw std::runtime_error("input path does not exist: " + root.string());
  std::vector<fs::path> out;
  if (fs::is_directory(root) && fs::exists(root / "meta.json")) {
    out.push_back(root);
    return out;
  }
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SessionAnalysis> analyze_many(const std::vector<fs::path>& dirs,
                                          const RunConfig& cfg) {
  std::vector<SessionAnalysis> results(dirs.size());
  unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<size_t>(1, dirs.size())));

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= dirs.size()) return;
      try {
        const Session session = load_session(dirs[i]);
        results[i] = analyze_session(session, cfg, dirs[i].string());
      } catch (const std::exception& e) {
        results[i].subject_id = dirs[i].filename().string();
        results[i].source_path = dirs[i].string();
        results[i].rejected = true;
        results[i].reject_reason = e.what();
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(results.begin(), results.end(),
            [](const SessionAnalysis& a, const SessionAnalysis& b) {
              return std::tie(a.subject_id, a.source_path) <
                     std::tie(b.subject_id, b.source_path);
            });
  return results;
}

namespace {

void append_feature_cells(std::string& line, const FeatureSet& fs) {
  for (int i = 0; i < FeatureSet::kCount; ++i) {
    line += ',';
    if (const auto v = fs.value(i)) line += fmt_double(*v);
  }
}

nlohmann::json quality_json(const QualityReport& q) {
  return {{"good_ratio", q.good_ratio},       {"mean_sqi", q.mean_sqi},
          {"n_good", q.n_good},               {"n_total", q.n_total},
          {"accepted", q.accepted},           {"centroid_low", q.centroid_low},
          {"centroid_high", q.centroid_high}, {"degenerate_split", q.degenerate_split}};
}

}  // namespace

void write_analysis_outputs(const fs::path& out_dir,
                            const std::vector<SessionAnalysis>& sessions,
                            const RunConfig& cfg) {
  fs::create_directories(out_dir);

  std::ofstream wide(out_dir / "features.csv");
  if (!wide) throw std::runtime_error("cannot write " + (out_dir / "features.csv").string());
  std::string header = "session,phase,source";
  for (const char* name : FeatureSet::names()) header += std::string(",") + name;
  wide << header << "\n";

  std::ofstream longf(out_dir / "features_long.csv");
  if (!longf)
    throw std::runtime_error("cannot write " + (out_dir / "features_long.csv").string());
  longf << "session,phase,source,feature,value\n";

  for (const SessionAnalysis& s : sessions) {
    if (s.rejected) continue;
    for (const PhaseOutcome& po : s.phases) {
      const char* phase = phase_name(po.phase);
      const std::array<std::pair<const char*, const std::optional<FeatureSet>*>, 2> rows = {
          {{"HRV", &po.hrv}, {"PRV", &po.prv}}};
      for (const auto& [source, fsp] : rows) {
        if (!fsp->has_value()) continue;
        std::string line = s.subject_id;
        line += ',';
        line += phase;
        line += ',';
        line += source;
        append_feature_cells(line, **fsp);
        wide << line << "\n";
        for (int i = 0; i < FeatureSet::kCount; ++i) {
          if (const auto v = (*fsp)->value(i)) {
            longf << s.subject_id << ',' << phase << ',' << source << ','
                  << FeatureSet::names()[static_cast<size_t>(i)] << ',' << fmt_double(*v)
                  << "\n";
          }
        }
      }
    }
  }
  wide.close();
  longf.close();

  nlohmann::json rejected = nlohmann::json::array();
  nlohmann::json detail = nlohmann::json::array();
  for (const SessionAnalysis& s : sessions) {
    nlohmann::json js;
    js["subject_id"] = s.subject_id;
    js["path"] = s.source_path;
    js["rejected"] = s.rejected;
    if (s.rejected) {
      js["reject_reason"] = s.reject_reason;
      rejected.push_back({{"subject_id", s.subject_id}, {"reason", s.reject_reason}});
    } else {
      js["rri_count"] = s.rri_count;
      js["ppi_count"] = s.ppi_count;
      js["rri_removed"] = s.rri_removed;
      js["ppi_removed"] = s.ppi_removed;
      js["ppg_skipped_extrema"] = s.ppg_skipped_extrema;
      if (s.quality_evaluated) js["quality"] = quality_json(s.quality);
      nlohmann::json phases = nlohmann::json::array();
      for (const PhaseOutcome& po : s.phases) {
        nlohmann::json jp;
        jp["phase"] = phase_name(po.phase);
        jp["analyzed"] = po.paired();
        if (po.has_window) jp["window"] = {po.window.t0, po.window.t1};
        if (!po.skip_reason.empty()) jp["skip_reason"] = po.skip_reason;
        phases.push_back(std::move(jp));
      }
      js["phases"] = std::move(phases);
    }
    detail.push_back(std::move(js));
  }

  nlohmann::json root;
  root["config"] = nlohmann::json::parse(run_config_json(cfg));
  root["sessions"] = std::move(detail);
  std::ofstream sj(out_dir / "sessions.json");
  sj << root.dump(2) << "\n";
  std::ofstream rj(out_dir / "rejected.json");
  rj << rejected.dump(2) << "\n";
}

namespace {

using FeatureRow = std::array<std::optional<double>, FeatureSet::kCount>;

FeatureRow row_from_feature_set(const FeatureSet& fs) {
  FeatureRow r;
  for (int i = 0; i < FeatureSet::kCount; ++i) r[static_cast<size_t>(i)] = fs.value(i);
  return r;
}

// session -> phase index -> (hrv row, prv row)
using RowTable =
    std::map<std::string, std::array<std::array<std::optional<FeatureRow>, 2>, 3>>;

PairedByPhase pair_rows(const RowTable& table) {
  PairedByPhase out;
  std::set<std::string> contributing;
  for (size_t ph = 0; ph < kPhases.size(); ++ph) {
    std::vector<PairedSample> samples(FeatureSet::kCount);
    for (int f = 0; f < FeatureSet::kCount; ++f)
      samples[static_cast<size_t>(f)].feature_name =
          FeatureSet::names()[static_cast<size_t>(f)];
    for (const auto& [session, per_phase] : table) {
      const auto& hrv = per_phase[ph][0];
      const auto& prv = per_phase[ph][1];
      if (!hrv || !prv) continue;
      contributing.insert(session);
      for (int f = 0; f < FeatureSet::kCount; ++f) {
        PairedSample& ps = samples[static_cast<size_t>(f)];
        const auto& hv = (*hrv)[static_cast<size_t>(f)];
        const auto& pv = (*prv)[static_cast<size_t>(f)];
        if (hv && pv) {
          ps.hrv_values.push_back(*hv);
          ps.prv_values.push_back(*pv);
        } else {
          ++ps.n_excluded;
        }
      }
    }
    out.phases[ph] = std::move(samples);
  }
  out.n_sessions = static_cast<Index>(contributing.size());
  return out;
}

}  // namespace

PairedByPhase build_paired_samples(const std::vector<SessionAnalysis>& sessions) {
  RowTable table;
  for (const SessionAnalysis& s : sessions) {
    if (s.rejected) continue;
    for (size_t ph = 0; ph < s.phases.size() && ph < kPhases.size(); ++ph) {
      const PhaseOutcome& po = s.phases[ph];
      if (po.hrv) table[s.subject_id][ph][0] = row_from_feature_set(*po.hrv);
      if (po.prv) table[s.subject_id][ph][1] = row_from_feature_set(*po.prv);
    }
  }
  return pair_rows(table);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

}  // namespace

PairedByPhase load_paired_samples(const fs::path& analyze_out_dir) {
  const fs::path file = analyze_out_dir / "features.csv";
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing file: " + file.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(file.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected = "session,phase,source";
  for (const char* name : FeatureSet::names()) expected += std::string(",") + name;
  if (line != expected)
    throw std::runtime_error(file.string() + ": unexpected header (was this written by "
                                             "a different version?)");

  RowTable table;
  size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != 3 + FeatureSet::kCount)
      throw std::runtime_error(file.string() + ": wrong column count at line " +
                               std::to_string(row_no));
    int phase = -1;
    for (size_t ph = 0; ph < kPhases.size(); ++ph)
      if (cells[1] == phase_name(kPhases[ph])) phase = static_cast<int>(ph);
    int source = cells[2] == "HRV" ? 0 : cells[2] == "PRV" ? 1 : -1;
    if (phase < 0 || source < 0)
      throw std::runtime_error(file.string() + ": bad phase or source at line " +
                               std::to_string(row_no));
    FeatureRow row;
    for (int f = 0; f < FeatureSet::kCount; ++f) {
      const std::string& cell = cells[static_cast<size_t>(f) + 3];
      if (cell.empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw std::runtime_error(file.string() + ": bad number at line " +
                                 std::to_string(row_no));
      row[static_cast<size_t>(f)] = v;
    }
    table[cells[0]][static_cast<size_t>(phase)][static_cast<size_t>(source)] = row;
  }
  return pair_rows(table);
}

std::vector<PhaseResults> run_comparison(const PairedByPhase& paired, double alpha) {
  std::vector<PhaseResults> out;
  for (size_t ph = 0; ph < kPhases.size(); ++ph) {
    PhaseResults pr;
    pr.phase = phase_display_name(kPhases[ph]);
    pr.results = compare_features(paired.phases[ph], alpha);
    out.push_back(std::move(pr));
  }
  return out;
}

}  // namespace hrvprv
