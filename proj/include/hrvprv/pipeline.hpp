#pragma once

#include "hrvprv/features.hpp"
#include "hrvprv/session_io.hpp"
#include "hrvprv/stats.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace hrvprv {

struct RunConfig {
  FeatureConfig features;
  double alpha = 0.05;
  bool quality_gate = true;
  int workers = 0;         // 0 = hardware concurrency
  std::uint64_t seed = 7;  // corpus generation
  int n_sessions = 20;     // corpus generation
};

std::string run_config_json(const RunConfig& cfg);

struct PhaseOutcome {
  Phase phase = Phase::Supine;
  TimeWindow window{};
  bool has_window = false;
  std::string skip_reason;  // window missing, or per-source feature failure
  std::optional<FeatureSet> hrv;
  std::optional<FeatureSet> prv;
  bool paired() const { return hrv.has_value() && prv.has_value(); }
};

struct SessionAnalysis {
  std::string subject_id;
  std::string source_path;
  bool rejected = false;
  std::string reject_reason;
  bool quality_evaluated = false;
  QualityReport quality{};
  Index rri_count = 0;
  Index ppi_count = 0;
  Index rri_removed = 0;
  Index ppi_removed = 0;
  Index ppg_skipped_extrema = 0;
  std::vector<PhaseOutcome> phases;  // supine, transition, standing

  bool complete() const;  // not rejected and every phase paired
};

// The full single-session pipeline: detect beats on both channels, build
// and clean interval series, gate on PPG quality, slice the three windows,
// compute both feature sets per window. Detection or quality failures mark
// the session rejected instead of throwing; per-phase failures only void
// that phase.
SessionAnalysis analyze_session(const Session& session, const RunConfig& cfg,
                                std::string source_path = {});

// Every directory under root that holds a meta.json (root itself counts),
// sorted by path.
std::vector<std::filesystem::path> find_sessions(const std::filesystem::path& root);

// Concurrent analysis (cfg.workers threads); results sorted by subject id
// so downstream reduction is deterministic regardless of scheduling.
std::vector<SessionAnalysis> analyze_many(const std::vector<std::filesystem::path>& dirs,
                                          const RunConfig& cfg);

// features.csv (wide, one row per session/phase/source), features_long.csv
// (plot-ready), sessions.json (per-session detail + config), rejected.json.
void write_analysis_outputs(const std::filesystem::path& out_dir,
                            const std::vector<SessionAnalysis>& sessions,
                            const RunConfig& cfg);

// Per-phase paired samples in feature order; n_excluded counts sessions
// where one side's feature was undefined while the phase itself paired.
struct PairedByPhase {
  std::array<std::vector<PairedSample>, 3> phases;
  Index n_sessions = 0;  // sessions contributing at least one phase
};

PairedByPhase build_paired_samples(const std::vector<SessionAnalysis>& sessions);

// Rebuilds the same pairing from a written features.csv, so `compare` can
// run on a previous `analyze` output directory.
PairedByPhase load_paired_samples(const std::filesystem::path& analyze_out_dir);

// compare_features per phase, in supine/transition/standing order.
std::vector<PhaseResults> run_comparison(const PairedByPhase& paired, double alpha);

}  // namespace hrvprv
