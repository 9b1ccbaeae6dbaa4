#pragma once

#include "hrvprv/types.hpp"

#include <filesystem>
#include <string>

namespace hrvprv {

struct Session {
  Recording recording;
  SessionMeta meta;
};

// Minimum supine and standing durations for a full three-phase analysis.
inline constexpr double kMinPhaseDurationS = 120.0;

// Reads <dir>/ecg.csv ("t_s,ecg"), <dir>/ppg.csv ("t_s,ppg") and
// <dir>/meta.json. The declared rates in meta.json are authoritative; the
// time columns must start together, increase strictly, and span what the
// rate implies (guards against a file paired with the wrong metadata).
// Throws std::runtime_error naming the file and, where applicable, the row.
Session load_session(const std::filesystem::path& dir);

// Inverse of load_session: writes the three files in the same format.
// Deterministic byte-for-byte for identical inputs.
void write_session(const std::filesystem::path& dir, const Recording& rec,
                   const SessionMeta& meta);

// The three analysis windows:
//   supine     [supine_start + 30, supine_end - 30]
//   transition [supine_end - 60,   supine_end + 60]
//   standing   [supine_end + 30,   session_end - 30]
// Requires at least kMinPhaseDurationS of supine and of standing; throws
// "session too short for phase ..." otherwise.
PhaseWindows segment_phases(const SessionMeta& meta);

// Lenient variant for partial analysis: each phase window is present only
// if its duration requirement holds, with a reason string when it does not.
struct PhasePlan {
  struct Entry {
    std::optional<TimeWindow> window;
    std::string reason;  // set when window is missing
  };
  Entry supine;
  Entry transition;
  Entry standing;

  const Entry& operator[](Phase p) const;
  bool complete() const {
    return supine.window && transition.window && standing.window;
  }
};
PhasePlan segment_phases_partial(const SessionMeta& meta);

// Intervals whose terminating fiducial lies in the closed window, order
// preserved. Throws "no beats in window" on an empty result.
IntervalSeries slice_series(const IntervalSeries& series, const TimeWindow& window);

}  // namespace hrvprv
