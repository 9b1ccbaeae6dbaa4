#include <hrvprv/features.hpp>
#include <hrvprv/synth.hpp>

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using namespace hrvprv;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SessionMeta meta_of(double supine_end, double session_end) {
  SessionMeta m;
  m.subject_id = "t";
  m.supine_start_s = 0.0;
  m.supine_end_s = supine_end;
  m.session_end_s = session_end;
  return m;
}

AutonomicScenario quiet_scenario(double rr_ms) {
  AutonomicScenario s;
  s.supine_mean_rr_ms = rr_ms;
  s.standing_mean_rr_ms = rr_ms;
  s.lf_amp_supine_ms = s.lf_amp_standing_ms = 0.0;
  s.hf_amp_supine_ms = s.hf_amp_standing_ms = 0.0;
  s.rr_noise_sd_ms = 0.0;
  return s;
}

double mean_gap(const ArrayXd& t, double lo, double hi) {
  double sum = 0.0;
  int n = 0;
  for (Index i = 1; i < t.size(); ++i)
    if (t[i - 1] >= lo && t[i] <= hi) {
      sum += t[i] - t[i - 1];
      ++n;
    }
  REQUIRE(n > 0);
  return sum / n;
}

// Root-mean-square of successive gap differences, in ms.
double gap_rmssd_ms(const ArrayXd& t, double lo, double hi) {
  std::vector<double> gaps;
  for (Index i = 1; i < t.size(); ++i)
    if (t[i - 1] >= lo && t[i] <= hi) gaps.push_back((t[i] - t[i - 1]) * 1000.0);
  REQUIRE(gaps.size() > 2);
  double acc = 0.0;
  for (size_t i = 1; i < gaps.size(); ++i)
    acc += (gaps[i] - gaps[i - 1]) * (gaps[i] - gaps[i - 1]);
  return std::sqrt(acc / static_cast<double>(gaps.size() - 1));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hrvprv_synth_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("a variability-free scenario produces exactly periodic beats") {
  const ArrayXd beats = generate_rr_beats(quiet_scenario(800.0), meta_of(300, 480), 5);
  REQUIRE(beats.size() > 500);
  CHECK(beats[0] == 0.0);
  for (Index i = 1; i < beats.size(); ++i)
    CHECK(std::abs((beats[i] - beats[i - 1]) - 0.8) < 1e-9);
  CHECK(beats[beats.size() - 1] <= 480.0);
}

TEST_CASE("mean rate blends from the supine to the standing target") {
  AutonomicScenario sc;  // defaults: 1000 ms supine, 750 ms standing
  sc.rr_noise_sd_ms = 0.0;
  const ArrayXd beats = generate_rr_beats(sc, meta_of(300, 480), 21);
  CHECK(mean_gap(beats, 60, 290) == doctest::Approx(1.0).epsilon(0.01));
  // Ten time constants after stand-up the blend is complete.
  CHECK(mean_gap(beats, 410, 470) == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("beat generation is deterministic per seed") {
  AutonomicScenario sc;
  const SessionMeta m = meta_of(300, 480);
  const ArrayXd a = generate_rr_beats(sc, m, 99);
  const ArrayXd b = generate_rr_beats(sc, m, 99);
  REQUIRE(a.size() == b.size());
  for (Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  const ArrayXd c = generate_rr_beats(sc, m, 100);
  bool differs = c.size() != a.size();
  for (Index i = 0; !differs && i < std::min(a.size(), c.size()); ++i)
    differs = a[i] != c[i];
  CHECK(differs);
}

TEST_CASE("an RR excursion outside the physiologic range is an error") {
  AutonomicScenario sc = quiet_scenario(410.0);
  sc.hf_amp_supine_ms = sc.hf_amp_standing_ms = 200.0;  // dips below 250 ms
  CHECK_THROWS_WITH_AS(generate_rr_beats(sc, meta_of(300, 480), 1),
                       doctest::Contains("leaves (250, 3000) ms"),
                       std::invalid_argument);
}

TEST_CASE("scenario validation rejects out-of-band tones and bad means") {
  AutonomicScenario sc;
  sc.lf_freq_hz = 0.30;  // inside the HF band, not LF
  CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
  sc = AutonomicScenario{};
  sc.supine_mean_rr_ms = 1600.0;
  CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
  sc = AutonomicScenario{};
  sc.rr_noise_sd_ms = -1.0;
  CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
  CHECK_NOTHROW(AutonomicScenario{}.validate());
}

TEST_CASE("model validation guards") {
  PatModel pat;
  pat.base_pat_ms = 50.0;
  CHECK_THROWS_AS(pat.validate(), std::invalid_argument);
  PulseShape shape;
  shape.rise_tau_s = 0.4;  // must stay below the decay constant
  CHECK_THROWS_AS(shape.validate(), std::invalid_argument);
  CorpusConfig cfg;
  cfg.n_sessions = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("ECG rendering is deterministic and noise-controlled") {
  ArrayXd beats(40);
  for (int i = 0; i < 40; ++i) beats[i] = 0.5 + 0.8 * i;
  const ArrayXd a = render_ecg(beats, 250.0, 33.0, 20.0, 7);
  const ArrayXd b = render_ecg(beats, 250.0, 33.0, 20.0, 7);
  REQUIRE(a.size() == b.size());
  for (Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  const ArrayXd c = render_ecg(beats, 250.0, 33.0, 20.0, 8);
  bool differs = false;
  for (Index i = 0; !differs && i < a.size(); ++i) differs = a[i] != c[i];
  CHECK(differs);

  // Noise-free rendering peaks at the R lobe amplitude near each beat.
  const ArrayXd clean = render_ecg(beats, 250.0, 33.0, kInf, 7);
  CHECK(clean.maxCoeff() == doctest::Approx(1.0).epsilon(0.02));
  const Index at = static_cast<Index>(beats[10] * 250.0);
  double local_max = 0.0;
  for (Index i = at - 5; i <= at + 5; ++i) local_max = std::max(local_max, clean[i]);
  CHECK(local_max > 0.9);
}

TEST_CASE("constant transmission delay leaves pulse intervals equal to RR") {
  ArrayXd beats(100);
  for (int i = 0; i < 100; ++i) beats[i] = 0.78 * i;
  const PpgRender r =
      render_ppg(beats, PatModel::constant_delay(), 500.0, 80.0, 40.0, kInf, 13);
  REQUIRE(r.midpoint_times_s.size() == beats.size());
  const double delay = r.midpoint_times_s[0] - beats[0];
  for (Index i = 0; i < beats.size(); ++i) {
    CHECK(r.pat_ms[i] == r.pat_ms[0]);
    CHECK(std::abs((r.midpoint_times_s[i] - beats[i]) - delay) < 1e-9);
  }
}

TEST_CASE("the posture step moves PAT only after stand-up") {
  ArrayXd beats(300);
  for (int i = 0; i < 300; ++i) beats[i] = 0.8 * i;  // 240 s
  PatModel pat = PatModel::constant_delay();
  pat.posture_step_ms = 30.0;
  pat.posture_tau_s = 15.0;
  const PpgRender r = render_ppg(beats, pat, 250.0, 242.0, 120.0, kInf, 4);
  // Before stand-up: base PAT exactly.
  for (Index i = 0; i < beats.size(); ++i) {
    if (beats[i] < 120.0) CHECK(r.pat_ms[i] == doctest::Approx(250.0).epsilon(1e-12));
  }
  // Well after: the full step has been absorbed.
  const Index last = beats.size() - 1;
  CHECK(r.pat_ms[last] == doctest::Approx(280.0).epsilon(0.01));
  // During the transition the pulse intervals detach from RR...
  double worst_transition = 0.0, worst_supine = 0.0;
  for (Index i = 1; i < beats.size(); ++i) {
    const double ppi = r.midpoint_times_s[i] - r.midpoint_times_s[i - 1];
    const double rri = beats[i] - beats[i - 1];
    const double dev_ms = std::abs(ppi - rri) * 1000.0;
    if (beats[i] > 120.0 && beats[i] < 180.0) worst_transition = std::max(worst_transition, dev_ms);
    if (beats[i] < 120.0) worst_supine = std::max(worst_supine, dev_ms);
  }
  CHECK(worst_transition > 0.5);
  // ...but supine pulse timing is clean.
  CHECK(worst_supine < 1e-6);
}

TEST_CASE("beat jitter makes pulse-interval variability exceed RR variability") {
  ArrayXd beats(250);
  for (int i = 0; i < 250; ++i) beats[i] = 0.8 * i;
  PatModel pat = PatModel::constant_delay();
  pat.beat_jitter_sd_ms = 6.0;
  const PpgRender r = render_ppg(beats, pat, 250.0, 202.0, 40.0, kInf, 17);
  // RR is constant, so all pulse-interval variability is PAT jitter.
  CHECK(gap_rmssd_ms(r.midpoint_times_s, 120.0, 200.0) > 4.0);
  CHECK(gap_rmssd_ms(beats, 120.0, 200.0) < 1e-9);
}

TEST_CASE("a PAT sequence that would reorder pulses is rejected") {
  ArrayXd beats(200);
  for (int i = 0; i < 200; ++i) beats[i] = 0.5 * i;
  PatModel pat = PatModel::constant_delay();
  pat.beat_jitter_sd_ms = 300.0;
  CHECK_THROWS_WITH_AS(render_ppg(beats, pat, 100.0, 102.0, 0.0, kInf, 23),
                       doctest::Contains("reorders pulses"), std::runtime_error);
}

TEST_CASE("per-session synthesis varies subjects but respects the config") {
  CorpusConfig cfg;
  cfg.n_sessions = 3;
  cfg.master_seed = 42;
  cfg.supine_end_s = 150.0;
  cfg.session_end_s = 300.0;
  cfg.ppg_rate_hz = 250.0;

  const SyntheticSession a = make_synthetic_session(cfg, 0);
  CHECK(a.session.meta.subject_id == "synth-001");
  CHECK(a.session.meta.supine_end_s == 150.0);
  CHECK(a.session.recording.ecg_rate == cfg.ecg_rate_hz);
  CHECK(a.session.recording.ppg_rate == 250.0);
  CHECK(a.session.recording.ecg.size() ==
        static_cast<Index>(cfg.ecg_rate_hz * cfg.session_end_s));
  for (Index i = 1; i < a.beat_times_s.size(); ++i)
    CHECK(a.beat_times_s[i] > a.beat_times_s[i - 1]);
  CHECK(a.ppg_midpoint_times_s.size() == a.beat_times_s.size());

  const SyntheticSession b = make_synthetic_session(cfg, 1);
  CHECK(b.session.meta.subject_id == "synth-002");
  CHECK(b.seed != a.seed);
  CHECK(b.scenario.supine_mean_rr_ms != a.scenario.supine_mean_rr_ms);

  // Same config and index reproduce the same subject bit for bit.
  const SyntheticSession a2 = make_synthetic_session(cfg, 0);
  CHECK(a2.seed == a.seed);
  REQUIRE(a2.beat_times_s.size() == a.beat_times_s.size());
  for (Index i = 0; i < a.beat_times_s.size(); ++i)
    CHECK(a2.beat_times_s[i] == a.beat_times_s[i]);

  CHECK_THROWS_AS(make_synthetic_session(cfg, 3), std::invalid_argument);
}

TEST_CASE("corpus writing is reproducible byte for byte") {
  CorpusConfig cfg;
  cfg.n_sessions = 2;
  cfg.master_seed = 9;
  cfg.supine_end_s = 130.0;
  cfg.session_end_s = 260.0;
  cfg.ecg_rate_hz = 200.0;
  cfg.ppg_rate_hz = 200.0;

  TempDir d1, d2;
  write_corpus(d1.path, cfg);
  write_corpus(d2.path, cfg);

  const std::vector<std::string> files = {
      "manifest.json",        "synth-001/ecg.csv", "synth-001/ppg.csv",
      "synth-001/meta.json",  "synth-002/ecg.csv", "synth-002/ppg.csv",
      "synth-002/meta.json"};
  for (const std::string& f : files) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1.path / f));
    CHECK(slurp(d1.path / f) == slurp(d2.path / f));
  }

  const auto manifest = nlohmann::json::parse(slurp(d1.path / "manifest.json"));
  REQUIRE(manifest["sessions"].size() == 2);
  CHECK(manifest["sessions"][0]["subject_id"] == "synth-001");
  CHECK(manifest["sessions"][0].contains("seed"));
  CHECK(manifest["sessions"][0]["n_beats"].get<int>() > 100);
  CHECK(manifest["master_seed"].get<std::uint64_t>() == 9);
}
