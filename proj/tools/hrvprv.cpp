// Command-line front end: analyze sessions, compare HRV vs PRV, generate
// synthetic corpora, or dump the effective configuration.

#include "hrvprv/pipeline.hpp"
#include "hrvprv/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliState {
  hrvprv::RunConfig run;
  hrvprv::CorpusConfig corpus;
  std::vector<double> bands;  // staged; applied after parse when given
  bool no_quality_gate = false;
  std::string config_path;
  std::string input;
  std::string out;
};

template <typename T>
void maybe(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

void apply_config_file(const std::string& path, CliState& c) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }

  maybe(j, "alpha", c.run.alpha);
  maybe(j, "resample_hz", c.run.features.resample_hz);
  maybe(j, "entropy_m", c.run.features.entropy_m);
  maybe(j, "entropy_r", c.run.features.entropy_r_frac);
  maybe(j, "workers", c.run.workers);
  maybe(j, "quality_gate", c.run.quality_gate);
  maybe(j, "seed", c.run.seed);
  maybe(j, "n", c.run.n_sessions);
  if (j.contains("bands")) {
    const auto b = j.at("bands").get<std::vector<double>>();
    if (b.size() != 4)
      throw std::runtime_error(path + ": bands needs 4 entries (lf_lo,lf_hi,hf_lo,hf_hi)");
    c.run.features.bands = {b[0], b[1], b[2], b[3]};
  }

  // Corpus generation knobs (synth only; ignored elsewhere).
  maybe(j, "ecg_rate_hz", c.corpus.ecg_rate_hz);
  maybe(j, "ppg_rate_hz", c.corpus.ppg_rate_hz);
  maybe(j, "ecg_snr_db", c.corpus.ecg_snr_db);
  maybe(j, "ppg_snr_db", c.corpus.ppg_snr_db);
  maybe(j, "supine_start_s", c.corpus.supine_start_s);
  maybe(j, "supine_end_s", c.corpus.supine_end_s);
  maybe(j, "session_end_s", c.corpus.session_end_s);
  maybe(j, "heterogeneity", c.corpus.heterogeneity);
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    auto& sc = c.corpus.scenario;
    maybe(s, "supine_mean_rr_ms", sc.supine_mean_rr_ms);
    maybe(s, "standing_mean_rr_ms", sc.standing_mean_rr_ms);
    maybe(s, "lf_amp_supine_ms", sc.lf_amp_supine_ms);
    maybe(s, "lf_amp_standing_ms", sc.lf_amp_standing_ms);
    maybe(s, "hf_amp_supine_ms", sc.hf_amp_supine_ms);
    maybe(s, "hf_amp_standing_ms", sc.hf_amp_standing_ms);
    maybe(s, "lf_freq_hz", sc.lf_freq_hz);
    maybe(s, "hf_freq_hz", sc.hf_freq_hz);
    maybe(s, "rr_noise_sd_ms", sc.rr_noise_sd_ms);
    maybe(s, "transition_tau_s", sc.transition_tau_s);
  }
  if (j.contains("pat")) {
    const json& p = j.at("pat");
    auto& pm = c.corpus.pat;
    maybe(p, "base_pat_ms", pm.base_pat_ms);
    maybe(p, "posture_step_ms", pm.posture_step_ms);
    maybe(p, "posture_tau_s", pm.posture_tau_s);
    maybe(p, "beat_jitter_sd_ms", pm.beat_jitter_sd_ms);
    maybe(p, "bp_coupling_gain", pm.bp_coupling_gain);
  }
  if (j.contains("pulse")) {
    const json& p = j.at("pulse");
    maybe(p, "rise_tau_s", c.corpus.pulse.rise_tau_s);
    maybe(p, "decay_tau_s", c.corpus.pulse.decay_tau_s);
  }
}

void add_common_options(CLI::App* cmd, CliState& c) {
  cmd->add_option("--config", c.config_path,
                  "JSON config file; explicit flags override its values");
  cmd->add_option("--alpha", c.run.alpha, "family-wise significance level");
  cmd->add_option("--bands", c.bands, "band edges in Hz: lf_lo,lf_hi,hf_lo,hf_hi")
      ->delimiter(',');
  cmd->add_option("--resample-hz", c.run.features.resample_hz,
                  "uniform resampling rate for spectral features");
  cmd->add_option("--entropy-m", c.run.features.entropy_m,
                  "embedding dimension for ApEn/SampEn");
  cmd->add_option("--entropy-r", c.run.features.entropy_r_frac,
                  "entropy tolerance as a fraction of the series SD");
  cmd->add_option("--seed", c.run.seed, "master seed for corpus generation");
  cmd->add_option("--workers", c.run.workers,
                  "session-level worker threads (0 = hardware concurrency)");
  cmd->add_flag("--no-quality-gate", c.no_quality_gate,
                "keep sessions that fail the PPG quality rule");
}

void finalize(CliState& c) {
  if (!c.bands.empty()) {
    if (c.bands.size() != 4)
      throw std::runtime_error("--bands needs 4 entries (lf_lo,lf_hi,hf_lo,hf_hi)");
    c.run.features.bands = {c.bands[0], c.bands[1], c.bands[2], c.bands[3]};
  }
  if (c.no_quality_gate) c.run.quality_gate = false;
  c.corpus.master_seed = c.run.seed;
  c.corpus.n_sessions = c.run.n_sessions;
}

int cmd_analyze(const CliState& c) {
  const auto dirs = hrvprv::find_sessions(c.input);
  if (dirs.empty())
    throw std::runtime_error("no session directories (holding meta.json) under " + c.input);

  const auto results = hrvprv::analyze_many(dirs, c.run);
  hrvprv::write_analysis_outputs(c.out, results, c.run);

  size_t rejected = 0;
  size_t partial = 0;
  for (const auto& r : results) {
    if (r.rejected) {
      ++rejected;
      std::cerr << "rejected " << r.subject_id << ": " << r.reject_reason << "\n";
    } else if (!r.complete()) {
      ++partial;
      std::cerr << "partial " << r.subject_id << ": missing phase coverage\n";
    }
  }
  std::printf("analyzed %zu session(s): %zu complete, %zu partial, %zu rejected\n",
              results.size(), results.size() - rejected - partial, partial, rejected);
  std::printf("outputs in %s\n", c.out.c_str());

  if (rejected == results.size()) return 1;
  return (rejected > 0 || partial > 0) ? 2 : 0;
}

int cmd_compare(const CliState& c) {
  const auto paired = hrvprv::load_paired_samples(c.input);
  if (paired.n_sessions < 5) {
    std::fprintf(stderr,
                 "refusing to compare: only %lld paired session(s), need at least 5 "
                 "(paired tests would be underpowered or degenerate)\n",
                 static_cast<long long>(paired.n_sessions));
    return 1;
  }

  const auto phases = hrvprv::run_comparison(paired, c.run.alpha);
  const std::string text = hrvprv::render_report_text(phases, c.run.alpha);

  fs::create_directories(c.out);
  std::ofstream txt(fs::path(c.out) / "report.txt");
  txt << text;
  std::ofstream js(fs::path(c.out) / "report.json");
  js << hrvprv::render_report_json(phases) << "\n";

  std::cout << text;
  std::printf("report written to %s\n", c.out.c_str());
  return 0;
}

int cmd_synth(const CliState& c) {
  hrvprv::write_corpus(c.out, c.corpus);
  std::printf("wrote %d synthetic session(s) to %s (seed %llu)\n", c.corpus.n_sessions,
              c.out.c_str(), static_cast<unsigned long long>(c.corpus.master_seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CliState state;

  // The config file must be applied before CLI11 binds defaults, so that
  // flags given on the command line override file values and nothing else.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc)
      state.config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0)
      state.config_path = arg.substr(9);
  }
  try {
    if (!state.config_path.empty()) apply_config_file(state.config_path, state);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  CLI::App app{"HRV vs PRV analysis of supine-to-stand sessions"};
  app.require_subcommand(1);

  CLI::App* analyze = app.add_subcommand("analyze", "run the beat-to-feature pipeline");
  analyze->add_option("--input", state.input, "session directory, or directory of sessions")
      ->required();
  analyze->add_option("--out", state.out, "output directory")->required();
  add_common_options(analyze, state);

  CLI::App* compare =
      app.add_subcommand("compare", "paired HRV vs PRV tests on analyze output");
  compare->add_option("--input", state.input, "directory written by analyze")->required();
  compare->add_option("--out", state.out, "output directory")->required();
  add_common_options(compare, state);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic session corpus");
  synth->add_option("--out", state.out, "output directory")->required();
  synth->add_option("--n", state.run.n_sessions, "number of sessions");
  add_common_options(synth, state);

  CLI::App* print_config =
      app.add_subcommand("print-config", "dump the effective configuration");
  add_common_options(print_config, state);

  CLI11_PARSE(app, argc, argv);

  try {
    finalize(state);
    if (analyze->parsed()) return cmd_analyze(state);
    if (compare->parsed()) return cmd_compare(state);
    if (synth->parsed()) return cmd_synth(state);
    if (print_config->parsed()) {
      std::cout << hrvprv::run_config_json(state.run) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
