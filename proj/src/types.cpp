#include "hrvprv/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hrvprv {

namespace {

void check_channel(const ArrayXd& samples, double rate, const char* name) {
  if (rate <= 0.0)
    throw std::invalid_argument(std::string("Recording: non-positive ") + name + " rate");
  if (samples.size() == 0)
    throw std::invalid_argument(std::string("Recording: empty channel ") + name);
  for (Index i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i]))
      throw std::invalid_argument(std::string("Recording: non-finite ") + name +
                                  " sample at index " + std::to_string(i));
  }
}

}  // namespace

void Recording::validate() const {
  check_channel(ecg, ecg_rate, "ecg");
  check_channel(ppg, ppg_rate, "ppg");
}

void SessionMeta::validate() const {
  if (!(supine_start_s < supine_end_s && supine_end_s < session_end_s))
    throw std::invalid_argument(
        "SessionMeta: requires supine_start < supine_end < session_end (subject '" +
        subject_id + "')");
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Supine: return "supine";
    case Phase::Transition: return "transition";
    case Phase::Standing: return "standing";
  }
  return "?";
}

const char* phase_display_name(Phase p) {
  switch (p) {
    case Phase::Supine: return "Supine";
    case Phase::Transition: return "Transition";
    case Phase::Standing: return "Standing";
  }
  return "?";
}

const TimeWindow& PhaseWindows::operator[](Phase p) const {
  switch (p) {
    case Phase::Supine: return supine;
    case Phase::Transition: return transition;
    case Phase::Standing: return standing;
  }
  return supine;
}

const std::array<const char*, FeatureSet::kCount>& FeatureSet::names() {
  static const std::array<const char*, kCount> kNames = {
      "AHR",  "RMSSD", "SDNN", "SDSD", "pNN50",   "LF",   "HF",    "nLF",
      "nHF",  "LF/HF", "SD1",  "SD2",  "SD2/SD1", "ApEn", "SampEn"};
  return kNames;
}

std::optional<double> FeatureSet::value(int i) const {
  switch (i) {
    case 0: return ahr;
    case 1: return rmssd;
    case 2: return sdnn;
    case 3: return sdsd;
    case 4: return pnn50;
    case 5: return lf;
    case 6: return hf;
    case 7: return nlf;
    case 8: return nhf;
    case 9: return lf_hf;
    case 10: return sd1;
    case 11: return sd2;
    case 12: return sd2_sd1;
    case 13: return apen;
    case 14: return sampen;
  }
  throw std::out_of_range("FeatureSet::value: index " + std::to_string(i));
}

}  // namespace hrvprv
