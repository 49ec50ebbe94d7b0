#include "affect/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "affect/error.hpp"

namespace affect {

namespace {

const char* const kLow = "low";
const char* const kHigh = "high";

std::string level(double value, double cutoff) { return value < cutoff ? kLow : kHigh; }

// Bin phrase suffixes for each acoustic kind, without the low/high word.
struct Template {
  PromptKind kind;
  std::optional<Sex> sex;
  std::string_view suffix;
};

constexpr Template kTemplates[] = {
    {PromptKind::Pitch, Sex::Male, "male pitch"},
    {PromptKind::Pitch, Sex::Female, "female pitch"},
    {PromptKind::Pitch, std::nullopt, "pitch"},
    {PromptKind::Intensity, std::nullopt, "intensity"},
    {PromptKind::SpeechRate, std::nullopt, "speech rate"},
    {PromptKind::ArticulationRate, std::nullopt, "articulation rate"},
};

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Class: return "class";
    case PromptKind::Pitch: return "pitch";
    case PromptKind::Intensity: return "intensity";
    case PromptKind::SpeechRate: return "speech-rate";
    case PromptKind::ArticulationRate: return "articulation-rate";
  }
  return "class";
}

PromptKind parse_prompt_kind(std::string_view name) {
  for (PromptKind k : kAllPromptKinds)
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown prompt kind '" + std::string(name) + "'");
}

std::string_view to_string(Sex sex) { return sex == Sex::Male ? "male" : "female"; }

PromptPolicy::PromptPolicy() { enabled_.fill(true); }

PromptPolicy::PromptPolicy(std::vector<PromptKind> kinds, bool sex_aware_pitch)
    : sex_aware_pitch_(sex_aware_pitch) {
  for (PromptKind k : kinds) enabled_[static_cast<std::size_t>(k)] = true;
  if (kinds.empty()) throw Error(ErrorCode::InvalidArgument, "prompt policy needs at least one kind");
}

PromptPolicy PromptPolicy::parse(std::string_view spec, bool sex_aware_pitch) {
  std::vector<PromptKind> kinds;
  std::string item;
  std::istringstream in{std::string(spec)};
  while (std::getline(in, item, ',')) {
    item = normalize_text(item);
    if (item.empty()) continue;
    if (item == "augment") {
      kinds.assign(kAllPromptKinds.begin(), kAllPromptKinds.end());
    } else {
      kinds.push_back(parse_prompt_kind(item));
    }
  }
  return PromptPolicy(std::move(kinds), sex_aware_pitch);
}

std::vector<PromptKind> PromptPolicy::kinds() const {
  std::vector<PromptKind> out;
  for (PromptKind k : kAllPromptKinds)
    if (enabled(k)) out.push_back(k);
  return out;
}

std::string PromptPolicy::name() const {
  const auto ks = kinds();
  if (ks.size() == kAllPromptKinds.size()) return "augment";
  std::string out;
  for (PromptKind k : ks) {
    if (!out.empty()) out += ',';
    out += to_string(k);
  }
  return out;
}

std::vector<PromptPolicy> canonical_policies() {
  std::vector<PromptPolicy> out;
  for (PromptKind k : kAllPromptKinds) out.emplace_back(std::vector<PromptKind>{k});
  out.emplace_back();
  return out;
}

void BinThresholds::validate() const {
  const double all[] = {pitch_male_cutoff_hz,  pitch_female_cutoff_hz, pitch_sex_boundary_hz,
                        pitch_agnostic_cutoff_hz, intensity_cutoff_db, speech_rate_cutoff,
                        articulation_rate_cutoff};
  for (double v : all)
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "bin cutoffs must be positive");
  if (!(pitch_male_cutoff_hz < pitch_sex_boundary_hz && pitch_sex_boundary_hz < pitch_female_cutoff_hz))
    throw Error(ErrorCode::InvalidArgument, "pitch cutoffs must satisfy male < sex boundary < female");
}

std::string bin_pitch(std::optional<double> mean_pitch_hz, std::optional<Sex> sex, const BinThresholds& t) {
  if (!mean_pitch_hz || !(*mean_pitch_hz > 0.0))
    throw Error(ErrorCode::MissingPitch, "no voiced frames; pitch prompt unavailable");
  const double hz = *mean_pitch_hz;
  // A known sex selects only that sex's cutoff.
  if (sex == Sex::Male) return level(hz, t.pitch_male_cutoff_hz) + " male pitch";
  if (sex == Sex::Female) return level(hz, t.pitch_female_cutoff_hz) + " female pitch";
  return level(hz, t.pitch_agnostic_cutoff_hz) + " pitch";
}

std::string bin_intensity(double db, const BinThresholds& t) { return level(db, t.intensity_cutoff_db) + " intensity"; }

std::string bin_speech_rate(double rate, const BinThresholds& t) {
  return level(rate, t.speech_rate_cutoff) + " speech rate";
}

std::string bin_articulation_rate(double rate, const BinThresholds& t) {
  return level(rate, t.articulation_rate_cutoff) + " articulation rate";
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

Prompt render_prompt(PromptKind kind, const AcousticProfile& profile, std::string_view emotion,
                     std::optional<Sex> sex, const PromptPolicy& policy, const BinThresholds& t) {
  if (!policy.enabled(kind))
    throw Error(ErrorCode::InvalidArgument, "prompt kind '" + std::string(to_string(kind)) + "' not enabled by policy");
  const std::string label = normalize_text(emotion);
  if (label.empty()) throw Error(ErrorCode::InvalidArgument, "emotion label is empty");

  std::string bin;
  switch (kind) {
    case PromptKind::Class:
      return Prompt{kind, label};
    case PromptKind::Pitch:
      bin = bin_pitch(profile.mean_pitch_hz, policy.sex_aware_pitch() ? sex : std::nullopt, t);
      break;
    case PromptKind::Intensity:
      bin = bin_intensity(profile.mean_intensity_db, t);
      break;
    case PromptKind::SpeechRate:
      bin = bin_speech_rate(profile.speech_rate, t);
      break;
    case PromptKind::ArticulationRate:
      bin = bin_articulation_rate(profile.articulation_rate, t);
      break;
  }
  return Prompt{kind, bin + " " + label};
}

std::vector<PromptPair> augment_pairs(const std::string& clip_id, const AcousticProfile& profile,
                                      std::string_view emotion, std::optional<Sex> sex,
                                      const PromptPolicy& policy, const BinThresholds& t) {
  std::vector<PromptPair> out;
  for (PromptKind kind : policy.kinds()) {
    if (kind == PromptKind::Pitch && !profile.mean_pitch_hz) continue;
    out.push_back(PromptPair{clip_id, render_prompt(kind, profile, emotion, sex, policy, t)});
  }
  return out;
}

ParsedPrompt parse_prompt(std::string_view raw) {
  const std::string text = normalize_text(raw);
  ParsedPrompt out;
  for (std::string_view level_word : {std::string_view(kLow), std::string_view(kHigh)}) {
    for (const Template& tpl : kTemplates) {
      const std::string phrase = std::string(level_word) + " " + std::string(tpl.suffix);
      if (text.size() > phrase.size() + 1 && text.compare(0, phrase.size(), phrase) == 0 &&
          text[phrase.size()] == ' ') {
        out.kind = tpl.kind;
        out.bin_phrase = phrase;
        out.emotion = text.substr(phrase.size() + 1);
        out.sex = tpl.sex;
        return out;
      }
    }
  }
  out.emotion = text;
  return out;
}

nlohmann::json pair_to_json(const PromptPair& pair) {
  return nlohmann::json{{"clip_id", pair.clip_id}, {"kind", to_string(pair.prompt.kind)}, {"text", pair.prompt.text}};
}

PromptPair pair_from_json(const nlohmann::json& j) {
  try {
    return PromptPair{j.at("clip_id").get<std::string>(),
                      Prompt{parse_prompt_kind(j.at("kind").get<std::string>()), j.at("text").get<std::string>()}};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MissingField, std::string("pair record: ") + e.what());
  }
}

}  // namespace affect
